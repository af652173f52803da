"""File formats: CSV datasets and reports, versioned JSON models.

Floats are written through ``repr`` (and JSON's equivalent shortest
round-trip encoding), so saving and reloading reproduces every value
bit for bit and rerunning a seeded pipeline rewrites byte-identical
files.  Model files carry a format tag and loading refuses a mismatch
instead of guessing.
"""

from __future__ import annotations

import json

import numpy as np

from .deep import DeepArchetypalAnalysis, TrainReport
from .evaluation import SelectionCurve
from .linear import ArchetypalAnalysis
from .synthetic import SyntheticTruth

LINEAR_MODEL_FORMAT = "archetypal-linear/1"
DEEP_MODEL_FORMAT = "archetypal-deep/1"
TRUTH_FORMAT = "archetypal-truth/1"


def _fmt(value: float) -> str:
    return repr(float(value))


def write_csv(path, header, rows):
    """Write a CSV where numeric cells go through ``repr`` and string
    cells pass through verbatim."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def save_dataset(path, x, y=None):
    """Write rows as CSV with columns f0..f{p-1} and an optional y column."""
    x = np.asarray(x, dtype=np.float64)
    header = [f"f{j}" for j in range(x.shape[1])]
    rows = x
    if y is not None:
        header.append("y")
        rows = np.hstack([x, np.asarray(y, dtype=np.float64).reshape(len(x), 1)])
    write_csv(path, header, rows)


def load_dataset(path):
    """Read a dataset CSV back as (x, y) where y is None without a y column.

    Raises
    ------
    ValueError
        On a malformed header, ragged rows, or non-finite cells.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    has_y = header[-1] == "y"
    feature_names = header[:-1] if has_y else header
    expected = [f"f{j}" for j in range(len(feature_names))]
    if feature_names != expected:
        raise ValueError(
            f"{path}: header must be f0..f{len(feature_names) - 1}"
            f"{' followed by y' if has_y else ''}, got {header}"
        )
    values = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValueError(f"{path}: line {i} has {len(cells)} cells, expected {len(header)}")
        try:
            values.append([float(c) for c in cells])
        except ValueError as exc:
            raise ValueError(f"{path}: line {i}: {exc}") from None
    data = np.array(values, dtype=np.float64)
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite cell")
    if has_y:
        return data[:, :-1], data[:, -1:]
    return data, None


def _json_dump(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _json_load(path, expected_format):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from None
    got = payload.get("format")
    if got != expected_format:
        raise ValueError(f"{path}: format {got!r} does not match expected {expected_format!r}")
    return payload


def save_truth(path, truth: SyntheticTruth):
    """Write generator ground truth as versioned JSON."""
    _json_dump(path, {
        "format": TRUTH_FORMAT,
        "z_true": truth.z_true.tolist(),
        "a_true": truth.a_true.tolist(),
        "sigma2": truth.sigma2,
        "embedding": truth.embedding.tolist(),
        "curved_dim": truth.curved_dim,
        "seed": truth.seed,
    })


def load_truth(path) -> SyntheticTruth:
    payload = _json_load(path, TRUTH_FORMAT)
    return SyntheticTruth(
        z_true=np.array(payload["z_true"], dtype=np.float64),
        a_true=np.array(payload["a_true"], dtype=np.float64),
        sigma2=float(payload["sigma2"]),
        embedding=np.array(payload["embedding"], dtype=np.float64),
        curved_dim=payload["curved_dim"],
        seed=int(payload["seed"]),
    )


def save_linear_model(path, est: ArchetypalAnalysis):
    """Write a fitted linear model as versioned JSON.

    The per-row weight matrices are not stored; they are recomputed for
    any data via ``transform``.
    """
    _json_dump(path, {
        "format": LINEAR_MODEL_FORMAT,
        "params": est.get_params(),
        "archetypes": est.archetypes_.tolist(),
        "rss": est.rss_,
        "rss_history": [float(v) for v in est.rss_history_],
        "converged": bool(est.converged_),
        "n_iter": int(est.n_iter_),
        "n_features_in": int(est.n_features_in_),
    })


def load_linear_model(path) -> ArchetypalAnalysis:
    payload = _json_load(path, LINEAR_MODEL_FORMAT)
    est = ArchetypalAnalysis(**payload["params"])
    est.archetypes_ = np.array(payload["archetypes"], dtype=np.float64)
    est.rss_ = float(payload["rss"])
    est.rss_history_ = [float(v) for v in payload["rss_history"]]
    est.converged_ = payload["converged"]
    est.n_iter_ = payload["n_iter"]
    est.n_features_in_ = payload["n_features_in"]
    return est


def save_deep_model(path, est: DeepArchetypalAnalysis):
    """Write a fitted deep model (config and all weights) as versioned JSON."""
    params = {
        name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
        for name, arr in est.params_.items()
    }
    config = {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in est.get_params().items()
    }
    _json_dump(path, {
        "format": DEEP_MODEL_FORMAT,
        "config": config,
        "n_features_in": int(est.n_features_in_),
        "has_side": bool(est.has_side_),
        "loss": est.loss_,
        "x_shift": None if est.x_shift_ is None else est.x_shift_.tolist(),
        "x_scale": None if est.x_scale_ is None else est.x_scale_.tolist(),
        "vertices": est.vertices_.tolist(),
        "weights": params,
    })


def load_deep_model(path) -> DeepArchetypalAnalysis:
    payload = _json_load(path, DEEP_MODEL_FORMAT)
    config = {
        key: tuple(value) if isinstance(value, list) else value
        for key, value in payload["config"].items()
    }
    est = DeepArchetypalAnalysis(**config)
    est.params_ = {
        name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["weights"].items()
    }
    est.vertices_ = np.array(payload["vertices"], dtype=np.float64)
    est.x_shift_ = None if payload["x_shift"] is None else np.array(payload["x_shift"])
    est.x_scale_ = None if payload["x_scale"] is None else np.array(payload["x_scale"])
    est.loss_ = payload["loss"]
    est.has_side_ = payload["has_side"]
    est.n_features_in_ = payload["n_features_in"]
    est.report_ = TrainReport(seed=int(config.get("seed", 0)))
    return est


def load_model(path):
    """Load a model file of either kind, dispatching on its format tag."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from None
    fmt = payload.get("format")
    if fmt == LINEAR_MODEL_FORMAT:
        return load_linear_model(path)
    if fmt == DEEP_MODEL_FORMAT:
        return load_deep_model(path)
    raise ValueError(
        f"{path}: format {fmt!r} is not a known model format "
        f"({LINEAR_MODEL_FORMAT!r} or {DEEP_MODEL_FORMAT!r})"
    )


def save_linear_history(path, rss_history):
    """Loss-history CSV for a linear fit: one RSS per outer iteration."""
    write_csv(path, ["step", "rss"], [(str(i), v) for i, v in enumerate(rss_history)])


def save_train_report(path, report: TrainReport):
    """Per-epoch loss CSV for a deep fit.

    Wall-clock seconds are deliberately left out so that reruns with the
    same seed write byte-identical files.
    """
    header = ["epoch", "total", "recon", "side", "kl", "archetype",
              "a_row_err", "a_min", "b_row_err", "b_min"]
    rows = []
    for i, ep in enumerate(report.epochs):
        rows.append((str(i), ep.total, ep.recon, ep.side, ep.kl, ep.archetype,
                     ep.a_row_err, ep.a_min, ep.b_row_err, ep.b_min))
    write_csv(path, header, rows)


def save_selection_curve(path, curve: SelectionCurve):
    """SelectionCurve CSV with a 0/1 knee flag per row."""
    rows = [
        (str(int(k)), s, str(int(curve.knee is not None and int(k) == curve.knee)))
        for k, s in zip(curve.ks, curve.scores)
    ]
    write_csv(path, ["k", "score", "knee"], rows)
