"""Command-line pipeline: generate, fit, select, evaluate, explore.

The module top stays free of numpy imports so that ``main`` can pin BLAS
thread counts before any numerics load.  Set ``ARCHETYPAL_NUM_THREADS``
to change the limit; the default of 1 keeps every seeded command
byte-for-byte reproducible.

Exit codes: 0 success, 2 usage error (bad flags, bad config keys or
values, off-simplex weights), 3 data error (unreadable or malformed
files, format-version mismatch, shape conflicts), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

THREADS_ENV = "ARCHETYPAL_NUM_THREADS"

_EXIT_USAGE = 2
_EXIT_DATA = 3
_EXIT_NUMERIC = 4


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


class DataError(Exception):
    """Unreadable, malformed, or incompatible files; maps to exit code 3."""


def _pin_threads():
    count = os.environ.get(THREADS_ENV, "1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, count)


def _parse_floats(text, flag):
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _parse_ints(text, flag):
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None


def _coerce(key, raw, default):
    """Parse a config value using the type of the estimator default."""
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"config key {key}: cannot parse {raw!r}") from None
    return raw


def _read_config(path, defaults):
    """Flat key=value file checked against an estimator's parameter names."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    out = {}
    for i, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise UsageError(f"{path}: line {i}: expected key=value, got {text!r}")
        key, _, raw = text.partition("=")
        key = key.strip()
        if key not in defaults:
            known = ", ".join(sorted(defaults))
            raise UsageError(f"{path}: unknown config key {key!r} (known: {known})")
        out[key] = _coerce(key, raw, defaults[key])
    return out


def _load_dataset(path):
    from . import persistence

    try:
        return persistence.load_dataset(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _load_model(path):
    from . import persistence

    try:
        return persistence.load_model(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _load_truth(path):
    from . import persistence

    try:
        return persistence.load_truth(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: {exc}") from None


def _build_estimator(cls, args, config_flag_keys):
    """Estimator from config-file values overridden by CLI flags."""
    template = cls()
    defaults = template.get_params()
    values = {}
    if args.config:
        values.update(_read_config(args.config, defaults))
    for key, flag_value in config_flag_keys.items():
        if flag_value is not None:
            values[key] = flag_value
    try:
        return cls(**{**defaults, **values})
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _fit(est, x, y=None):
    import numpy as np

    try:
        if y is None:
            return est.fit(x)
        return est.fit(x, y)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(str(exc)) from None
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _model_archetypes(model):
    """Data-space archetype matrix for either model kind."""
    import numpy as np

    from .deep import DeepArchetypalAnalysis

    if isinstance(model, DeepArchetypalAnalysis):
        k = model.n_archetypes
        rows = []
        for i in range(k):
            w = np.zeros(k)
            w[i] = 1.0
            rows.append(model.decode_mixture(w)[0])
        return np.vstack(rows)
    return model.archetypes_


def _cmd_gen(args):
    import numpy as np

    from . import persistence
    from .rng import RandomSource
    from .synthetic import make_archetypal_data, make_side_information

    if args.n < 1 or args.k < 1 or args.p < 1:
        raise UsageError("--n, --k, and --p must all be positive")
    if args.sigma2 < 0:
        raise UsageError(f"--sigma2 must be >= 0, got {args.sigma2}")
    try:
        x, truth = make_archetypal_data(
            n=args.n,
            k=args.k,
            p=args.p,
            sigma2=args.sigma2,
            alpha=args.alpha,
            seed=args.seed,
            curved_dim="auto" if args.curved else None,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    y = None
    if args.side_info is not None:
        w = _parse_floats(args.side_info, "--side-info")
        try:
            y = make_side_information(
                truth.a_true, w, noise_sd=args.side_noise_sd,
                seed=RandomSource(args.seed).derive(1).seed,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, "data.csv")
    truth_path = os.path.join(args.out, "truth.json")
    persistence.save_dataset(data_path, x, y)
    persistence.save_truth(truth_path, truth)
    print(f"wrote {data_path} ({x.shape[0]} rows, {x.shape[1]} features"
          f"{', with y' if y is not None else ''})")
    print(f"wrote {truth_path}")
    return 0


def _cmd_fit_linear(args):
    from . import persistence
    from .linear import ArchetypalAnalysis

    x, _ = _load_dataset(args.data)
    est = _build_estimator(
        ArchetypalAnalysis, args,
        {"n_archetypes": args.k, "seed": args.seed},
    )
    _fit(est, x)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    history_path = os.path.join(args.out, "history.csv")
    persistence.save_linear_model(model_path, est)
    persistence.save_linear_history(history_path, est.rss_history_)
    print(f"fit k={est.n_archetypes} in {est.n_iter_} iterations, "
          f"final RSS {est.rss_:.6g} (converged: {est.converged_})")
    print(f"wrote {model_path}")
    print(f"wrote {history_path}")
    return 0


def _cmd_fit_deep(args):
    from . import persistence
    from .deep import DeepArchetypalAnalysis

    x, y = _load_dataset(args.data)
    est = _build_estimator(
        DeepArchetypalAnalysis, args,
        {"n_archetypes": args.k, "seed": args.seed},
    )
    _fit(est, x, y)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    report_path = os.path.join(args.out, "report.csv")
    persistence.save_deep_model(model_path, est)
    persistence.save_train_report(report_path, est.report_)
    print(f"fit k={est.n_archetypes} for {len(est.report_.epochs)} epochs, "
          f"final loss {est.loss_:.6g}"
          f"{' (with side information)' if est.has_side_ else ''}")
    print(f"wrote {model_path}")
    print(f"wrote {report_path}")
    return 0


def _cmd_select_k(args):
    from . import persistence
    from .deep import DeepArchetypalAnalysis
    from .evaluation import selection_sweep
    from .linear import ArchetypalAnalysis

    x, _ = _load_dataset(args.data)
    ks = _parse_ints(args.ks, "--ks")
    if args.fitter == "linear":
        est = _build_estimator(ArchetypalAnalysis, args, {})
    else:
        est = _build_estimator(DeepArchetypalAnalysis, args, {})
    try:
        curve = selection_sweep(
            x, ks, est,
            seed=0 if args.seed is None else args.seed,
            metric=args.metric, n_restarts=args.restarts,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except RuntimeError as exc:
        raise DataError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    curve_path = os.path.join(args.out, "selection.csv")
    persistence.save_selection_curve(curve_path, curve)
    scores = ", ".join(f"k={k}: {s:.6g}" for k, s in zip(curve.ks, curve.scores))
    print(scores)
    print(f"knee: {curve.knee}")
    print(f"wrote {curve_path}")
    return 0


def _cmd_eval(args):
    import numpy as np

    from . import persistence
    from .evaluation import archetype_recovery_error, dominant_weights

    model = _load_model(args.model)
    truth = _load_truth(args.truth)
    x, _ = _load_dataset(args.data)
    learned = _model_archetypes(model)
    truth_z = truth.archetypes_in_data_space()
    if learned.shape != truth_z.shape:
        raise DataError(
            f"model archetypes {learned.shape} do not match "
            f"truth archetypes {truth_z.shape}"
        )
    score = archetype_recovery_error(learned, truth_z)
    try:
        dom = dominant_weights(model, x)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    edges = np.linspace(0.0, 1.0, 21)
    counts, _ = np.histogram(dom, bins=edges)

    os.makedirs(args.out, exist_ok=True)
    recovery_path = os.path.join(args.out, "recovery.csv")
    rows = [
        (str(i), str(int(score.permutation[i])), score.per_archetype_distance[i])
        for i in range(len(score.permutation))
    ]
    persistence.write_csv(
        recovery_path, ["truth_index", "matched_index", "distance"], rows,
    )
    hist_path = os.path.join(args.out, "dominant_weights.csv")
    hist_rows = [
        (edges[i], edges[i + 1], str(int(counts[i])))
        for i in range(len(counts))
    ]
    persistence.write_csv(hist_path, ["bin_low", "bin_high", "count"], hist_rows)
    print(f"recovery rmse: {score.rmse:.6g}")
    print(f"mean dominant weight: {float(dom.mean()):.6g}")
    print(f"wrote {recovery_path}")
    print(f"wrote {hist_path}")
    return 0


def _parse_weights(text, k, flag):
    from .validation import check_simplex_vector

    w = _parse_floats(text, flag)
    try:
        return check_simplex_vector(w, k)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _decode(model, w):
    """(x_hat, y_hat) for one weight vector from either model kind."""
    from .deep import DeepArchetypalAnalysis

    if isinstance(model, DeepArchetypalAnalysis):
        return model.decode_mixture(w)
    return w @ model.archetypes_, None


def _cmd_explore(args):
    from . import persistence

    model = _load_model(args.model)
    w = _parse_weights(args.weights, model.n_archetypes, "--weights")
    x_hat, y_hat = _decode(model, w)
    header = [f"f{j}" for j in range(x_hat.size)]
    row = list(x_hat)
    if y_hat is not None:
        header.append("y")
        row.append(y_hat)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "explore.csv")
    persistence.write_csv(out_path, header, [row])
    print(",".join(header))
    print(",".join(repr(float(v)) for v in row))
    print(f"wrote {out_path}")
    return 0


def _cmd_interpolate(args):
    import numpy as np

    from . import persistence
    from .deep import DeepArchetypalAnalysis

    model = _load_model(args.model)
    k = model.n_archetypes
    w_start = _parse_weights(args.start, k, "--from")
    w_end = _parse_weights(args.end, k, "--to")
    if args.steps < 2:
        raise UsageError(f"--steps must be >= 2, got {args.steps}")
    if isinstance(model, DeepArchetypalAnalysis):
        path = model.interpolate(w_start, w_end, args.steps)
        x_path, y_path = path.x, path.y
    else:
        fracs = np.linspace(0.0, 1.0, args.steps).reshape(-1, 1)
        weights = (1.0 - fracs) * w_start + fracs * w_end
        x_path, y_path = weights @ model.archetypes_, None
    header = [f"f{j}" for j in range(x_path.shape[1])]
    rows = x_path
    if y_path is not None:
        header.append("y")
        rows = np.hstack([x_path, y_path.reshape(-1, 1)])
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "interpolation.csv")
    persistence.write_csv(out_path, header, rows)
    print(f"{args.steps} steps from {args.start} to {args.end}")
    print(f"wrote {out_path}")
    return 0


def _add_common(sub, data=False, model=False, config=False):
    sub.add_argument("--out", default=".", help="output directory (default: .)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the random seed")
    if data:
        sub.add_argument("--data", required=True, help="dataset CSV path")
    if model:
        sub.add_argument("--model", required=True, help="model JSON path")
    if config:
        sub.add_argument("--config", default=None,
                         help="key=value file of estimator options")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="archetypal",
        description="Archetypal analysis pipeline: generate, fit, select, "
                    "evaluate, explore.",
        epilog=f"Set {THREADS_ENV} to control BLAS threads (default 1, "
               "which keeps seeded runs byte-identical).",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--n", type=int, required=True, help="number of rows")
    gen.add_argument("--k", type=int, required=True, help="number of archetypes")
    gen.add_argument("--p", type=int, required=True, help="number of features")
    gen.add_argument("--sigma2", type=float, required=True, help="noise variance")
    gen.add_argument("--alpha", type=float, default=1.0,
                     help="Dirichlet concentration for mixture weights")
    gen.add_argument("--curved", action="store_true",
                     help="warp one feature so the data leave the linear hull")
    gen.add_argument("--side-info", default=None, metavar="W1,...,WK",
                     help="also write a y column from these per-archetype weights")
    gen.add_argument("--side-noise-sd", type=float, default=0.0,
                     help="noise standard deviation for the y column")
    gen.add_argument("--out", default=".", help="output directory (default: .)")
    gen.add_argument("--seed", type=int, default=0, help="generator seed")
    gen.set_defaults(handler=_cmd_gen)

    fit_lin = commands.add_parser("fit-linear", help="fit the linear model")
    _add_common(fit_lin, data=True, config=True)
    fit_lin.add_argument("--k", type=int, default=None,
                         help="number of archetypes (overrides config)")
    fit_lin.set_defaults(handler=_cmd_fit_linear)

    fit_deep = commands.add_parser("fit-deep", help="fit the deep model")
    _add_common(fit_deep, data=True, config=True)
    fit_deep.add_argument("--k", type=int, default=None,
                          help="number of archetypes (overrides config)")
    fit_deep.set_defaults(handler=_cmd_fit_deep)

    select = commands.add_parser("select-k", help="sweep k and report the knee")
    _add_common(select, data=True, config=True)
    select.add_argument("--ks", required=True, metavar="K1,K2,...",
                        help="candidate archetype counts, ascending")
    select.add_argument("--fitter", choices=("linear", "deep"), default="linear",
                        help="estimator family to sweep (default: linear)")
    select.add_argument("--metric", choices=("mae", "rss"), default="mae",
                        help="test-split reconstruction score (default: mae)")
    select.add_argument("--restarts", type=int, default=1,
                        help="independently seeded fits per k; best kept")
    select.set_defaults(handler=_cmd_select_k)

    ev = commands.add_parser("eval", help="score a model against ground truth")
    _add_common(ev, data=True, model=True)
    ev.add_argument("--truth", required=True, help="truth JSON from gen")
    ev.set_defaults(handler=_cmd_eval)

    explore = commands.add_parser("explore", help="decode one mixture of archetypes")
    _add_common(explore, model=True)
    explore.add_argument("--weights", required=True, metavar="W1,...,WK",
                         help="simplex weights for the mixture")
    explore.set_defaults(handler=_cmd_explore)

    interp = commands.add_parser("interpolate",
                                 help="decode a latent path between two mixtures")
    _add_common(interp, model=True)
    interp.add_argument("--from", dest="start", required=True, metavar="W1,...,WK",
                        help="starting mixture weights")
    interp.add_argument("--to", dest="end", required=True, metavar="W1,...,WK",
                        help="ending mixture weights")
    interp.add_argument("--steps", type=int, default=10,
                        help="number of points on the path (default: 10)")
    interp.set_defaults(handler=_cmd_interpolate)

    return parser


def main(argv=None):
    _pin_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
