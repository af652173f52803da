import hashlib
import json

import numpy as np
import pytest

from archetypal import (
    ArchetypalAnalysis,
    DeepArchetypalAnalysis,
    make_archetypal_data,
    make_side_information,
    selection_sweep,
)
from archetypal import persistence as ps


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def dataset():
    x, truth = make_archetypal_data(n=80, k=3, p=5, sigma2=0.02, seed=3)
    y = make_side_information(truth.a_true, w=[0.0, 0.5, 1.0], seed=9)
    return x, y, truth


def test_dataset_round_trip(tmp_path, dataset):
    x, y, _ = dataset
    path = tmp_path / "data.csv"
    ps.save_dataset(path, x, y)
    x2, y2 = ps.load_dataset(path)
    np.testing.assert_array_equal(x, x2)
    np.testing.assert_array_equal(y, y2)


def test_dataset_round_trip_without_side(tmp_path, dataset):
    x, _, _ = dataset
    path = tmp_path / "data.csv"
    ps.save_dataset(path, x)
    x2, y2 = ps.load_dataset(path)
    np.testing.assert_array_equal(x, x2)
    assert y2 is None


def test_dataset_header_names_features(tmp_path, dataset):
    x, y, _ = dataset
    path = tmp_path / "data.csv"
    ps.save_dataset(path, x, y)
    header = path.read_text().splitlines()[0]
    assert header == "f0,f1,f2,f3,f4,y"


def test_dataset_rewrite_is_byte_identical(tmp_path, dataset):
    x, y, _ = dataset
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    ps.save_dataset(first, x, y)
    ps.save_dataset(second, *ps.load_dataset(first))
    assert _sha(first) == _sha(second)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "f0,f1\n",  # header only is fine; this case checks the empty body error below
    ],
)
def test_dataset_rejects_empty_file(tmp_path, text):
    path = tmp_path / "data.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        ps.load_dataset(path)


def test_dataset_rejects_bad_header(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1.0,2.0\n")
    with pytest.raises(ValueError, match="header"):
        ps.load_dataset(path)


def test_dataset_rejects_ragged_rows(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("f0,f1\n1.0,2.0\n3.0\n")
    with pytest.raises(ValueError):
        ps.load_dataset(path)


def test_dataset_rejects_non_finite_cells(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("f0,f1\n1.0,nan\n")
    with pytest.raises(ValueError):
        ps.load_dataset(path)


def test_truth_round_trip(tmp_path, dataset):
    _, _, truth = dataset
    path = tmp_path / "truth.json"
    ps.save_truth(path, truth)
    loaded = ps.load_truth(path)
    np.testing.assert_array_equal(loaded.z_true, truth.z_true)
    np.testing.assert_array_equal(loaded.a_true, truth.a_true)
    np.testing.assert_array_equal(loaded.embedding, truth.embedding)
    assert loaded.sigma2 == truth.sigma2
    assert loaded.curved_dim == truth.curved_dim
    assert loaded.seed == truth.seed
    np.testing.assert_array_equal(
        loaded.archetypes_in_data_space(), truth.archetypes_in_data_space()
    )


def test_linear_model_round_trip(tmp_path, dataset):
    x, _, _ = dataset
    est = ArchetypalAnalysis(n_archetypes=3, seed=0).fit(x)
    path = tmp_path / "model.json"
    ps.save_linear_model(path, est)
    loaded = ps.load_linear_model(path)
    np.testing.assert_array_equal(loaded.archetypes_, est.archetypes_)
    assert loaded.rss_ == est.rss_
    assert loaded.rss_history_ == est.rss_history_
    assert loaded.converged_ == est.converged_
    assert loaded.get_params() == est.get_params()
    np.testing.assert_array_equal(loaded.transform(x[:7]), est.transform(x[:7]))


def test_linear_model_rewrite_is_byte_identical(tmp_path, dataset):
    x, _, _ = dataset
    est = ArchetypalAnalysis(n_archetypes=3, seed=0).fit(x)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    ps.save_linear_model(first, est)
    ps.save_linear_model(second, ps.load_linear_model(first))
    assert _sha(first) == _sha(second)


def test_deep_model_round_trip(tmp_path, dataset):
    x, y, _ = dataset
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, batch_size=40, seed=0)
    est.fit(x, y)
    path = tmp_path / "model.json"
    ps.save_deep_model(path, est)
    loaded = ps.load_deep_model(path)
    assert loaded.get_params() == est.get_params()
    assert loaded.has_side_ == est.has_side_
    np.testing.assert_array_equal(loaded.transform(x[:9]), est.transform(x[:9]))
    np.testing.assert_array_equal(loaded.predict_side(x[:9]), est.predict_side(x[:9]))
    w = np.array([0.2, 0.3, 0.5])
    x_hat, y_hat = est.decode_mixture(w)
    x_hat2, y_hat2 = loaded.decode_mixture(w)
    np.testing.assert_array_equal(x_hat, x_hat2)
    assert y_hat == y_hat2


def test_deep_model_rewrite_is_byte_identical(tmp_path, dataset):
    x, _, _ = dataset
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=2, batch_size=40, seed=0)
    est.fit(x)
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    ps.save_deep_model(first, est)
    ps.save_deep_model(second, ps.load_deep_model(first))
    assert _sha(first) == _sha(second)


def test_deep_model_preserves_standardization(tmp_path, dataset):
    x, _, _ = dataset
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=2, batch_size=40, seed=0)
    est.fit(x)
    path = tmp_path / "model.json"
    ps.save_deep_model(path, est)
    loaded = ps.load_deep_model(path)
    np.testing.assert_array_equal(loaded.x_shift_, est.x_shift_)
    np.testing.assert_array_equal(loaded.x_scale_, est.x_scale_)


def test_model_files_record_format_version(tmp_path, dataset):
    x, _, _ = dataset
    est = ArchetypalAnalysis(n_archetypes=3).fit(x)
    path = tmp_path / "model.json"
    ps.save_linear_model(path, est)
    payload = json.loads(path.read_text())
    assert payload["format"] == ps.LINEAR_MODEL_FORMAT


def test_load_refuses_unknown_format_version(tmp_path, dataset):
    x, _, _ = dataset
    est = ArchetypalAnalysis(n_archetypes=3).fit(x)
    path = tmp_path / "model.json"
    ps.save_linear_model(path, est)
    payload = json.loads(path.read_text())
    payload["format"] = "archetypal-linear/99"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError, match="format"):
        ps.load_linear_model(path)


def test_load_refuses_wrong_kind(tmp_path, dataset):
    x, _, truth = dataset
    path = tmp_path / "truth.json"
    ps.save_truth(path, truth)
    with pytest.raises(ValueError):
        ps.load_linear_model(path)
    with pytest.raises(ValueError):
        ps.load_deep_model(path)


def test_load_model_dispatches_on_format(tmp_path, dataset):
    x, _, truth = dataset
    lin_path = tmp_path / "lin.json"
    deep_path = tmp_path / "deep.json"
    ps.save_linear_model(lin_path, ArchetypalAnalysis(n_archetypes=3).fit(x))
    deep = DeepArchetypalAnalysis(n_archetypes=3, epochs=1, batch_size=40).fit(x)
    ps.save_deep_model(deep_path, deep)
    assert isinstance(ps.load_model(lin_path), ArchetypalAnalysis)
    assert isinstance(ps.load_model(deep_path), DeepArchetypalAnalysis)
    truth_path = tmp_path / "truth.json"
    ps.save_truth(truth_path, truth)
    with pytest.raises(ValueError, match="archetypal-linear/1"):
        ps.load_model(truth_path)


def test_train_report_csv_layout(tmp_path, dataset):
    x, _, _ = dataset
    est = DeepArchetypalAnalysis(n_archetypes=3, epochs=4, batch_size=40, seed=0)
    est.fit(x)
    path = tmp_path / "report.csv"
    ps.save_train_report(path, est.report_)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,total,recon,side,kl,archetype,a_row_err,a_min,b_row_err,b_min"
    assert len(lines) == 1 + 4
    assert lines[1].split(",")[0] == "0"


def test_train_report_rewrite_is_byte_identical(tmp_path, dataset):
    # wall-clock timings stay out of the file, so refits reproduce it exactly
    x, _, _ = dataset
    paths = []
    for name in ("a.csv", "b.csv"):
        est = DeepArchetypalAnalysis(n_archetypes=3, epochs=3, batch_size=40, seed=5)
        est.fit(x)
        path = tmp_path / name
        ps.save_train_report(path, est.report_)
        paths.append(path)
    assert _sha(paths[0]) == _sha(paths[1])


def test_linear_history_csv(tmp_path, dataset):
    x, _, _ = dataset
    est = ArchetypalAnalysis(n_archetypes=3, seed=0).fit(x)
    path = tmp_path / "history.csv"
    ps.save_linear_history(path, est.rss_history_)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,rss"
    assert len(lines) == 1 + len(est.rss_history_)
    assert float(lines[1].split(",")[1]) == est.rss_history_[0]


def test_selection_curve_csv_marks_knee(tmp_path):
    x, _ = make_archetypal_data(n=200, k=3, p=6, sigma2=0.05, seed=2)
    curve = selection_sweep(x, range(2, 6), ArchetypalAnalysis(max_iter=40), seed=0)
    path = tmp_path / "selection.csv"
    ps.save_selection_curve(path, curve)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,score,knee"
    flags = [int(line.split(",")[2]) for line in lines[1:]]
    assert sum(flags) == (1 if curve.knee is not None else 0)
    if curve.knee is not None:
        assert flags[list(curve.ks).index(curve.knee)] == 1


def test_write_csv_keeps_strings_and_formats_numbers(tmp_path):
    path = tmp_path / "out.csv"
    ps.write_csv(path, ["name", "value"], [["alpha", 0.1], ["beta", 2]])
    assert path.read_text() == "name,value\nalpha,0.1\nbeta,2.0\n"
