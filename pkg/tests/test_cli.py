import json

import numpy as np
import pandas as pd
import pytest

from core.errors import LineSearchFailed
from app.solver import predict_transductive
from cli import commands
from cli.config import load_config
from main import main
from services.model_store import load_model

SMALL_CONFIG = {
    "seed": 0,
    "hyper": {"alpha": 0.3, "beta": 0.1, "k": 3},
    "solver": {"max_outer_iters": 20, "fista_max_iters": 100},
    "grid": {"alpha_values": [0.3], "beta_values": [0.1], "k_values": [3]},
    "synthetic": {"n_samples": 24, "k_true": 3, "c": 4, "modality_dims": [5, 6], "label_threshold": 0.5},
    "folds": 3,
    "repeats": 2,
    "workers": 1,
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


@pytest.fixture
def dataset(tmp_path, config_path):
    data = tmp_path / "data"
    assert main(["synth", "--config", config_path, "--out-dir", str(data)]) == 0
    return data


def _data_flags(data):
    return ["--motor", str(data / "motor.csv"), "--nonmotor", str(data / "nonmotor.csv"), "--labels", str(data / "labels.csv")]


def test_synth_writes_dataset(dataset):
    motor = pd.read_csv(dataset / "motor.csv")
    labels = pd.read_csv(dataset / "labels.csv")
    assert list(motor.columns) == ["sample_id"] + [f"motor_{j}" for j in range(5)]
    assert motor.shape == (24, 6)
    assert labels.shape == (24, 5)
    assert (dataset / "nonmotor.csv").exists()
    planted = json.loads((dataset / "planted_model.json").read_text())
    assert planted["spec"]["seed"] == 0
    assert planted["model"]["k"] == 3


def test_train_then_predict_reproduces_training_scores(tmp_path, config_path, dataset):
    out = tmp_path / "out"
    assert main(["train", "--config", config_path, "--out-dir", str(out)] + _data_flags(dataset)) == 0
    trace = json.loads((out / "trace.json").read_text())
    values = [trace["initial_objective"]] + trace["objective_per_outer_iter"]
    assert all(b <= a + 1e-10 for a, b in zip(values, values[1:]))

    pred_dir = tmp_path / "pred"
    argv = [
        "predict", "--config", config_path, "--model-path", str(out / "model.json"), "--out-dir", str(pred_dir),
        "--motor", str(dataset / "motor.csv"), "--nonmotor", str(dataset / "nonmotor.csv"),
    ]
    assert main(argv) == 0

    config = load_config(config_path, {"motor": str(dataset / "motor.csv"), "nonmotor": str(dataset / "nonmotor.csv"), "labels": str(dataset / "labels.csv")})
    view, _ = config.load_view()
    expected, expected_labels = predict_transductive(load_model(out / "model.json"), view)
    scores = pd.read_csv(pred_dir / "scores.csv", float_precision="round_trip")
    labels = pd.read_csv(pred_dir / "labels.csv")
    assert list(scores.columns) == ["sample_id"] + [f"label_{j}" for j in range(4)]
    np.testing.assert_allclose(scores.iloc[:, 1:].to_numpy(), expected, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(labels.iloc[:, 1:].to_numpy(), expected_labels)


def test_training_twice_gives_identical_files(tmp_path, config_path, dataset):
    for name in ("a", "b"):
        assert main(["train", "--config", config_path, "--out-dir", str(tmp_path / name)] + _data_flags(dataset)) == 0
    for file in ("model.json", "trace.json"):
        assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()


def test_malformed_cell_is_reported_with_row_and_column(tmp_path, config_path, dataset, capsys):
    motor = (dataset / "motor.csv").read_text().splitlines()
    cells = motor[2].split(",")
    cells[2] = "abc"
    motor[2] = ",".join(cells)
    bad = tmp_path / "bad_motor.csv"
    bad.write_text("\n".join(motor) + "\n")

    flags = _data_flags(dataset)
    flags[1] = str(bad)
    assert main(["train", "--config", config_path, "--out-dir", str(tmp_path / "out")] + flags) == 2
    err = capsys.readouterr().err
    assert "row 3" in err
    assert "motor_1" in err


def test_predict_on_empty_input_writes_headers_only(tmp_path, config_path, dataset):
    out = tmp_path / "out"
    assert main(["train", "--config", config_path, "--out-dir", str(out)] + _data_flags(dataset)) == 0
    empty_motor, empty_nonmotor = tmp_path / "m.csv", tmp_path / "n.csv"
    empty_motor.write_text((dataset / "motor.csv").read_text().splitlines()[0] + "\n")
    empty_nonmotor.write_text((dataset / "nonmotor.csv").read_text().splitlines()[0] + "\n")

    argv = ["predict", "--config", config_path, "--out-dir", str(out), "--motor", str(empty_motor), "--nonmotor", str(empty_nonmotor)]
    assert main(argv) == 0
    assert (out / "scores.csv").read_text().strip() == "sample_id,label_0,label_1,label_2,label_3"


def test_predict_with_wrong_columns_fails(tmp_path, config_path, dataset):
    out = tmp_path / "out"
    assert main(["train", "--config", config_path, "--out-dir", str(out)] + _data_flags(dataset)) == 0
    # the non-motor file in place of the motor file
    argv = [
        "predict", "--config", config_path, "--out-dir", str(out),
        "--motor", str(dataset / "nonmotor.csv"), "--nonmotor", str(dataset / "nonmotor.csv"),
    ]
    assert main(argv) == 2


def test_cv_writes_every_fold(tmp_path, config_path, dataset):
    out = tmp_path / "cv"
    argv = ["cv", "--config", config_path, "--out-dir", str(out), "--repeats", "2", "--folds", "3", "--compare-baseline"]
    assert main(argv + _data_flags(dataset)) == 0
    report = json.loads((out / "cv_report.json").read_text())
    assert report["seed"] == 0
    assert len(report["latent"]["fold_results"]) == 6
    assert len(report["binary_relevance"]["fold_results"]) == 6
    assert {t["metric"] for t in report["paired_t_tests"]} == set(commands.COMPARED_METRICS)
    summary = pd.read_csv(out / "cv_summary.csv")
    assert set(summary["model"]) == {"latent", "binary_relevance"}
    assert (out / "label_confusion.csv").exists()


def test_single_cell_grid(tmp_path, config_path, dataset):
    out = tmp_path / "grid"
    assert main(["grid", "--config", config_path, "--out-dir", str(out)] + _data_flags(dataset)) == 0
    result = json.loads((out / "grid.json").read_text())
    assert result["best"] == {"alpha": 0.3, "beta": 0.1, "k": 3}
    assert len(result["cells"]) == 1
    assert len(result["holdout_ids"]) == 2


def test_beta_sweep(tmp_path, config_path, dataset):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", config_path, "--out-dir", str(out)] + _data_flags(dataset)) == 0
    summary = pd.read_csv(out / "sweep_summary.csv")
    assert list(summary["beta"]) == [1e-5, 1e-3, 1e-1]
    assert (out / "labels_beta_0.001.csv").exists()


def test_invalid_config_field_exits_2(tmp_path, dataset, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"folds": 0}))
    assert main(["cv", "--config", str(path)] + _data_flags(dataset)) == 2
    assert "folds" in capsys.readouterr().err


def test_missing_feature_paths_exit_2(tmp_path):
    assert main(["train", "--out-dir", str(tmp_path)]) == 2


def test_numerical_failure_exits_3(monkeypatch, config_path, dataset):
    def fail(config):
        raise LineSearchFailed("step underflow")

    monkeypatch.setitem(commands.COMMANDS, "train", fail)
    assert main(["train", "--config", config_path] + _data_flags(dataset)) == 3
