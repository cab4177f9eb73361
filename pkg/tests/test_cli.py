import json

import pytest

from cli import EXIT_CONFIG, EXIT_GRADCHECK, EXIT_OK, EXIT_PARTIAL, RUN_MANIFEST, main
from engine import ops
from utils.errors import DivergenceError


@pytest.fixture
def tiny_train_config(tmp_path):
    path = tmp_path / "train.tiny.json"
    path.write_text(json.dumps({"epochs": 1, "batch_size": 32, "hidden": 4, "seeds": [0, 1]}))
    return str(path)


def manifest_of(directory):
    return json.loads((directory / RUN_MANIFEST).read_text())


def test_unknown_command():
    assert main(["fly"]) == EXIT_CONFIG


def test_gen_writes_dataset(tmp_path, small_config):
    config_path = tmp_path / "gen.json"
    config_path.write_text(small_config.model_dump_json())
    out = tmp_path / "data"
    assert main(["gen", "--config", str(config_path), "--data", str(out), "--jobs", "1", "--seed", "7"]) == EXIT_OK
    for name in ("train.npy", "validation.npy", "test.npy", "manifest.json"):
        assert (out / name).exists()
    recorded = manifest_of(out)
    assert recorded["exit_code"] == 0 and recorded["seeds"] == [7]
    assert "test.npy" in recorded["artifacts"]


def test_gen_missing_topology(tmp_path, small_config):
    config_path = tmp_path / "gen.json"
    config_path.write_text(small_config.model_copy(update={"topology": "missing.topo"}).model_dump_json())
    assert main(["gen", "--config", str(config_path), "--data", str(tmp_path / "d"), "--jobs", "1"]) == EXIT_CONFIG


def test_train_then_eval(tmp_path, small_dataset_dir, tiny_train_config):
    out = tmp_path / "ckpt"
    code = main(["train", "--family", "rgcn", "--data", str(small_dataset_dir), "--train-config", tiny_train_config,
                 "--out", str(out), "--seed", "2"])
    assert code == EXIT_OK
    assert (out / "rgcn_seed2.bin").exists() and (out / "rgcn_seed2.history.json").exists()
    code = main(["eval", "--checkpoint", str(out / "rgcn_seed2"), "--data", str(small_dataset_dir), "--pmus", "7"])
    assert code == EXIT_OK
    result = json.loads((out / "rgcn_seed2.eval_test_7.json").read_text())
    assert result["n_pmus"] == 7 and 0.0 <= result["metrics"]["f1"] <= 1.0


def test_train_unknown_family(tmp_path, small_dataset_dir, tiny_train_config):
    code = main(["train", "--family", "rgin", "--data", str(small_dataset_dir), "--train-config", tiny_train_config,
                 "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_eval_without_dataset(tmp_path):
    assert main(["eval", "--checkpoint", str(tmp_path / "x"), "--data", str(tmp_path / "none")]) == EXIT_CONFIG


def test_benchmark_and_report(tmp_path, small_dataset_dir, tiny_train_config):
    out = tmp_path / "bench"
    code = main(["benchmark", "--data", str(small_dataset_dir), "--families", "gru_agg,rgatv2", "--seeds", "0,1",
                 "--train-config", tiny_train_config, "--out", str(out), "--jobs", "1"])
    assert code == EXIT_OK
    assert (out / "fig3.csv").exists() and manifest_of(out)["exit_code"] == 0
    regenerated = tmp_path / "again"
    assert main(["report", "--report", str(out / "report.json"), "--out", str(regenerated)]) == EXIT_OK
    assert (regenerated / "fig3.csv").read_text() == (out / "fig3.csv").read_text()


def test_benchmark_partial_grid(tmp_path, small_dataset_dir, tiny_train_config, monkeypatch):
    def diverge(*args, **kwargs):
        raise DivergenceError("loss became nan", epoch=1, batch=1)

    monkeypatch.setattr("stages.trainer_stage.train", diverge)
    out = tmp_path / "bench"
    code = main(["benchmark", "--data", str(small_dataset_dir), "--families", "gru_agg", "--seeds", "0",
                 "--train-config", tiny_train_config, "--out", str(out), "--jobs", "1"])
    assert code == EXIT_PARTIAL
    assert manifest_of(out)["exit_code"] == EXIT_PARTIAL
    assert main(["report", "--report", str(out / "report.json"), "--out", str(tmp_path / "r")]) == EXIT_CONFIG


def test_gradcheck_command(tmp_path):
    assert main(["gradcheck", "--components", "pointwise,gcn", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "gradcheck.csv").exists()
    assert main(["gradcheck", "--components", "lstm", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_gradcheck_failure_exit_code(tmp_path, monkeypatch):
    original = ops.Tanh.backward
    monkeypatch.setattr(ops.Tanh, "backward", lambda self, grad: tuple(2.0 * g for g in original(self, grad)))
    assert main(["gradcheck", "--components", "gcn", "--out", str(tmp_path)]) == EXIT_GRADCHECK
    assert manifest_of(tmp_path)["exit_code"] == EXIT_GRADCHECK
