import numpy as np
import pytest

from grid.pmu_graph import induce_pmu_graph
from models.model import ModelInstance
from models.spec import build_spec
from storage.checkpoint import CheckpointPaths, load_checkpoint, load_stats, read_manifest, save_checkpoint
from storage.dataset_store import dataset_hashes, load_dataset, save_dataset
from utils.errors import DataError
from utils.helpers import file_sha256


@pytest.fixture
def trained_like(feeder, pmu_table, rng):
    model = ModelInstance(build_spec("rgatv2", hidden=4, gnn_out=3, heads=2, seed=9), induce_pmu_graph(feeder, pmu_table[11]))
    model.loss(rng.normal(size=(3, 11, 20, 9)), [1, 0, 1], training=True, rng=rng)
    return model


class TestCheckpoint:
    def test_restores_parameters_and_running_stats(self, tmp_path, trained_like, small_dataset, rng):
        paths = save_checkpoint(trained_like, tmp_path / "rgatv2_seed9", stats=small_dataset.stats, seed=9)
        assert paths.data.name == "rgatv2_seed9.bin"
        restored, manifest = load_checkpoint(tmp_path / "rgatv2_seed9")
        assert restored.checksum() == trained_like.checksum() == manifest["checksum"]
        assert restored.spec == trained_like.spec
        assert manifest["seed"] == 9
        sample = rng.normal(size=(11, 20, 9))
        assert restored.forward(sample).item() == trained_like.forward(sample).item()
        np.testing.assert_array_equal(load_stats(manifest).mean, small_dataset.stats.mean)

    def test_rebinds_on_load(self, tmp_path, trained_like, feeder, pmu_table):
        save_checkpoint(trained_like, tmp_path / "m")
        model, _ = load_checkpoint(tmp_path / "m.bin", graph=induce_pmu_graph(feeder, pmu_table[25]))
        assert model.num_nodes == 25
        assert model.checksum() == trained_like.checksum()

    def test_same_model_same_bytes(self, tmp_path, trained_like):
        a = save_checkpoint(trained_like, tmp_path / "a")
        b = save_checkpoint(trained_like, tmp_path / "b")
        assert file_sha256(a.data) == file_sha256(b.data)

    def test_tampered_bytes_rejected(self, tmp_path, trained_like):
        paths = save_checkpoint(trained_like, tmp_path / "m")
        raw = bytearray(paths.data.read_bytes())
        raw[0] ^= 0xFF
        paths.data.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "m")

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_manifest(tmp_path / "absent")

    def test_paths_accept_either_suffix(self, tmp_path):
        assert CheckpointPaths.for_stem(tmp_path / "x.json") == CheckpointPaths.for_stem(tmp_path / "x.bin")


class TestDatasetStore:
    def test_round_trip(self, small_dataset_dir, small_dataset):
        loaded = load_dataset(small_dataset_dir)
        for name, ws in small_dataset.splits().items():
            np.testing.assert_array_equal(loaded.splits()[name].features, ws.features)
            np.testing.assert_array_equal(loaded.splits()[name].labels, ws.labels)
        assert loaded.pmu_buses == small_dataset.pmu_buses
        assert loaded.config == small_dataset.config
        assert loaded.seed == 7

    def test_byte_deterministic(self, tmp_path, small_dataset, small_dataset_dir):
        save_dataset(small_dataset, tmp_path)
        assert dataset_hashes(tmp_path) == dataset_hashes(small_dataset_dir)

    def test_corrupted_split_rejected(self, tmp_path, small_dataset):
        save_dataset(small_dataset, tmp_path)
        with open(tmp_path / "test.npy", "ab") as f:
            f.write(b"\0")
        with pytest.raises(DataError):
            load_dataset(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path)
