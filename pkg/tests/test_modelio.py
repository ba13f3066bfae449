import numpy as np
import pytest

from subface.errors import ValidationError
from subface.matcher import enroll
from subface.modelio import (
    load_gallery,
    load_model,
    load_model_json,
    save_gallery,
    save_model,
    save_model_json,
)
from subface.partition import build_partition
from subface.subspace import train_ere, train_pca, train_wssda

from conftest import random_dataset


@pytest.fixture
def model(rng):
    ds = random_dataset(rng, subjects=4, per_subject=6, dim=7)
    return train_wssda(ds, build_partition(ds, max_leaf=4), q=3)


def test_binary_round_trip_is_bit_exact(tmp_path, model):
    path = tmp_path / "m.bin"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.method == model.method
    assert loaded.q_max == model.q_max
    assert loaded.provenance == model.provenance
    assert np.array_equal(loaded.mean, model.mean)
    assert np.array_equal(loaded.transform, model.transform)
    save_model(loaded, tmp_path / "m2.bin")
    assert (tmp_path / "m.bin").read_bytes() == (tmp_path / "m2.bin").read_bytes()


def test_json_mirror_round_trip_is_bit_exact(tmp_path, model):
    path = tmp_path / "m.json"
    save_model_json(model, path)
    loaded = load_model_json(path)
    assert np.array_equal(loaded.mean, model.mean)
    assert np.array_equal(loaded.transform, model.transform)
    assert loaded.method == model.method


def test_identical_training_runs_serialize_identically(tmp_path, rng):
    ds = random_dataset(rng, subjects=3, per_subject=8, dim=6)
    for train in (lambda: train_pca(ds, q=4),
                  lambda: train_ere(ds, build_partition(ds, max_leaf=4))):
        save_model(train(), tmp_path / "a.bin")
        save_model(train(), tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_gallery_round_trip_is_bit_exact(tmp_path, rng, model):
    ds = random_dataset(rng, subjects=4, per_subject=6, dim=7)
    index = enroll(model, ds, q=3)
    path = tmp_path / "g.bin"
    save_gallery(index, path)
    loaded = load_gallery(path)
    assert loaded.feature_dim == index.feature_dim
    assert sorted(loaded.entries) == sorted(index.entries)
    for subject in index.entries:
        assert np.array_equal(loaded.entries[subject], index.entries[subject])
    save_gallery(loaded, tmp_path / "g2.bin")
    assert path.read_bytes() == (tmp_path / "g2.bin").read_bytes()


def test_loaders_reject_wrong_container(tmp_path, model, rng):
    save_model(model, tmp_path / "m.bin")
    with pytest.raises(ValidationError, match="not a gallery"):
        load_gallery(tmp_path / "m.bin")
    ds = random_dataset(rng, subjects=2, per_subject=3, dim=7)
    save_gallery(enroll(model, ds, q=3), tmp_path / "g.bin")
    with pytest.raises(ValidationError, match="not a model"):
        load_model(tmp_path / "g.bin")


def test_loader_rejects_garbage(tmp_path):
    (tmp_path / "junk.bin").write_bytes(b"not a container")
    with pytest.raises(ValidationError, match="magic"):
        load_model(tmp_path / "junk.bin")
    with pytest.raises(ValidationError, match="not found"):
        load_model(tmp_path / "missing.bin")


def test_truncated_file_is_detected(tmp_path, model):
    save_model(model, tmp_path / "m.bin")
    raw = (tmp_path / "m.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ValidationError, match="truncated"):
        load_model(tmp_path / "cut.bin")
