import numpy as np
import pytest

from subface.errors import ValidationError
from subface.partition import SubclassPartition, build_partition
from subface.scatter import compute_scatters, subclass_statistics

from conftest import random_dataset, vector_dataset
from oracles import class_scatter_reference


def four_point_dataset():
    return vector_dataset({"A": [[0.0, 0.0], [2.0, 0.0]], "B": [[0.0, 2.0], [2.0, 2.0]]})


def test_statistics_hand_case():
    ds = four_point_dataset()
    part = build_partition(ds, max_leaf=8)
    stats = subclass_statistics(ds, part)
    assert np.allclose(stats.global_mean, [1.0, 1.0])
    assert np.allclose(stats.subclass_means, [[1.0, 0.0], [1.0, 2.0]])
    assert np.allclose(stats.priors, [0.5, 0.5])
    assert stats.subject_ids == ["A", "B"]


def test_statistics_single_sample():
    ds = vector_dataset({"only": [[0.3, 0.7, 0.1]]})
    stats = subclass_statistics(ds, build_partition(ds, max_leaf=4))
    assert np.allclose(stats.global_mean, [0.3, 0.7, 0.1])
    assert np.allclose(stats.priors, [1.0])


def test_statistics_duplication_invariance():
    ds = four_point_dataset()
    doubled = vector_dataset({
        "A": [[0.0, 0.0], [2.0, 0.0]] * 2,
        "B": [[0.0, 2.0], [2.0, 2.0]] * 2,
    })
    s1 = subclass_statistics(ds, build_partition(ds, max_leaf=8))
    s2 = subclass_statistics(doubled, build_partition(doubled, max_leaf=8))
    assert np.allclose(s1.subclass_means, s2.subclass_means)
    assert np.allclose(s1.priors, s2.priors)


def test_scatter_hand_case():
    ds = four_point_dataset()
    scatters = compute_scatters(ds, build_partition(ds, max_leaf=8))
    assert np.allclose(scatters.s_ws, [[1.0, 0.0], [0.0, 0.0]])
    assert np.allclose(scatters.s_bs, [[0.0, 0.0], [0.0, 1.0]])
    assert np.allclose(scatters.s_ts, np.eye(2))


def test_all_identical_samples_give_zero_scatter():
    ds = vector_dataset({"a": [[0.4, 0.4]] * 3, "b": [[0.4, 0.4]] * 3})
    scatters = compute_scatters(ds, build_partition(ds, max_leaf=2))
    assert np.allclose(scatters.s_ws, 0.0)
    assert np.allclose(scatters.s_bs, 0.0)
    assert np.allclose(scatters.s_ts, 0.0)


def test_decomposition_identity_on_random_data(rng):
    ds = random_dataset(rng, subjects=5, per_subject=12, dim=20)
    scatters = compute_scatters(ds, build_partition(ds, max_leaf=4))
    gap = np.max(np.abs(scatters.s_ts - (scatters.s_ws + scatters.s_bs)))
    assert gap / np.max(np.abs(scatters.s_ts)) < 1e-10


def test_matrices_symmetric_and_psd(rng):
    ds = random_dataset(rng, subjects=4, per_subject=9, dim=12)
    scatters = compute_scatters(ds, build_partition(ds, max_leaf=3))
    for mat in (scatters.s_ws, scatters.s_bs, scatters.s_ts):
        assert np.max(np.abs(mat - mat.T)) < 1e-12 * max(np.max(np.abs(mat)), 1.0)
        eigvals = np.linalg.eigvalsh(mat)
        assert eigvals.min() >= -1e-10 * max(eigvals.max(), 1.0)


def test_one_subclass_per_subject_matches_class_level_oracle(rng):
    ds = random_dataset(rng, subjects=4, per_subject=6, dim=7)
    part = build_partition(ds, max_leaf=6)  # leaf bound >= class size: one leaf each
    assert all(len(v) == 1 for v in part.groups.values())
    scatters = compute_scatters(ds, part)
    labels = [s.subject_id for s in ds.samples]
    ref_w, ref_b = class_scatter_reference(ds.matrix(), labels)
    assert np.allclose(scatters.s_ws, ref_w, atol=1e-10)
    assert np.allclose(scatters.s_bs, ref_b, atol=1e-10)


def test_translation_invariance(rng):
    ds = random_dataset(rng, subjects=3, per_subject=8, dim=5)
    shifted = vector_dataset({
        subject: [ds.matrix()[i] + 13.25 for i in idx]
        for subject, idx in ds.subject_indices().items()
    })
    s1 = compute_scatters(ds, build_partition(ds, max_leaf=3))
    s2 = compute_scatters(shifted, build_partition(shifted, max_leaf=3))
    for a, b in ((s1.s_ws, s2.s_ws), (s1.s_bs, s2.s_bs), (s1.s_ts, s2.s_ts)):
        assert np.max(np.abs(a - b)) < 1e-10 * max(np.max(np.abs(a)), 1.0)


def test_empty_subclass_is_error():
    ds = vector_dataset({"a": [[0.0, 1.0], [1.0, 0.0]]})
    broken = SubclassPartition(groups={"a": [[0, 1], []]}, max_leaf=4)
    with pytest.raises(ValidationError, match="empty subclass"):
        subclass_statistics(ds, broken)


def test_out_of_range_index_is_error():
    ds = vector_dataset({"a": [[0.0, 1.0]]})
    broken = SubclassPartition(groups={"a": [[0, 5]]}, max_leaf=4)
    with pytest.raises(ValidationError, match="out of range"):
        subclass_statistics(ds, broken)
