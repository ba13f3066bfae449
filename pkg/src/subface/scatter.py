"""Subclass statistics and the within/between/total scatter decomposition.

With subclass priors p = n_subclass / N these definitions make the
decomposition an exact conservation law, total = within + between:

    within  = (1/N) sum_ij sum_{x in ij} (x - mean_ij)(x - mean_ij)^T
    between = sum_ij p_ij (mean_ij - mean)(mean_ij - mean)^T
    total   = (1/N) sum_x (x - mean)(x - mean)^T
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .partition import SubclassPartition


@dataclass(eq=False)
class SubclassStats:
    """Global mean plus per-subclass means, priors, sizes, and owning subjects."""

    global_mean: np.ndarray
    subclass_means: np.ndarray
    priors: np.ndarray
    sizes: np.ndarray
    subject_ids: list[str]


@dataclass(eq=False)
class ScatterSet:
    """The three scatter matrices of the pipeline plus their statistics."""

    s_ws: np.ndarray
    s_bs: np.ndarray
    s_ts: np.ndarray
    stats: SubclassStats


def _gather(train: Dataset, part: SubclassPartition) -> list[tuple[str, list[int]]]:
    n = len(train.samples)
    out = []
    for subject, indices in part.iter_subclasses():
        if not indices:
            raise ValidationError(f"empty subclass for subject {subject!r}")
        if min(indices) < 0 or max(indices) >= n:
            raise ValidationError(f"subclass index out of range for subject {subject!r}")
        out.append((subject, indices))
    if not out:
        raise ValidationError("partition has no subclasses")
    return out


def subclass_statistics(train: Dataset, part: SubclassPartition) -> SubclassStats:
    """Means and priors of every subclass plus the global mean over partitioned samples."""
    x = train.matrix()
    subclasses = _gather(train, part)
    all_idx = [i for _, indices in subclasses for i in indices]
    total = len(all_idx)
    means = np.stack([x[indices].mean(axis=0) for _, indices in subclasses])
    sizes = np.array([len(indices) for _, indices in subclasses], dtype=np.int64)
    return SubclassStats(
        global_mean=x[all_idx].mean(axis=0),
        subclass_means=means,
        priors=sizes / float(total),
        sizes=sizes,
        subject_ids=[subject for subject, _ in subclasses],
    )


def within_subclass_deviations(train: Dataset, part: SubclassPartition) -> np.ndarray:
    """Rows x - mean_subclass(x), stacked in canonical subclass order."""
    x = train.matrix()
    blocks = []
    for _, indices in _gather(train, part):
        block = x[indices]
        blocks.append(block - block.mean(axis=0))
    return np.concatenate(blocks, axis=0)


def compute_scatters(train: Dataset, part: SubclassPartition) -> ScatterSet:
    """Within-subclass, between-subclass, and total scatter of the partitioned samples."""
    stats = subclass_statistics(train, part)
    x = train.matrix()
    all_idx = [i for _, indices in _gather(train, part) for i in indices]
    n = float(len(all_idx))

    xw = within_subclass_deviations(train, part)
    s_ws = xw.T @ xw / n

    zb = np.sqrt(stats.priors)[:, None] * (stats.subclass_means - stats.global_mean)
    s_bs = zb.T @ zb

    xt = x[all_idx] - stats.global_mean
    s_ts = xt.T @ xt / n

    return ScatterSet(
        s_ws=(s_ws + s_ws.T) / 2.0,
        s_bs=(s_bs + s_bs.T) / 2.0,
        s_ts=(s_ts + s_ts.T) / 2.0,
        stats=stats,
    )
