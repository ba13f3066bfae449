"""Per-subject subclass clustering via principal-direction median splits.

Each subject's samples are grown into a binary tree: any node holding more
than ``max_leaf`` samples is projected onto its leading principal direction
and split at the median projection (ties and the median element go left).
Leaves become subclasses. A node whose samples are all identical is never
split, whatever its size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .linalg import scatter_eigh

DEFAULT_MAX_LEAF = 8


@dataclass(eq=False)
class SubclassPartition:
    """Subclasses per subject, each a list of sample indices into the dataset."""

    groups: dict[str, list[list[int]]]
    max_leaf: int

    def subclass_count(self) -> int:
        return sum(len(leaves) for leaves in self.groups.values())

    def iter_subclasses(self) -> Iterator[tuple[str, list[int]]]:
        """Yield (subject_id, indices) in sorted-subject, tree-traversal order."""
        for subject in sorted(self.groups):
            for leaf in self.groups[subject]:
                yield subject, leaf


def build_partition(train: Dataset, max_leaf: int = DEFAULT_MAX_LEAF) -> SubclassPartition:
    """Cluster each subject's training samples into subclasses.

    Deterministic given the sample order: subjects are visited sorted and the
    split rule has no random component.
    """
    if max_leaf < 1:
        raise ValidationError("max_leaf must be at least 1")
    if not train.samples:
        raise ValidationError("training dataset is empty")
    x = train.matrix()
    groups: dict[str, list[list[int]]] = {}
    for subject in train.subjects():
        idx = list(train.subject_indices()[subject])
        groups[subject] = _split(x, idx, max_leaf)
    return SubclassPartition(groups=groups, max_leaf=max_leaf)


def _split(x: np.ndarray, indices: list[int], max_leaf: int) -> list[list[int]]:
    if len(indices) <= max_leaf:
        return [indices]
    block = x[indices]
    centered = block - block.mean(axis=0)
    if not np.any(centered):
        # identical samples: no direction to split along
        return [indices]
    _, lead = scatter_eigh(centered, float(len(indices)), n_vectors=1)
    proj = centered @ lead[:, 0]
    median = float(np.median(proj))
    left = [i for i, t in zip(indices, proj) if t <= median]
    right = [i for i, t in zip(indices, proj) if t > median]
    if not left or not right:
        return [indices]
    return _split(x, left, max_leaf) + _split(x, right, max_leaf)
