"""Cosine 1-NN identification over an enrolled gallery, thresholding, verification."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .subspace import SubspaceModel, project_matrix


@dataclass(eq=False)
class GalleryIndex:
    """Enrolled feature templates grouped by subject.

    ``entries`` maps subject id to an (n_templates, feature_dim) matrix. The
    index is immutable after enrollment; a stacked cache is built lazily for
    fast identification.
    """

    entries: dict[str, np.ndarray]
    feature_dim: int
    _cache: tuple | None = field(default=None, init=False, repr=False)

    def subject_count(self) -> int:
        return len(self.entries)

    def template_count(self) -> int:
        return sum(t.shape[0] for t in self.entries.values())

    def _stacked(self) -> tuple:
        if self._cache is None:
            subjects = sorted(self.entries)
            mats = [self.entries[s] for s in subjects]
            stacked = np.concatenate(mats, axis=0)
            codes = np.repeat(np.arange(len(subjects)), [m.shape[0] for m in mats])
            norms = np.linalg.norm(stacked, axis=1)
            self._cache = (np.array(subjects), stacked, norms, codes)
        return self._cache


@dataclass
class ThresholdConfig:
    """A distance threshold derived as a fraction of the max genuine distance."""

    theta: float
    tau: float
    calibration_digest: str


@dataclass(eq=False)
class MatchResult:
    """Full ascending ranking over enrolled subjects plus the accept decision.

    ``decision`` is the top subject when its distance is within ``tau_used``
    (always the top subject when no threshold was supplied) and None when the
    probe is rejected as unknown.
    """

    ranking: list[tuple[str, float]]
    decision: str | None
    tau_used: float | None


def cosine_distance(x: np.ndarray, y: np.ndarray) -> float:
    """1 - cos(x, y), clamped to [0, 2] against rounding."""
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine distance undefined for zero vectors")
    if np.array_equal(a, b):
        # identical vectors must sit at exactly zero so tau = 0 accepts them
        return 0.0
    return float(min(max(1.0 - float(np.dot(a, b)) / (na * nb), 0.0), 2.0))


def enroll(model: SubspaceModel, gallery: Dataset, q: int | None = None) -> GalleryIndex:
    """Project every gallery sample to q features and store it under its subject."""
    if q is None:
        q = model.q_max
    feats = project_matrix(model, gallery.matrix(), q)
    norms = np.linalg.norm(feats, axis=1)
    bad = np.nonzero(norms == 0.0)[0]
    if bad.size:
        raise ValidationError(
            f"gallery sample {int(bad[0])} projects to a zero template (equals the model mean)"
        )
    entries: dict[str, np.ndarray] = {}
    for subject, idx in gallery.subject_indices().items():
        entries[subject] = feats[idx].copy()
    return GalleryIndex(entries=entries, feature_dim=q)


def identify(index: GalleryIndex, probe: np.ndarray, tau: float | None = None) -> MatchResult:
    """Rank every enrolled subject by its best template distance to the probe.

    Per-subject score is the minimum cosine distance over that subject's
    templates; ties in the ranking break lexicographically by subject id.
    """
    if not index.entries:
        raise ValidationError("gallery index is empty")
    p = np.asarray(probe, dtype=np.float64).ravel()
    if p.shape[0] != index.feature_dim:
        raise ValidationError(
            f"probe length {p.shape[0]} does not match feature dim {index.feature_dim}"
        )
    pnorm = float(np.linalg.norm(p))
    if pnorm == 0.0:
        raise ValidationError("probe vector has zero norm")
    subjects, stacked, norms, codes = index._stacked()
    dists = np.clip(1.0 - (stacked @ p) / (norms * pnorm), 0.0, 2.0)
    for i in np.nonzero(dists <= 1e-12)[0]:
        if np.array_equal(stacked[i], p):
            dists[i] = 0.0  # exact template hits sit at exactly zero
    best = np.full(len(subjects), np.inf)
    np.minimum.at(best, codes, dists)
    order = np.lexsort((subjects, best))
    ranking = [(str(subjects[i]), float(best[i])) for i in order]
    top_subject, top_dist = ranking[0]
    if tau is None:
        decision: str | None = top_subject
    else:
        decision = top_subject if top_dist <= tau else None
    return MatchResult(ranking=ranking, decision=decision, tau_used=tau)


def calibrate_threshold(genuine_distances, theta: float) -> ThresholdConfig:
    """Set the acceptance threshold to ``theta`` times the max genuine distance."""
    dists = np.asarray(list(genuine_distances), dtype=np.float64)
    if dists.size == 0:
        raise ValidationError("cannot calibrate from an empty distance list")
    if not 0.0 < theta <= 1.0:
        raise ValidationError(f"theta must be in (0, 1], got {theta}")
    digest = hashlib.sha256(np.sort(dists).astype("<f8").tobytes()).hexdigest()
    return ThresholdConfig(theta=theta, tau=float(theta * dists.max()), calibration_digest=digest)


def verify(template: np.ndarray, live: list[np.ndarray], tau: float) -> tuple[bool, float]:
    """One-to-one check of a stored template against a few live captures.

    Returns (accepted, best) where best is the minimum cosine distance over
    the live vectors and acceptance means best <= tau.
    """
    if not len(live):
        raise ValidationError("live capture list is empty")
    if tau < 0.0:
        raise ValidationError("tau must be non-negative")
    best = min(cosine_distance(template, v) for v in live)
    return best <= tau, best
