"""Subspace training: spectrum regularization, discriminant extraction, baselines.

The main pipeline whitens the within-subclass scatter over the whole input
space, with small and null eigenvalues replaced by a decaying model so their
inverse-square-root weights stay bounded, then extracts discriminant features
from the between-subclass scatter of the whitened data. PCA and Fisher-style
LDA are provided as baselines.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ValidationError
from .linalg import RANK_TOL, EigenModel, scatter_eigh, sym_eigendecompose
from .partition import SubclassPartition
from .scatter import SubclassStats, subclass_statistics, within_subclass_deviations

__all__ = [
    "EigenModel",
    "SpectrumRegularization",
    "SubspaceModel",
    "sym_eigendecompose",
    "regularize_spectrum",
    "train_ere",
    "train_wssda",
    "train_pca",
    "train_lda",
    "project",
    "project_matrix",
]

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SpectrumRegularization:
    """A regularized eigen-spectrum and its whitening weights.

    ``boundary`` (1-indexed) separates the reliably estimated leading
    eigenvalues, kept as is, from the noisy tail replaced by the decay model
    ``alpha / (k + beta)``. ``alpha``/``beta`` are NaN when the retained
    spectrum is flat and the tail is extended as a constant instead.
    """

    boundary: int
    rank: int
    alpha: float
    beta: float
    regularized: np.ndarray
    weights: np.ndarray


@dataclass(eq=False)
class SubspaceModel:
    """A trained linear feature extractor.

    ``transform`` rows are ordered by decreasing discriminative importance, so
    projecting with the first q rows equals truncating a full projection to
    its first q entries.
    """

    method: str
    mean: np.ndarray
    transform: np.ndarray
    q_max: int
    provenance: str

    @property
    def dim(self) -> int:
        return int(self.transform.shape[1])


def regularize_spectrum(eig: EigenModel, mu: float = 1.0) -> SpectrumRegularization:
    """Replace the noisy tail of a descending spectrum with a decaying model.

    The numerical rank r counts eigenvalues above ``RANK_TOL`` times the
    largest. The boundary m is the first index (1-based, clamped to
    [2, max(2, r)]) where the eigenvalue drops to at most
    ``median + mu * (median - smallest_retained)``, medians taken over the
    retained range. Beyond m the spectrum follows ``alpha / (k + beta)``
    fitted through (1, lam_1) and (m, lam_m); a perfectly flat retained
    spectrum is extended as the constant lam_m. Weights are the inverse square
    roots of the regularized values.
    """
    lam = np.asarray(eig.eigenvalues, dtype=np.float64)
    d = lam.size
    if d < 2:
        raise ValidationError("spectrum must have at least two entries")
    lam1 = float(lam[0])
    if lam1 <= 0.0:
        raise ValidationError("leading eigenvalue must be positive")
    rank = int(np.sum(lam > RANK_TOL * lam1))
    if rank < 2:
        raise ValidationError("insufficient rank: fewer than two significant eigenvalues")
    lam_med = float(np.median(lam[:rank]))
    lam_r = float(lam[rank - 1])
    cut = lam_med + mu * (lam_med - lam_r)
    below = np.nonzero(lam[:rank] <= cut)[0]
    m = int(below[0]) + 1 if below.size else rank
    m = min(max(m, 2), max(2, rank))
    lam_m = float(lam[m - 1])

    regularized = lam.copy()
    if lam1 > lam_m:
        beta = (m * lam_m - lam1) / (lam1 - lam_m)
        alpha = lam1 * (1.0 + beta)
        tail = np.arange(m + 1, d + 1, dtype=np.float64)
        regularized[m:] = alpha / (tail + beta)
    else:
        alpha = math.nan
        beta = math.nan
        regularized[m:] = lam_m
    return SpectrumRegularization(
        boundary=m,
        rank=rank,
        alpha=alpha,
        beta=beta,
        regularized=regularized,
        weights=1.0 / np.sqrt(regularized),
    )


def _dataset_digest(train: Dataset) -> str:
    h = hashlib.sha256()
    h.update(f"n={len(train.samples)};d={train.dim};".encode())
    for s in train.samples:
        h.update(s.subject_id.encode())
        h.update(b"\x00")
        h.update(np.ascontiguousarray(s.vector, dtype="<f8").tobytes())
    return h.hexdigest()


def _provenance(method: str, train: Dataset, **params: object) -> str:
    text = f"method={method};data={_dataset_digest(train)};" + ";".join(
        f"{k}={params[k]!r}" for k in sorted(params)
    )
    return hashlib.sha256(text.encode()).hexdigest()


def _ere_components(
    train: Dataset, part: SubclassPartition, mu: float, route: str
) -> tuple[np.ndarray, SubclassStats, SpectrumRegularization, np.ndarray]:
    if train.dim < 2:
        raise ValidationError("input dimension must be at least 2")
    stats = subclass_statistics(train, part)
    xw = within_subclass_deviations(train, part)
    spectrum, vectors = scatter_eigh(xw, float(xw.shape[0]), n_vectors=train.dim, route=route)
    regn = regularize_spectrum(EigenModel(eigenvalues=spectrum, eigenvectors=vectors), mu)
    transform = regn.weights[:, None] * vectors.T
    return transform, stats, regn, spectrum


def train_ere(
    train: Dataset, part: SubclassPartition, mu: float = 1.0, route: str = "auto"
) -> SubspaceModel:
    """Whole-space whitening of the within-subclass scatter with a regularized spectrum.

    All d rows are retained; discriminative truncation only happens in the
    subclass-discriminant stage built on top of this transform.
    """
    transform, stats, _, _ = _ere_components(train, part, mu, route)
    return SubspaceModel(
        method="ERE",
        mean=stats.global_mean.copy(),
        transform=transform,
        q_max=train.dim,
        provenance=_provenance("ERE", train, mu=mu, max_leaf=part.max_leaf),
    )


def train_wssda(
    train: Dataset,
    part: SubclassPartition,
    mu: float = 1.0,
    q: int | None = None,
    route: str = "auto",
) -> SubspaceModel:
    """Discriminant extraction on top of the whole-space regularized whitening.

    Training data is mapped through the whitening transform, the
    between-subclass scatter is recomputed there, and its leading
    eigendirections (at most #subclasses - 1, dropping directions below
    ``RANK_TOL`` of the largest) compose with the whitening into a single
    q x d transform.
    """
    t_ere, stats, regn, spectrum = _ere_components(train, part, mu, route)
    n_sub = len(stats.priors)
    if n_sub < 2:
        raise ValidationError("at least two subclasses are required")
    centered_means = (stats.subclass_means - stats.global_mean) @ t_ere.T
    z = np.sqrt(stats.priors)[:, None] * centered_means
    cap = min(train.dim, n_sub - 1)
    between_spectrum, u = scatter_eigh(z, 1.0, n_vectors=cap)
    top = float(between_spectrum[0])
    if top <= 0.0:
        raise ValidationError("no between-subclass variance after whitening")
    q_max = int(np.sum(between_spectrum[:cap] > RANK_TOL * top))
    if q is None:
        q = q_max
    if not 1 <= q <= q_max:
        raise ValidationError(
            f"requested features exceed discriminative rank: q={q}, max {q_max}"
        )
    # trace of the whitened total scatter = trace(within part) + trace(between part)
    logger.debug(
        "whitened total-subclass scatter trace: %.6g",
        float(np.sum(spectrum / regn.regularized)) + float(np.sum(z * z)),
    )
    return SubspaceModel(
        method="WSSDA",
        mean=stats.global_mean.copy(),
        transform=u[:, :q].T @ t_ere,
        q_max=q,
        provenance=_provenance("WSSDA", train, mu=mu, q=q, max_leaf=part.max_leaf),
    )


def train_pca(train: Dataset, q: int) -> SubspaceModel:
    """Principal components of the total scatter, mean subtracted before projection."""
    n, d = len(train.samples), train.dim
    if not 1 <= q <= min(d, n - 1):
        raise ValidationError(f"q must be in [1, {min(d, n - 1)}], got {q}")
    x = train.matrix()
    mean = x.mean(axis=0)
    _, vectors = scatter_eigh(x - mean, float(n), n_vectors=q)
    return SubspaceModel(
        method="PCA",
        mean=mean,
        transform=vectors.T.copy(),
        q_max=q,
        provenance=_provenance("PCA", train, q=q),
    )


def train_lda(train: Dataset, q: int) -> SubspaceModel:
    """Fisher discriminant in the usual small-sample composition.

    PCA reduces to rank min(N - C, d) first, the within-class scatter is
    whitened there (eigenvalues floored at 1e-12 of the largest), and the
    projected between-class scatter supplies the top q directions. The stages
    compose into one q x d transform.
    """
    subjects = train.subjects()
    c = len(subjects)
    if c < 2:
        raise ValidationError("at least two subjects are required")
    if not 1 <= q <= c - 1:
        raise ValidationError(f"q must be in [1, {c - 1}] for {c} subjects, got {q}")
    n, d = len(train.samples), train.dim
    p = min(n - c, d)
    if p < 1:
        raise ValidationError("insufficient samples for within-class whitening")

    x = train.matrix()
    mean = x.mean(axis=0)
    _, pca_vecs = scatter_eigh(x - mean, float(n), n_vectors=p)
    base = pca_vecs.T  # (p, d)
    y = (x - mean) @ base.T

    s_w = np.zeros((p, p))
    s_b = np.zeros((p, p))
    for subject in subjects:
        idx = train.subject_indices()[subject]
        block = y[idx]
        cmean = block.mean(axis=0)
        dev = block - cmean
        s_w += dev.T @ dev
        s_b += len(idx) * np.outer(cmean, cmean)
    s_w /= n
    s_b /= n

    within = sym_eigendecompose((s_w + s_w.T) / 2.0)
    top = float(within.eigenvalues[0])
    if top <= 0.0:
        raise ValidationError("degenerate within-class scatter")
    floored = np.maximum(within.eigenvalues, 1e-12 * top)
    whiten = (1.0 / np.sqrt(floored))[:, None] * within.eigenvectors.T

    s_b_white = whiten @ s_b @ whiten.T
    between = sym_eigendecompose((s_b_white + s_b_white.T) / 2.0)
    return SubspaceModel(
        method="LDA",
        mean=mean,
        transform=between.eigenvectors[:, :q].T @ whiten @ base,
        q_max=q,
        provenance=_provenance("LDA", train, q=q),
    )


def project(model: SubspaceModel, x: np.ndarray, q: int | None = None) -> np.ndarray:
    """Apply the first q transform rows to x - mean."""
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.shape[0] != model.dim:
        raise ValidationError(f"dimension mismatch: expected {model.dim}, got {v.shape[0]}")
    if q is None:
        q = model.q_max
    if not 1 <= q <= model.q_max:
        raise ValidationError(f"q must be in [1, {model.q_max}], got {q}")
    return model.transform[:q] @ (v - model.mean)


def project_matrix(model: SubspaceModel, rows: np.ndarray, q: int | None = None) -> np.ndarray:
    """Project each row of an (n, d) matrix; same contract as :func:`project`."""
    m = np.asarray(rows, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != model.dim:
        raise ValidationError(f"expected an (n, {model.dim}) matrix, got shape {m.shape}")
    if q is None:
        q = model.q_max
    if not 1 <= q <= model.q_max:
        raise ValidationError(f"q must be in [1, {model.q_max}], got {q}")
    return (m - model.mean) @ model.transform[:q].T
