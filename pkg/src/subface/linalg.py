"""Symmetric eigendecomposition and scatter-spectrum helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Eigenvalues at or below RANK_TOL * largest count as numerically zero.
RANK_TOL = 1e-10


@dataclass(eq=False)
class EigenModel:
    """Descending eigenpairs of a symmetric matrix.

    ``eigenvalues[k]`` pairs with column ``eigenvectors[:, k]``. Columns are
    orthonormal and sign-fixed: the first entry of largest magnitude in each
    column is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the first largest-magnitude entry of each is positive."""
    if vectors.size == 0:
        return vectors.copy()
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigendecompose(matrix: np.ndarray) -> EigenModel:
    """Decompose a symmetric matrix into descending, sign-fixed eigenpairs."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0.0 and float(np.max(np.abs(a - a.T))) >= 1e-9 * scale:
        raise ValidationError("matrix is not symmetric")
    values, vectors = np.linalg.eigh(a)
    # eigh returns ascending order; reverse for a descending spectrum
    values = values[::-1].copy()
    vectors = fix_signs(vectors[:, ::-1])
    return EigenModel(eigenvalues=values, eigenvectors=vectors)


def scatter_eigh(
    deviations: np.ndarray,
    denom: float,
    n_vectors: int | None = None,
    route: str = "auto",
) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenpairs of ``deviations.T @ deviations / denom``.

    Picks the covariance (d x d) or Gram (n x n) route by the smaller side, so
    the scatter matrix is never materialized when n << d. Returns a length-d
    spectrum (zero past the numerical rank on the Gram route) and the leading
    ``n_vectors`` eigenvector columns; columns past the data rank are a
    deterministic orthonormal completion of the null space.
    """
    xc = np.asarray(deviations, dtype=np.float64)
    if xc.ndim != 2:
        raise ValidationError("deviations must be a 2-D matrix")
    if denom <= 0:
        raise ValidationError("denominator must be positive")
    n, d = xc.shape
    if n_vectors is None:
        n_vectors = d
    if not 1 <= n_vectors <= d:
        raise ValidationError(f"n_vectors must be in [1, {d}], got {n_vectors}")
    if route == "auto":
        route = "gram" if n < d else "dense"
    if route not in ("dense", "gram"):
        raise ValidationError(f"unknown route {route!r}")

    if route == "dense":
        s = xc.T @ xc / denom
        model = sym_eigendecompose((s + s.T) / 2.0)
        return model.eigenvalues, model.eigenvectors[:, :n_vectors].copy()

    gram = xc @ xc.T / denom
    gram = (gram + gram.T) / 2.0
    values, us = np.linalg.eigh(gram)
    values = values[::-1].copy()
    us = us[:, ::-1]
    top = float(values[0]) if n else 0.0
    rank = int(np.sum(values > RANK_TOL * top)) if top > 0.0 else 0
    spectrum = np.zeros(d)
    spectrum[:rank] = values[:rank]
    keep = min(rank, n_vectors)
    cols = xc.T @ us[:, :keep]
    if keep:
        cols /= np.linalg.norm(cols, axis=0)
    if n_vectors > keep:
        cols = np.hstack([cols, complete_basis(cols, n_vectors - keep)])
    return spectrum, fix_signs(cols)


def complete_basis(partial: np.ndarray, count: int) -> np.ndarray:
    """Deterministic orthonormal columns spanning the complement of ``partial``."""
    d, r = partial.shape
    if count < 0 or r + count > d:
        raise ValidationError("cannot extend basis past the ambient dimension")
    if r == 0:
        return np.eye(d)[:, :count]
    q, _ = np.linalg.qr(partial, mode="complete")
    return q[:, r : r + count]
