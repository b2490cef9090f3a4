"""Closest matrices with a prescribed null space.

Given a matrix A and an orthonormal basis V of a target null space, the
Frobenius-closest matrix whose null space contains span(V) is A*P with
P the orthogonal projector onto the complement of span(V).  When the
perturbed matrix must stay symmetric the closest choice is P*A*P.
These operations, the projector construction, and the associated
distances live here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadDimension, DependentVectors, NotSymmetric, RankDeficient, ShapeMismatch
from .linalg import frobenius_norm, thin_qr

_ORTHO_TOL = 1e-12
_SPAN_TOL = 1e-10


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal basis of the null space to be enforced.

    V holds the orthonormal columns.  raw, when present, keeps the
    original (not necessarily orthonormal) vectors the basis was built
    from; its span must agree with span(V).
    """

    n: int
    ell: int
    V: np.ndarray
    raw: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if V.shape != (self.n, self.ell):
            raise ShapeMismatch(f"basis array has shape {V.shape}, expected {(self.n, self.ell)}")
        if self.ell and self.ell >= self.n:
            raise BadDimension("basis must span a proper subspace (ell < n)")
        object.__setattr__(self, "V", V)
        if self.ell:
            gram = V.T @ V
            if np.max(np.abs(gram - np.eye(self.ell))) > _ORTHO_TOL:
                raise RankDeficient("basis columns are not orthonormal")
        if self.raw is not None:
            raw = np.atleast_2d(np.asarray(self.raw, dtype=float))
            if raw.shape[0] != self.n:
                raise ShapeMismatch("raw vectors have wrong length")
            resid = raw - V @ (V.T @ raw)
            if np.linalg.norm(resid) > _SPAN_TOL * max(np.linalg.norm(raw), 1.0):
                raise RankDeficient("raw vectors do not lie in span of the basis")
            object.__setattr__(self, "raw", raw)

    @classmethod
    def empty(cls, n: int) -> "NullSpaceBasis":
        return cls(n=n, ell=0, V=np.zeros((n, 0)))

    @classmethod
    def from_vectors(cls, vectors, orthonormal: bool = False) -> "NullSpaceBasis":
        """Build a basis from the columns of `vectors`.

        With orthonormal=True the columns are trusted as-is; otherwise
        they are orthonormalized by thin QR (raising RankDeficient for
        dependent input).
        """
        raw = np.atleast_2d(np.asarray(vectors, dtype=float))
        if raw.ndim != 2:
            raise ShapeMismatch("expected a 2-d array of column vectors")
        n, ell = raw.shape
        if orthonormal:
            return cls(n=n, ell=ell, V=raw)
        if ell == 0:
            return cls.empty(n)
        q, _ = thin_qr(raw)
        return cls(n=n, ell=ell, V=q, raw=raw)


def build_projector(V, orthonormal: bool = False) -> np.ndarray:
    """Orthogonal projector onto the complement of the column span of V.

    For orthonormal V this is I - V V^T; otherwise the Gram matrix
    V^T V is inverted explicitly.  An empty V gives the identity.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, 1)
    n, ell = V.shape
    if ell == 0:
        return np.eye(n)
    if ell > n:
        raise ShapeMismatch("projector basis has more columns than rows")
    # detects dependent columns regardless of the route taken below
    thin_qr(V)
    if orthonormal:
        return np.eye(n) - V @ V.T
    omega = V.T @ V
    return np.eye(n) - V @ np.linalg.solve(omega, V.T)


def _check_basis(a: np.ndarray, basis: NullSpaceBasis) -> None:
    if a.ndim != 2:
        raise ShapeMismatch("expected a matrix")
    if a.shape[1] != basis.n:
        raise ShapeMismatch(f"matrix has {a.shape[1]} columns, basis lives in dimension {basis.n}")


def nearest_with_nullspace(a, basis: NullSpaceBasis) -> np.ndarray:
    """Frobenius-closest matrix to `a` that annihilates span(basis).

    Equals a @ P for the orthogonal projector P; computed without
    forming P.
    """
    a = np.asarray(a, dtype=float)
    _check_basis(a, basis)
    if basis.ell == 0:
        return a.copy()
    av = a @ basis.V
    return a - av @ basis.V.T


def nearest_two_vector(a, v1, v2) -> np.ndarray:
    """Two-vector special case via the explicit correction matrix.

    The subtracted correction C has entries assembled directly from
    v1, v2, their norms and inner product; the result equals
    nearest_with_nullspace with an orthonormalized {v1, v2} basis but
    exercises an independent formula.
    """
    a = np.asarray(a, dtype=float)
    v1 = np.asarray(v1, dtype=float).reshape(-1)
    v2 = np.asarray(v2, dtype=float).reshape(-1)
    if a.ndim != 2 or a.shape[1] != v1.shape[0] or v1.shape != v2.shape:
        raise ShapeMismatch("matrix and vectors are not conformant")
    n1 = float(v1 @ v1)
    n2 = float(v2 @ v2)
    ip = float(v1 @ v2)
    det = n1 * n2 - ip * ip
    if det <= _ORTHO_TOL * n1 * n2:
        raise DependentVectors("the two null-space vectors are numerically parallel")
    c = (n1 * np.outer(v2, v2)
         - ip * (np.outer(v2, v1) + np.outer(v1, v2))
         + n2 * np.outer(v1, v1)) / det
    return a - a @ c


def nearest_symmetric_with_nullspace(a, basis: NullSpaceBasis) -> np.ndarray:
    """Closest symmetric matrix with the prescribed null space: P a P."""
    a = np.asarray(a, dtype=float)
    _check_basis(a, basis)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch("symmetric variant needs a square matrix")
    scale = max(np.linalg.norm(a), 1e-300)
    if np.linalg.norm(a - a.T) > _ORTHO_TOL * scale:
        raise NotSymmetric("input matrix is not symmetric")
    if basis.ell == 0:
        return a.copy()
    V = basis.V
    av = a @ V            # n x ell
    vtav = V.T @ av       # ell x ell
    return a - V @ av.T - av @ V.T + V @ vtav @ V.T


def nearness_distance(a, basis: NullSpaceBasis, symmetric: bool = False) -> float:
    """Frobenius distance from `a` to its closest null-space-constrained matrix.

    General case: || a V V^T ||_F, which reduces to || a V ||_F for an
    orthonormal basis.  Symmetric case: the norm of the full update
    a - P a P.
    """
    a = np.asarray(a, dtype=float)
    _check_basis(a, basis)
    if basis.ell == 0:
        return 0.0
    if not symmetric:
        return float(np.linalg.norm(a @ basis.V))
    return frobenius_norm(a - nearest_symmetric_with_nullspace(a, basis))
