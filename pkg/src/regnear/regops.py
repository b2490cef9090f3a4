"""Difference-operator catalog and composed regularizers.

Scaled first- and second-difference matrices, their square variants
(zero-padded or made invertible), the closed-form null-space bases and
projectors for constants and linear trends, and the composition of an
invertible core with a projector into the regularizers the solver
pipeline consumes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadDimension, ShapeMismatch, SingularCore
from .nearness import NullSpaceBasis

_PIVOT_TOL = 1e-12


class RegularizerKind(str, Enum):
    IDENTITY = "IDENTITY"
    L1_RECT = "L1_RECT"
    L2_RECT = "L2_RECT"
    L1_DELTA = "L1_DELTA"
    L1_ZERO = "L1_ZERO"
    L2_ZERO = "L2_ZERO"
    L2_TILDE = "L2_TILDE"


class Mode(str, Enum):
    """How the core matrix and the projector combine into the regularizer."""

    IDENTITY = "IDENTITY"      # L = I, no transformation needed
    RIGHT = "RIGHT"            # L = core @ P
    TWO_SIDED = "TWO_SIDED"    # L = P @ core @ P
    PLAIN = "PLAIN"            # L = core, used as-is (square, singular)


def make_regularization_matrix(kind: RegularizerKind, n: int, delta: float = 1.0) -> np.ndarray:
    """Assemble one of the catalog matrices at dimension n."""
    kind = RegularizerKind(kind)
    if n < 3:
        raise BadDimension(f"{kind.value} needs n >= 3")
    if kind is RegularizerKind.L1_DELTA and not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta!r}")

    if kind is RegularizerKind.IDENTITY:
        return np.eye(n)

    if kind is RegularizerKind.L1_RECT:
        L = np.zeros((n - 1, n))
        idx = np.arange(n - 1)
        L[idx, idx] = 0.5
        L[idx, idx + 1] = -0.5
        return L

    if kind is RegularizerKind.L2_RECT:
        L = np.zeros((n - 2, n))
        idx = np.arange(n - 2)
        L[idx, idx] = -0.25
        L[idx, idx + 1] = 0.5
        L[idx, idx + 2] = -0.25
        return L

    if kind in (RegularizerKind.L1_DELTA, RegularizerKind.L1_ZERO):
        if kind is RegularizerKind.L1_ZERO:
            delta = 0.0
        L = np.zeros((n, n))
        idx = np.arange(n - 1)
        L[idx, idx] = 0.5
        L[idx, idx + 1] = -0.5
        L[n - 1, n - 1] = delta / 2.0
        return L

    if kind is RegularizerKind.L2_ZERO:
        L = np.zeros((n, n))
        idx = np.arange(1, n - 1)
        L[idx, idx - 1] = -0.25
        L[idx, idx] = 0.5
        L[idx, idx + 1] = -0.25
        return L

    # L2_TILDE: full tridiagonal second difference, corner rows included
    L = np.zeros((n, n))
    idx = np.arange(n)
    L[idx, idx] = 0.5
    L[idx[:-1], idx[:-1] + 1] = -0.25
    L[idx[1:], idx[1:] - 1] = -0.25
    return L


def make_nullspace_basis(which: str, n: int) -> NullSpaceBasis:
    """Closed-form orthonormal bases: N1 = constants, N2 = constants + linear."""
    if n < 3:
        raise BadDimension("null-space bases need n >= 3")
    if which == "N1":
        raw = np.ones((n, 1))
        V = raw / np.sqrt(n)
        return NullSpaceBasis(n=n, ell=1, V=V, raw=raw)
    if which == "N2":
        t = np.arange(1.0, n + 1.0)
        raw = np.column_stack([np.ones(n), t])
        v1 = np.ones(n) / np.sqrt(n)
        centered = t - (n + 1.0) / 2.0
        v2 = centered / np.sqrt(n * (n * n - 1.0) / 12.0)
        return NullSpaceBasis(n=n, ell=2, V=np.column_stack([v1, v2]), raw=raw)
    raise ValueError(f"unknown null-space basis {which!r} (use 'N1' or 'N2')")


def make_projector_closed(which: str, n: int) -> np.ndarray:
    """Entrywise closed forms of the complement projectors.

    P1 removes the mean; P2 removes the best-fitting affine trend.
    (At n = 2 the trend space is all of R^2, so P2 degenerates to the
    zero matrix.)
    """
    if n < 2:
        raise BadDimension("closed-form projectors need n >= 2")
    if which == "P1":
        return np.eye(n) - np.full((n, n), 1.0 / n)
    if which == "P2":
        h = np.arange(1, n + 1, dtype=float).reshape(-1, 1)
        k = np.arange(1, n + 1, dtype=float).reshape(1, -1)
        num = 2.0 * (n + 1) * (-3.0 * h + 2.0 * n + 1.0) + 6.0 * k * (2.0 * h - n - 1.0)
        return np.eye(n) - num / (n * (n + 1.0) * (n - 1.0))
    raise ValueError(f"unknown closed-form projector {which!r} (use 'P1' or 'P2')")


_KIND_BASIS = {
    RegularizerKind.L1_DELTA: "N1",
    RegularizerKind.L1_ZERO: "N1",
    RegularizerKind.L2_TILDE: "N2",
    RegularizerKind.L2_ZERO: "N2",
}

_MODE_KINDS = {
    Mode.IDENTITY: {RegularizerKind.IDENTITY},
    Mode.RIGHT: {RegularizerKind.L1_DELTA, RegularizerKind.L2_TILDE},
    Mode.TWO_SIDED: {RegularizerKind.L1_DELTA, RegularizerKind.L2_TILDE},
    Mode.PLAIN: {RegularizerKind.L1_ZERO, RegularizerKind.L2_ZERO},
}


@dataclass(frozen=True)
class ProjectedRegularizer:
    """A regularizer ready for the standard-form transformation.

    Ltilde is the square core matrix (the regularizer itself in PLAIN
    and IDENTITY modes); basis spans the null space that the projector
    enforces (empty in IDENTITY mode).
    """

    n: int
    Ltilde: np.ndarray
    basis: NullSpaceBasis
    mode: Mode
    kind: RegularizerKind
    delta: float = 1.0

    def __post_init__(self):
        if self.Ltilde.shape != (self.n, self.n):
            raise ShapeMismatch("core matrix must be square of size n")
        if self.basis.n != self.n:
            raise ShapeMismatch("basis dimension does not match")

    def projector(self) -> np.ndarray:
        if self.basis.ell == 0:
            return np.eye(self.n)
        V = self.basis.V
        return np.eye(self.n) - V @ V.T

    def effective_matrix(self) -> np.ndarray:
        """Assemble the regularizer this object represents, densely."""
        if self.mode in (Mode.IDENTITY, Mode.PLAIN):
            return self.Ltilde.copy()
        P = self.projector()
        if self.mode is Mode.RIGHT:
            return self.Ltilde @ P
        return P @ self.Ltilde @ P


def compose_regularizer(kind: RegularizerKind, n: int, mode: Mode,
                        delta: float = 1.0,
                        which_nullspace: str | None = None) -> ProjectedRegularizer:
    """Combine a catalog matrix with its matching null-space projector.

    The basis is implied by the kind (first-difference kinds pair with
    the constant null space, second-difference kinds with the affine
    one); which_nullspace may restate it but must agree.  Invertible-core
    modes verify the core is nonsingular.
    """
    kind = RegularizerKind(kind)
    mode = Mode(mode)
    if kind not in _MODE_KINDS[mode]:
        allowed = ", ".join(sorted(k.value for k in _MODE_KINDS[mode]))
        raise ValueError(f"mode {mode.value} accepts kinds {{{allowed}}}, not {kind.value}")
    implied = _KIND_BASIS.get(kind)
    if which_nullspace is not None and which_nullspace != implied:
        raise ValueError(f"kind {kind.value} pairs with null space {implied}, "
                         f"not {which_nullspace}")
    core = make_regularization_matrix(kind, n, delta)
    if mode is Mode.IDENTITY:
        basis = NullSpaceBasis.empty(n)
    else:
        basis = make_nullspace_basis(_KIND_BASIS[kind], n)
    if mode in (Mode.RIGHT, Mode.TWO_SIDED):
        diag_r = np.abs(np.diag(np.linalg.qr(core, mode="r")))
        if np.min(diag_r) <= _PIVOT_TOL * max(np.linalg.norm(core), 1e-300):
            raise SingularCore(f"core {kind.value} is numerically singular (delta={delta!r}?)")
    return ProjectedRegularizer(n=n, Ltilde=core, basis=basis, mode=mode,
                                kind=kind, delta=delta)


# Names accepted on the command line, in canonical output order.
REGULARIZER_NAMES = ("I", "L10", "L1dP1", "L20", "L2tP2", "P2L2tP2")

_NAME_TABLE = {
    "I": (RegularizerKind.IDENTITY, Mode.IDENTITY),
    "L10": (RegularizerKind.L1_ZERO, Mode.PLAIN),
    "L1dP1": (RegularizerKind.L1_DELTA, Mode.RIGHT),
    "L20": (RegularizerKind.L2_ZERO, Mode.PLAIN),
    "L2tP2": (RegularizerKind.L2_TILDE, Mode.RIGHT),
    "P2L2tP2": (RegularizerKind.L2_TILDE, Mode.TWO_SIDED),
}


def regularizer_from_name(name: str, n: int, delta: float = 1.0) -> ProjectedRegularizer:
    try:
        kind, mode = _NAME_TABLE[name]
    except KeyError:
        valid = ", ".join(REGULARIZER_NAMES)
        raise ValueError(f"unknown regularizer {name!r}; valid names: {valid}") from None
    return compose_regularizer(kind, n, mode, delta)
