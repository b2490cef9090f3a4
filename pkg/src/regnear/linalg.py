"""Dense linear-algebra kernels and the plain-text matrix format.

Thin wrappers around LAPACK-backed numpy/scipy routines, with the error
policy this package promises: explicit exceptions instead of silent NaNs
or warnings.
"""
from __future__ import annotations

import io

import numpy as np
import scipy.linalg

from .errors import ParseError, RankDeficient, ShapeMismatch, SingularTriangular

RANK_TOL = 1e-12


def _as_float_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def thin_qr(a) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization of a tall matrix.

    Returns (Q, R) with Q of shape (m, k), R upper triangular (k, k),
    where k is the number of columns.  Raises RankDeficient when a
    diagonal entry of R falls below RANK_TOL times the Frobenius norm
    of the input, and ShapeMismatch when the input has more columns
    than rows.
    """
    a = _as_float_array(a, "matrix")
    if a.ndim != 2:
        raise ShapeMismatch("thin_qr expects a 2-d array")
    m, k = a.shape
    if m < k:
        raise ShapeMismatch(f"thin_qr needs rows >= cols, got {m}x{k}")
    q, r = np.linalg.qr(a, mode="reduced")
    if k > 0:
        scale = np.linalg.norm(a)
        if np.min(np.abs(np.diag(r))) <= RANK_TOL * scale:
            raise RankDeficient("input columns are numerically dependent")
        # fix the sign ambiguity: diagonal of R nonnegative
        signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
        q = q * signs
        r = r * signs[:, None]
    return q, r


def solve_upper_triangular(r, c) -> np.ndarray:
    """Back substitution for an upper-triangular system R x = c."""
    r = _as_float_array(r, "triangular matrix")
    c = _as_float_array(c, "right-hand side")
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ShapeMismatch("triangular matrix must be square")
    if c.shape[0] != r.shape[0]:
        raise ShapeMismatch("right-hand side length does not match")
    if r.shape[0] == 0:
        return np.zeros_like(c)
    diag = np.abs(np.diag(r))
    if np.min(diag) <= RANK_TOL * max(np.max(np.abs(r)), 1e-300):
        raise SingularTriangular("diagonal entry too small for back substitution")
    return scipy.linalg.solve_triangular(r, c, lower=False)


def min_norm_lstsq_solve(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution of a x = b.

    Rank is decided by singular values relative to the largest one,
    with the package-wide threshold RANK_TOL.  For consistent systems
    this returns the solution orthogonal to the null space of a.
    """
    a = _as_float_array(a, "matrix")
    b = _as_float_array(b, "right-hand side")
    if a.ndim != 2 or b.shape[0] != a.shape[0]:
        raise ShapeMismatch("incompatible shapes for least squares")
    x, *_ = np.linalg.lstsq(a, b, rcond=RANK_TOL)
    return x


def frobenius_inner(a, b) -> float:
    """Frobenius inner product sum_ij a_ij * b_ij."""
    a = _as_float_array(a, "first operand")
    b = _as_float_array(b, "second operand")
    if a.shape != b.shape:
        raise ShapeMismatch(f"shape {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def frobenius_norm(a) -> float:
    a = _as_float_array(a, "matrix")
    return float(np.linalg.norm(a))


# --- plain-text matrix format -------------------------------------------
#
# First line: "rows cols".  Then one line per row, whitespace-separated
# entries written with 17 significant digits so values round-trip exactly.


def write_matrix(f, a) -> None:
    """Write a matrix to an open text file or file path."""
    a = np.atleast_2d(_as_float_array(a, "matrix"))
    if isinstance(f, (str, bytes)):
        with open(f, "w") as fh:
            write_matrix(fh, a)
        return
    f.write(f"{a.shape[0]} {a.shape[1]}\n")
    for row in a:
        f.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(f) -> np.ndarray:
    """Read a matrix in the plain-text format; raises ParseError on bad input."""
    if isinstance(f, (str, bytes)):
        with open(f) as fh:
            return read_matrix(fh)
    header = f.readline().split()
    if len(header) != 2:
        raise ParseError("expected header line 'rows cols'")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ParseError(f"bad header: {header!r}") from exc
    if rows < 0 or cols < 0:
        raise ParseError("negative dimensions")
    data = []
    for i in range(rows):
        parts = f.readline().split()
        if len(parts) != cols:
            raise ParseError(f"row {i + 1}: expected {cols} entries, got {len(parts)}")
        try:
            data.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"row {i + 1}: non-numeric entry") from exc
    out = np.array(data, dtype=float).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise ParseError("non-finite entry in matrix file")
    return out


def write_vector(f, v) -> None:
    """Write a vector as an n x 1 matrix file."""
    v = _as_float_array(v, "vector")
    if v.ndim != 1:
        raise ShapeMismatch("write_vector expects a 1-d array")
    write_matrix(f, v.reshape(-1, 1))


def read_vector(f) -> np.ndarray:
    """Read an n x 1 or 1 x n matrix file as a vector."""
    a = read_matrix(f)
    if a.ndim != 2 or (1 not in a.shape and 0 not in a.shape):
        raise ParseError("vector file must have a single row or column")
    return a.reshape(-1)


def matrix_to_text(a) -> str:
    buf = io.StringIO()
    write_matrix(buf, a)
    return buf.getvalue()
