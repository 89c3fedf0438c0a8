"""Small dense complex matrices (2, 4 or 8 dimensional) and equivalence metrics.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every public
function validates its inputs with :func:`as_cmat` so that NaN/Inf or
unsupported dimensions never leak into the rest of the package.
"""

from __future__ import annotations

import math

import numpy as np

DIMS = (2, 4, 8)
DEFAULT_TOL = 1e-10


class DimensionError(ValueError):
    pass


class NotUnitaryError(ValueError):
    def __init__(self, residual: float, tol: float):
        super().__init__(
            f"matrix is not unitary: ||A^dagger A - I||_F = {residual:.3e} > tol {tol:.1e}"
        )
        self.residual = residual


def as_cmat(a, dims=DIMS) -> np.ndarray:
    """Return ``a`` as a finite square complex128 array with an allowed dimension."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] not in dims:
        raise DimensionError(f"dimension {m.shape[0]} not in {dims}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_cvec(v, dims=DIMS) -> np.ndarray:
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1 or x.shape[0] not in dims:
        raise DimensionError(f"expected a vector of length in {dims}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


I2 = np.eye(2, dtype=np.complex128)
I4 = np.eye(4, dtype=np.complex128)
I8 = np.eye(8, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
Y = Z @ X  # real form [[0, 1], [-1, 0]]
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
G = np.array(
    [
        [math.cos(math.pi / 8), -math.sin(math.pi / 8)],
        [math.sin(math.pi / 8), math.cos(math.pi / 8)],
    ],
    dtype=np.complex128,
)
for _m in (I2, I4, I8, X, Z, Y, H, G):
    _m.setflags(write=False)


def identity(dim: int) -> np.ndarray:
    if dim not in DIMS:
        raise DimensionError(f"dimension {dim} not in {DIMS}")
    return np.eye(dim, dtype=np.complex128)


def mat_mul(a, b) -> np.ndarray:
    a, b = as_cmat(a), as_cmat(b)
    _same_dim(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_cmat(a).conj().T


def kron(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the more significant factor."""
    a, b = as_cmat(a), as_cmat(b)
    if a.shape[0] * b.shape[0] > 8:
        raise DimensionError(f"kron result dimension {a.shape[0] * b.shape[0]} exceeds 8")
    return np.kron(a, b)


def trace(a) -> complex:
    return complex(np.trace(as_cmat(a)))


def frob_dist(a, b) -> float:
    a, b = as_cmat(a), as_cmat(b)
    _same_dim(a, b)
    return float(np.linalg.norm(a - b))


def unitarity_residual(a) -> float:
    a = as_cmat(a)
    return float(np.linalg.norm(a.conj().T @ a - np.eye(a.shape[0])))


def is_unitary(a, tol: float = DEFAULT_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    return unitarity_residual(a) <= tol


def require_unitary(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    a = as_cmat(a)
    res = unitarity_residual(a)
    if res > tol:
        raise NotUnitaryError(res, tol)
    return a


def _phase_dist_raw(u: np.ndarray, v: np.ndarray) -> float:
    # For unitaries, min_a ||u - e^{ia} v||_F^2 = 2d (1 - |tr(u^dagger v)| / d), and the
    # minimizer is a = arg tr(v^dagger u).  The norm form keeps full relative precision
    # near zero, where 1 - |t|/d would cancel to ~1e-16 and floor the distance at ~1e-8.
    t = np.vdot(v, u)  # sum(conj(v) * u) = tr(v^dagger u)
    phase = t / abs(t) if t != 0 else 1.0
    return float(np.linalg.norm(u - phase * v)) / math.sqrt(2 * u.shape[0])


def phase_dist(u, v, tol: float = DEFAULT_TOL) -> float:
    """Global-phase invariant distance ``sqrt(max(0, 1 - |tr(u^dagger v)| / d))``.

    Zero exactly when ``u = e^{ia} v``.  Raises :class:`NotUnitaryError` if either
    argument is not unitary within ``tol``.
    """
    u, v = require_unitary(u, tol), require_unitary(v, tol)
    _same_dim(u, v)
    return _phase_dist_raw(u, v)


def is_sparse(a, tol: float = DEFAULT_TOL) -> bool:
    """True for diagonal or antidiagonal 2x2 matrices."""
    a = as_cmat(a, dims=(2,))
    if tol <= 0:
        raise ValueError("tol must be positive")
    diagonal = abs(a[0, 1]) <= tol and abs(a[1, 0]) <= tol
    antidiagonal = abs(a[0, 0]) <= tol and abs(a[1, 1]) <= tol
    return diagonal or antidiagonal


def diag_phase_factors(u, v) -> np.ndarray:
    """Diagonal of ``u @ adjoint(v)``; the phases relating ``u`` to ``v`` when they are diagonal-phase equivalent."""
    u, v = as_cmat(u), as_cmat(v)
    _same_dim(u, v)
    return np.diag(u @ v.conj().T).copy()


def is_diag_phase_equiv(u, v, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``u = D v`` for a diagonal ``D`` of unit-modulus entries."""
    u, v = require_unitary(u, tol), require_unitary(v, tol)
    _same_dim(u, v)
    d = u @ v.conj().T
    off = d - np.diag(np.diag(d))
    if np.max(np.abs(off)) > tol:
        return False
    return bool(np.all(np.abs(np.abs(np.diag(d)) - 1) <= tol))


def format_matrix(a) -> str:
    """Serialize as ``dim`` followed by ``dim`` rows of ``re{sign}imj`` entries."""
    a = as_cmat(a)
    lines = [str(a.shape[0])]
    for row in a:
        lines.append(" ".join(f"{z.real:.16e}{z.imag:+.16e}j" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError("empty matrix text")
    try:
        dim = int(rows[0])
    except ValueError:
        raise ValueError(f"first line must be the dimension, got {rows[0]!r}") from None
    if len(rows) - 1 != dim:
        raise ValueError(f"expected {dim} rows, got {len(rows) - 1}")
    entries = []
    for i, row in enumerate(rows[1:]):
        fields = row.split()
        if len(fields) != dim:
            raise ValueError(f"row {i} has {len(fields)} entries, expected {dim}")
        try:
            entries.append([complex(f) for f in fields])
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from None
    return as_cmat(entries)
