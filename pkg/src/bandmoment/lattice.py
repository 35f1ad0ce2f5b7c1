"""1D Neumann lattice toolkit.

Builds the second-difference operator on a finite chain with free (Neumann)
boundary conditions, the covariance profile J = (W^2 K + 1)^-1 that drives the
band-matrix entry variances, and the family of tridiagonal chain determinants
(recurrences, closed forms, Green's-function diagonal, Gaussian partition
function) used throughout the package.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded


@dataclass(frozen=True)
class Lattice1D:
    """Finite chain of ``size >= 1`` sites.

    Odd sizes correspond to the symmetric index range -half_width..half_width;
    even sizes are admitted as well (the chain operator and covariance profile
    are defined for any length).
    """

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("lattice size must be >= 1")

    @property
    def half_width(self) -> int:
        if self.size % 2 == 0:
            raise ValueError("half_width is defined only for odd-size lattices")
        return (self.size - 1) // 2

    @classmethod
    def from_half_width(cls, half_width: int) -> "Lattice1D":
        if half_width < 0:
            raise ValueError("half_width must be nonnegative")
        return cls(2 * half_width + 1)


@dataclass(frozen=True, eq=False)
class TridiagonalSymmetric:
    """Real symmetric tridiagonal matrix stored as diagonal / off-diagonal arrays."""

    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        e = np.asarray(self.e, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or len(e) != max(len(d) - 1, 0):
            raise ValueError("inconsistent tridiagonal array lengths")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)

    @property
    def size(self) -> int:
        return len(self.d)

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.d)
        if len(self.e):
            m += np.diag(self.e, 1) + np.diag(self.e, -1)
        return m


@dataclass(frozen=True, eq=False)
class CovarianceProfile:
    """Entrywise variance profile J (symmetric, rows summing to 1) plus bandwidth W."""

    J: np.ndarray
    W: float

    @property
    def size(self) -> int:
        return self.J.shape[0]


def neumann_laplacian(lat: Lattice1D) -> TridiagonalSymmetric:
    """Second-difference operator (the negated Laplacian) with free boundaries.

    Interior diagonal entries are 2, boundary entries 1, off-diagonals -1, so
    every row sums to zero and the constant vector spans the kernel.  The
    single-site chain is the 1x1 zero matrix.
    """
    n = lat.size
    if n == 1:
        return TridiagonalSymmetric(np.zeros(1), np.zeros(0))
    d = np.full(n, 2.0)
    d[0] = d[-1] = 1.0
    e = np.full(n - 1, -1.0)
    return TridiagonalSymmetric(d, e)


def covariance_profile(lat: Lattice1D, W: float) -> CovarianceProfile:
    """Covariance profile J = (W^2 K + 1)^-1 with K the free-boundary chain operator.

    Computed column by column with a banded Cholesky solve (the matrix is
    symmetric positive definite with spectrum in [1, 1+4W^2]), followed by one
    step of iterative refinement so that the exact identities J = J^T and
    J.1 = 1 hold to full double precision.
    """
    if not W > 0:
        raise ValueError("bandwidth W must be positive")
    n = lat.size
    if n == 1:
        # single site: the chain operator is 0, so J = (0 + 1)^-1 = 1 exactly
        return CovarianceProfile(np.ones((1, 1)), float(W))
    lap = neumann_laplacian(lat)
    w2 = float(W) ** 2
    # upper banded storage for W^2 K + I
    ab = np.zeros((2, n))
    ab[1] = w2 * lap.d + 1.0
    ab[0, 1:] = w2 * lap.e
    rhs = np.eye(n)
    try:
        J = solveh_banded(ab, rhs)
        # residual correction: one refinement pass removes the O(kappa*eps) drift
        R = rhs - _mul_shifted_tridiag(lap, w2, J)
        J = J + solveh_banded(ab, R)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cannot occur for SPD input
        raise RuntimeError(f"banded solver breakdown for W={W}, size={n}") from exc
    J = 0.5 * (J + J.T)
    return CovarianceProfile(J, float(W))


def _mul_shifted_tridiag(t: TridiagonalSymmetric, scale: float, X: np.ndarray) -> np.ndarray:
    """(scale*T + I) @ X without forming the dense matrix."""
    Y = (scale * t.d + 1.0)[:, None] * X
    if len(t.e):
        Y[:-1] += (scale * t.e)[:, None] * X[1:]
        Y[1:] += (scale * t.e)[:, None] * X[:-1]
    return Y


def charpoly_pinned(m: int, x: complex) -> complex:
    """Determinant of the m-site chain operator with one pinned end, shifted by x.

    Satisfies T_m = (2+x) T_{m-1} - T_{m-2} with T_0 = 1, T_1 = 1+x.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    p_prev, p = 1.0 + 0j, 1.0 + x
    if m == 0:
        return p_prev
    for _ in range(m - 1):
        p_prev, p = p, (2.0 + x) * p - p_prev
    return p


def charpoly_neumann(m: int, x: complex) -> complex:
    """Determinant of the free-boundary m-site chain operator shifted by x.

    S_m = (1+x) T_{m-1} - T_{m-2} for m >= 2; the single-site chain gives
    S_1 = x (determinant of the 1x1 zero operator shifted by x).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return complex(x)
    return (1.0 + x) * charpoly_pinned(m - 1, x) - charpoly_pinned(m - 2, x)


def _zeta(x: complex) -> complex:
    return (2.0 + x + cmath.sqrt(x * x + 4.0 * x)) / 2.0


def charpoly_pinned_closed(m: int, x: complex) -> complex:
    """Closed form T_m = (zeta^(m+1) + zeta^-m) / (zeta + 1), zeta = (2+x+sqrt(x^2+4x))/2."""
    z = _zeta(x)
    return (z ** (m + 1) + z ** (-m)) / (z + 1.0)


def charpoly_neumann_closed(m: int, x: complex) -> complex:
    """Closed form S_m = (zeta^m - zeta^-m)(zeta - 1) / (zeta + 1)."""
    z = _zeta(x)
    return (z ** m - z ** (-m)) * (z - 1.0) / (z + 1.0)


def _log_charpoly_pinned(m: int, x: complex) -> complex:
    """log T_m(x) accumulated from per-step ratios, continuous in m.

    The ratio recurrence t_k = (2+x) - 1/t_{k-1} stays bounded where the plain
    recurrence would overflow, and summing principal logs of the ratios keeps
    the imaginary part continuous as m grows.
    """
    if m == 0:
        return 0.0 + 0j
    t = 1.0 + x
    if t == 0:
        raise ZeroDivisionError("chain determinant hit an exact zero ratio")
    acc = cmath.log(t)
    for _ in range(m - 1):
        t = (2.0 + x) - 1.0 / t
        if t == 0:
            raise ZeroDivisionError("chain determinant hit an exact zero ratio")
        acc += cmath.log(t)
    return acc


def _log_charpoly_neumann(m: int, x: complex) -> complex:
    """log S_m(x), same continuity convention as :func:`_log_charpoly_pinned`."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if x == 0:
        raise ValueError("free-boundary chain determinant vanishes at x=0 (zero mode)")
    if m == 1:
        return cmath.log(x)
    # S_m / T_{m-1} = (1+x) - 1/t_{m-1}
    t = 1.0 + x
    acc = cmath.log(t)
    for _ in range(m - 2):
        t = (2.0 + x) - 1.0 / t
        acc += cmath.log(t)
    return acc + cmath.log((1.0 + x) - 1.0 / t)


def green_diag(m: int, gamma: complex, W: float, i: int) -> complex:
    """Diagonal entry (i,i), 1-based, of (K + 2*gamma/W^2)^-1 on the free m-chain.

    Uses the cofactor identity G_ii = T_{i-1}(x) T_{m-i}(x) / S_m(x) with
    x = 2*gamma/W^2, evaluated in log form so large m cannot overflow.
    """
    if not 1 <= i <= m:
        raise ValueError(f"index i={i} outside 1..{m}")
    if gamma == 0:
        raise ValueError("gamma=0 is singular (zero mode of the free chain)")
    if complex(gamma).real <= 0:
        raise ValueError("need Re gamma > 0")
    x = 2.0 * complex(gamma) / float(W) ** 2
    log_val = (
        _log_charpoly_pinned(i - 1, x)
        + _log_charpoly_pinned(m - i, x)
        - _log_charpoly_neumann(m, x)
    )
    return cmath.exp(log_val)


def log_gaussian_partition(m: int, gamma: complex, W: float) -> complex:
    """log of the m-dimensional Gaussian chain integral.

    The integrand couples neighbours through exp(-(x_j - x_{j-1})^2 / 2) and
    confines through exp(-gamma x_j^2 / W^2); the quadratic form equals
    (1/2) x^T (K + 2*gamma/W^2) x, so

        log Z = (m/2) log(2 pi) - (1/2) log S_m(2*gamma/W^2),

    with the log of S_m tracked continuously in m (principal branch per ratio
    step, no branch jumps for Re gamma > 0).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if complex(gamma).real <= 0:
        raise ValueError("need Re gamma > 0")
    x = 2.0 * complex(gamma) / float(W) ** 2
    return 0.5 * m * math.log(2.0 * math.pi) - 0.5 * _log_charpoly_neumann(m, x)
