"""Closed-form spectral data for the bulk scaling limit.

Semicircle density and CDF, the saddle-point bundle (stationary points a_+-,
quadratic coefficients c_+-, minimum level c_0) of the exponent governing the
moment asymptotics, the bulk rescaling lambda_j = lambda_0 + xi_j/(N rho), and
the sine-kernel reference curve.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# below this |pi*delta| the sinc is evaluated by series (keeps relative error
# at the 1e-12 level through the removable singularity)
_SINC_SERIES_CUTOFF = 1e-4


def semicircle_density(lam):
    """Semicircle density sqrt(4 - lambda^2) / (2 pi) on [-2, 2], zero outside."""
    arr = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.zeros_like(arr)
    inside = np.abs(arr) < 2.0
    out[inside] = np.sqrt(4.0 - arr[inside] ** 2) / (2.0 * np.pi)
    if np.ndim(lam) == 0:
        return float(out[0])
    return out


def semicircle_cdf(lam):
    """Integral of the semicircle density from -infinity to lambda."""
    arr = np.atleast_1d(np.asarray(lam, dtype=float))
    x = np.clip(arr, -2.0, 2.0)
    out = 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi
    if np.ndim(lam) == 0:
        return float(out[0])
    return out


@dataclass(frozen=True)
class SaddleData:
    """Stationary-point bundle at bulk energy lambda0.

    a_plus/a_minus are the two real stationary points (+- pi rho(lambda0)),
    c_plus/c_minus the quadratic coefficients of the exponent there (complex
    conjugates), and c0 the common real part of the exponent at the saddle.
    """

    lambda0: float
    rho: float
    a_plus: float
    a_minus: float
    c_plus: complex
    c_minus: complex
    c0: float


def saddle_data(lambda0: float) -> SaddleData:
    """All saddle-point quantities at bulk energy lambda0, |lambda0| < 2."""
    if not abs(lambda0) < 2.0:
        raise ValueError(f"lambda0={lambda0} outside the bulk (-2, 2)")
    rho = semicircle_density(lambda0)
    a = math.sqrt(4.0 - lambda0 * lambda0) / 2.0
    re_c = 1.0 - lambda0 * lambda0 / 4.0
    im_c = 0.5 * lambda0 * math.sqrt(1.0 - lambda0 * lambda0 / 4.0)
    return SaddleData(
        lambda0=float(lambda0),
        rho=float(rho),
        a_plus=a,
        a_minus=-a,
        c_plus=complex(re_c, im_c),
        c_minus=complex(re_c, -im_c),
        c0=0.5 - lambda0 * lambda0 / 4.0,
    )


def saddle_exponent(x: complex, lambda0: float) -> complex:
    """Exponent (x + i lambda0/2)^2 / 2 - log(x - i lambda0/2) (principal log).

    Its stationary points on the real axis are +-pi rho(lambda0).
    """
    z = complex(x)
    pole = 0.5j * lambda0
    if z == pole:
        raise ValueError("saddle exponent is singular at x = i lambda0 / 2")
    return (z + pole) ** 2 / 2.0 - cmath.log(z - pole)


def saddle_exponent_excess(x, lambda0: float):
    """Real part of the exponent above its minimum, for real x.

    Equals (x^2 - lambda0^2/4 - log(x^2 + lambda0^2/4)) / 2 - c0; vanishes
    exactly at the two stationary points and is positive elsewhere.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    c0 = 0.5 - lambda0 * lambda0 / 4.0
    q = arr * arr + lambda0 * lambda0 / 4.0
    out = 0.5 * (arr * arr - lambda0 * lambda0 / 4.0 - np.log(q)) - c0
    if np.ndim(x) == 0:
        return float(out[0])
    return out


def sine_kernel(delta_xi: float) -> float:
    """sin(pi d) / (pi d) with the removable singularity handled by series."""
    z = math.pi * delta_xi
    if abs(z) < _SINC_SERIES_CUTOFF:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return math.sin(z) / z


@dataclass(frozen=True)
class SpectralParams:
    """Bulk-scaled spectral arguments lambda_j = lambda0 + xi_j / (N rho(lambda0))."""

    lambda0: float
    xi1: float
    xi2: float
    n_dim: int
    lambda1: float
    lambda2: float


def scaled_lambdas(lambda0: float, xi1: float, xi2: float, n_dim: int) -> SpectralParams:
    """Resolve the bulk-scaled pair (lambda1, lambda2) for matrix dimension n_dim."""
    if not abs(lambda0) < 2.0:
        raise ValueError(f"lambda0={lambda0} outside the bulk (-2, 2)")
    if n_dim < 1:
        raise ValueError("n_dim must be >= 1")
    rho = semicircle_density(lambda0)
    return SpectralParams(
        lambda0=float(lambda0),
        xi1=float(xi1),
        xi2=float(xi2),
        n_dim=int(n_dim),
        lambda1=lambda0 + xi1 / (n_dim * rho),
        lambda2=lambda0 + xi2 / (n_dim * rho),
    )
