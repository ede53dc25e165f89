"""Critical degrees and the existence window for a geodesic cap."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .specfun import DEFAULT_TOL, MAX_DEGREE, Dimension, legendre_value

THETA1_MIN = 0.05
THETA1_MAX = math.pi / 2
SCAN_START = 1e-3
SCAN_STEP = 0.05
ZERO_XTOL = 1e-12


class ZeroNotFoundError(RuntimeError):
    """No sign change of the degree map was found in the admissible range."""


@dataclass(frozen=True)
class CapGeometry:
    """Geodesic cap of radius ``theta1`` around the north pole.

    ``R = tan(theta1/2)`` is the radius of its stereographic image.
    """

    theta1: float
    R: float = field(init=False)

    def __post_init__(self):
        t = float(self.theta1)
        if not (THETA1_MIN <= t <= THETA1_MAX):
            raise ValueError(
                f"theta1 must lie in [{THETA1_MIN}, pi/2], got {t!r}"
            )
        object.__setattr__(self, "theta1", t)
        object.__setattr__(self, "R", math.tan(0.5 * t))

    def q(self, r):
        """Conformal factor ``2 / (1 + r^2)`` of the stereographic chart."""
        return 2.0 / (1.0 + r * r)


@dataclass(frozen=True)
class LambdaWindow:
    ell1: float
    ell2: float
    lambda_low: float
    lambda_high: float

    def contains(self, lam: float) -> bool:
        return self.lambda_low < lam < self.lambda_high


def lambda_from_degree(dim: Dimension, ell: float) -> float:
    """``((2 ell + 1)^2 - (n - 1)^2) / 4``."""
    return 0.25 * ((2.0 * ell + 1.0) ** 2 - (dim.n - 1.0) ** 2)


def degree_from_lambda(dim: Dimension, lam: float) -> float:
    """Positive root of ``ell (ell + 1) = lambda + alpha (alpha - 1)``."""
    rad = 4.0 * lam + (dim.n - 1.0) ** 2
    if rad < 0.0:
        raise ValueError(
            f"4*lambda + (n-1)^2 must be non-negative, got {rad!r}"
        )
    return 0.5 * (math.sqrt(rad) - 1.0)


def first_degree_zero(nu: float, cap: CapGeometry, tol: float = DEFAULT_TOL,
                      step: float = SCAN_STEP) -> float:
    """Smallest ``ell > 0`` with ``P_ell^nu(cos theta1) = 0``.

    A coarse scan in ``ell`` brackets the first sign change, which is then
    refined with Brent's method.
    """
    if not (-1.0 < nu < 1.0):
        raise ValueError(f"order must lie in (-1, 1), got {nu!r}")
    theta = cap.theta1

    def f(ell):
        return legendre_value(ell, nu, theta, tol)

    lo = SCAN_START
    f_lo = f(lo)
    if f_lo == 0.0:
        return lo
    while lo < MAX_DEGREE:
        hi = min(lo + step, MAX_DEGREE)
        f_hi = f(hi)
        if f_hi == 0.0:
            return hi
        if (f_lo < 0.0) != (f_hi < 0.0):
            return brentq(f, lo, hi, xtol=ZERO_XTOL, rtol=1e-15,
                          maxiter=200)
        lo, f_lo = hi, f_hi
    raise ZeroNotFoundError(
        f"P_ell^{nu}(cos {theta}) has no sign change for ell in (0, {MAX_DEGREE}]"
    )


def lambda_window(dim: Dimension, cap: CapGeometry,
                  tol: float = DEFAULT_TOL) -> LambdaWindow:
    ell1 = first_degree_zero(dim.alpha, cap, tol)
    ell2 = first_degree_zero(-dim.alpha, cap, tol)
    return LambdaWindow(ell1, ell2, lambda_from_degree(dim, ell2),
                        lambda_from_degree(dim, ell1))


def dirichlet_lambda1(dim: Dimension, cap: CapGeometry,
                      tol: float = DEFAULT_TOL) -> float:
    """First Dirichlet eigenvalue of the radial Laplace-Beltrami operator."""
    return lambda_from_degree(dim, first_degree_zero(dim.alpha, cap, tol))


def dirichlet_eigenfunction(dim: Dimension, ell1: float, theta: float,
                            tol: float = DEFAULT_TOL) -> float:
    """Regular eigenfunction profile ``sin(t)^alpha * P_ell1^alpha(cos t)``."""
    a = dim.alpha
    return math.sin(theta) ** a * legendre_value(ell1, a, theta, tol)
