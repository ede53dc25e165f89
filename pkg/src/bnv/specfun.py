"""
Gamma function, Gauss hypergeometric series and Ferrers (associated Legendre)
functions of real degree and order.

The Legendre functions are evaluated on the cut, ``x = cos(theta)`` with
``0 < theta <= pi/2``, from the hypergeometric representation

    P_l^nu(cos t) = cot(t/2)**nu * 2F1(-l, l+1; 1-nu; sin(t/2)**2) / Gamma(1-nu)

using the *regularized* series ``2F1(a, b; c; z) / Gamma(c)`` so that integer and
negative values of ``1 - nu`` (needed for the raised orders ``nu+1``, ``nu+2``)
need no special casing.  Since ``z = sin(t/2)**2 <= 1/2`` the series decays at
least geometrically and the truncation error is bounded explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

EPS = 2.220446049250313e-16
DEFAULT_TOL = 1e-13
MAX_DEGREE = 100.0
MAX_TERMS = 5000


class PoleError(ValueError):
    """Raised when the gamma function is evaluated at a pole."""


class SeriesConvergenceError(ArithmeticError):
    """Raised when a series does not reach the requested tolerance."""


@dataclass(frozen=True)
class Dimension:
    """Fractional dimension ``n`` together with ``alpha = (2-n)/2`` and the
    critical exponent ``p = (n+2)/(n-2)``."""

    n: float
    alpha: float = field(init=False)
    p: float = field(init=False)

    def __post_init__(self):
        n = float(self.n)
        if not (2.0 < n < 4.0):
            raise ValueError(f"dimension must satisfy 2 < n < 4, got {n!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alpha", (2.0 - n) / 2.0)
        object.__setattr__(self, "p", (n + 2.0) / (n - 2.0))


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def log_gamma(x: float) -> float:
    """Return ``log|Gamma(x)|``.

    Negative non-integer arguments are accepted; the sign of ``Gamma(x)`` is
    available from :func:`gamma_sign`.
    """
    x = float(x)
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at x = {x!r}")
    return math.lgamma(x)


def gamma_sign(x: float) -> int:
    """Sign of ``Gamma(x)``: +1 for ``x > 0``, ``(-1)**ceil(-x)`` otherwise."""
    x = float(x)
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at x = {x!r}")
    if x > 0.0:
        return 1
    return -1 if int(math.floor(x)) % 2 else 1


def rgamma(x: float) -> float:
    """Reciprocal gamma function, continued by zero at the poles."""
    x = float(x)
    if _is_pole(x):
        return 0.0
    if 0.0 < x < 170.0:
        return 1.0 / math.gamma(x)
    return gamma_sign(x) * math.exp(-math.lgamma(x))


# ---------------------------------------------------------------------------
# Hypergeometric series
# ---------------------------------------------------------------------------

def _ratio_bound(a, b, c, k, z):
    # sup over j >= k of |t_{j+1}/t_j|, valid once k exceeds -a, -b, -c
    return z * max(1.0, (k + a) / (k + 1.0)) * max(1.0, (k + b) / (k + c))


def _sum_series(a, b, c, z, k0, t0, tol, max_terms):
    """Sum ``sum_{k>=k0} t_k`` with ``t_{k+1}/t_k = (a+k)(b+k)z/((k+1)(c+k))``.

    Returns ``(value, bound)`` where ``bound`` covers the neglected tail and
    an estimate of the accumulated rounding error.
    """
    total = t0
    abs_total = abs(t0)
    rounding = abs(t0) * EPS
    t = t0
    k = k0
    start = max(-a, -b, -c, 0.0)
    while True:
        if t == 0.0 and k > start:
            return total, rounding
        if k > start and k - k0 >= 1:
            rho = _ratio_bound(a, b, c, k, z)
            if rho < 1.0:
                tail = abs(t) * rho / (1.0 - rho)
                if tail <= tol * abs_total or tail == 0.0:
                    return total, tail + rounding
        if k - k0 >= max_terms:
            raise SeriesConvergenceError(
                f"2F1({a}, {b}; {c}; {z}) did not converge in {max_terms} terms"
            )
        t = t * (a + k) * (b + k) * z / ((k + 1.0) * (c + k))
        k += 1
        total += t
        abs_total += abs(t)
        rounding += abs(t) * (4 * (k - k0) + 2) * EPS


def hyp2f1(delta: float, beta: float, gamma: float, z: float,
           tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS):
    """Gauss hypergeometric function by direct summation for ``0 <= z <= 1/2``.

    Returns ``(value, truncation_bound)``; the bound controls
    ``|value - 2F1|`` (tail of the series plus a rounding estimate).  The sum
    stops once the geometric tail bound falls below ``tol`` times the sum of
    the term magnitudes.
    """
    if not (0.0 <= z <= 0.5):
        raise ValueError(f"z must lie in [0, 1/2], got {z!r}")
    if _is_pole(gamma):
        raise PoleError(f"2F1 undefined for non-positive integer gamma = {gamma!r}")
    if z == 0.0:
        return 1.0, 0.0
    return _sum_series(float(delta), float(beta), float(gamma), float(z),
                       0, 1.0, tol, max_terms)


def hyp2f1_regularized(a: float, b: float, c: float, z: float,
                       tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS):
    """``2F1(a, b; c; z) / Gamma(c)``, entire in ``c``; returns ``(value, bound)``."""
    if not (0.0 <= z <= 0.5):
        raise ValueError(f"z must lie in [0, 1/2], got {z!r}")
    a, b, c = float(a), float(b), float(c)
    k0 = 0
    if _is_pole(c):
        # terms with c + k <= 0 vanish identically
        k0 = int(-c) + 1
    t0 = rgamma(c + k0)
    for j in range(k0):
        t0 *= (a + j) * (b + j) * z / (j + 1.0)
    if z == 0.0 and k0 > 0:
        return 0.0, 0.0
    if z == 0.0:
        return t0, 0.0
    return _sum_series(a, b, c, z, k0, t0, tol, max_terms)


# ---------------------------------------------------------------------------
# Ferrers functions P_l^nu(cos theta)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LegendreEval:
    degree: float
    order: float
    theta: float
    value: float
    dvalue: float
    truncation_bound: float


def _check_args(ell, theta):
    if not (0.0 < theta <= math.pi / 2 + 1e-15):
        raise ValueError(f"theta must lie in (0, pi/2], got {theta!r}")
    if not (0.0 <= ell <= MAX_DEGREE):
        raise ValueError(f"degree must lie in [0, {MAX_DEGREE}], got {ell!r}")


def _ferrers(ell, nu, theta, tol):
    z = math.sin(0.5 * theta) ** 2
    f, bound = hyp2f1_regularized(-ell, ell + 1.0, 1.0 - nu, z, tol)
    pref = (1.0 / math.tan(0.5 * theta)) ** nu
    return pref * f, abs(pref) * bound


def legendre_value(ell: float, nu: float, theta: float,
                   tol: float = DEFAULT_TOL) -> float:
    """Value of ``P_ell^nu(cos theta)`` only (no derivative)."""
    _check_args(ell, theta)
    return _ferrers(ell, nu, theta, tol)[0]


def legendre_pair(ell: float, nu: float, theta: float, tol: float = DEFAULT_TOL):
    """``(P_ell^nu, P_ell^(nu+1))`` at ``cos theta``."""
    _check_args(ell, theta)
    return _ferrers(ell, nu, theta, tol)[0], _ferrers(ell, nu + 1.0, theta, tol)[0]


def legendre_p(ell: float, nu: float, theta: float,
               tol: float = DEFAULT_TOL) -> LegendreEval:
    """Evaluate ``P_ell^nu(cos theta)`` and its theta-derivative.

    The derivative uses the raising relation in the form
    ``d/dtheta P^nu = P^(nu+1) + nu * cot(theta) * P^nu``.
    """
    _check_args(ell, theta)
    p0, b0 = _ferrers(ell, nu, theta, tol)
    p1, b1 = _ferrers(ell, nu + 1.0, theta, tol)
    cot = 1.0 / math.tan(theta)
    dp = p1 + nu * cot * p0
    return LegendreEval(ell, nu, theta, p0, dp, b0)


def legendre_dtheta(ell: float, nu: float, theta: float,
                    tol: float = DEFAULT_TOL) -> float:
    """``d/dtheta [P_ell^nu(cos theta)] = -sin(theta) * dP/dx``."""
    return legendre_p(ell, nu, theta, tol).dvalue


def lowering_consistency(ell: float, nu: float, theta: float,
                         tol: float = DEFAULT_TOL) -> float:
    """Residual of the lowering relation for ``dP^(nu+1)/dx``.

    The left side comes from :func:`legendre_dtheta` at order ``nu+1`` (which
    itself uses ``P^(nu+2)``); the right side from the series values of
    ``P^nu`` and ``P^(nu+1)``.
    """
    s, c = math.sin(theta), math.cos(theta)
    lhs = -legendre_dtheta(ell, nu + 1.0, theta, tol) / s
    p0, p1 = legendre_pair(ell, nu, theta, tol)
    rhs = ((ell + nu + 1.0) * (ell - nu) * s * p0 + (nu + 1.0) * c * p1) / (s * s)
    return abs(lhs - rhs)


def legendre_pole_asymptote(nu: float, theta: float):
    """Leading-order ``(P, dP/dtheta)`` of ``P_ell^nu(cos theta)`` as theta -> 0.

    Independent of the degree; ``nu`` must not be a positive integer.
    """
    g = rgamma(1.0 - nu)
    ct = 1.0 / math.tan(0.5 * theta)
    y = g * ct ** nu
    dy = g * nu * ct ** (nu - 1.0) * (-0.5 / math.sin(0.5 * theta) ** 2)
    return y, dy
