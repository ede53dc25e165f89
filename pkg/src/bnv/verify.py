"""
Numerical certificates for the window: boundary Wronskian limit, degree
ordering, Sobolev constant and quotient, the third-order identity satisfied by
the Legendre product, the sign of the Pohozaev coefficient and the Riccati
equation for the logarithmic derivative ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.optimize import brentq

from .specfun import DEFAULT_TOL, Dimension, hyp2f1, legendre_pair, legendre_p, legendre_value
from .window import CapGeometry, degree_from_lambda, lambda_window

SCHEMA = "bnv-report/1"
WRONSKIAN_THETAS = (1e-2, 1e-3, 1e-4)
WRONSKIAN_TOL = 1e-6
ORDERING_RTOL = 1e-5
QUAD_RTOL = 1e-8
A_TOL = 1e-7
A_GRID_START = 0.05
A_GRID_POINTS = 400
B_GRID_POINTS = 500
B_EDGE = 1e-3
RICCATI_STEP = 1e-5
RICCATI_TOL = 1e-6
Y_LIMIT_THETA = 1e-3
Y_LIMIT_TOL = 1e-3
TILT = 0.7
PROFILES = ("cos2", "poly", "extremal", "tilted")


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested relative accuracy."""


@dataclass
class VerificationReport:
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "name": self.name,
            "measured": float(self.measured),
            "expected": float(self.expected),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "context": dict(self.context),
        }


# ---------------------------------------------------------------------------
# Wronskian and ordering
# ---------------------------------------------------------------------------

def _weighted_wronskian(dim, ell1, ell2, theta, tol=DEFAULT_TOL):
    a = dim.alpha
    e1 = legendre_p(ell1, a, theta, tol)
    e2 = legendre_p(ell2, -a, theta, tol)
    return math.sin(theta) * (e1.dvalue * e2.value - e2.dvalue * e1.value)


def wronskian_limit_expected(dim: Dimension) -> float:
    return 2.0 / math.pi * math.sin(math.pi * (dim.n - 2.0) / 2.0)


def wronskian_limit(dim: Dimension, ell1: float, ell2: float,
                    thetas=WRONSKIAN_THETAS) -> float:
    """``lim sin(t) W(t)`` as ``t -> 0`` by Richardson extrapolation in ``t^2``."""
    ts = sorted(thetas, reverse=True)
    vals = [_weighted_wronskian(dim, ell1, ell2, t) for t in ts]
    # Neville table in the variable t^2
    x = [t * t for t in ts]
    table = list(vals)
    for k in range(1, len(table)):
        for i in range(len(table) - 1, k - 1, -1):
            table[i] = (x[i - k] * table[i] - x[i] * table[i - 1]) / (x[i - k] - x[i])
    return table[-1]


def wronskian_limit_check(dim: Dimension, cap: CapGeometry,
                          tol: float = WRONSKIAN_TOL) -> VerificationReport:
    win = lambda_window(dim, cap)
    measured = wronskian_limit(dim, win.ell1, win.ell2)
    expected = wronskian_limit_expected(dim)
    return VerificationReport(
        "wronskian_limit", measured, expected, tol,
        abs(measured - expected) <= tol,
        {"n": dim.n, "theta1": cap.theta1, "ell1": win.ell1, "ell2": win.ell2,
         "thetas": list(WRONSKIAN_THETAS)})


def ordering_check(dim: Dimension, cap: CapGeometry,
                   rtol: float = ORDERING_RTOL) -> VerificationReport:
    """Integrated Wronskian identity ``(D1 - D2) C = lim sin(t) W(t)``.

    Both Legendre functions vanish at ``theta1``, so the boundary term there
    drops out and only the pole limit remains.
    """
    win = lambda_window(dim, cap)
    a = dim.alpha

    def integrand(t):
        return (math.sin(t) * legendre_value(win.ell1, a, t)
                * legendre_value(win.ell2, -a, t))

    overlap, err = quad(integrand, 0.0, cap.theta1, epsabs=0.0, epsrel=1e-12,
                        limit=200)
    d1 = win.ell1 * (win.ell1 + 1.0)
    d2 = win.ell2 * (win.ell2 + 1.0)
    measured = (d1 - d2) * overlap
    expected = wronskian_limit(dim, win.ell1, win.ell2)
    rel = abs(measured - expected) / abs(expected)
    ok = win.ell2 < win.ell1 and overlap > 0.0 and rel <= rtol
    return VerificationReport(
        "ordering", measured, expected, rtol * abs(expected), ok,
        {"n": dim.n, "theta1": cap.theta1, "ell1": win.ell1, "ell2": win.ell2,
         "overlap": overlap, "overlap_error": err, "relative_error": rel})


# ---------------------------------------------------------------------------
# Sobolev constant and quotient
# ---------------------------------------------------------------------------

def unit_sphere_area(n: float) -> float:
    """Area of the unit sphere in ``R^n``, ``2 pi^(n/2) / Gamma(n/2)``."""
    return 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)


def half_beta(n: float) -> float:
    """``Gamma(n/2)^2 / (2 Gamma(n))``."""
    return math.gamma(0.5 * n) ** 2 / (2.0 * math.gamma(n))


def sobolev_constant(dim: Dimension) -> float:
    """Sharp constant ``pi n (n-2) (Gamma(n/2)/Gamma(n))^(2/n)``."""
    n = dim.n
    return math.pi * n * (n - 2.0) * (math.gamma(0.5 * n) / math.gamma(n)) ** (2.0 / n)


@dataclass(frozen=True)
class StereographicIntegrand:
    """Trial family ``u(r) = phi(r) / (eps + r^2)^((n-2)/2)`` on ``[0, R]``.

    Profiles (all with ``phi(0) = 1``, ``phi'(0) = 0``, ``phi(R) = 0``):

    ``cos2``      ``cos(pi r / (2R))^2``
    ``poly``      ``(1 - (r/R)^2)^2``
    ``extremal``  the regular solution of the linearized problem at the lower
                  window end, written in the stereographic variable
    ``tilted``    ``extremal`` times ``1 + TILT (r/R)^2``
    """

    dim: Dimension
    cap: CapGeometry
    eps: float
    profile: str = "cos2"
    _hyp: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {PROFILES}")
        hyp = ()
        if self.profile in ("extremal", "tilted"):
            ell2 = lambda_window(self.dim, self.cap).ell2
            hyp = (-ell2, ell2 + 1.0, 1.0 + self.dim.alpha)
        object.__setattr__(self, "_hyp", hyp)

    def _base(self, r):
        # extremal profile and its derivative
        a, b, c = self._hyp
        k = 0.5 * (self.dim.n - 2.0)
        w = 1.0 + r * r
        z = r * r / w
        f = hyp2f1(a, b, c, z)[0]
        df = a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)[0]
        return w ** k * f, 2.0 * k * r * w ** (k - 1.0) * f + w ** (k - 2.0) * 2.0 * r * df

    def phi(self, r):
        rad = self.cap.R
        if self.profile == "cos2":
            return math.cos(0.5 * math.pi * r / rad) ** 2
        if self.profile == "poly":
            return (1.0 - (r / rad) ** 2) ** 2
        v, _ = self._base(r)
        if self.profile == "tilted":
            v *= 1.0 + TILT * (r / rad) ** 2
        return v

    def dphi(self, r):
        rad = self.cap.R
        if self.profile == "cos2":
            return -0.5 * math.pi / rad * math.sin(math.pi * r / rad)
        if self.profile == "poly":
            return -4.0 * r / rad ** 2 * (1.0 - (r / rad) ** 2)
        v, dv = self._base(r)
        if self.profile == "tilted":
            return dv * (1.0 + TILT * (r / rad) ** 2) + v * 2.0 * TILT * r / rad ** 2
        return dv

    def u(self, r):
        return self.phi(r) / (self.eps + r * r) ** (0.5 * (self.dim.n - 2.0))

    def du(self, r):
        n = self.dim.n
        w = self.eps + r * r
        return (self.dphi(r) / w ** (0.5 * (n - 2.0))
                - (n - 2.0) * r * self.phi(r) / w ** (0.5 * n))

    def q(self, r):
        return self.cap.q(r)


def _graded_integral(f, eps, radius):
    # breakpoints on the bubble scale sqrt(eps) so that quad sees the core
    core = math.sqrt(eps)
    pts = [0.0] + [core * 10.0 ** k for k in range(-1, 4) if core * 10.0 ** k < radius] + [radius]
    total = err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
        total += v
        err += e
    return total, err


def quotient_terms(sti: StereographicIntegrand):
    """Gradient, L2 and critical-norm integrals (each including the sphere area)."""
    n = sti.dim.n
    crit = 2.0 * n / (n - 2.0)
    area = unit_sphere_area(n)
    q = sti.cap.q

    def grad(r):
        return r ** (n - 1.0) * q(r) ** (n - 2.0) * sti.du(r) ** 2

    def mass(r):
        return r ** (n - 1.0) * q(r) ** n * sti.u(r) ** 2

    def critical(r):
        return r ** (n - 1.0) * q(r) ** n * abs(sti.u(r)) ** crit

    out = []
    for f in (grad, mass, critical):
        v, e = _graded_integral(f, sti.eps, sti.cap.R)
        if e > QUAD_RTOL * abs(v):
            raise QuadratureError(f"quadrature error {e:.3g} exceeds {QUAD_RTOL:g} relative")
        out.append(area * v)
    return tuple(out)


def sobolev_quotient(sti: StereographicIntegrand, lam: float) -> float:
    grad, mass, critical = quotient_terms(sti)
    n = sti.dim.n
    return (grad - lam * mass) / critical ** ((n - 2.0) / n)


def sobolev_trend_check(dim: Dimension, cap: CapGeometry, lam: float,
                        eps_values=(1e-2, 1e-3, 1e-4), profile: str = "tilted",
                        require_decreasing: bool = True) -> VerificationReport:
    """Quotient along ``eps_values`` ends below the sharp Sobolev constant and,
    optionally, is strictly decreasing along the sequence."""
    sharp = sobolev_constant(dim)
    qs = [sobolev_quotient(StereographicIntegrand(dim, cap, e, profile), lam)
          for e in eps_values]
    decreasing = all(b < a for a, b in zip(qs[:-1], qs[1:]))
    ok = qs[-1] < sharp and (decreasing or not require_decreasing)
    name = "sobolev_trend" if require_decreasing else "sobolev_below"
    return VerificationReport(
        name, qs[-1], sharp, 0.0, ok,
        {"n": dim.n, "theta1": cap.theta1, "lambda": lam, "profile": profile,
         "eps": list(eps_values), "quotients": qs, "decreasing": decreasing,
         "margin": sharp - qs[-1]})


# ---------------------------------------------------------------------------
# Third-order identity for the Legendre product
# ---------------------------------------------------------------------------

# Derivatives in theta are tracked as polynomials in c = cot(theta), using
# dc/dtheta = -(1 + c^2).
_DCOT = Polynomial([-1.0, 0.0, -1.0])
_C = Polynomial([0.0, 1.0])


def _legendre_derivative_polys(nu, order):
    """Polynomials ``c[k][j]`` with ``d^k/dt^k P^nu = sum_j c[k][j] P^(nu+j)``.

    Only the raising relation ``d/dt P^m = P^(m+1) + m cot(t) P^m`` is used, so
    every order enters through its own series evaluation.
    """
    row = [Polynomial([1.0])]
    out = [row]
    for _ in range(order):
        new = [Polynomial([0.0]) for _ in range(len(row) + 1)]
        for j, p in enumerate(row):
            new[j] = new[j] + _DCOT * p.deriv() + (nu + j) * _C * p
            new[j + 1] = new[j + 1] + p
        row = new
        out.append(row)
    return out


def _power_derivative_polys(m, order):
    """Polynomials ``h_k`` with ``d^k/dt^k sin^m = h_k sin^m``."""
    h = Polynomial([1.0])
    out = [h]
    for _ in range(order):
        h = _DCOT * h.deriv() + m * _C * h
        out.append(h)
    return out


def product_derivatives(dim: Dimension, ell: float, theta, tol: float = DEFAULT_TOL):
    """``f, f', f'', f'''`` for ``f = sin^(4-n) P_ell^alpha P_ell^-alpha``."""
    a = dim.alpha
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    pa = _legendre_derivative_polys(a, 3)
    pb = _legendre_derivative_polys(-a, 3)
    ps = _power_derivative_polys(4.0 - dim.n, 3)
    binom = ((1,), (1, 1), (1, 2, 1), (1, 3, 3, 1))
    res = np.zeros((4, len(thetas)))
    for j, t in enumerate(thetas):
        c = 1.0 / math.tan(t)
        sm = math.sin(t) ** (4.0 - dim.n)
        ys = [legendre_value(ell, a + j, t, tol) for j in range(4)]
        zs = [legendre_value(ell, -a + j, t, tol) for j in range(4)]
        dy = [sum(p(c) * y for p, y in zip(row, ys)) for row in pa]
        dz = [sum(p(c) * z for p, z in zip(row, zs)) for row in pb]
        ds = [h(c) * sm for h in ps]
        for k in range(4):
            # Leibniz rule for the triple product
            acc = 0.0
            for i in range(k + 1):
                inner = sum(binom[k - i][j2] * dy[j2] * dz[k - i - j2]
                            for j2 in range(k - i + 1))
                acc += binom[k][i] * ds[i] * inner
            res[k, j] = acc
    return res


def third_order_residual(dim: Dimension, lam: float, theta, derivs):
    n = dim.n
    c = 1.0 / np.tan(np.asarray(theta, dtype=float))
    f, f1, f2, f3 = derivs
    return (f3 / 4.0 + 0.75 * (n - 3.0) * c * f2
            + f1 * ((n - 3.0) * (2.0 * n - 11.0) / 4.0 * c ** 2 + (7.0 - n) / 4.0 + lam)
            + f * ((n - 3.0) * (4.0 - n) * c ** 3 + 2.0 * (n - 3.0) * c
                   + lam * (n - 3.0) * c))


def pohozaev_A_residual(dim: Dimension, lam: float, cap: CapGeometry,
                        tol: float = DEFAULT_TOL,
                        grid_points: int = A_GRID_POINTS,
                        a_tol: float = A_TOL) -> VerificationReport:
    """Sup of the third-order residual with analytic derivatives on ``[0.05, theta1]``."""
    ell = degree_from_lambda(dim, lam)
    grid = np.linspace(min(A_GRID_START, cap.theta1), cap.theta1, grid_points)
    derivs = product_derivatives(dim, ell, grid, tol)
    res = float(np.max(np.abs(third_order_residual(dim, lam, grid, derivs))))
    scale = 1.0 + float(np.max(np.abs(derivs[3])))
    return VerificationReport(
        "pohozaev_A", res, 0.0, a_tol * scale, res < a_tol * scale,
        {"n": dim.n, "theta1": cap.theta1, "lambda": lam, "ell": ell,
         "series_tol": tol, "grid_points": grid_points, "sup_f3": scale - 1.0})


# ---------------------------------------------------------------------------
# Pohozaev coefficient sign and Riccati positivity
# ---------------------------------------------------------------------------

def first_angle_zero(ell: float, nu: float, theta_max: float,
                     step: float = 0.01, tol: float = DEFAULT_TOL):
    """First ``theta`` in ``(0, theta_max]`` where ``P_ell^nu(cos theta)`` vanishes, else None."""

    def f(t):
        return legendre_value(ell, nu, t, tol)

    lo = min(step, theta_max) * 0.1
    f_lo = f(lo)
    while lo < theta_max:
        hi = min(lo + step, theta_max)
        f_hi = f(hi)
        if f_hi == 0.0:
            return hi
        if (f_lo < 0.0) != (f_hi < 0.0):
            return brentq(f, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
        lo, f_lo = hi, f_hi
    return None


def log_ratio(ell: float, nu: float, theta: float, tol: float = DEFAULT_TOL) -> float:
    """``-P^(nu+1) / (sin(t) P^nu) - nu / (2 sin^2(t/2))``."""
    p0, p1 = legendre_pair(ell, nu, theta, tol)
    return -p1 / (math.sin(theta) * p0) - nu / (2.0 * math.sin(0.5 * theta) ** 2)


def pohozaev_coefficient(dim: Dimension, ell: float, theta: float,
                         tol: float = DEFAULT_TOL) -> float:
    """Coefficient of the critical power in the Pohozaev identity."""
    a = dim.alpha
    e1 = legendre_p(ell, a, theta, tol)
    e2 = legendre_p(ell, -a, theta, tol)
    return ((dim.n - 1.0) / dim.n * math.sin(theta) ** dim.n
            * (e1.dvalue * e2.value + e1.value * e2.dvalue))


def pohozaev_B_sign(dim: Dimension, lam: float, cap: CapGeometry,
                    grid_points: int = B_GRID_POINTS) -> VerificationReport:
    ell = degree_from_lambda(dim, lam)
    a = dim.alpha
    zero = first_angle_zero(ell, a, cap.theta1)
    top = min(cap.theta1, zero if zero is not None else math.inf) - B_EDGE
    grid = np.linspace(B_EDGE, top, grid_points)
    coeff = np.array([pohozaev_coefficient(dim, ell, t) for t in grid])
    ya = np.array([log_ratio(ell, a, t) for t in grid])
    yb = np.array([log_ratio(ell, -a, t) for t in grid])
    ok = bool(np.all(coeff < 0.0) and np.all(ya > 0.0) and np.all(yb > 0.0))
    return VerificationReport(
        "pohozaev_B", float(coeff.max()), 0.0, 0.0, ok,
        {"n": dim.n, "theta1": cap.theta1, "lambda": lam, "ell": ell,
         "first_zero_angle": zero, "grid_top": top,
         "margin": float(np.min(np.abs(coeff))),
         "min_y_alpha": float(ya.min()), "min_y_minus_alpha": float(yb.min())})


def riccati_rhs(nu, ell, theta, y):
    s = math.sin(theta)
    return s * y * y + 2.0 * y * (nu - math.cos(theta)) / s + ell * (ell + 1.0) / s


def riccati_residual(nu: float, ell: float, theta_grid,
                     h: float = RICCATI_STEP, tol: float = RICCATI_TOL) -> VerificationReport:
    """Five-point derivative of the log-ratio against the Riccati right side.

    The residual at each point is divided by ``1 +`` the sum of the magnitudes
    of the right-hand terms.
    """
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if grid.min() - 2.0 * h <= 0.0:
        raise ValueError("grid must stay inside (0, first zero)")
    offsets = (-2.0 * h, -h, h, 2.0 * h)
    for t in grid:
        for o in (0.0,) + offsets:
            if legendre_value(ell, nu, t + o) <= 0.0:
                raise ValueError(f"grid reaches a zero of P_{ell}^{nu} near theta = {t!r}")
    zero = first_angle_zero(ell, nu, float(grid.max()) + 2.0 * h)
    if zero is not None:
        raise ValueError(f"grid contains the zero theta = {zero!r} of P_{ell}^{nu}")
    worst = 0.0
    y_min = math.inf
    for t in grid:
        ym2, ym1, yp1, yp2 = (log_ratio(ell, nu, t + o) for o in offsets)
        y = log_ratio(ell, nu, t)
        dy = (ym2 - 8.0 * ym1 + 8.0 * yp1 - yp2) / (12.0 * h)
        s = math.sin(t)
        scale = 1.0 + abs(s * y * y) + abs(2.0 * y * (nu - math.cos(t)) / s) \
            + abs(ell * (ell + 1.0) / s)
        worst = max(worst, abs(dy - riccati_rhs(nu, ell, t, y)) / scale)
        y_min = min(y_min, y)
    return VerificationReport(
        "riccati", worst, 0.0, tol, worst < tol and y_min > 0.0,
        {"nu": nu, "ell": ell, "theta_min": float(grid.min()),
         "theta_max": float(grid.max()), "points": int(grid.size), "step": h,
         "min_y": y_min})


def y_limit_check(nu: float, ell: float, theta: float = Y_LIMIT_THETA,
                  tol: float = Y_LIMIT_TOL) -> VerificationReport:
    """Log-ratio near the pole against ``ell (ell + 1) / (2 (1 - nu))``."""
    measured = log_ratio(ell, nu, theta)
    expected = ell * (ell + 1.0) / (2.0 * (1.0 - nu))
    return VerificationReport(
        "y_limit", measured, expected, tol, abs(measured - expected) <= tol,
        {"nu": nu, "ell": ell, "theta": theta})


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------

def run_suite(dim: Dimension, cap: CapGeometry, lam: float | None = None,
              eps: float | None = None, tolerances: dict | None = None):
    """All certificates for one cap.

    ``lam`` defaults to the window midpoint for the quotient (extremal
    profile, below-constant test at ``eps = 1e-3, 1e-4``) and to ``lambda_low`` for
    the nonexistence checks.  ``tolerances`` may override ``series``,
    ``wronskian``, ``ordering``, ``pohozaev_A``, ``riccati`` and ``y_limit``.
    """
    t = {"series": DEFAULT_TOL, "wronskian": WRONSKIAN_TOL, "ordering": ORDERING_RTOL,
         "pohozaev_A": A_TOL, "riccati": RICCATI_TOL, "y_limit": Y_LIMIT_TOL}
    t.update(tolerances or {})
    win = lambda_window(dim, cap, t["series"])
    a = dim.alpha
    lam_q = 0.5 * (win.lambda_low + win.lambda_high) if lam is None else lam
    lam_b = win.lambda_low if lam is None else min(lam, win.lambda_low)
    eps_values = (1e-3, 1e-4) if eps is None else (10.0 * eps, eps)
    reports = [
        wronskian_limit_check(dim, cap, t["wronskian"]),
        ordering_check(dim, cap, t["ordering"]),
        sobolev_trend_check(dim, cap, lam_q, eps_values, "extremal",
                            require_decreasing=False),
        pohozaev_A_residual(dim, lam_b, cap, t["series"], a_tol=t["pohozaev_A"]),
        pohozaev_B_sign(dim, lam_b, cap),
    ]
    grid = np.linspace(0.2 * cap.theta1, 0.8 * cap.theta1, 40)
    for nu in (a, -a):
        reports.append(riccati_residual(nu, win.ell2, grid, tol=t["riccati"]))
        reports.append(y_limit_check(nu, win.ell2, tol=t["y_limit"]))
    return reports
