"""
Radial critical equation on a geodesic cap, amplitude shooting, and a
finite-difference eigenvalue oracle for the linearized problem.

The equation integrated is the radial Laplace-Beltrami form

    u'' + (n-1) cot(theta) u' + lambda u + |u|^(p-1) u = 0,   u'(0) = 0,

started at a small ``theta_start`` from the flat critical bubble with
``u(0) = a``, which agrees with the pole series
``u = a - (lambda a + a^p) theta^2 / (2n) + ...`` to second order and stays
accurate when ``a`` is large and the bubble core is narrower than ``1e-4``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .specfun import Dimension
from .window import CapGeometry, lambda_window

log = logging.getLogger(__name__)

THETA_START = 1e-4
RTOL = 1e-12
AMPLITUDE_MIN = 1e-8
AMPLITUDE_MAX = 1e5
BOUNDARY_TOL = 1e-7
MONOTONE_SLACK = 1e-7
GRID_POINTS = 2001
POLE_POINTS = 600
STENCIL = 7
# absolute tolerances on (u, u') in units of rtol * min(a, 1/a); u' is O(theta)
# near the pole, where cot(theta) amplifies its absolute error
ATOL_SCALE = np.array([1e-2, 1e-4])


class IntegrationError(RuntimeError):
    """The integrator failed (step-size underflow or similar)."""


class ConvergenceError(RuntimeError):
    """Two-grid eigenvalue estimates are inconsistent with O(h^2) convergence."""


@dataclass
class RadialTrajectory:
    thetas: np.ndarray
    u: np.ndarray
    du: np.ndarray
    amplitude: float
    first_zero: float | None
    max_residual: float
    n: float = 0.0
    lam: float = 0.0


@dataclass
class ShootingOutcome:
    kind: str
    trajectory: RadialTrajectory | None = None
    amplitude: float | None = None
    boundary_residual: float | None = None
    diagnostic: str = ""
    monotone: bool = True
    history: list = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return self.kind == POSITIVE


POSITIVE = "PositiveSolution"
NO_POSITIVE = "NoPositiveSolution"


def _start(dim, lam, a):
    n = dim.n
    k = a ** (dim.p - 1.0) / (n * (n - 2.0))
    ts = min(THETA_START, 1e-2 / math.sqrt(k))
    w = 1.0 + k * ts * ts
    U = a * w ** (-(n - 2.0) / 2.0)
    dU = -(n - 2.0) * a * k * ts * w ** (-n / 2.0)
    return ts, U * (1.0 - lam * ts * ts / (2.0 * n)), dU - lam * U * ts / n


def _rhs(dim, lam):
    n1 = dim.n - 1.0
    p = dim.p

    def f(t, y):
        u, v = y
        return [v, -n1 * v / math.tan(t) - lam * u - math.copysign(abs(u) ** p, u)]

    return f


def _solve(dim, lam, a, theta_end, terminal, dense, rtol):
    if not a > 0.0:
        raise ValueError(f"amplitude must be positive, got {a!r}")
    ts, u0, v0 = _start(dim, lam, a)

    def crossing(t, y):
        return y[0]

    crossing.terminal = terminal
    crossing.direction = -1
    sol = solve_ivp(_rhs(dim, lam), (ts, theta_end), [u0, v0], method="DOP853",
                    rtol=rtol, atol=ATOL_SCALE * (rtol * min(a, 1.0 / a)), events=crossing,
                    dense_output=dense)
    if sol.status < 0:
        raise IntegrationError(sol.message)
    zeros = sol.t_events[0]
    return sol, ts, (float(zeros[0]) if len(zeros) else None)


def _fd_weights(x0, xs, m):
    # derivative-m weights at x0 on nodes xs (Vandermonde solve, small stencils)
    k = len(xs)
    h = xs - x0
    A = np.vander(h, k, increasing=True).T
    b = np.zeros(k)
    b[m] = math.factorial(m)
    return np.linalg.solve(A, b)


def trajectory_residual(thetas, u, du, dim: Dimension, lam: float) -> float:
    """Sup of the relative ODE residual reconstructed from grid data.

    ``u''`` is a 7-point finite difference of ``du`` on the (possibly
    non-uniform) grid; each point's residual is divided by the sum of the
    magnitudes of the four terms of the equation plus ``max|u|``, the floor
    keeping the measure meaningful where every term is at rounding level.
    """
    thetas = np.asarray(thetas, dtype=float)
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    N = len(thetas)
    half = STENCIL // 2
    n1 = dim.n - 1.0
    floor = float(np.max(np.abs(u)))
    worst = 0.0
    for i in range(half, N - half):
        sl = slice(i - half, i + half + 1)
        w = _fd_weights(thetas[i], thetas[sl], 1)
        d2 = float(w @ du[sl])
        t = thetas[i]
        terms = (d2, n1 * du[i] / math.tan(t), lam * u[i],
                 math.copysign(abs(u[i]) ** dim.p, u[i]))
        scale = sum(abs(x) for x in terms) + floor
        if scale > 0.0:
            worst = max(worst, abs(sum(terms)) / scale)
    return worst


def _output_grid(ts, te, n_uniform, n_pole):
    split = min(0.05 * te, te)
    if ts < split:
        pole = np.geomspace(ts, split, n_pole)
        hu = (te - split) / (n_uniform - 1)
        # uniform part starts one geometric spacing after the pole part
        uniform = np.linspace(split, te, n_uniform)[1:]
        if hu <= 0:
            return pole
        return np.concatenate([pole, uniform])
    return np.linspace(ts, te, n_uniform)


def integrate_radial(dim: Dimension, lam: float, a: float, cap: CapGeometry,
                     stop_at_zero: bool = True, grid_points: int = GRID_POINTS,
                     rtol: float = RTOL) -> RadialTrajectory:
    """Integrate from the pole with ``u(0) = a`` up to ``theta1``.

    With ``stop_at_zero`` the integration ends at the first zero crossing
    when it occurs before ``theta1``.
    """
    sol, ts, z = _solve(dim, lam, a, cap.theta1, stop_at_zero, True, rtol)
    te = float(sol.t[-1])
    grid = _output_grid(ts, te, grid_points, POLE_POINTS)
    y = sol.sol(grid)
    u, du = y[0], y[1]
    res = trajectory_residual(grid, u, du, dim, lam)
    return RadialTrajectory(grid, u, du, a, z, res, dim.n, lam)


def _shot(dim, lam, a, theta1, rtol):
    """Signed boundary mismatch: ``u(theta1)/a`` if no zero before ``theta1``,
    else ``-(theta1 - z) |u'(z)| / a``; continuous and decreasing in ``a``."""
    sol, _, z = _solve(dim, lam, a, theta1, True, False, rtol)
    if z is None:
        return float(sol.y[0, -1]) / a, None
    return -(theta1 - z) * abs(float(sol.y_events[0][0][1])) / a, z


def _is_monotone(history):
    pts = sorted(history)
    prev = math.inf
    for _, z in pts:
        zz = math.inf if z is None else z
        if zz > prev + MONOTONE_SLACK:
            return False
        prev = zz
    return True


def shoot_bvp(dim: Dimension, lam: float, cap: CapGeometry,
              a_min: float = AMPLITUDE_MIN, a_max: float = AMPLITUDE_MAX,
              rtol: float = RTOL, boundary_tol: float = BOUNDARY_TOL,
              grid_points: int = GRID_POINTS) -> ShootingOutcome:
    """Find a positive solution with ``u(theta1) = 0`` by shooting on ``u(0)``.

    Amplitudes are scanned per decade from ``a_min`` to ``a_max``; the first
    decade where the first zero moves inside the cap is refined with Brent's
    method on the signed boundary mismatch.
    """
    th1 = cap.theta1
    history = []
    amps = np.geomspace(a_min, a_max,
                        int(round(math.log10(a_max / a_min))) + 1)
    prev_a, prev_phi = None, None
    bracket = None
    for a in amps:
        phi, z = _shot(dim, lam, float(a), th1, rtol)
        history.append((float(a), z))
        if phi <= 0.0:
            if prev_a is None:
                return ShootingOutcome(
                    NO_POSITIVE,
                    diagnostic=f"vanishes-early: first zero {z:.6g} < theta1 "
                    f"already at amplitude {a:.3g}",
                    monotone=_is_monotone(history), history=history)
            bracket = (prev_a, float(a), prev_phi, phi)
            break
        prev_a, prev_phi = float(a), phi
    if bracket is None:
        return ShootingOutcome(
            NO_POSITIVE,
            diagnostic=f"never-vanishes: no zero before theta1 for amplitudes "
            f"up to {a_max:.3g}",
            monotone=_is_monotone(history), history=history)

    def mismatch(a):
        phi, z = _shot(dim, lam, a, th1, rtol)
        history.append((a, z))
        return phi

    lo, hi, _, _ = bracket
    if bracket[3] == 0.0:
        a_star = hi
    else:
        a_star = brentq(mismatch, lo, hi, xtol=1e-15 * hi, rtol=1e-14,
                        maxiter=200)
    traj = integrate_radial(dim, lam, a_star, cap, stop_at_zero=False,
                            grid_points=grid_points, rtol=rtol)
    monotone = _is_monotone(history)
    if not monotone:
        log.warning("first zero not monotone in amplitude (n=%g, lambda=%g)",
                    dim.n, lam)
    bres = abs(float(traj.u[-1]))
    inner = traj.u[traj.thetas < th1 * (1.0 - 1e-9)]
    if bres > boundary_tol * a_star or np.any(inner <= 0.0):
        return ShootingOutcome(
            NO_POSITIVE, traj, a_star, bres,
            diagnostic="non-monotone bracketing exhausted: refinement did not "
            "reach the boundary tolerance with a positive profile",
            monotone=monotone, history=history)
    log.debug("n=%g lambda=%g: amplitude %.6g, |u(theta1)| = %.2e",
              dim.n, lam, a_star, bres)
    return ShootingOutcome(POSITIVE, traj, a_star, bres,
                           diagnostic="boundary condition met",
                           monotone=monotone, history=history)


def classify_existence(dim: Dimension, cap: CapGeometry, lambdas):
    """Compare the analytic window with shooting for each ``lambda``.

    Returns ``(lambda, predicted, observed)`` triples.
    """
    win = lambda_window(dim, cap)
    out = []
    for lam in lambdas:
        lam = float(lam)
        predicted = win.contains(lam)
        observed = shoot_bvp(dim, lam, cap).positive
        if predicted != observed:
            log.warning("disagreement at n=%g theta1=%g lambda=%g", dim.n,
                        cap.theta1, lam)
        out.append((lam, predicted, observed))
    return out


def _fd_lambda1(dim, theta1, N):
    # cell-centred finite volumes on (0, theta1): nodes (i + 1/2) h, flux
    # weight sin^(n-1) at faces, zero flux at the pole, ghost -u at theta1;
    # Simpson cell masses keep the error O(h^2) for the degenerate pole weight
    h = theta1 / N
    m = dim.n - 1.0
    centers = (np.arange(N) + 0.5) * h
    faces = np.arange(1, N + 1) * h
    wf = np.sin(faces) ** m
    mass = (np.concatenate([[0.0], wf[:-1]]) + 4.0 * np.sin(centers) ** m + wf) / 6.0
    diag = np.concatenate([[0.0], wf[:-1]]) + wf
    diag[-1] += wf[-1]
    off = -wf[:-1]
    s = 1.0 / np.sqrt(mass)
    d = diag * s * s / h ** 2
    e = off * s[:-1] * s[1:] / h ** 2
    w = eigh_tridiagonal(d, e, eigvals_only=True, select="i",
                         select_range=(0, 0))
    return float(w[0])


def linear_eigen_oracle(dim: Dimension, cap: CapGeometry,
                        grid_size: int = 4000) -> float:
    """First Dirichlet eigenvalue by finite volumes and Richardson extrapolation.

    Uses grids ``N/4``, ``N/2`` and ``N``; the extrapolation combines the two
    finest, the coarsest checks the observed O(h^2) ratio.
    """
    if grid_size < 200:
        raise ValueError("grid_size must be at least 200")
    N = int(grid_size)
    l4 = _fd_lambda1(dim, cap.theta1, N // 4)
    l2 = _fd_lambda1(dim, cap.theta1, N // 2)
    l1 = _fd_lambda1(dim, cap.theta1, N)
    d_coarse, d_fine = l4 - l2, l2 - l1
    if d_fine != 0.0:
        ratio = d_coarse / d_fine
        if not (0.4 <= ratio <= 40.0):
            raise ConvergenceError(
                f"grid refinement ratio {ratio:.3g} inconsistent with O(h^2)"
            )
    return (4.0 * l1 - l2) / 3.0


def fd_lambda1(dim: Dimension, cap: CapGeometry, grid_size: int) -> float:
    """Unextrapolated single-grid finite-volume eigenvalue."""
    return _fd_lambda1(dim, cap.theta1, int(grid_size))
