"""Radar beampattern templates and the desired-covariance least-squares fit.

The desired covariance R_d minimizes

    sum_m | eta * P_d(theta_m) - a^H(theta_m) R_d a(theta_m) |^2

over PSD R_d with trace(R_d) = P0 and a free scale eta >= 0.  The quadratic
objective is lowered to a second-order cone epigraph so the one in-repo conic
solver handles it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic, linalg
from .scenario import AngularGrid, UlaGeometry, steering_matrix


@dataclass(frozen=True)
class IdealPattern:
    grid: AngularGrid
    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.shape != (len(self.grid),):
            raise ValueError("gains must match the grid length")
        if np.any(g < 0):
            raise ValueError("pattern gains must be nonnegative")
        if not np.any(g > 0):
            raise ValueError("pattern must not be identically zero")
        object.__setattr__(self, "gains", g)


@dataclass(frozen=True)
class DesiredCovariance:
    r_d: np.ndarray
    eta: float
    residual: float  # achieved least-squares objective

    def __post_init__(self):
        if self.eta < -1e-10:
            raise ValueError("eta must be nonnegative")


def rect_pattern(grid: AngularGrid, theta0: float, halfwidth: float) -> IdealPattern:
    """Unit gain on [theta0 - halfwidth, theta0 + halfwidth], zero elsewhere.

    A mainlobe reaching past the grid edge is truncated there; a mainlobe
    containing no grid point is an error.
    """
    if halfwidth <= 0:
        raise ValueError("halfwidth must be positive")
    lo, hi = theta0 - halfwidth, theta0 + halfwidth
    gains = ((grid.angles >= lo - 1e-12) & (grid.angles <= hi + 1e-12)).astype(float)
    if not np.any(gains):
        raise ValueError("mainlobe does not intersect the grid")
    return IdealPattern(grid, gains)


def beampattern_profile(r, grid: AngularGrid, geom: UlaGeometry) -> np.ndarray:
    """a^H(theta_m) R a(theta_m) over the grid, linear power."""
    a = steering_matrix(geom, grid.angles)  # (M, N) rows are a^T? see below
    # rows of `a` are a(theta)^T entries exp(+j...); a^H R a = conj(a) R a elementwise
    return np.einsum("mi,ij,mj->m", a.conj(), np.asarray(r, dtype=complex), a).real


def _fit_problem(pattern, geom, power_budget, resid_cap=None):
    """LS epigraph problem; with ``resid_cap`` set, minimize ||R||_F instead
    subject to the residual norm staying within the cap."""
    grid = pattern.grid
    m = len(grid)
    prob = conic.ConicProblem()
    rd = prob.add_hermitian_psd(geom.n_antennas, "R_d")
    eta = prob.add_scalars(1)[0]
    t = prob.add_scalars(1)[0]
    n = prob.n_vars

    # residual rows: eta * P_d(theta_m) - a_m^H R_d a_m
    rows = np.zeros((m, n))
    amat = steering_matrix(geom, grid.angles)
    for j in range(m):
        rows[j] = -rd.quad_form_row(amat[j], n)
        rows[j, eta] = pattern.gains[j]
    head = np.zeros(n)
    if resid_cap is None:
        head[t] = 1.0
        prob.add_soc(head, 0.0, rows, np.zeros(m), "ls_residual")
    else:
        prob.add_soc(head, resid_cap, rows, np.zeros(m), "ls_residual")
        prob.add_soc(_unit_row(n, t), 0.0, rd.frob_rows(n), np.zeros(rd.n_dof), "r_norm")

    prob.add_eq(rd.trace_row(n), power_budget, "power")
    eta_row = np.zeros(n)
    eta_row[eta] = -1.0
    prob.add_ineq(eta_row, 0.0, "eta_nonneg")
    prob.minimize(_unit_row(n, t))
    return prob, rd, eta


def _unit_row(n, idx):
    row = np.zeros(n)
    row[idx] = 1.0
    return row


def _solved(prob, solver_opts):
    sol = conic.solve(prob, solver_opts)
    if not sol.optimal:
        raise RuntimeError(f"desired-covariance fit returned {sol.status}")
    return sol


def solve_desired_covariance(
    pattern: IdealPattern,
    geom: UlaGeometry,
    power_budget: float,
    solver_opts: conic.SolverOptions = None,
) -> DesiredCovariance:
    """Fit the desired covariance to an ideal pattern on the grid.

    Two-phase solve: minimize the residual norm, then canonicalize by
    returning the minimum-Frobenius-norm matrix among (near-)minimizers.
    The second phase matters when the minimizer set is a face (for a flat
    pattern every covariance with vanishing off-diagonal sums is optimal);
    the min-norm element is the maximally uniform one.
    """
    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    grid = pattern.grid

    prob, rd, eta = _fit_problem(pattern, geom, power_budget)
    sol = _solved(prob, solver_opts)
    t_opt = max(0.0, float(sol.objective))

    # the 1e-4 relative slack changes the squared residual by <= 0.02%
    cap = t_opt * (1.0 + 1e-4) + 1e-9
    try:
        prob2, rd2, eta2 = _fit_problem(pattern, geom, power_budget, resid_cap=cap)
        sol2 = _solved(prob2, solver_opts)
        rd, eta, sol = rd2, eta2, sol2
    except (RuntimeError, conic.SolverError):
        pass  # keep the phase-1 minimizer, just not canonicalized

    r_d = linalg.hermitian(rd.value(sol.x))
    eta_val = max(0.0, float(sol.x[eta]))
    resid = float(np.sum((eta_val * pattern.gains - beampattern_profile(r_d, grid, geom)) ** 2))
    return DesiredCovariance(r_d, eta_val, resid)
