"""Secure transmit designs: precise-angle and uncertain-angle programs.

Both designs minimize what the target (a potential eavesdropper) receives
subject to per-user SINR floors, a power budget, and radar beampattern
constraints, over the semidefinite relaxation in the per-user matrices W_i
and the artificial-noise covariance R_N (rank-1 constraints dropped):

* precise angle: a Dinkelbach loop on the intercept SINR ratio M/N at the
  known target angle, with the transmit covariance tied to a desired
  covariance through a Frobenius-ball constraint;
* uncertain angle: a quadratic-transform loop with auxiliary weights y_m
  over the uncertainty interval, mainlobe-ripple and sidelobe-gap
  constraints shaping the pattern instead of a covariance match.

Each loop solves one conic subproblem per iteration through the in-repo
interior-point backend and records a full iteration trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conic, linalg
from .scenario import AngularGrid, Scenario, steering_vector

MODE_PRECISE = "precise"
MODE_UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class Thresholds:
    """Design thresholds, all linear (configs convert dB upstream).

    gamma_b: per-user SINR floor; gamma_bp: allowed squared Frobenius
    mismatch to the desired covariance; gamma_s: sidelobe power gap;
    ripple: allowed relative mainlobe deviation (the (1 +/- ripple) band).
    """

    gamma_b: float
    gamma_bp: float = np.inf
    gamma_s: float = 0.0
    ripple: float = 0.1

    def __post_init__(self):
        if self.gamma_b <= 0:
            raise ValueError("gamma_b must be positive")
        if self.gamma_bp < 0:
            raise ValueError("gamma_bp must be nonnegative")
        if not 0.0 < self.ripple < 1.0:
            raise ValueError("ripple must lie in (0, 1)")


@dataclass
class DesignOptions:
    epsilon: float = 1e-3  # |delta c| / ||delta y||_inf stopping threshold
    iter_max: int = 20
    sidelobe_guard: float = np.deg2rad(10.0)
    # the closed-form weight update y = sqrt(A)/B diverges when the optimal
    # intercept power B is (numerically) zero; stop once the summed intercept
    # SINR over the uncertainty interval falls below this, and never let a
    # single weight pass y_cap (well above any non-degenerate fixed point,
    # low enough that solver jitter in a capped coordinate stays below the
    # stopping threshold on ||delta y||)
    degeneracy_tol: float = 1e-8
    y_cap: float = 1e3
    solver: conic.SolverOptions = field(default_factory=conic.SolverOptions)


@dataclass
class DesignIteration:
    index: int
    parameter: object  # Dinkelbach c, or the y vector
    surrogate: float
    sinr_eve: float  # at the nominal angle
    min_user_sinr: float
    m_val: float = np.nan  # intercept numerator at theta0
    n_val: float = np.nan  # intercept denominator at theta0
    sum_sinr_eve: float = np.nan  # uncertain mode: original objective over Phi
    solver_iterations: int = 0


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def append(self, rec):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ratios(self):
        """Dinkelbach ratio sequence M_t / N_t (equals SINR_E per iterate)."""
        return [r.m_val / r.n_val for r in self.records]

    @property
    def surrogates(self):
        return [r.surrogate for r in self.records]


@dataclass
class DesignSolution:
    mode: str
    w_mats: list  # relaxed per-user matrices
    w_vecs: list  # rank-1 extracted beamformers
    r_n: np.ndarray
    r_x: np.ndarray
    trace: IterationTrace
    converged: bool
    metrics: dict
    rank1_defects: np.ndarray
    r_d: np.ndarray = None  # precise mode only
    y_final: np.ndarray = None  # uncertain mode only

    @property
    def c_final(self):
        return self.metrics["sinr_eve"]


class InfeasibleDesignError(RuntimeError):
    """Thresholds admit no solution; names the first failing constraint family."""

    def __init__(self, family, detail=""):
        self.family = family
        super().__init__(f"design infeasible: constraint family '{family}' {detail}".strip())


class DesignSolverError(RuntimeError):
    """Conic backend failed mid-loop; carries the partial trace."""

    def __init__(self, cause, trace):
        self.trace = trace
        super().__init__(f"solver failure after {len(trace)} design iterations: {cause}")


# ---------------------------------------------------------------------------
# metric helpers


def eval_intercept_terms(scn: Scenario, w_list, r_n, theta=None):
    """(M, N): intercept signal power and interference-plus-noise at theta."""
    a = steering_vector(scn.geometry, scn.target.theta0 if theta is None else theta)
    g2 = scn.target.gain_sq
    m_val = g2 * sum(linalg.quadratic_form(a, w) for w in w_list)
    n_val = g2 * linalg.quadratic_form(a, r_n) + scn.noise_power
    return m_val, n_val


def dinkelbach_update(m_val: float, n_val: float) -> float:
    """Ratio update c = M/N (the achieved intercept SINR)."""
    if n_val <= 0:
        raise ValueError(f"nonpositive denominator N={n_val!r}")
    return m_val / n_val


def quadratic_transform_update(a_val: float, b_val: float) -> float:
    """Closed-form auxiliary update y = sqrt(A)/B."""
    if a_val < 0:
        raise ValueError("A must be nonnegative")
    if b_val <= 0:
        raise ValueError(
            "B is nonpositive (all-zero beamformers); reinitialize from a feasible design"
        )
    return np.sqrt(a_val) / b_val


def mainlobe_angles(grid: AngularGrid, target) -> np.ndarray:
    """Indices of grid angles inside [theta0 - dtheta, theta0 + dtheta]."""
    eps = 1e-9
    lo = target.theta0 - target.delta_theta - eps
    hi = target.theta0 + target.delta_theta + eps
    return np.where((grid.angles >= lo) & (grid.angles <= hi))[0]


def sidelobe_angles(grid: AngularGrid, target, guard) -> np.ndarray:
    """Indices of grid angles outside the mainlobe-plus-guard interval."""
    lo = target.theta0 - target.delta_theta - guard
    hi = target.theta0 + target.delta_theta + guard
    return np.where((grid.angles < lo) | (grid.angles > hi))[0]


# ---------------------------------------------------------------------------
# constraints


class UserSinrConstraint:
    """Linear form of SINR_i >= gamma_b over (W_1..W_K, R_N).

    Holds Hermitian weights so that

        sum_k tr(C_k W_k) + tr(C_N R_N) + const >= 0

    is exactly SINR_i >= gamma_b whenever the denominator is positive.
    """

    def __init__(self, scn: Scenario, i: int, gamma_b: float):
        if gamma_b <= 0:
            raise ValueError("gamma_b must be positive")
        if not 0 <= i < scn.n_users:
            raise IndexError(f"user index {i} out of range")
        h = scn.channel[i]
        # tr(h^T W h^*) = tr(W h^* h^T), so the Hermitian weight is h^* h^T
        base = np.outer(np.conj(h), h)
        self.user = i
        self.w_weights = [
            base if k == i else -gamma_b * base for k in range(scn.n_users)
        ]
        self.rn_weight = -gamma_b * base
        self.constant = -gamma_b * scn.noise_power

    def slack(self, w_list, r_n) -> float:
        total = self.constant
        for c, w in zip(self.w_weights, w_list):
            total += np.trace(c @ w).real
        total += np.trace(self.rn_weight @ r_n).real
        return float(total)

    def row(self, blocks, rn_block, n_vars):
        row = np.zeros(n_vars)
        for c, blk in zip(self.w_weights, blocks):
            row += blk.lincomb_row(c, n_vars)
        row += rn_block.lincomb_row(self.rn_weight, n_vars)
        return row


def linearized_user_sinr_constraint(scn: Scenario, i: int, gamma_b: float) -> UserSinrConstraint:
    return UserSinrConstraint(scn, i, gamma_b)


def _add_common_constraints(prob, scn, thr, w_blocks, rn_block):
    n = prob.n_vars
    power = rn_block.trace_row(n)
    for blk in w_blocks:
        power += blk.trace_row(n)
    prob.add_eq(power, scn.power_budget, "power")
    for i in range(scn.n_users):
        con = UserSinrConstraint(scn, i, thr.gamma_b)
        prob.add_ineq(-con.row(w_blocks, rn_block, n), con.constant, f"user_sinr_{i}")


def assemble_precise_subproblem(scn: Scenario, r_d, thr: Thresholds, c: float):
    """Conic subproblem of the precise design at Dinkelbach parameter c."""
    if c < 0:
        raise ValueError("Dinkelbach parameter must be nonnegative")
    if scn.target.gain_sq <= 0:
        raise ValueError("degenerate target: |alpha| must be positive")
    r_d = np.asarray(r_d, dtype=complex)
    n_ant = scn.n_antennas
    if r_d.shape != (n_ant, n_ant):
        raise ValueError("desired covariance has wrong shape")

    prob = conic.ConicProblem()
    w_blocks = [prob.add_hermitian_psd(n_ant, f"W_{i}") for i in range(scn.n_users)]
    rn_block = prob.add_hermitian_psd(n_ant, "R_N")
    n = prob.n_vars

    a0 = steering_vector(scn.geometry, scn.target.theta0)
    g2 = scn.target.gain_sq
    obj = np.zeros(n)
    for blk in w_blocks:
        obj += g2 * blk.quad_form_row(a0, n)
    obj -= c * g2 * rn_block.quad_form_row(a0, n)
    # unit-scale objective; M and N are recomputed from the matrices anyway
    prob.minimize(obj / max(1.0, np.max(np.abs(obj))))

    _add_common_constraints(prob, scn, thr, w_blocks, rn_block)

    if np.isfinite(thr.gamma_bp):
        rows = w_blocks[0].frob_rows(n)
        for blk in w_blocks[1:]:
            rows = rows + blk.frob_rows(n)
        rows = rows + rn_block.frob_rows(n)
        offs = rn_block.frob_offsets(r_d)
        prob.add_soc(np.zeros(n), np.sqrt(thr.gamma_bp), rows, offs, "pattern_mismatch")

    return prob, w_blocks, rn_block


def _assemble_uncertain(scn, grid, thr, y, guard):
    phi = mainlobe_angles(grid, scn.target)
    omega = sidelobe_angles(grid, scn.target, guard)
    if phi.size == 0:
        raise ValueError("mainlobe interval contains no grid angle")
    if omega.size == 0:
        raise ValueError("sidelobe region contains no grid angle")
    n_ant = scn.n_antennas
    g2 = scn.target.gain_sq

    prob = conic.ConicProblem()
    w_blocks = [prob.add_hermitian_psd(n_ant, f"W_{i}") for i in range(scn.n_users)]
    rn_block = prob.add_hermitian_psd(n_ant, "R_N")
    t_idx = prob.add_scalars(phi.size) if y is not None else None
    n = prob.n_vars

    a_phi = [steering_vector(scn.geometry, grid.angles[j]) for j in phi]
    b_rows = []
    for a in a_phi:
        row = np.zeros(n)
        for blk in w_blocks:
            row += g2 * blk.quad_form_row(a, n)
        b_rows.append(row)

    obj = np.zeros(n)
    if y is None:
        # phase 1: pure feasibility; an interior point keeps every B_m away
        # from zero so the first weight update is well defined
        pass
    else:
        y = np.asarray(y, dtype=float)
        if y.shape != (phi.size,):
            raise ValueError(f"y must have one entry per mainlobe angle ({phi.size})")
        if np.any(y <= 0):
            raise ValueError("auxiliary weights y must be positive")
        for m, (a, row) in enumerate(zip(a_phi, b_rows)):
            obj += y[m] ** 2 * row
            obj[t_idx[m]] -= 2.0 * y[m]
            # t_m^2 <= A_m via a rotated cone on (A_m, 1/2, t_m)
            u_row = g2 * rn_block.quad_form_row(a, n)
            t_row = np.zeros((1, n))
            t_row[0, t_idx[m]] = 1.0
            prob.add_rotated_soc(
                u_row, scn.noise_power, np.zeros(n), 0.5, t_row, [0.0], f"sqrtA_{m}"
            )
    prob.minimize(obj / max(1.0, np.max(np.abs(obj))))

    _add_common_constraints(prob, scn, thr, w_blocks, rn_block)

    a0 = steering_vector(scn.geometry, scn.target.theta0)
    q0 = np.zeros(n)
    for blk in list(w_blocks) + [rn_block]:
        q0 += blk.quad_form_row(a0, n)
    for j in omega:
        a = steering_vector(scn.geometry, grid.angles[j])
        qm = np.zeros(n)
        for blk in list(w_blocks) + [rn_block]:
            qm += blk.quad_form_row(a, n)
        prob.add_ineq(-(q0 - qm), -thr.gamma_s, f"sidelobe_{j}")
    for m, jj in enumerate(phi):
        qk = np.zeros(n)
        for blk in list(w_blocks) + [rn_block]:
            qk += blk.quad_form_row(a_phi[m], n)
        prob.add_ineq(qk - (1.0 + thr.ripple) * q0, 0.0, f"ripple_hi_{jj}")
        prob.add_ineq((1.0 - thr.ripple) * q0 - qk, 0.0, f"ripple_lo_{jj}")

    return prob, w_blocks, rn_block, phi


def assemble_uncertain_subproblem(scn: Scenario, grid: AngularGrid, thr: Thresholds, y,
                                  guard=np.deg2rad(10.0)):
    """Conic subproblem of the uncertain design at auxiliary weights y."""
    if y is None:
        raise ValueError("y is required; use solve_uncertain_design for phase 1")
    return _assemble_uncertain(scn, grid, thr, y, guard)


# ---------------------------------------------------------------------------
# solve loops


def _solve_or_diagnose(prob, mode, scn, grid, thr, opts, trace):
    try:
        sol = conic.solve(prob, opts.solver)
    except conic.SolverError as exc:
        raise DesignSolverError(exc, trace) from exc
    if sol.status == conic.STATUS_INFEASIBLE:
        family = _diagnose_infeasibility(mode, scn, grid, thr, opts)
        raise InfeasibleDesignError(family)
    if not sol.optimal:
        raise DesignSolverError(f"unexpected solver status {sol.status}", trace)
    return sol


def _diagnose_infeasibility(mode, scn, grid, thr, opts):
    """Re-solve with constraint families added one at a time; name the first
    family whose addition makes the subproblem infeasible."""
    n_ant = scn.n_antennas

    def feasible(build):
        prob = conic.ConicProblem()
        w_blocks = [prob.add_hermitian_psd(n_ant) for _ in range(scn.n_users)]
        rn_block = prob.add_hermitian_psd(n_ant)
        build(prob, w_blocks, rn_block)
        prob.minimize(np.zeros(prob.n_vars))
        try:
            return conic.solve(prob, opts.solver).optimal
        except conic.SolverError:
            return False

    def power_only(prob, w_blocks, rn_block):
        row = rn_block.trace_row(prob.n_vars)
        for blk in w_blocks:
            row += blk.trace_row(prob.n_vars)
        prob.add_eq(row, scn.power_budget)

    def with_sinr(prob, w_blocks, rn_block):
        power_only(prob, w_blocks, rn_block)
        for i in range(scn.n_users):
            con = UserSinrConstraint(scn, i, thr.gamma_b)
            prob.add_ineq(-con.row(w_blocks, rn_block, prob.n_vars), con.constant)

    if not feasible(power_only):
        return "power+psd"
    if not feasible(with_sinr):
        return "user_sinr"
    if mode == MODE_PRECISE:
        return "beampattern_mismatch"

    def with_ripple(prob, w_blocks, rn_block):
        with_sinr(prob, w_blocks, rn_block)
        n = prob.n_vars
        a0 = steering_vector(scn.geometry, scn.target.theta0)
        q0 = np.zeros(n)
        for blk in list(w_blocks) + [rn_block]:
            q0 += blk.quad_form_row(a0, n)
        for j in mainlobe_angles(grid, scn.target):
            a = steering_vector(scn.geometry, grid.angles[j])
            qk = np.zeros(n)
            for blk in list(w_blocks) + [rn_block]:
                qk += blk.quad_form_row(a, n)
            prob.add_ineq(qk - (1.0 + thr.ripple) * q0, 0.0)
            prob.add_ineq((1.0 - thr.ripple) * q0 - qk, 0.0)

    if not feasible(with_ripple):
        return "mainlobe_ripple"
    return "sidelobe_gap"


def _metrics(scn, grid, w_list, r_n, phi_idx=None):
    from .scenario import secrecy_rate, sinr_eve, sinr_user

    users = np.array([sinr_user(scn, i, w_list, r_n) for i in range(scn.n_users)])
    nominal = sinr_eve(scn, scn.target.theta0, w_list, r_n)
    worst = nominal
    worst_theta = scn.target.theta0
    if phi_idx is not None and len(phi_idx):
        vals = [sinr_eve(scn, grid.angles[j], w_list, r_n) for j in phi_idx]
        k = int(np.argmax(vals))
        if vals[k] > worst:
            worst = vals[k]
            worst_theta = grid.angles[phi_idx[k]]
    return {
        "user_sinrs": users,
        "min_user_sinr": float(users.min()),
        "sinr_eve": float(nominal),
        "sinr_eve_worst": float(worst),
        "secrecy_rate": secrecy_rate(scn, w_list, r_n),
        "secrecy_rate_worst": secrecy_rate(scn, w_list, r_n, eve_theta=worst_theta),
    }


def _finalize(mode, scn, grid, sol_matrices, trace, converged, r_d=None, y_final=None,
              phi_idx=None):
    w_list, r_n = sol_matrices
    r_x = linalg.hermitian(sum(w_list) + r_n)
    extracted = [extract_rank1(w) for w in w_list]
    return DesignSolution(
        mode=mode,
        w_mats=w_list,
        w_vecs=[w for w, _ in extracted],
        r_n=r_n,
        r_x=r_x,
        trace=trace,
        converged=converged,
        metrics=_metrics(scn, grid, w_list, r_n, phi_idx),
        rank1_defects=np.array([d for _, d in extracted]),
        r_d=r_d,
        y_final=y_final,
    )


def _matrices(w_blocks, rn_block, x):
    w_list = [linalg.hermitian(blk.value(x)) for blk in w_blocks]
    return w_list, linalg.hermitian(rn_block.value(x))


def solve_precise_design(scn: Scenario, r_d, thr: Thresholds, opts: DesignOptions = None,
                         grid: AngularGrid = None) -> DesignSolution:
    """Dinkelbach loop for the precise-angle design.

    Iteration 0 solves the subproblem at c = 0, which doubles as the phase-1
    feasibility check and seeds c with the achieved intercept SINR; each
    following iteration re-solves at the updated ratio until |delta c| drops
    below ``opts.epsilon`` or the iteration cap is hit.
    """
    opts = opts or DesignOptions()
    trace = IterationTrace()
    c = 0.0
    converged = False
    matrices = None
    for it in range(opts.iter_max + 1):
        prob, w_blocks, rn_block = assemble_precise_subproblem(scn, r_d, thr, c)
        sol = _solve_or_diagnose(prob, MODE_PRECISE, scn, None, thr, opts, trace)
        matrices = _matrices(w_blocks, rn_block, sol.x)
        m_val, n_val = eval_intercept_terms(scn, *matrices)
        met = _metrics(scn, None, *matrices)
        trace.append(DesignIteration(
            index=it, parameter=c, surrogate=m_val - c * n_val,
            sinr_eve=met["sinr_eve"], min_user_sinr=met["min_user_sinr"],
            m_val=m_val, n_val=n_val, solver_iterations=sol.iterations,
        ))
        # M is a PSD quadratic form, so clamp the solver's +/-1e-9 noise
        c_next = max(0.0, dinkelbach_update(m_val, n_val))
        if it > 0 and abs(c_next - c) < opts.epsilon:
            converged = True
            break
        c = c_next
    return _finalize(MODE_PRECISE, scn, grid, matrices, trace, converged, r_d=np.asarray(r_d))


def solve_uncertain_design(scn: Scenario, grid: AngularGrid, thr: Thresholds,
                           opts: DesignOptions = None) -> DesignSolution:
    """Quadratic-transform loop for the uncertain-angle design.

    Phase 1 solves the constraint set with the summed intercept power as the
    objective, seeds y from the closed-form update, then alternates conic
    solves with y updates until ||delta y||_inf < ``opts.epsilon``.
    """
    opts = opts or DesignOptions()
    trace = IterationTrace()

    prob, w_blocks, rn_block, phi = _assemble_uncertain(
        scn, grid, thr, None, opts.sidelobe_guard
    )
    sol = _solve_or_diagnose(prob, MODE_UNCERTAIN, scn, grid, thr, opts, trace)
    matrices = _matrices(w_blocks, rn_block, sol.x)
    y = _capped_weights(scn, grid, phi, matrices, opts)

    converged = False
    for it in range(opts.iter_max):
        prob, w_blocks, rn_block, phi = _assemble_uncertain(
            scn, grid, thr, y, opts.sidelobe_guard
        )
        sol = _solve_or_diagnose(prob, MODE_UNCERTAIN, scn, grid, thr, opts, trace)
        matrices = _matrices(w_blocks, rn_block, sol.x)
        ab = [_ab_terms(scn, grid.angles[j], *matrices) for j in phi]
        surrogate = sum(2 * ym * np.sqrt(a) - ym**2 * b for ym, (a, b) in zip(y, ab))
        sum_sinr = float(sum(max(b, 0.0) / a for a, b in ab))
        met = _metrics(scn, grid, *matrices, phi_idx=phi)
        trace.append(DesignIteration(
            index=it, parameter=y.copy(), surrogate=surrogate,
            sinr_eve=met["sinr_eve"], min_user_sinr=met["min_user_sinr"],
            sum_sinr_eve=sum_sinr,
            solver_iterations=sol.iterations,
        ))
        if sum_sinr < opts.degeneracy_tol:
            # intercept power is numerically zero everywhere on the interval:
            # the fractional objective is at its floor and y would diverge
            converged = True
            break
        y_next = _capped_weights(scn, grid, phi, matrices, opts)
        if np.max(np.abs(y_next - y)) < opts.epsilon:
            converged = True
            y = y_next
            break
        y = y_next
    return _finalize(MODE_UNCERTAIN, scn, grid, matrices, trace, converged,
                     y_final=y, phi_idx=phi)


def _capped_weights(scn, grid, phi, matrices, opts):
    """Closed-form y update with a deterministic cap against B -> 0 blowup."""
    out = np.empty(phi.size)
    for k, j in enumerate(phi):
        a_val, b_val = _ab_terms(scn, grid.angles[j], *matrices)
        b_floor = np.sqrt(max(a_val, 0.0)) / opts.y_cap
        out[k] = np.sqrt(max(a_val, 0.0)) / max(b_val, b_floor)
    return out


def _ab_terms(scn, theta, w_list, r_n):
    """(A, B): intercept interference-plus-noise and signal power at theta."""
    m_val, n_val = eval_intercept_terms(scn, w_list, r_n, theta=theta)
    return n_val, m_val


# ---------------------------------------------------------------------------
# rank-1 recovery and validation


def extract_rank1(w):
    """Dominant rank-1 factor of a PSD matrix.

    Returns (vec, defect) with vec = sqrt(lambda_max) * u_max, the phase fixed
    so the first non-negligible entry is real positive, and
    defect = 1 - lambda_max / trace(w).  A zero matrix gives (0, 0).
    """
    w = np.asarray(w, dtype=complex)
    tr = np.trace(w).real
    if tr <= 1e-300:
        return np.zeros(w.shape[0], dtype=complex), 0.0
    evals, evecs = linalg.hermitian_eig(linalg.hermitian(w))
    lam = max(evals[0], 0.0)
    vec = np.sqrt(lam) * evecs[:, 0]
    mags = np.abs(vec)
    nz = np.where(mags > 1e-10 * mags.max())[0]
    if nz.size:
        phase = vec[nz[0]] / abs(vec[nz[0]])
        vec = vec * np.conj(phase)
    defect = min(1.0, max(0.0, 1.0 - lam / tr))
    return vec, defect


def gaussian_randomization(w, scn: Scenario, thr: Thresholds, trials: int, seed,
                           user: int = 0, others=None, r_n=None):
    """Randomized rank-1 recovery for one beam, others held fixed.

    Draws ``trials`` candidates from CN(0, W), rescales each to the beam
    power trace(W), keeps those meeting every user-SINR floor with the
    remaining beams ``others`` and noise covariance ``r_n`` fixed, and
    returns the candidate whose intercept SINR at the nominal angle is
    lowest; ``None`` if every candidate is infeasible.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    w = np.asarray(w, dtype=complex)
    n = w.shape[0]
    others = [np.asarray(o, dtype=complex) for o in (others or [])]
    r_n = np.zeros((n, n), dtype=complex) if r_n is None else np.asarray(r_n, dtype=complex)
    evals, evecs = linalg.hermitian_eig(linalg.hermitian(w))
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    beam_power = np.trace(w).real
    rng = np.random.default_rng(seed)

    from .scenario import sinr_eve, sinr_user

    best = None
    best_obj = np.inf
    for _ in range(trials):
        g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        cand = root @ g
        nrm2 = np.vdot(cand, cand).real
        if nrm2 <= 0:
            continue
        cand = cand * np.sqrt(beam_power / nrm2)
        w_list = list(others)
        w_list.insert(user, np.outer(cand, cand.conj()))
        ok = all(
            sinr_user(scn, i, w_list, r_n) >= thr.gamma_b * (1 - 1e-9)
            for i in range(min(scn.n_users, len(w_list)))
        )
        if not ok:
            continue
        obj = sinr_eve(scn, scn.target.theta0, w_list, r_n)
        if obj < best_obj:
            best_obj = obj
            best = cand
    return best


@dataclass
class FeasibilityReport:
    rows: list  # (name, slack) on the relaxed covariances
    recon_rows: list  # same checks on the rank-1 reconstructed covariances

    @property
    def min_slack(self):
        return min(v for _, v in self.rows)

    def passes(self, tol=1e-6):
        return self.min_slack >= -tol

    def __repr__(self):
        worst = min(self.rows, key=lambda r: r[1])
        return f"FeasibilityReport(min_slack={worst[1]:.3e} at {worst[0]!r})"


def validate_solution(scn: Scenario, grid, thr: Thresholds, sol: DesignSolution,
                      mode=None, guard=np.deg2rad(10.0)) -> FeasibilityReport:
    """Per-constraint slack audit of a returned design.

    Slacks are nonnegative when the constraint holds; the power equality is
    reported as minus its absolute violation.  The same checks run again on
    the rank-1 reconstructed covariances (report-only).
    """
    mode = mode or sol.mode

    def audit(w_list, r_n):
        rows = []
        r_x = sum(w_list) + r_n
        for i in range(scn.n_users):
            con = UserSinrConstraint(scn, i, thr.gamma_b)
            rows.append((f"user_sinr_{i}", con.slack(w_list, r_n)))
        rows.append(("power", -abs(np.trace(r_x).real - scn.power_budget)))
        for i, w in enumerate(w_list):
            rows.append((f"psd_W_{i}", float(np.linalg.eigvalsh(linalg.hermitian(w))[0])))
        rows.append(("psd_R_N", float(np.linalg.eigvalsh(linalg.hermitian(r_n))[0])))
        if mode == MODE_PRECISE:
            if sol.r_d is None:
                raise ValueError("precise-mode audit needs the desired covariance")
            mismatch = np.linalg.norm(r_x - sol.r_d) ** 2
            rows.append(("pattern_mismatch", thr.gamma_bp - mismatch))
        else:
            a0 = steering_vector(scn.geometry, scn.target.theta0)
            g0 = linalg.quadratic_form(a0, linalg.hermitian(r_x))
            for j in sidelobe_angles(grid, scn.target, guard):
                a = steering_vector(scn.geometry, grid.angles[j])
                gm = linalg.quadratic_form(a, linalg.hermitian(r_x))
                rows.append((f"sidelobe_{j}", g0 - gm - thr.gamma_s))
            for j in mainlobe_angles(grid, scn.target):
                a = steering_vector(scn.geometry, grid.angles[j])
                gk = linalg.quadratic_form(a, linalg.hermitian(r_x))
                rows.append((f"ripple_hi_{j}", (1.0 + thr.ripple) * g0 - gk))
                rows.append((f"ripple_lo_{j}", gk - (1.0 - thr.ripple) * g0))
        return rows

    relaxed = audit(sol.w_mats, sol.r_n)
    recon = audit([np.outer(v, v.conj()) for v in sol.w_vecs], sol.r_n)
    return FeasibilityReport(relaxed, recon)
