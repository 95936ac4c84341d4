import numpy as np
import pytest

from securebeam import design
from securebeam.design import (
    DesignOptions,
    InfeasibleDesignError,
    Thresholds,
    dinkelbach_update,
    linearized_user_sinr_constraint,
    solve_precise_design,
    validate_solution,
)
from securebeam.scenario import AngularGrid, sinr_user

from helpers import precise_rank1_oracle, random_psd, small_scenario


def test_dinkelbach_update_values():
    assert dinkelbach_update(0.0, 2.0) == 0.0
    assert dinkelbach_update(4.0, 2.0) == 2.0
    assert dinkelbach_update(4.0, 3.0) == pytest.approx(4.0 / 3.0)
    with pytest.raises(ValueError):
        dinkelbach_update(1.0, 0.0)


def test_linearized_constraint_single_user():
    scn = small_scenario(n=4, k=1, seed=2, noise=0.5)
    con = linearized_user_sinr_constraint(scn, 0, 2.0)
    rng = np.random.default_rng(0)
    w = random_psd(rng, 4)
    rn = random_psd(rng, 4)
    # slack zero exactly at SINR == gamma_b
    sinr = sinr_user(scn, 0, [w], rn)
    con_at = linearized_user_sinr_constraint(scn, 0, sinr)
    assert con_at.slack([w], rn) == pytest.approx(0.0, abs=1e-9)
    # slack sign matches the SINR comparison
    assert (con.slack([w], rn) >= 0) == (sinr >= 2.0)
    # tiny threshold is satisfiable by any PSD signal matrix
    con0 = linearized_user_sinr_constraint(scn, 0, 1e-12)
    assert con0.slack([w], np.zeros((4, 4))) >= 0


def test_linearized_constraint_interference_example():
    scn = small_scenario(n=2, k=2, seed=0, noise=1.0)
    object.__setattr__(scn, "channel", np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex))
    w1 = np.diag([2.0, 0.0]).astype(complex)
    w2 = np.diag([1.0, 0.0]).astype(complex)
    rn = np.diag([0.0, 1.0]).astype(complex)
    assert sinr_user(scn, 0, [w1, w2], rn) == pytest.approx(1.0)
    con = linearized_user_sinr_constraint(scn, 0, 1.0)
    assert con.slack([w1, w2], rn) == pytest.approx(0.0, abs=1e-12)


def test_assemble_rejects_degenerate_inputs():
    scn = small_scenario(n=4, k=1, seed=2)
    thr = Thresholds(gamma_b=1.0, gamma_bp=1.0)
    with pytest.raises(ValueError):
        design.assemble_precise_subproblem(scn, np.eye(4, dtype=complex), thr, -0.5)
    with pytest.raises(ValueError):
        design.assemble_precise_subproblem(scn, np.eye(3, dtype=complex), thr, 0.0)


def test_c_zero_objective_is_pure_intercept_power():
    scn = small_scenario(n=3, k=1, seed=4)
    thr = Thresholds(gamma_b=1.0, gamma_bp=2.0)
    prob, w_blocks, rn_block = design.assemble_precise_subproblem(
        scn, np.eye(3, dtype=complex) / 3, thr, 0.0
    )
    # objective must not touch the noise-covariance dofs when c = 0
    rn_slice = slice(rn_block.offset, rn_block.offset + rn_block.n_dof)
    assert np.all(prob.objective[rn_slice] == 0.0)
    assert np.any(prob.objective[: w_blocks[0].n_dof] != 0.0)


def test_dinkelbach_loop_monotone_and_feasible():
    scn = small_scenario(n=6, k=2, seed=3, noise=0.05)
    grid = AngularGrid.regular(2.0)
    thr = Thresholds(gamma_b=10 ** 0.8, gamma_bp=np.inf)
    sol = solve_precise_design(scn, np.eye(6, dtype=complex) / 6, thr,
                               DesignOptions(epsilon=1e-5), grid=grid)
    ratios = sol.trace.ratios
    assert all(ratios[i + 1] <= ratios[i] + 1e-6 for i in range(len(ratios) - 1))
    assert sol.converged
    rep = validate_solution(scn, grid, thr, sol)
    assert rep.passes(1e-6)
    assert abs(np.trace(sol.r_x).real - scn.power_budget) <= 1e-6
    # the reported c equals the final intercept SINR
    last = sol.trace.records[-1]
    assert sol.metrics["sinr_eve"] == pytest.approx(last.m_val / last.n_val, abs=1e-12)


def test_loose_thresholds_drive_intercept_to_zero():
    scn = small_scenario(n=4, k=1, seed=6, noise=0.1)
    thr = Thresholds(gamma_b=1e-8, gamma_bp=np.inf)
    sol = solve_precise_design(scn, np.eye(4, dtype=complex) / 4, thr)
    assert sol.metrics["sinr_eve"] <= 1e-6


def test_matches_exhaustive_rank1_oracle():
    scn = small_scenario(n=2, k=1, seed=1, noise=0.1, theta0_deg=20.0)
    gamma_b = 10 ** 0.8
    thr = Thresholds(gamma_b=gamma_b, gamma_bp=np.inf)
    sol = solve_precise_design(scn, np.eye(2, dtype=complex) / 2, thr,
                               DesignOptions(epsilon=1e-6))
    oracle = precise_rank1_oracle(scn, gamma_b, n_grid=100)
    assert sol.metrics["sinr_eve"] == pytest.approx(oracle, rel=0.02)


def test_infeasible_reports_constraint_family():
    # channel too weak for the requested floor (seed 0 has ||h||^2 < gamma sigma^2)
    scn = small_scenario(n=2, k=1, seed=0, noise=0.1, theta0_deg=20.0)
    thr = Thresholds(gamma_b=10 ** 0.8, gamma_bp=np.inf)
    with pytest.raises(InfeasibleDesignError) as err:
        solve_precise_design(scn, np.eye(2, dtype=complex) / 2, thr)
    assert err.value.family == "user_sinr"


def test_surrogate_root_condition_at_convergence():
    scn = small_scenario(n=6, k=2, seed=9, noise=0.05)
    thr = Thresholds(gamma_b=10.0, gamma_bp=np.inf)
    sol = solve_precise_design(scn, np.eye(6, dtype=complex) / 6, thr,
                               DesignOptions(epsilon=1e-5))
    assert sol.converged
    last = sol.trace.records[-1]
    assert abs(last.m_val - last.parameter * last.n_val) <= 1e-5 * last.n_val


def test_scaling_invariance_of_achieved_sinrs():
    scale = 4.0
    thr = Thresholds(gamma_b=10.0, gamma_bp=0.2)
    scn1 = small_scenario(n=4, k=2, seed=12, noise=0.05, p0=1.0)
    scn2 = small_scenario(n=4, k=2, seed=12, noise=0.05 * scale, p0=scale)
    thr2 = Thresholds(gamma_b=10.0, gamma_bp=0.2 * scale**2)
    rd1 = np.eye(4, dtype=complex) / 4
    sol1 = solve_precise_design(scn1, rd1, thr, DesignOptions(epsilon=1e-5))
    sol2 = solve_precise_design(scn2, rd1 * scale, thr2, DesignOptions(epsilon=1e-5))
    assert sol2.metrics["sinr_eve"] == pytest.approx(sol1.metrics["sinr_eve"], rel=1e-4, abs=1e-7)
    assert np.allclose(sol2.metrics["user_sinrs"], sol1.metrics["user_sinrs"], rtol=1e-4)
