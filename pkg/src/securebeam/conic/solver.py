"""Primal-dual interior-point solver for small dense conic programs.

Solves, over the composite cone K (orthant x SOCs x PSD blocks),

    minimize    c' x
    subject to  A x = b,
                G x + s = h,   s in K,

via the homogeneous self-dual embedding with Nesterov-Todd scaling and a
Mehrotra-style predictor-corrector.  Equalities stay in the KKT system; each
iteration factors the quasidefinite reduction

    [ G'(W'W)^{-1}G   A' ] [dx]   [rx]
    [ A               0  ] [dy] = [ry]

once and reuses it for the initialization/predictor/corrector solves.  The
embedding also certifies primal or dual infeasibility (returned as an
improving ray) instead of failing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cones import ConeDims, NTScaling, cone_e, cone_min_eig, jprod
from .problem import ConicProblem

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_FAILED = "numerical_failure"


def _flush_tiny(arr, rel=1e-40):
    """Zero entries below ``rel`` times the largest magnitude, in place.

    Their contribution is far below solver tolerances at any conditioning
    the solver survives, and removing them keeps products out of the
    denormal range.
    """
    m = np.max(np.abs(arr)) if arr.size else 0.0
    if m > 0:
        arr[np.abs(arr) < rel * m] = 0.0
    return arr


@dataclass
class SolverOptions:
    """Termination controls.

    A solve is ``optimal`` when residuals meet the strict tolerances, or,
    if progress stalls at the floating-point floor first, when the best
    iterate is within ``inacc_factor`` times them (the reported pres/dres/
    gap always describe the returned point).
    """

    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    max_iter: int = 100
    step_frac: float = 0.99
    min_step: float = 1e-12
    inacc_factor: float = 10.0


@dataclass
class IterationRecord:
    """Per-iteration telemetry.

    ``dcost`` is the certified lower bound ``pcost - (s'z + tau*kappa)/tau^2``
    carried by the self-dual embedding (never above ``pcost``); ``dcost_raw``
    is the embedded dual value ``-(b'y + h'z)/tau``, which only becomes a
    valid bound once the dual residual is small.  The two coincide at
    termination.
    """

    iteration: int
    pcost: float
    dcost: float
    gap: float
    pres: float
    dres: float
    step: float
    mu: float
    dcost_raw: float = np.nan


@dataclass
class ConicSolution:
    status: str
    x: np.ndarray = None
    y: np.ndarray = None
    z: np.ndarray = None
    s: np.ndarray = None
    objective: float = np.nan
    gap: float = np.nan
    pres: float = np.nan
    dres: float = np.nan
    iterations: int = 0
    log: list = field(default_factory=list)
    certificate: np.ndarray = None  # improving ray for infeasible/unbounded
    message: str = ""

    @property
    def optimal(self):
        return self.status == STATUS_OPTIMAL


class _KKT:
    """Factorization of [[H, A'], [A, 0]] with H = Gs' Gs."""

    def __init__(self, A, G, scaling=None, psd_cols=None):
        self.A = A
        self.G = G
        self.scaling = scaling
        n = G.shape[1]
        p = A.shape[0]
        self.n, self.p = n, p
        self.Gs = G if scaling is None else scaling.scale_G(G, psd_cols)
        if scaling is not None:
            # near-converged scalings spread entries over ~40 decades; the
            # tiny tail is numerically meaningless but its products land in
            # the denormal range and slow BLAS/LAPACK down 10-100x
            _flush_tiny(self.Gs)
        H = self.Gs.T @ self.Gs
        if not np.all(np.isfinite(H)):
            raise FloatingPointError("scaled KKT blocks overflowed")
        _flush_tiny(H)
        K = np.zeros((n + p, n + p))
        K[:n, :n] = H
        if p:
            K[:n, n:] = A.T
            K[n:, :n] = A
        scale = max(1.0, np.max(np.abs(np.diag(H))))
        self._fac = None
        with np.errstate(all="ignore"):
            for reg in (0.0, 1e-14, 1e-11, 1e-8):
                Kr = K.copy()
                if reg:
                    Kr[:n, :n] += reg * scale * np.eye(n)
                    if p:
                        Kr[n:, n:] -= reg * scale * np.eye(p)
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        fac = scipy.linalg.lu_factor(Kr, check_finite=False)
                except (scipy.linalg.LinAlgError, ValueError):
                    continue
                probe = scipy.linalg.lu_solve(fac, np.ones(n + p), check_finite=False)
                if np.all(np.isfinite(probe)):
                    self._fac = fac
                    break
        if self._fac is None:
            raise FloatingPointError("KKT factorization failed")

    def _wtw_inv(self, v):
        if self.scaling is None:
            return v
        return self.scaling.apply_Winv(self.scaling.apply_WinvT(v))

    def _wtw(self, v):
        if self.scaling is None:
            return v
        return self.scaling.apply_WT(self.scaling.apply_W(v))

    def _solve_once(self, bx, by, bz):
        rhs = np.concatenate([bx + self.G.T @ self._wtw_inv(bz), by])
        sol = scipy.linalg.lu_solve(self._fac, rhs, check_finite=False)
        ux, uy = sol[: self.n], sol[self.n :]
        uz = self._wtw_inv(self.G @ ux - bz)
        return ux, uy, uz

    def solve(self, bx, by, bz, max_refine=3):
        """Solve the 3x3 system

        [0  A'  G'  ] [ux]   [bx]
        [A  0   0   ] [uy] = [by]
        [G  0  -W'W ] [uz]   [bz]

        with iterative refinement: the reduction loses accuracy once the
        scaling becomes ill-conditioned near convergence, and a few cheap
        refinement rounds keep the residual floor well below the solver
        tolerances.
        """
        scale = 1.0 + max(np.max(np.abs(bx), initial=0.0),
                          np.max(np.abs(by), initial=0.0),
                          np.max(np.abs(bz), initial=0.0))
        ux, uy, uz = self._solve_once(bx, by, bz)
        prev = np.inf
        for _ in range(max_refine):
            r1 = bx - (self.A.T @ uy + self.G.T @ uz)
            r2 = by - self.A @ ux
            r3 = bz - (self.G @ ux - self._wtw(uz))
            res = max(np.max(np.abs(r1), initial=0.0),
                      np.max(np.abs(r2), initial=0.0),
                      np.max(np.abs(r3), initial=0.0))
            if not np.isfinite(res) or res <= 1e-13 * scale or res >= 0.5 * prev:
                break
            cx, cy, cz = self._solve_once(r1, r2, r3)
            ux = ux + cx
            uy = uy + cy
            uz = uz + cz
            prev = res
        return ux, uy, uz


def solve_conelp(c, A, b, G, h, dims: ConeDims, opts: SolverOptions = None, psd_cols=None):
    """Core cone LP solver; returns a :class:`ConicSolution`."""
    opts = opts or SolverOptions()
    n = c.shape[0]
    p = A.shape[0]
    M = dims.size
    if G.shape != (M, n):
        raise ValueError("G shape inconsistent with cone dims")
    if M == 0:
        raise ValueError("problem needs at least one cone constraint")

    e = cone_e(dims)
    deg = dims.degree
    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b)) if p else 1.0
    resz0 = max(1.0, np.linalg.norm(h))

    log = []

    # --- initial point: least-squares primal/dual with identity scaling
    try:
        kkt0 = _KKT(A, G, None, psd_cols)
        ux, uy, uz = kkt0.solve(np.zeros(n), b, h)
        x = ux
        s_try = h - G @ x
        v = cone_min_eig(s_try, dims)
        s = s_try if v > 1e-8 * max(1.0, np.linalg.norm(s_try)) else s_try + (1.0 - v) * e
        dx2, y, uz2 = kkt0.solve(-c, np.zeros(p), np.zeros(M))
        z_try = uz2
        v = cone_min_eig(z_try, dims)
        z = z_try if v > 1e-8 * max(1.0, np.linalg.norm(z_try)) else z_try + (1.0 - v) * e
    except FloatingPointError:
        x = np.zeros(n)
        y = np.zeros(p)
        s = e.copy()
        z = e.copy()
    tau, kappa = 1.0, 1.0

    best = None  # (score, snapshot) fallback if the last iterations break down
    stall = 0
    step = np.nan
    for it in range(opts.max_iter):
        hresx = A.T @ y + G.T @ z + c * tau
        hresy = A @ x - b * tau
        hresz = G @ x + s - h * tau
        hrestau = c @ x + b @ y + h @ z + kappa

        gap_sz = s @ z
        mu = (gap_sz + tau * kappa) / (deg + 1)

        pcost = c @ x / tau
        dcost_raw = -(b @ y + h @ z) / tau
        gap = gap_sz / tau**2
        dcost = pcost - (gap_sz + tau * kappa) / tau**2
        pres = max(np.linalg.norm(hresy) / resy0, np.linalg.norm(hresz) / resz0) / tau
        dres = np.linalg.norm(hresx) / resx0 / tau
        log.append(IterationRecord(it, pcost, dcost, gap, pres, dres, step, mu, dcost_raw))

        relgap = np.inf
        if pcost < 0:
            relgap = gap / -pcost
        elif dcost > 0:
            relgap = gap / dcost

        score = max(pres, dres, min(gap, relgap))
        if best is None or score < best[0]:
            if best is not None and score > 0.7 * best[0]:
                stall += 1
            else:
                stall = 0
            best = (score, (x / tau, y / tau, z / tau, s / tau, pcost, gap, relgap, pres, dres, it))
        else:
            stall += 1

        if pres <= opts.feastol and dres <= opts.feastol and (
            gap <= opts.abstol or relgap <= opts.reltol
        ):
            return ConicSolution(
                STATUS_OPTIMAL, x / tau, y / tau, z / tau, s / tau,
                objective=pcost, gap=gap, pres=pres, dres=dres,
                iterations=it, log=log,
            )
        if stall >= 4:
            fin = _finish(best, opts, log, it, step, "progress stalled at numerical floor")
            if fin.status == STATUS_OPTIMAL or it > opts.max_iter // 2:
                return fin
            stall = 0  # early plateau and best not acceptable yet: keep going

        # infeasibility certificates
        hz_by = -(b @ y + h @ z)
        if hz_by > 0:
            pinfres = np.linalg.norm(A.T @ y + G.T @ z) / resx0 / hz_by
            if pinfres <= opts.feastol:
                yc, zc = y / hz_by, z / hz_by
                return ConicSolution(
                    STATUS_INFEASIBLE, None, yc, zc, None,
                    iterations=it, log=log,
                    certificate=np.concatenate([yc, zc]),
                    message="primal infeasible: dual improving ray (y, z) returned",
                )
        mcx = -(c @ x)
        if mcx > 0:
            dinfres = max(np.linalg.norm(A @ x) / resy0,
                          np.linalg.norm(G @ x + s) / resz0) / mcx
            if dinfres <= opts.feastol:
                return ConicSolution(
                    STATUS_UNBOUNDED, x / mcx, None, None, s / mcx,
                    iterations=it, log=log, certificate=x / mcx,
                    message="dual infeasible: primal improving ray x returned",
                )

        try:
            W = NTScaling(s, z, dims)
            kkt = _KKT(A, G, W, psd_cols)
        except FloatingPointError as exc:
            return _finish(best, opts, log, it, step, f"scaling/factorization failed: {exc}")

        lam = W.lam
        u1 = kkt.solve(-c, b, h)
        denom = c @ u1[0] + b @ u1[1] + h @ u1[2] - kappa / tau
        if not np.isfinite(denom) or abs(denom) < 1e-300:
            return _finish(best, opts, log, it, step, "singular tau subsystem")

        def direction(sigma, corr_s, corr_k):
            ds_rhs = sigma * mu * e - jprod(lam, lam, dims) - corr_s
            dk_rhs = sigma * mu - tau * kappa - corr_k
            f = 1.0 - sigma
            bz_eff = -f * hresz - W.apply_WT(W.jsolve_lam(ds_rhs))
            u2 = kkt.solve(-f * hresx, -f * hresy, bz_eff)
            dtau = (-f * hrestau - dk_rhs / tau
                    - (c @ u2[0] + b @ u2[1] + h @ u2[2])) / denom
            dx = u2[0] + dtau * u1[0]
            dy = u2[1] + dtau * u1[1]
            dz = u2[2] + dtau * u1[2]
            dkappa = (dk_rhs - kappa * dtau) / tau
            rho_z = W.apply_W(dz)
            rho_s = W.jsolve_lam(ds_rhs) - rho_z
            ds = W.apply_WT(rho_s)
            return dx, dy, dz, ds, dtau, dkappa, rho_s, rho_z

        def max_alpha(rho_s, rho_z, dtau, dkappa):
            a = min(W.max_step(rho_s), W.max_step(rho_z))
            if dtau < 0:
                a = min(a, tau / -dtau)
            if dkappa < 0:
                a = min(a, kappa / -dkappa)
            return a

        try:
            # predictor
            aff = direction(0.0, 0.0, 0.0)
            alpha_aff = min(1.0, max_alpha(aff[6], aff[7], aff[4], aff[5]))
            sigma = min(1.0, max(0.0, (1.0 - alpha_aff))) ** 3

            # corrector / combined
            corr_s = jprod(aff[6], aff[7], dims)
            corr_k = aff[4] * aff[5]
            dx, dy, dz, ds, dtau, dkappa, rho_s, rho_z = direction(sigma, corr_s, corr_k)
            alpha = max_alpha(rho_s, rho_z, dtau, dkappa)
            if opts.step_frac * alpha < 1e-2:
                # jammed against the boundary (degenerate optimal face);
                # recenter with a pure sigma=1 step, which keeps residuals
                dx, dy, dz, ds, dtau, dkappa, rho_s, rho_z = direction(1.0, 0.0, 0.0)
                alpha = max_alpha(rho_s, rho_z, dtau, dkappa)
        except FloatingPointError as exc:
            return _finish(best, opts, log, it, step, f"direction computation failed: {exc}")
        step = min(1.0, opts.step_frac * alpha)
        if not np.isfinite(step) or step < opts.min_step:
            return _finish(best, opts, log, it, step, f"step length collapsed to {step:.2e}")

        x = x + step * dx
        y = y + step * dy
        z = z + step * dz
        s = s + step * ds
        tau += step * dtau
        kappa += step * dkappa
        if tau <= 0 or kappa <= 0:
            return _finish(best, opts, log, it, step, "tau/kappa left the positive orthant")

    return _finish(best, opts, log, opts.max_iter, step, "iteration cap reached")


def _finish(best, opts, log, it, step, message):
    """Stall or breakdown: fall back to the best recorded iterate when it is
    within ``inacc_factor`` of the requested tolerances (the endgame can
    overshoot past the stopping test at the floating-point floor), otherwise
    report failure with diagnostics."""
    if best is not None:
        x, y, z, s, pcost, gap, relgap, pres, dres, bit = best[1]
        f = opts.inacc_factor
        if pres <= f * opts.feastol and dres <= f * opts.feastol and (
            gap <= f * opts.abstol or relgap <= f * opts.reltol
        ):
            return ConicSolution(
                STATUS_OPTIMAL, x, y, z, s, objective=pcost, gap=gap,
                pres=pres, dres=dres, iterations=it, log=log,
                message=f"accepted best iterate {bit} after: {message}",
            )
    return ConicSolution(
        STATUS_FAILED, iterations=it, log=log,
        message=f"{message} (min step {step!r}); residual history attached",
    )


class SolverError(RuntimeError):
    """Raised by :func:`solve` when the solver cannot certify a solution."""

    def __init__(self, solution: ConicSolution):
        self.solution = solution
        tail = solution.log[-3:]
        hist = "; ".join(
            f"it{r.iteration} gap={r.gap:.2e} pres={r.pres:.2e} dres={r.dres:.2e}"
            for r in tail
        )
        super().__init__(f"conic solve failed ({solution.status}): {solution.message} [{hist}]")


def _row_scales(A, G, h, dims):
    """Equilibration: per-row scales for equalities and orthant rows, one
    uniform scale per SOC/PSD block (cone membership is scale-invariant
    only under block-uniform scaling)."""
    def inv_scale(mat_rows, rhs):
        m = np.max(np.abs(mat_rows), axis=1, initial=0.0)
        m = np.maximum(m, np.abs(rhs))
        return 1.0 / np.sqrt(np.maximum(m, 1e-8))

    dA = inv_scale(A, np.zeros(A.shape[0])) if A.shape[0] else np.ones(0)
    dG = np.ones(dims.size)
    if dims.l:
        dG[: dims.l] = inv_scale(G[: dims.l], h[: dims.l])
    for group in (dims.q_groups, dims.s_groups):
        for d, _, rows in group:
            for rr in rows:
                flat = rr.reshape(-1)
                m = max(np.max(np.abs(G[flat]), initial=0.0),
                        np.max(np.abs(h[flat]), initial=0.0))
                dG[flat] = 1.0 / np.sqrt(max(m, 1e-8))
    return dA, dG


def solve(problem: ConicProblem, opts: SolverOptions = None) -> ConicSolution:
    """Solve a :class:`ConicProblem`; statuses other than numerical failure
    are returned, a numerical failure raises :class:`SolverError`.

    Rows are equilibrated before the solve (the design problems mix
    constraint magnitudes over several decades); duals and slacks are
    mapped back to the original row scaling.
    """
    c, A, b, G, h, dims, psd_cols = problem.compile()
    dA, dG = _row_scales(A, G, h, dims)
    As = A * dA[:, None] if A.shape[0] else A
    bs = b * dA
    Gs = G * dG[:, None]
    hs = h * dG
    sol = solve_conelp(c, As, bs, Gs, hs, dims, opts, psd_cols)
    if sol.status == STATUS_FAILED:
        raise SolverError(sol)
    if sol.y is not None and sol.y.size:
        sol.y = sol.y * dA
    if sol.z is not None:
        sol.z = sol.z * dG
    if sol.s is not None:
        sol.s = sol.s / dG
    if sol.certificate is not None:
        if sol.status == STATUS_INFEASIBLE:
            sol.certificate = np.concatenate([sol.y if sol.y is not None else np.zeros(0),
                                              sol.z])
    if sol.optimal:
        sol.objective = sol.objective + problem.obj_offset
    return sol
