"""Shared test fixtures and independent oracles.

Every oracle here is deliberately solver-free: exhaustive grids, vertex
enumeration, or closed forms, so they can certify the conic/design paths
without sharing code with them.
"""

import itertools

import numpy as np

from securebeam.conic.cones import ConeDims, svec
from securebeam.scenario import Scenario, TargetModel, UlaGeometry, sample_channel, steering_vector


# ---------------------------------------------------------------------------
# conic: constructed-optimum instances


def make_conic_instance(rng, l=0, q=(), s=(), p=2):
    """Random cone LP with a known optimum, built from a complementary
    primal/dual pair: pick (s*, z*) complementary in the cone, x*, y* free,
    then read off (b, h, c) so KKT holds exactly at the construction."""
    dims = ConeDims(l=l, q=q, s=s)
    m = dims.size
    n = max(3, m // 2)
    G = rng.standard_normal((m, n))
    A = rng.standard_normal((p, n)) if p else np.zeros((0, n))
    sstar = np.zeros(m)
    zstar = np.zeros(m)
    if l:
        mask = rng.random(l) < 0.5
        sstar[:l][mask] = rng.random(mask.sum()) + 0.5
        zstar[:l][~mask] = rng.random((~mask).sum()) + 0.5
    for d, _, rows in dims.q_groups:
        for rr in rows:
            kind = rng.integers(0, 3)
            v = rng.standard_normal(d)
            if kind == 0:  # s interior, z = 0
                v[0] = np.linalg.norm(v[1:]) + 1.0
                sstar[rr] = v
            elif kind == 1:  # z interior, s = 0
                v[0] = np.linalg.norm(v[1:]) + 1.0
                zstar[rr] = v
            else:  # complementary boundary pair
                v[0] = np.linalg.norm(v[1:])
                sstar[rr] = v
                w = v.copy()
                w[1:] = -w[1:]
                zstar[rr] = (rng.random() + 0.5) * w
    for d, _, rows in dims.s_groups:
        for rr in rows:
            qmat, _ = np.linalg.qr(rng.standard_normal((d, d)))
            k = rng.integers(0, d + 1)
            es = np.zeros(d)
            ez = np.zeros(d)
            es[:k] = rng.random(k) + 0.5
            ez[k:] = rng.random(d - k) + 0.5
            sstar[rr] = svec((qmat * es) @ qmat.T)
            zstar[rr] = svec((qmat * ez) @ qmat.T)
    xstar = rng.standard_normal(n)
    ystar = rng.standard_normal(p)
    c = -(A.T @ ystar + G.T @ zstar)
    return c, A, A @ xstar, G, G @ xstar + sstar, dims, float(c @ xstar)


def conic_instance_suite(seed=42, count=50):
    rng = np.random.default_rng(seed)
    shapes = [
        dict(l=8, q=(), s=()),
        dict(l=3, q=(3, 5), s=()),
        dict(l=0, q=(), s=(3, 4)),
        dict(l=4, q=(4,), s=(3,)),
        dict(l=2, q=(3,), s=(5,), p=3),
    ]
    return [make_conic_instance(rng, **shapes[i % len(shapes)]) for i in range(count)]


def vertex_lp_solve(c, a_eq, b_eq):
    """min c.x, a_eq x = b_eq, x >= 0 by enumerating basic feasible points."""
    p, n = a_eq.shape
    best = (np.inf, None)
    for cols in itertools.combinations(range(n), p):
        sub = a_eq[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.zeros(n)
        x[list(cols)] = np.linalg.solve(sub, b_eq)
        if np.all(x >= -1e-9):
            val = float(c @ x)
            if val < best[0]:
                best = (val, x)
    return best


# ---------------------------------------------------------------------------
# beampattern: Bloch-sphere brute force for N=2


def bloch_pattern_oracle(grid_angles, gains, power_budget, step=0.01):
    """Brute-force min of the pattern LS objective over N=2 covariances.

    Parameterizes R = (P0/2)(I + x sx + y sy + z sz) on the Bloch ball and
    minimizes eta in closed form per grid point (exact inner minimum), which
    dominates any finite eta grid.
    """
    phase = np.pi * np.sin(grid_angles)  # a(theta) = (1, e^{j phase})
    ax = np.cos(phase)
    ay = np.sin(phase)
    vals = np.arange(-1.0, 1.0 + step / 2, step)
    best = np.inf
    gsq = float(np.sum(np.asarray(gains) ** 2))
    for x in vals:
        ymax = np.sqrt(max(0.0, 1.0 - x * x))
        ys = vals[np.abs(vals) <= ymax + 1e-12]
        if ys.size == 0:
            continue
        # z never enters a^H R a, so the PSD ball constraint is loosest at z=0
        g = power_budget * (1.0 + x * ax[None, :] + ys[:, None] * ay[None, :])
        eta = np.clip((g @ gains) / gsq, 0.0, None)
        resid = np.sum((eta[:, None] * gains[None, :] - g) ** 2, axis=1)
        best = min(best, float(np.min(resid)))
    return best


# ---------------------------------------------------------------------------
# secure designs: exhaustive rank-1 oracles for N=2, K=1


def _direction_stats(vectors, n_grid):
    """Per-direction |v^H dir|^2 stats for dir = (cos f, sin f e^{j psi})."""
    f = np.linspace(0.0, np.pi / 2, n_grid)
    psi = np.linspace(0.0, 2 * np.pi, n_grid, endpoint=False)
    fa, pa = np.meshgrid(f, psi, indexing="ij")
    d1 = np.cos(fa).ravel()
    d2 = (np.sin(fa) * np.exp(1j * pa)).ravel()
    return [np.abs(v[0] * d1 + v[1] * d2) ** 2 for v in vectors]


def precise_rank1_oracle(scn: Scenario, gamma_b, n_grid=100):
    """Exhaustive min intercept SINR over rank-1 beam + rank-1 noise.

    w = sqrt(p) (cos f, sin f e^{j psi}), R_N = (P0 - p) u u^H with u from
    the same grid; p on an n_grid linear grid.  Inner minimizations are
    reordered exactly (suffix minima over the beam grid), not approximated.
    """
    a0 = steering_vector(scn.geometry, scn.target.theta0)
    h = scn.channel[0]
    g2 = scn.target.gain_sq
    s2 = scn.noise_power
    p0 = scn.power_budget
    a_w, b_w = _direction_stats([np.conj(a0), h], n_grid)
    c_u, d_u = a_w, b_w
    order = np.argsort(b_w)
    b_sorted = b_w[order]
    a_suffix = np.minimum.accumulate(a_w[order][::-1])[::-1]
    best = np.inf
    for p in np.linspace(p0 / n_grid, p0, n_grid):
        q = p0 - p
        need = gamma_b * (q * d_u + s2) / p
        pos = np.searchsorted(b_sorted, need, side="left")
        ok = pos < len(b_sorted)
        if not np.any(ok):
            continue
        amin = np.where(ok, a_suffix[np.minimum(pos, len(b_sorted) - 1)], np.inf)
        sinr = g2 * p * amin / (g2 * q * c_u + s2)
        best = min(best, float(np.min(sinr)))
    return best


def _pareto_filter(maximize_cols, chunk=256):
    """Indices of non-dominated rows (all columns to be maximized)."""
    pts = np.column_stack(maximize_cols)
    n = pts.shape[0]
    keep = np.ones(n, dtype=bool)
    for start in range(0, n, chunk):
        blk = pts[start : start + chunk]
        ge = np.all(pts[None, :, :] >= blk[:, None, :], axis=2)
        gt = np.any(pts[None, :, :] > blk[:, None, :], axis=2)
        keep[start : start + chunk] &= ~np.any(ge & gt, axis=1)
    return np.where(keep)[0]


def uncertain_rank1_oracle(scn: Scenario, gamma_b, gamma_s, omega_angles, n_grid=100):
    """Exhaustive min intercept SINR at theta0 with sidelobe-gap constraints.

    Same rank-1 parameterization as :func:`precise_rank1_oracle` plus the
    two gap constraints tying the beam and noise directions together;
    Pareto filtering of both direction grids keeps the search exact while
    shrinking the cross product.
    """
    a0 = steering_vector(scn.geometry, scn.target.theta0)
    h = scn.channel[0]
    aoms = [steering_vector(scn.geometry, th) for th in omega_angles]
    g2 = scn.target.gain_sq
    s2 = scn.noise_power
    p0 = scn.power_budget
    stats = _direction_stats([np.conj(a0), h] + [np.conj(a) for a in aoms], n_grid)
    a0_d, b_d = stats[0], stats[1]
    gaps_d = [a0_d - s for s in stats[2:]]

    # beam side: minimize a0 subject to lower bounds on (b, gap_1, gap_2)
    wkeep = _pareto_filter([-a0_d, b_d] + gaps_d)
    # noise side: maximize a0 subject to an upper bound on b and lower
    # bounds on the gap terms
    ukeep = _pareto_filter([a0_d, -b_d] + gaps_d)

    a0_w, b_w = a0_d[wkeep], b_d[wkeep]
    gw = [g[wkeep] for g in gaps_d]
    a0_u, b_u = a0_d[ukeep], b_d[ukeep]
    gu = [g[ukeep] for g in gaps_d]

    best = np.inf
    for p in np.linspace(p0 / n_grid, p0, n_grid):
        q = p0 - p
        for iw in range(len(a0_w)):
            ok = b_w[iw] * p >= gamma_b * (q * b_u + s2)
            for k in range(len(gaps_d)):
                ok &= p * gw[k][iw] + q * gu[k] >= gamma_s
            if not np.any(ok):
                continue
            denom = g2 * q * a0_u[ok] + s2
            val = g2 * p * a0_w[iw] / np.max(denom)
            if val < best:
                best = float(val)
    return best


# ---------------------------------------------------------------------------
# scenario builders


def small_scenario(n=8, k=2, seed=1, noise=0.01, p0=1.0, theta0_deg=0.0, delta_deg=0.0):
    geom = UlaGeometry(n, 0.5)
    channel = sample_channel(k, n, seed=seed)
    target = TargetModel(np.deg2rad(theta0_deg), np.deg2rad(delta_deg), 1.0)
    return Scenario(geom, channel, noise, target, p0, 30)


def random_psd(rng, n, rank=None):
    r = rank or n
    a = (rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))) / np.sqrt(2)
    return a @ a.conj().T
