"""Cone arithmetic for the interior-point solver.

The solver works on a composite slack vector laid out as

    [ nonnegative orthant | second-order cones | PSD blocks (svec) ]

PSD blocks use the scaled vectorization svec(M) = (M_ij * sqrt(2) for i<j,
M_ii on the diagonal) over the upper triangle, so that plain dot products
of svec'd matrices equal trace inner products.

Blocks of equal dimension are grouped and processed as batched numpy
operations; per-block Python loops only appear at group granularity.
"""

from __future__ import annotations

import numpy as np

_SQRT2 = np.sqrt(2.0)
_TRI_CACHE = {}


def _tri(d):
    if d not in _TRI_CACHE:
        r, c = np.triu_indices(d)
        _TRI_CACHE[d] = (r, c, r == c)
    return _TRI_CACHE[d]


class ConeDims:
    """Dimensions of the composite cone: orthant size, SOC sizes, PSD sizes."""

    def __init__(self, l=0, q=(), s=()):
        self.l = int(l)
        self.q = [int(d) for d in q]
        self.s = [int(d) for d in s]
        if self.l < 0 or any(d < 1 for d in self.q) or any(d < 1 for d in self.s):
            raise ValueError("invalid cone dimensions")
        ofs = self.l
        q_starts = []
        for d in self.q:
            q_starts.append(ofs)
            ofs += d
        s_starts = []
        for d in self.s:
            s_starts.append(ofs)
            ofs += d * (d + 1) // 2
        self.size = ofs
        self.degree = self.l + len(self.q) + sum(self.s)

        # group equal-dimension blocks for batched arithmetic; `rows` is the
        # (n_blocks, block_len) index matrix into the composite vector
        self.q_groups = []  # (d, block_ids, rows)
        for d in sorted(set(self.q)):
            ids = [i for i, dd in enumerate(self.q) if dd == d]
            rows = np.array([np.arange(q_starts[i], q_starts[i] + d) for i in ids])
            self.q_groups.append((d, ids, rows))
        self.s_groups = []  # (d, block_ids, rows)
        for d in sorted(set(self.s)):
            ids = [i for i, dd in enumerate(self.s) if dd == d]
            m = d * (d + 1) // 2
            rows = np.array([np.arange(s_starts[i], s_starts[i] + m) for i in ids])
            self.s_groups.append((d, ids, rows))


def svec(m):
    """Scaled upper-triangle vectorization of a symmetric matrix."""
    r, c, diag = _tri(m.shape[0])
    v = m[r, c] * _SQRT2
    v[diag] /= _SQRT2
    return v


def smat(v, d):
    """Inverse of :func:`svec`."""
    r, c, diag = _tri(d)
    m = np.zeros((d, d))
    vals = v / _SQRT2
    m[r, c] = vals
    m[c, r] = vals
    m[r[diag], c[diag]] = v[diag]
    return m


def smat_batch(vs, d):
    """smat applied to the rows of ``vs``; returns shape (..., d, d)."""
    r, c, diag = _tri(d)
    m = np.zeros(vs.shape[:-1] + (d, d))
    vals = vs / _SQRT2
    m[..., r, c] = vals
    m[..., c, r] = vals
    m[..., r[diag], c[diag]] = vs[..., diag]
    return m


def svec_batch(ms):
    """svec applied to stacked symmetric matrices (..., d, d)."""
    r, c, diag = _tri(ms.shape[-1])
    v = ms[..., r, c] * _SQRT2
    v[..., diag] /= _SQRT2
    return v


def cone_e(dims: ConeDims):
    """Identity element of the composite cone."""
    e = np.zeros(dims.size)
    e[: dims.l] = 1.0
    for d, _, rows in dims.q_groups:
        e[rows[:, 0]] = 1.0
    for d, _, rows in dims.s_groups:
        e[rows] = svec(np.eye(d))
    return e


def cone_min_eig(u, dims: ConeDims):
    """Smallest 'eigenvalue' of u across all cone blocks (inf if no cones)."""
    vals = [np.inf]
    if dims.l:
        vals.append(np.min(u[: dims.l]))
    for d, _, rows in dims.q_groups:
        blk = u[rows]
        vals.append(np.min(blk[:, 0] - np.linalg.norm(blk[:, 1:], axis=1)))
    for d, _, rows in dims.s_groups:
        vals.append(np.min(np.linalg.eigvalsh(smat_batch(u[rows], d))))
    return min(vals)


def jprod(u, v, dims: ConeDims):
    """Jordan product u o v in the composite algebra."""
    out = np.empty(dims.size)
    if dims.l:
        out[: dims.l] = u[: dims.l] * v[: dims.l]
    for d, _, rows in dims.q_groups:
        ub, vb = u[rows], v[rows]
        out[rows[:, 0]] = np.sum(ub * vb, axis=1)
        out[rows[:, 1:]] = ub[:, :1] * vb[:, 1:] + vb[:, :1] * ub[:, 1:]
    for d, _, rows in dims.s_groups:
        mu, mv = smat_batch(u[rows], d), smat_batch(v[rows], d)
        out[rows] = svec_batch(0.5 * (mu @ mv + mv @ mu))
    return out


def _quad_pos_roots(a, b, c):
    """Smallest positive root of each a t^2 + b t + c (c > 0), inf if none."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    out = np.full(a.shape, np.inf)
    lin = np.abs(a) < 1e-300
    with np.errstate(all="ignore"):
        np.copyto(out, -c / b, where=lin & (b < 0))
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        # a > 0: roots exist (both positive) iff disc >= 0 and b < 0
        up = (~lin) & (a > 0) & (disc >= 0) & (b < 0)
        q = -(b - sq) / 2
        np.copyto(out, np.minimum(q / a, c / q), where=up)
        # a < 0: exactly one positive root
        dn = (~lin) & (a < 0)
        qd = np.where(b != 0, -(b + np.copysign(sq, b)) / 2, sq / 2)
        r1 = np.where(qd != 0, qd / a, np.inf)
        r2 = np.where(qd != 0, c / qd, np.inf)
        r1 = np.where(r1 > 0, r1, np.inf)
        r2 = np.where(r2 > 0, r2, np.inf)
        np.copyto(out, np.minimum(r1, r2), where=dn)
    return out


class NTScaling:
    """Nesterov-Todd scaling point for a strictly feasible pair (s, z).

    Provides the scaled point ``lam = W z = W^{-T} s`` and the linear maps
    W, W^T, W^{-1}, W^{-T} on composite vectors.  For SOC blocks the scaling
    matrix is W = eta * T with T = [[w0, w1'], [w1, I + w1 w1'/(1+w0)]], the
    symmetric square root of the hyperbolic Householder 2 wbar wbar' - J;
    T^{-1} is T with w1 negated.
    """

    def __init__(self, s, z, dims: ConeDims):
        self.dims = dims
        l = dims.l
        if np.any(s[:l] <= 0) or np.any(z[:l] <= 0):
            raise FloatingPointError("orthant point not strictly positive")
        self.w_l = np.sqrt(s[:l] / z[:l])
        self.lam_l = np.sqrt(s[:l] * z[:l])

        self.soc = []  # per q_group: (eta (k,), wbar (k, d))
        for d, _, rows in dims.q_groups:
            sb, zb = s[rows], z[rows]
            a2 = sb[:, 0] ** 2 - np.sum(sb[:, 1:] ** 2, axis=1)
            b2 = zb[:, 0] ** 2 - np.sum(zb[:, 1:] ** 2, axis=1)
            if np.any(a2 <= 0) or np.any(b2 <= 0) or np.any(sb[:, 0] <= 0) or np.any(zb[:, 0] <= 0):
                raise FloatingPointError("SOC point not in interior")
            a, b = np.sqrt(a2), np.sqrt(b2)
            sbar, zbar = sb / a[:, None], zb / b[:, None]
            gamma = np.sqrt((1.0 + np.sum(sbar * zbar, axis=1)) / 2.0)
            wbar = np.empty_like(sb)
            wbar[:, 0] = (sbar[:, 0] + zbar[:, 0]) / (2 * gamma)
            wbar[:, 1:] = (sbar[:, 1:] - zbar[:, 1:]) / (2 * gamma[:, None])
            eta = np.sqrt(a / b)
            self.soc.append((eta, wbar))

        self.psd = []  # per s_group: (R (k,d,d), Rinv (k,d,d), sig (k,d))
        for d, _, rows in dims.s_groups:
            S, Z = smat_batch(s[rows], d), smat_batch(z[rows], d)
            Ls = self._factor(S)
            Lz = self._factor(Z)
            u, sig, vt = np.linalg.svd(np.swapaxes(Lz, -1, -2) @ Ls)
            if np.min(sig) <= 0:
                raise FloatingPointError("PSD point not in interior")
            sqr = np.sqrt(sig)
            r = Ls @ (np.swapaxes(vt, -1, -2) / sqr[:, None, :])
            rinv = (u / sqr[:, None, :]).swapaxes(-1, -2) @ np.swapaxes(Lz, -1, -2)
            self.psd.append((r, rinv, sig))

        lam = np.empty(dims.size)
        lam[:l] = self.lam_l
        for (d, _, rows), (eta, wbar) in zip(dims.q_groups, self.soc):
            lam[rows] = eta[:, None] * self._t_apply(wbar, z[rows])
        for (d, _, rows), (r, rinv, sig) in zip(dims.s_groups, self.psd):
            diags = np.zeros((rows.shape[0], d, d))
            idx = np.arange(d)
            diags[:, idx, idx] = sig
            lam[rows] = svec_batch(diags)
        self._lam = lam

    @staticmethod
    def _factor(m):
        """Batched F with m_i = F_i F_i^T, by Cholesky when possible."""
        try:
            return np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(m)
            if np.any(w[..., -1] <= 0):
                raise FloatingPointError("PSD point not in interior") from None
            w = np.maximum(w, 1e-14 * w[..., -1:])
            return v * np.sqrt(w)[..., None, :]

    @staticmethod
    def _t_apply(wbar, v):
        """Batched T v; wbar and v are (k, d)."""
        w0 = wbar[:, :1]
        w1 = wbar[:, 1:]
        dd = np.sum(w1 * v[:, 1:], axis=1, keepdims=True)
        out = np.empty_like(v)
        out[:, :1] = w0 * v[:, :1] + dd
        out[:, 1:] = v[:, 1:] + (v[:, :1] + dd / (1.0 + w0)) * w1
        return out

    @classmethod
    def _tinv_apply(cls, wbar, v):
        neg = wbar.copy()
        neg[:, 1:] = -neg[:, 1:]
        return cls._t_apply(neg, v)

    @property
    def lam(self):
        return self._lam

    def _map(self, v, orth, soc_fn, psd_fn):
        dims = self.dims
        out = np.empty(dims.size)
        out[: dims.l] = orth(v[: dims.l])
        for (d, _, rows), (eta, wbar) in zip(dims.q_groups, self.soc):
            out[rows] = soc_fn(eta[:, None], wbar, v[rows])
        for (d, _, rows), (r, rinv, sig) in zip(dims.s_groups, self.psd):
            out[rows] = svec_batch(psd_fn(r, rinv, smat_batch(v[rows], d)))
        return out

    def apply_W(self, v):
        return self._map(
            v,
            lambda u: self.w_l * u,
            lambda eta, wbar, u: eta * self._t_apply(wbar, u),
            lambda r, rinv, m: np.swapaxes(r, -1, -2) @ m @ r,
        )

    def apply_WT(self, v):
        return self._map(
            v,
            lambda u: self.w_l * u,
            lambda eta, wbar, u: eta * self._t_apply(wbar, u),
            lambda r, rinv, m: r @ m @ np.swapaxes(r, -1, -2),
        )

    def apply_Winv(self, v):
        return self._map(
            v,
            lambda u: u / self.w_l,
            lambda eta, wbar, u: self._tinv_apply(wbar, u) / eta,
            lambda r, rinv, m: np.swapaxes(rinv, -1, -2) @ m @ rinv,
        )

    def apply_WinvT(self, v):
        return self._map(
            v,
            lambda u: u / self.w_l,
            lambda eta, wbar, u: self._tinv_apply(wbar, u) / eta,
            lambda r, rinv, m: rinv @ m @ np.swapaxes(rinv, -1, -2),
        )

    def scale_G(self, G, psd_cols=None):
        """Return W^{-T} G, applied blockwise to the rows of G.

        ``psd_cols`` optionally lists, per PSD block (in declaration order),
        the column indices with any nonzero coefficient; only those columns
        are transformed.
        """
        dims = self.dims
        n = G.shape[1]
        Gs = np.zeros_like(G)
        if dims.l:
            Gs[: dims.l] = G[: dims.l] / self.w_l[:, None]
        for (d, _, rows), (eta, wbar) in zip(dims.q_groups, self.soc):
            blk = G[rows.reshape(-1)].reshape(rows.shape[0], d, n)
            w0 = wbar[:, :1, None]
            w1 = -wbar[:, 1:, None]  # T^{-1} negates the w1 part
            dd = np.sum(w1 * blk[:, 1:, :], axis=1, keepdims=True)
            out = np.empty_like(blk)
            out[:, :1, :] = w0 * blk[:, :1, :] + dd
            out[:, 1:, :] = blk[:, 1:, :] + (blk[:, :1, :] + dd / (1.0 + w0)) * w1
            Gs[rows.reshape(-1)] = (out / eta[:, None, None]).reshape(-1, n)
        for (d, ids, rows), (r, rinv, sig) in zip(dims.s_groups, self.psd):
            for k, blk_id in enumerate(ids):
                cols = psd_cols[blk_id] if psd_cols is not None else np.arange(n)
                if len(cols) == 0:
                    continue
                t = smat_batch(G[rows[k]][:, cols].T, d)
                scaled = np.matmul(np.matmul(rinv[k], t), rinv[k].T)
                Gs[np.ix_(rows[k], cols)] = svec_batch(scaled).T
        return Gs

    def jsolve_lam(self, rvec):
        """Solve lam o x = r in the scaled frame (lam is the NT point)."""
        dims = self.dims
        out = np.empty(dims.size)
        out[: dims.l] = rvec[: dims.l] / self.lam_l
        for (d, _, rows), (eta, wbar) in zip(dims.q_groups, self.soc):
            lb = self._lam[rows]
            rb = rvec[rows]
            l0 = lb[:, :1]
            l1 = lb[:, 1:]
            det = (l0[:, 0] ** 2 - np.sum(l1 * l1, axis=1))[:, None]
            if np.any(det <= 0) or np.any(l0 <= 0):
                raise FloatingPointError("SOC scaled point not in interior")
            x0 = (l0 * rb[:, :1] - np.sum(l1 * rb[:, 1:], axis=1, keepdims=True)) / det
            out[rows[:, 0]] = x0[:, 0]
            out[rows[:, 1:]] = (rb[:, 1:] - x0 * l1) / l0
        for (d, _, rows), (r, rinv, sig) in zip(dims.s_groups, self.psd):
            m = smat_batch(rvec[rows], d)
            denom = 0.5 * (sig[:, :, None] + sig[:, None, :])
            out[rows] = svec_batch(m / denom)
        return out

    def max_step(self, dvec):
        """Largest alpha with lam + alpha * d in the cone (np.inf if all)."""
        dims = self.dims
        alphas = [np.inf]
        if dims.l:
            neg = dvec[: dims.l] < 0
            if np.any(neg):
                alphas.append(np.min(self.lam_l[neg] / -dvec[: dims.l][neg]))
        for (d, _, rows), (eta, wbar) in zip(dims.q_groups, self.soc):
            lb = self._lam[rows]
            db = dvec[rows]
            a = db[:, 0] ** 2 - np.sum(db[:, 1:] ** 2, axis=1)
            b = 2.0 * (lb[:, 0] * db[:, 0] - np.sum(lb[:, 1:] * db[:, 1:], axis=1))
            c = lb[:, 0] ** 2 - np.sum(lb[:, 1:] ** 2, axis=1)
            alphas.append(np.min(_quad_pos_roots(a, b, c)))
        for (d, _, rows), (r, rinv, sig) in zip(dims.s_groups, self.psd):
            m = smat_batch(dvec[rows], d)
            isq = 1.0 / np.sqrt(sig)
            scaled = isq[:, :, None] * m * isq[:, None, :]
            emin = np.min(np.linalg.eigvalsh(scaled))
            if emin < 0:
                alphas.append(-1.0 / emin)
        return min(alphas)
