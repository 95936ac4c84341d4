"""Modeling layer for small dense conic programs.

A :class:`ConicProblem` owns a flat vector of real scalar unknowns.  Complex
Hermitian PSD matrix variables are registered through
:meth:`ConicProblem.add_hermitian_psd`, which allocates one real unknown per
Hermitian degree of freedom and constrains the real symmetric embedding of
the matrix to the PSD cone.  All constraint coefficients are dense rows over
the scalar vector, which keeps the API close to how the design problems are
written on paper.
"""

from __future__ import annotations

import numpy as np

from .. import linalg
from .cones import ConeDims, smat, svec

_SQRT2 = np.sqrt(2.0)


class HermitianVar:
    """Handle for an N x N complex Hermitian PSD matrix variable.

    Degrees of freedom are laid out as ``[diag(0..n-1), re(i,j), im(i,j)]``
    with the off-diagonal pairs in row-major (i < j) order.
    """

    def __init__(self, dim, offset, name):
        self.dim = dim
        self.offset = offset
        self.name = name
        n = dim
        self.n_dof = n * n
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        self._pairs = pairs
        self._diag_idx = np.arange(offset, offset + n)
        self._re_idx = np.arange(offset + n, offset + n + len(pairs))
        self._im_idx = np.arange(offset + n + len(pairs), offset + n * n)

    def basis_matrix(self, k):
        """Complex Hermitian basis matrix of local dof ``k``."""
        n = self.dim
        b = np.zeros((n, n), dtype=complex)
        if k < n:
            b[k, k] = 1.0
        elif k < n + len(self._pairs):
            i, j = self._pairs[k - n]
            b[i, j] = 1.0
            b[j, i] = 1.0
        else:
            i, j = self._pairs[k - n - len(self._pairs)]
            b[i, j] = 1.0j
            b[j, i] = -1.0j
        return b

    def lincomb_row(self, cmat, n_vars):
        """Dense row r with r @ x = Re(trace(cmat @ W)) for Hermitian cmat."""
        cmat = np.asarray(cmat, dtype=complex)
        row = np.zeros(n_vars)
        row[self._diag_idx] = cmat.diagonal().real
        if self._pairs:
            ii = [p[0] for p in self._pairs]
            jj = [p[1] for p in self._pairs]
            row[self._re_idx] = 2.0 * cmat[ii, jj].real
            row[self._im_idx] = 2.0 * cmat[ii, jj].imag
        return row

    def quad_form_row(self, a, n_vars):
        """Row encoding the real quadratic form a^H W a."""
        a = np.asarray(a, dtype=complex).reshape(-1)
        return self.lincomb_row(np.outer(a, a.conj()), n_vars)

    def trace_row(self, n_vars):
        row = np.zeros(n_vars)
        row[self._diag_idx] = 1.0
        return row

    def frob_rows(self, n_vars, weight=1.0):
        """Rows whose euclidean norm equals ``weight * ||W||_F``.

        Entries: diagonal dofs with weight 1, off-diagonal re/im dofs with
        weight sqrt(2), all times ``weight``.  Returns an (n^2, n_vars) array
        ordered like the dof layout.
        """
        rows = np.zeros((self.n_dof, n_vars))
        n = self.dim
        rows[np.arange(n), self._diag_idx] = weight
        k = len(self._pairs)
        rows[np.arange(n, n + k), self._re_idx] = _SQRT2 * weight
        rows[np.arange(n + k, n + 2 * k), self._im_idx] = _SQRT2 * weight
        return rows

    def frob_offsets(self, cmat, weight=1.0):
        """Constant part matching :meth:`frob_rows` for W - cmat terms."""
        cmat = np.asarray(cmat, dtype=complex)
        n = self.dim
        out = np.zeros(self.n_dof)
        out[:n] = -weight * cmat.diagonal().real
        if self._pairs:
            ii = [p[0] for p in self._pairs]
            jj = [p[1] for p in self._pairs]
            k = len(self._pairs)
            out[n : n + k] = -_SQRT2 * weight * cmat[ii, jj].real
            out[n + k :] = -_SQRT2 * weight * cmat[ii, jj].imag
        return out

    def value(self, x):
        """Reconstruct the complex Hermitian matrix from a solution vector."""
        n = self.dim
        w = np.zeros((n, n), dtype=complex)
        w[np.arange(n), np.arange(n)] = x[self._diag_idx]
        for k, (i, j) in enumerate(self._pairs):
            v = x[self._re_idx[k]] + 1j * x[self._im_idx[k]]
            w[i, j] = v
            w[j, i] = v.conjugate()
        return w


class ConicProblem:
    """Dense conic program: linear objective, linear eq/ineq, SOC, PSD."""

    def __init__(self):
        self.n_vars = 0
        self._sealed = False
        self.hermitian_vars = []
        self.psd_dims = []  # embedded (real symmetric) block dimensions
        self._psd_entries = []  # (var,) producing G rows lazily
        self.objective = None
        self.obj_offset = 0.0
        self.eqs = []  # (row, rhs, name)
        self.ineqs = []  # (row, rhs, name): row @ x <= rhs
        self.socs = []  # (head_row, head_off, rows, offs, name)

    # -- variables ---------------------------------------------------------

    def _alloc(self, k):
        if self._sealed:
            raise RuntimeError("cannot add variables after constraints")
        idx = np.arange(self.n_vars, self.n_vars + k)
        self.n_vars += k
        return idx

    def add_scalars(self, k, name=None):
        return self._alloc(k)

    def add_hermitian_psd(self, dim, name=None):
        if dim < 1:
            raise ValueError("PSD block dimension must be >= 1")
        var = HermitianVar(dim, self.n_vars, name or f"H{len(self.hermitian_vars)}")
        self._alloc(var.n_dof)
        self.hermitian_vars.append(var)
        self.psd_dims.append(2 * dim)
        self._psd_entries.append(var)
        return var

    # -- objective / constraints -------------------------------------------

    def _row(self, row):
        self._sealed = True
        row = np.asarray(row, dtype=float)
        if row.shape != (self.n_vars,):
            raise ValueError(f"coefficient row has shape {row.shape}, expected ({self.n_vars},)")
        return row

    def minimize(self, row, offset=0.0):
        self.objective = self._row(row)
        self.obj_offset = float(offset)

    def add_eq(self, row, rhs, name=None):
        self.eqs.append((self._row(row), float(rhs), name or f"eq{len(self.eqs)}"))

    def add_ineq(self, row, rhs, name=None):
        """row @ x <= rhs"""
        self.ineqs.append((self._row(row), float(rhs), name or f"ineq{len(self.ineqs)}"))

    def add_soc(self, head_row, head_off, rows, offs, name=None):
        """|| rows @ x + offs || <= head_row @ x + head_off"""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        offs = np.atleast_1d(np.asarray(offs, dtype=float))
        if rows.shape[0] != offs.shape[0]:
            raise ValueError("SOC rows/offsets length mismatch")
        self.socs.append(
            (self._row(head_row), float(head_off), rows, offs, name or f"soc{len(self.socs)}")
        )

    def add_rotated_soc(self, u_row, u_off, v_row, v_off, rows, offs, name=None):
        """|| rows @ x + offs ||^2 <= 2 (u_row @ x + u_off)(v_row @ x + v_off)"""
        u_row, v_row = self._row(u_row), self._row(v_row)
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        offs = np.atleast_1d(np.asarray(offs, dtype=float))
        isq = 1.0 / _SQRT2
        head = isq * (u_row + v_row)
        head_off = isq * (u_off + v_off)
        all_rows = np.vstack([isq * (u_row - v_row)[None, :], rows])
        all_offs = np.concatenate([[isq * (u_off - v_off)], offs])
        self.add_soc(head, head_off, all_rows, all_offs, name=name)

    # -- compilation ---------------------------------------------------------

    def compile(self):
        """Lower to (c, A, b, G, h, dims) with s = h - G x in the cone."""
        if self.objective is None:
            raise ValueError("objective not set")
        if self.n_vars == 0:
            raise ValueError("problem has no variables")
        n = self.n_vars
        c = self.objective
        if self.eqs:
            A = np.vstack([r for r, _, _ in self.eqs])
            b = np.array([v for _, v, _ in self.eqs])
        else:
            A = np.zeros((0, n))
            b = np.zeros(0)

        g_blocks, h_blocks = [], []
        # orthant: row @ x <= rhs  ->  s = rhs - row @ x >= 0
        l = len(self.ineqs)
        if l:
            g_blocks.append(np.vstack([r for r, _, _ in self.ineqs]))
            h_blocks.append(np.array([v for _, v, _ in self.ineqs]))
        q = []
        for head, hoff, rows, offs, _ in self.socs:
            q.append(1 + rows.shape[0])
            g_blocks.append(-head[None, :])
            h_blocks.append(np.array([hoff]))
            g_blocks.append(-rows)
            h_blocks.append(offs)
        s_dims = []
        psd_cols = []
        for var in self._psd_entries:
            d = 2 * var.dim
            m = d * (d + 1) // 2
            e_mat = np.zeros((m, n))
            for k in range(var.n_dof):
                e_mat[:, var.offset + k] = svec(linalg.real_embed(var.basis_matrix(k)))
            g_blocks.append(-e_mat)
            h_blocks.append(np.zeros(m))
            s_dims.append(d)
            psd_cols.append(np.arange(var.offset, var.offset + var.n_dof))
        if g_blocks:
            G = np.vstack(g_blocks)
            h = np.concatenate(h_blocks)
        else:
            G = np.zeros((0, n))
            h = np.zeros(0)
        dims = ConeDims(l=l, q=q, s=s_dims)
        return c, A, b, G, h, dims, psd_cols

    # -- diagnostics ---------------------------------------------------------

    def dump(self, path):
        """Write the compiled problem as plain text for offline cross-checks.

        Format: one 'name rows cols' header per matrix followed by dense
        rows of space-separated values; vectors use cols=1.
        """
        c, A, b, G, h, dims, _ = self.compile()

        def emit(f, name, arr):
            arr = np.atleast_2d(arr.astype(float))
            if arr.shape[0] == 1 and name in ("c", "b", "h"):
                arr = arr.T
            f.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                f.write(" ".join(f"{v:.17g}" for v in row) + "\n")

        with open(path, "w") as f:
            f.write(f"dims l {dims.l} q {' '.join(map(str, dims.q))} "
                    f"s {' '.join(map(str, dims.s))}\n")
            emit(f, "c", c)
            emit(f, "A", A)
            emit(f, "b", b)
            emit(f, "G", G)
            emit(f, "h", h)


def check_certificate(problem: ConicProblem, solution, tol=1e-7):
    """Recompute feasibility residuals of ``solution`` against ``problem``.

    Returns a :class:`CertificateReport` listing one residual per constraint
    plus the relative duality gap; ``passed`` is True when every residual is
    within ``tol``.
    """
    x = solution.x
    rows = []
    for r, v, name in problem.eqs:
        rows.append((name, "eq", abs(r @ x - v)))
    for r, v, name in problem.ineqs:
        rows.append((name, "ineq", max(0.0, r @ x - v)))
    for head, hoff, mat, offs, name in problem.socs:
        margin = (head @ x + hoff) - np.linalg.norm(mat @ x + offs)
        rows.append((name, "soc", max(0.0, -margin)))
    for var in problem._psd_entries:
        lam_min = np.linalg.eigvalsh(var.value(x))[0]
        rows.append((var.name, "psd", max(0.0, -lam_min)))
    gap = abs(solution.gap) / max(1.0, abs(solution.objective))
    return CertificateReport(rows, gap, tol)


class CertificateReport:
    def __init__(self, rows, rel_gap, tol):
        self.rows = rows  # (name, kind, violation)
        self.rel_gap = rel_gap
        self.tol = tol
        self.passed = all(v <= tol for _, _, v in rows) and rel_gap <= max(tol, 1e-6)

    @property
    def max_violation(self):
        return max((v for _, _, v in self.rows), default=0.0)

    def failing(self):
        return [(n, k, v) for n, k, v in self.rows if v > self.tol]

    def __repr__(self):
        state = "pass" if self.passed else "FAIL"
        return (f"CertificateReport({state}, max_violation={self.max_violation:.3e}, "
                f"rel_gap={self.rel_gap:.3e})")
