"""Dense complex Hermitian matrix helpers.

Everything downstream (covariance matrices, beamforming Gram matrices,
artificial-noise covariances) is a complex Hermitian matrix.  This module
owns their construction, eigendecomposition, PSD testing, quadratic forms
and the complex-to-real symmetric embedding consumed by the conic solver.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "hermitian",
    "hermitian_eig",
    "real_embed",
    "quadratic_form",
    "is_psd",
]

#: default absolute tolerance on the smallest eigenvalue for PSD tests,
#: aligned with the conic solver's termination accuracy
PSD_TOL = 1e-8

_EIG_RESIDUAL_TOL = 1e-10


class EigenConvergenceError(RuntimeError):
    """Hermitian eigensolver failed to meet the reconstruction contract."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


def hermitian(a) -> np.ndarray:
    """Return ``a`` forced to exact Hermitian symmetry.

    The result is ``(a + a^H) / 2`` with the imaginary part of the diagonal
    zeroed, returned as a read-only complex array.  Solvers downstream rely
    on exact (not approximate) conjugate symmetry.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    h = 0.5 * (a + a.conj().T)
    idx = np.arange(h.shape[0])
    h[idx, idx] = h[idx, idx].real
    h.flags.writeable = False
    return h


def _check_square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def hermitian_eig(a):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, u)`` with eigenvalues ``w`` real and sorted descending and
    ``u`` unitary with eigenvectors in matching column order, so that
    ``a = u @ diag(w) @ u^H``.  The reconstruction residual is verified to
    ``1e-10`` relative; failure raises :class:`EigenConvergenceError`.
    """
    a = _check_square(a)
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigendecomposition did not converge: {exc}") from exc
    w = w[::-1].copy()
    u = u[:, ::-1].copy()
    resid = np.linalg.norm(a - (u * w) @ u.conj().T) / max(1.0, np.linalg.norm(a))
    if resid > _EIG_RESIDUAL_TOL:
        raise EigenConvergenceError(
            f"eigendecomposition residual {resid:.3e} exceeds {_EIG_RESIDUAL_TOL:.1e}",
            residual=resid,
        )
    return w, u


def real_embed(a) -> np.ndarray:
    """Embed a Hermitian ``n x n`` matrix as a real symmetric ``2n x 2n`` one.

    Uses the block form ``[[Re a, -Im a], [Im a, Re a]]``.  The embedding is
    PSD exactly when ``a`` is PSD (each eigenvalue of ``a`` appears twice),
    and its trace is ``2 * trace(a)``.
    """
    a = _check_square(a)
    re, im = a.real, a.imag
    top = np.hstack((re, -im))
    bot = np.hstack((im, re))
    m = np.vstack((top, bot))
    return 0.5 * (m + m.T)


def quadratic_form(a, m) -> float:
    """Evaluate ``a^H m a`` for Hermitian ``m`` and return it as a real scalar.

    The imaginary residue is checked against 1e-12 (scaled by the magnitude
    of the result) before being discarded.
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    m = _check_square(m)
    if m.shape[0] != a.shape[0]:
        raise ValueError(f"dimension mismatch: vector {a.shape[0]}, matrix {m.shape[0]}")
    val = complex(np.vdot(a, m @ a))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ValueError(f"quadratic form has non-negligible imaginary part {val.imag:.3e}")
    return val.real


def is_psd(a, tol: float = PSD_TOL) -> bool:
    """True when the smallest eigenvalue of Hermitian ``a`` is >= -tol."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    a = _check_square(a)
    lam_min = np.linalg.eigvalsh(a)[0]
    return bool(lam_min >= -tol)
