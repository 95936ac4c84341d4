"""System model: array geometry, channels, SINR metrics, waveform synthesis.

Conventions
-----------
* Angles are radians internally; degrees appear only at config/CSV surfaces.
* Powers are linear watts (a "30 dBm" budget enters as 1.0 W).
* The user SINR follows the transpose/conjugate convention
  ``tr(h_i^T W h_i^*)``, i.e. quadratic forms are evaluated at ``conj(h_i)``.
  Keeping that in one place (:func:`channel_quad`) avoids conjugation bugs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array; spacing is in wavelengths."""

    n_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.n_antennas < 2:
            raise ValueError("need at least 2 antennas")
        if self.spacing <= 0:
            raise ValueError("antenna spacing must be positive")


@dataclass(frozen=True)
class TargetModel:
    """Target / eavesdropper: nominal angle, angular uncertainty, path gain."""

    theta0: float
    delta_theta: float = 0.0
    gain: complex = 1.0 + 0.0j

    def __post_init__(self):
        half = np.pi / 2
        if not (-half < self.theta0 < half):
            raise ValueError("theta0 must lie strictly inside (-pi/2, pi/2)")
        if self.delta_theta < 0:
            raise ValueError("delta_theta must be nonnegative")
        if not (-half <= self.theta0 - self.delta_theta
                and self.theta0 + self.delta_theta <= half):
            raise ValueError("uncertainty interval leaves [-pi/2, pi/2]")
        if abs(self.gain) <= 0:
            raise ValueError("target gain must be nonzero")

    @property
    def gain_sq(self):
        return abs(self.gain) ** 2


@dataclass(frozen=True)
class Scenario:
    geometry: UlaGeometry
    channel: np.ndarray  # (K, N) complex
    noise_power: float  # sigma^2, watts
    target: TargetModel
    power_budget: float  # P0, watts
    frame_length: int = 30

    def __post_init__(self):
        h = np.asarray(self.channel, dtype=complex)
        if h.ndim != 2 or h.shape[1] != self.geometry.n_antennas:
            raise ValueError(f"channel must be (K, {self.geometry.n_antennas}), got {h.shape}")
        if h.shape[0] < 1:
            raise ValueError("need at least one user")
        object.__setattr__(self, "channel", h)
        if self.noise_power <= 0:
            raise ValueError("noise power must be positive")
        if self.power_budget <= 0:
            raise ValueError("power budget must be positive")
        if self.frame_length < 1:
            raise ValueError("frame length must be >= 1")

    @property
    def n_users(self):
        return self.channel.shape[0]

    @property
    def n_antennas(self):
        return self.geometry.n_antennas


@dataclass(frozen=True)
class AngularGrid:
    """Strictly increasing angles (radians) inside [-pi/2, pi/2]."""

    angles: np.ndarray
    resolution: float = field(default=0.0)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("grid needs at least one angle")
        if np.any(np.diff(a) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        if a[0] < -np.pi / 2 - 1e-12 or a[-1] > np.pi / 2 + 1e-12:
            raise ValueError("grid must stay inside [-pi/2, pi/2]")
        object.__setattr__(self, "angles", a)
        if self.resolution == 0.0 and a.size > 1:
            object.__setattr__(self, "resolution", float(np.min(np.diff(a))))

    @classmethod
    def regular(cls, resolution_deg=1.0, lo_deg=-90.0, hi_deg=90.0):
        n = int(round((hi_deg - lo_deg) / resolution_deg)) + 1
        angles = np.deg2rad(np.linspace(lo_deg, hi_deg, n))
        return cls(angles, np.deg2rad(resolution_deg))

    def __len__(self):
        return self.angles.size


def steering_vector(geom: UlaGeometry, theta: float) -> np.ndarray:
    """ULA steering vector a(theta), element n = exp(j 2 pi n spacing sin(theta))."""
    if not (-np.pi / 2 - 1e-12 <= theta <= np.pi / 2 + 1e-12):
        raise ValueError("theta outside [-pi/2, pi/2]")
    n = np.arange(geom.n_antennas)
    return np.exp(2j * np.pi * geom.spacing * np.sin(theta) * n)


def steering_matrix(geom: UlaGeometry, angles) -> np.ndarray:
    """Rows a(theta_m)^H stacked for a vector of angles; shape (M, N)."""
    angles = np.asarray(angles, dtype=float)
    n = np.arange(geom.n_antennas)
    return np.exp(2j * np.pi * geom.spacing * np.outer(np.sin(angles), n))


def sample_channel(k: int, n: int, seed) -> np.ndarray:
    """(K, N) i.i.d. circularly-symmetric complex Gaussian, unit variance."""
    if k < 1 or n < 1:
        raise ValueError("channel dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2.0)


def channel_quad(h_row, m) -> float:
    """tr(h^T M h^*) for one channel row: the paper-side quadratic form."""
    return linalg.quadratic_form(np.conj(h_row), m)


def transmit_covariance(w_list, r_n) -> np.ndarray:
    """Total transmit covariance sum_i W_i + R_N (validated PSD inputs)."""
    r_n = np.asarray(r_n, dtype=complex)
    n = r_n.shape[0]
    total = np.array(r_n)
    for i, w in enumerate(w_list):
        w = np.asarray(w, dtype=complex)
        if w.shape != (n, n):
            raise ValueError(f"W_{i} has shape {w.shape}, expected ({n}, {n})")
        if not linalg.is_psd(w):
            raise ValueError(f"W_{i} is not PSD within tolerance")
        total = total + w
    if not linalg.is_psd(r_n):
        raise ValueError("R_N is not PSD within tolerance")
    return linalg.hermitian(total)


def sinr_user(scn: Scenario, i: int, w_list, r_n) -> float:
    """Downlink SINR of user i (0-based)."""
    if not 0 <= i < scn.n_users:
        raise IndexError(f"user index {i} out of range for K={scn.n_users}")
    h = scn.channel[i]
    signal = channel_quad(h, w_list[i])
    interf = sum(channel_quad(h, w_list[k]) for k in range(scn.n_users) if k != i)
    an = channel_quad(h, r_n)
    return signal / (interf + an + scn.noise_power)


def sinr_eve(scn: Scenario, theta: float, w_list, r_n) -> float:
    """Intercept SINR at angle theta seen by the target."""
    a = steering_vector(scn.geometry, theta)
    g2 = scn.target.gain_sq
    num = g2 * sum(linalg.quadratic_form(a, w) for w in w_list)
    den = g2 * linalg.quadratic_form(a, r_n) + scn.noise_power
    return num / den


def secrecy_rate(scn: Scenario, w_list, r_n, eve_theta=None) -> float:
    """0.5 * max(0, worst-user rate minus eavesdropper rate), bits/use.

    ``eve_theta`` defaults to the nominal target angle; under angular
    uncertainty callers may pass the worst-case angle instead.
    """
    theta = scn.target.theta0 if eve_theta is None else eve_theta
    rates = [np.log2(1.0 + sinr_user(scn, i, w_list, r_n)) for i in range(scn.n_users)]
    rate_e = np.log2(1.0 + sinr_eve(scn, theta, w_list, r_n))
    return 0.5 * max(0.0, min(rates) - rate_e)


def synthesize_waveform(w_list, r_n, length: int, seed, rank1_tol=1e-6) -> np.ndarray:
    """Draw one transmit frame X = W S + N_an of shape (N, L).

    ``w_list`` must be rank-1 within ``rank1_tol`` (post rank-1 extraction);
    symbols are unit-power complex Gaussian and the noise columns have
    covariance R_N, so (1/L) X X^H approaches the design covariance.
    """
    from .design import extract_rank1  # local import to avoid a cycle

    if length < 1:
        raise ValueError("frame length must be >= 1")
    r_n = np.asarray(r_n, dtype=complex)
    n = r_n.shape[0]
    cols = []
    for i, w in enumerate(w_list):
        vec, defect = extract_rank1(np.asarray(w, dtype=complex))
        if defect > rank1_tol:
            raise ValueError(f"W_{i} is not rank-1 within tolerance (defect {defect:.2e})")
        cols.append(vec)
    wmat = np.column_stack(cols)

    rng = np.random.default_rng(seed)
    k = wmat.shape[1]
    symbols = (rng.standard_normal((k, length)) + 1j * rng.standard_normal((k, length))) / np.sqrt(2.0)
    evals, evecs = linalg.hermitian_eig(linalg.hermitian(r_n))
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    noise = root @ (rng.standard_normal((n, length)) + 1j * rng.standard_normal((n, length))) / np.sqrt(2.0)
    return wmat @ symbols + noise
