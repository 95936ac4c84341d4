"""Experiment configuration: flat key=value files and per-figure defaults.

File format: one ``key = value`` pair per line, ``#`` comments, blank lines
ignored.  Sweep fields take comma-separated values.  Angles are degrees and
powers linear watts at this surface.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

import numpy as np

EXPERIMENTS = ("fig2", "fig3", "fig4", "fig5", "custom")

_LIST_FIELDS = {"power_budget_watts", "gamma_b_db", "gamma_s"}
_INT_FIELDS = {"n_antennas", "n_users", "frame_length", "trials", "seed", "iter_max"}
_STR_FIELDS = {"experiment", "output_dir"}


@dataclass
class ExperimentConfig:
    experiment: str = "custom"
    n_antennas: int = 8
    n_users: int = 2
    frame_length: int = 30
    theta0_deg: float = 0.0
    delta_theta_deg: float = 5.0
    noise_power: float = 0.01
    target_gain_sq: float = 1.0
    power_budget_watts: list = field(default_factory=lambda: [1.0])
    gamma_b_db: list = field(default_factory=lambda: [10.0])
    gamma_bp: float = 0.1
    gamma_s: list = field(default_factory=lambda: [1.0])
    ripple: float = 0.1
    grid_resolution_deg: float = 1.0
    mainlobe_halfwidth_deg: float = 10.0
    sidelobe_guard_deg: float = 10.0
    trials: int = 1
    seed: int = 0
    iter_max: int = 20
    epsilon: float = 1e-3
    output_dir: str = ""

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.n_antennas < 2 or self.n_users < 1 or self.frame_length < 1:
            raise ValueError("array/user/frame counts out of range")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        for name in _LIST_FIELDS:
            vals = getattr(self, name)
            if not vals:
                raise ValueError(f"sweep field {name} must not be empty")
            if any(not np.isfinite(v) for v in vals):
                raise ValueError(f"sweep field {name} has non-finite values")
        if any(p <= 0 for p in self.power_budget_watts):
            raise ValueError("power budgets must be positive")
        if self.noise_power <= 0 or self.target_gain_sq <= 0:
            raise ValueError("noise power and target gain must be positive")
        if not 0 < self.ripple < 1:
            raise ValueError("ripple must be in (0, 1)")
        if self.gamma_bp < 0 or any(g < 0 for g in self.gamma_s):
            raise ValueError("beampattern thresholds must be nonnegative")
        if self.grid_resolution_deg <= 0 or self.mainlobe_halfwidth_deg <= 0:
            raise ValueError("grid resolution and mainlobe halfwidth must be positive")
        if abs(self.theta0_deg) >= 90 or self.delta_theta_deg < 0:
            raise ValueError("target angles out of range")
        if self.iter_max < 2 or self.epsilon <= 0:
            raise ValueError("iteration controls out of range")
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in _LIST_FIELDS:
                v = ", ".join(_fmt(x) for x in v)
            elif isinstance(v, float):
                v = _fmt(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def parse_config(text: str) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in _STR_FIELDS:
            values[key] = val
        elif key in _LIST_FIELDS:
            values[key] = [float(v) for v in val.split(",") if v.strip()]
        elif key in _INT_FIELDS:
            values[key] = int(val)
        else:
            values[key] = float(val)
    return ExperimentConfig(**values).validate()


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        return parse_config(f.read())


def default_config(experiment: str, paper_scale: bool = False) -> ExperimentConfig:
    """Per-figure defaults at smoke scale; paper scale is opt-in.

    sigma^2, |alpha|^2 and the gamma_bp / gamma_s magnitudes are config
    choices, not reported values: the experiments only pin trends.
    """
    cfg = ExperimentConfig(experiment=experiment)
    if experiment == "fig2":
        cfg.trials = 1
        cfg.gamma_bp = 0.1
        cfg.gamma_s = [1.0]
    elif experiment == "fig3":
        cfg.trials = 1
        cfg.gamma_bp = 0.1
        cfg.gamma_s = [1.0]
    elif experiment == "fig4":
        cfg.trials = 10
        cfg.gamma_b_db = [4.0, 8.0, 12.0, 16.0]
        cfg.power_budget_watts = [0.5, 1.0]
        cfg.gamma_bp = 60.0
        cfg.gamma_s = [1.0]
    elif experiment == "fig5":
        cfg.trials = 10
        cfg.gamma_b_db = [10.0, 20.0]
        cfg.gamma_s = [0.5, 1.5, 2.5, 3.5]
        cfg.gamma_bp = 60.0
    if paper_scale:
        cfg.n_antennas = 18
        cfg.n_users = 4
        if experiment in ("fig4", "fig5"):
            cfg.trials = 50
    return cfg.validate()


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float, floor_db: float = -300.0) -> float:
    if x <= 10.0 ** (floor_db / 10.0):
        return floor_db
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)
