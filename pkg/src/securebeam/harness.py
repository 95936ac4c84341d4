"""Experiment harness: seeded Monte-Carlo trials and CSV emission.

Each figure experiment maps to one CSV with a fixed header:

    beampattern.csv         theta_deg,design,power_linear
    convergence.csv         algorithm,iteration,c_or_obj,sinr_eve_linear
    secrecy_vs_gamma_b.csv  mode,p0_watts,gamma_b_db,trial,secrecy_rate_bits
    secrecy_vs_gamma_s.csv  gamma_b_db,gamma_s,trial,secrecy_rate_bits

plus ``manifest.txt`` (config echo, hash, versions, wall time).  Outputs are
byte-deterministic for a fixed (config, seed): channels are reseeded per
trial from the master seed, rows are sorted before writing, and all floats
are formatted with a fixed %.12g.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, beampattern, design
from .config import ExperimentConfig, db_to_linear
from .scenario import AngularGrid, Scenario, TargetModel, UlaGeometry, sample_channel

BEAMPATTERN_HEADER = ["theta_deg", "design", "power_linear"]
CONVERGENCE_HEADER = ["algorithm", "iteration", "c_or_obj", "sinr_eve_linear"]
GAMMA_B_HEADER = ["mode", "p0_watts", "gamma_b_db", "trial", "secrecy_rate_bits"]
GAMMA_S_HEADER = ["gamma_b_db", "gamma_s", "trial", "secrecy_rate_bits"]


@dataclass
class TrialRecord:
    mode: str
    p0_watts: float
    gamma_b_db: float
    gamma_s: float
    trial: int
    seed: int
    status: str  # ok | infeasible:<family> | failed
    secrecy_rate: float
    sinr_eve: float
    min_user_sinr: float
    design_iterations: int
    max_rank1_defect: float
    wall_time: float


def trial_seed(master_seed: int, trial: int) -> int:
    """Derived channel seed; shared across modes and sweep points so sweep
    comparisons are paired."""
    return int(np.random.SeedSequence(entropy=(int(master_seed), int(trial))).generate_state(1)[0])


def _geometry(cfg) -> UlaGeometry:
    return UlaGeometry(cfg.n_antennas, 0.5)


def _grid(cfg) -> AngularGrid:
    return AngularGrid.regular(cfg.grid_resolution_deg)


def _scenario(cfg, p0, delta_deg, channel) -> Scenario:
    target = TargetModel(
        np.deg2rad(cfg.theta0_deg), np.deg2rad(delta_deg), np.sqrt(cfg.target_gain_sq)
    )
    return Scenario(
        _geometry(cfg), channel, cfg.noise_power, target, p0, cfg.frame_length
    )


def _thresholds(cfg, gamma_b_db, gamma_s, with_pattern) -> design.Thresholds:
    return design.Thresholds(
        gamma_b=db_to_linear(gamma_b_db),
        gamma_bp=cfg.gamma_bp if with_pattern else np.inf,
        gamma_s=gamma_s,
        ripple=cfg.ripple,
    )


def _options(cfg) -> design.DesignOptions:
    return design.DesignOptions(
        epsilon=cfg.epsilon,
        iter_max=cfg.iter_max,
        sidelobe_guard=np.deg2rad(cfg.sidelobe_guard_deg),
    )


def desired_covariance(cfg, p0):
    """R_d for the precise design; depends only on geometry, grid and P0."""
    grid = _grid(cfg)
    pattern = beampattern.rect_pattern(
        grid, np.deg2rad(cfg.theta0_deg), np.deg2rad(cfg.mainlobe_halfwidth_deg)
    )
    return beampattern.solve_desired_covariance(pattern, _geometry(cfg), p0)


def run_design(cfg, mode, p0, gamma_b_db, gamma_s, delta_deg, trial, r_d=None):
    """One seeded design solve; returns (TrialRecord, DesignSolution|None)."""
    seed = trial_seed(cfg.seed, trial)
    channel = sample_channel(cfg.n_users, cfg.n_antennas, seed)
    scn = _scenario(cfg, p0, delta_deg if mode == design.MODE_UNCERTAIN else 0.0, channel)
    grid = _grid(cfg)
    thr = _thresholds(cfg, gamma_b_db, gamma_s, with_pattern=(mode == design.MODE_PRECISE))
    opts = _options(cfg)
    t0 = time.perf_counter()
    status = "ok"
    sol = None
    try:
        if mode == design.MODE_PRECISE:
            rd = r_d if r_d is not None else desired_covariance(cfg, p0).r_d
            sol = design.solve_precise_design(scn, rd, thr, opts, grid=grid)
        else:
            sol = design.solve_uncertain_design(scn, grid, thr, opts)
    except design.InfeasibleDesignError as exc:
        status = f"infeasible:{exc.family}"
    except design.DesignSolverError:
        status = "failed"
    wall = time.perf_counter() - t0
    if sol is None:
        rec = TrialRecord(mode, p0, gamma_b_db, gamma_s, trial, seed, status,
                          float("nan"), float("nan"), float("nan"), 0, float("nan"), wall)
    else:
        rec = TrialRecord(
            mode, p0, gamma_b_db, gamma_s, trial, seed, status,
            sol.metrics["secrecy_rate"], sol.metrics["sinr_eve"],
            sol.metrics["min_user_sinr"], len(sol.trace),
            float(np.max(sol.rank1_defects)), wall,
        )
    return rec, sol


# ---------------------------------------------------------------------------
# figure experiments


def run_fig2(cfg):
    """Beampattern rows for the precise design and two uncertainty widths."""
    rows = []
    grid = _grid(cfg)
    geom = _geometry(cfg)
    p0 = cfg.power_budget_watts[0]
    r_d = desired_covariance(cfg, p0).r_d
    theta_deg = np.rad2deg(grid.angles)
    for delta in (0.0, 5.0, 10.0):
        mode = design.MODE_PRECISE if delta == 0.0 else design.MODE_UNCERTAIN
        label = "precise" if delta == 0.0 else f"uncertain_dt{delta:g}"
        rec, sol = run_design(cfg, mode, p0, cfg.gamma_b_db[0], cfg.gamma_s[0],
                              delta, trial=0, r_d=r_d)
        if sol is None:
            raise RuntimeError(f"fig2 design {label} did not solve: {rec.status}")
        profile = beampattern.beampattern_profile(sol.r_x, grid, geom)
        rows.extend((theta_deg[i], label, profile[i]) for i in range(len(grid)))
    return rows


def run_fig3(cfg):
    """Per-iteration convergence rows for both algorithms on one channel."""
    p0 = cfg.power_budget_watts[0]
    r_d = desired_covariance(cfg, p0).r_d
    rows = []
    rec, sol = run_design(cfg, design.MODE_PRECISE, p0, cfg.gamma_b_db[0],
                          cfg.gamma_s[0], 0.0, trial=0, r_d=r_d)
    if sol is None:
        raise RuntimeError(f"fig3 precise design did not solve: {rec.status}")
    for it in sol.trace:
        rows.append(("dinkelbach", it.index, it.m_val / it.n_val, it.sinr_eve))
    rec, sol = run_design(cfg, design.MODE_UNCERTAIN, p0, cfg.gamma_b_db[0],
                          cfg.gamma_s[0], cfg.delta_theta_deg, trial=0)
    if sol is None:
        raise RuntimeError(f"fig3 uncertain design did not solve: {rec.status}")
    for it in sol.trace:
        rows.append(("quadratic_transform", it.index, it.surrogate, it.sinr_eve))
    return rows


def _gamma_b_tasks(cfg):
    for p0 in cfg.power_budget_watts:
        for gamma_b in cfg.gamma_b_db:
            for mode in (design.MODE_PRECISE, design.MODE_UNCERTAIN):
                for trial in range(cfg.trials):
                    yield (mode, p0, gamma_b, cfg.gamma_s[0], cfg.delta_theta_deg, trial)


def _gamma_s_tasks(cfg):
    p0 = cfg.power_budget_watts[0]
    for gamma_b in cfg.gamma_b_db:
        for gamma_s in cfg.gamma_s:
            for trial in range(cfg.trials):
                yield (design.MODE_UNCERTAIN, p0, gamma_b, gamma_s,
                       cfg.delta_theta_deg, trial)


def _run_tasks(cfg, tasks, jobs=1):
    tasks = list(tasks)
    needs_rd = any(t[0] == design.MODE_PRECISE for t in tasks)
    rd_cache = {}
    if needs_rd:
        for p0 in sorted({t[1] for t in tasks if t[0] == design.MODE_PRECISE}):
            rd_cache[p0] = desired_covariance(cfg, p0).r_d
    args = [(cfg, t[0], t[1], t[2], t[3], t[4], t[5], rd_cache.get(t[1])) for t in tasks]
    if jobs <= 1:
        records = [_trial_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_worker, args, chunksize=1))
    order = {design.MODE_PRECISE: 0, design.MODE_UNCERTAIN: 1}
    records.sort(key=lambda r: (r.p0_watts, r.gamma_b_db, r.gamma_s, order[r.mode], r.trial))
    return records


def _trial_worker(args):
    cfg, mode, p0, gamma_b, gamma_s, delta_deg, trial, r_d = args
    rec, _ = run_design(cfg, mode, p0, gamma_b, gamma_s, delta_deg, trial, r_d=r_d)
    return rec


def sweep_secrecy_vs_gamma_b(cfg, jobs=1):
    """Secrecy rate vs the user SINR floor, both designs, per power budget.

    Returns (trial records, summary rows); summary rows are
    (mode, p0, gamma_b_db, mean SR, std SR) over the successful trials.
    """
    records = _run_tasks(cfg, _gamma_b_tasks(cfg), jobs)
    summary = []
    for p0 in cfg.power_budget_watts:
        for gamma_b in cfg.gamma_b_db:
            for mode in (design.MODE_PRECISE, design.MODE_UNCERTAIN):
                vals = [r.secrecy_rate for r in records
                        if r.mode == mode and r.p0_watts == p0 and r.gamma_b_db == gamma_b
                        and np.isfinite(r.secrecy_rate)]
                mean = float(np.mean(vals)) if vals else float("nan")
                std = float(np.std(vals)) if vals else float("nan")
                summary.append((mode, p0, gamma_b, mean, std))
    return records, summary


def sweep_secrecy_vs_gamma_s(cfg, jobs=1):
    """Secrecy rate vs the sidelobe gap (uncertain design), per gamma_b."""
    records = _run_tasks(cfg, _gamma_s_tasks(cfg), jobs)
    summary = []
    for gamma_b in cfg.gamma_b_db:
        for gamma_s in cfg.gamma_s:
            vals = [r.secrecy_rate for r in records
                    if r.gamma_b_db == gamma_b and r.gamma_s == gamma_s
                    and np.isfinite(r.secrecy_rate)]
            mean = float(np.mean(vals)) if vals else float("nan")
            std = float(np.std(vals)) if vals else float("nan")
            summary.append((gamma_b, gamma_s, mean, std))
    return records, summary


# ---------------------------------------------------------------------------
# CSV / manifest output


def _fmt_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if np.isnan(x):
        return "nan"
    return f"{x:.12g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt_cell(v) for v in row])


def write_manifest(path, cfg, outputs, runtime_s):
    import scipy

    with open(path, "w") as f:
        f.write(f"securebeam {__version__}\n")
        f.write(f"numpy {np.__version__}, scipy {scipy.__version__}\n")
        f.write(f"config sha256/16 {cfg.digest()}\n")
        f.write(f"outputs: {', '.join(sorted(os.path.basename(p) for p in outputs))}\n")
        f.write(f"wall_time_s {runtime_s:.1f}\n")
        f.write("--- config ---\n")
        f.write(cfg.to_text())


def run_experiment(cfg: ExperimentConfig, out_dir, jobs=1):
    """Run one experiment and write its CSV outputs plus a manifest.

    Trial failures are recorded in-row (NaN secrecy rate); only config
    errors abort the run.  Returns the list of written file paths.
    """
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    outputs = []

    def emit(name, header, rows):
        path = os.path.join(out_dir, name)
        write_csv(path, header, rows)
        outputs.append(path)

    if cfg.experiment == "fig2":
        emit("beampattern.csv", BEAMPATTERN_HEADER, run_fig2(cfg))
    elif cfg.experiment == "fig3":
        emit("convergence.csv", CONVERGENCE_HEADER, run_fig3(cfg))
    elif cfg.experiment == "fig4":
        records, _ = sweep_secrecy_vs_gamma_b(cfg, jobs)
        rows = [(r.mode, r.p0_watts, r.gamma_b_db, r.trial, r.secrecy_rate)
                for r in records]
        emit("secrecy_vs_gamma_b.csv", GAMMA_B_HEADER, rows)
    elif cfg.experiment == "fig5":
        records, _ = sweep_secrecy_vs_gamma_s(cfg, jobs)
        rows = [(r.gamma_b_db, r.gamma_s, r.trial, r.secrecy_rate) for r in records]
        emit("secrecy_vs_gamma_s.csv", GAMMA_S_HEADER, rows)
    elif cfg.experiment == "custom":
        emit("beampattern.csv", BEAMPATTERN_HEADER, run_fig2(cfg))
        emit("convergence.csv", CONVERGENCE_HEADER, run_fig3(cfg))
    else:
        raise ValueError(f"unknown experiment {cfg.experiment!r}")

    manifest = os.path.join(out_dir, "manifest.txt")
    write_manifest(manifest, cfg, outputs, time.perf_counter() - t0)
    outputs.append(manifest)
    return outputs
