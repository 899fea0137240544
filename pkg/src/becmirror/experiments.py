"""Experiment runner behind the CLI: one function per experiment, all writing to ``out_dir``."""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

import becmirror
from becmirror.analysis.lyapunov import classify_exponent, lyapunov_largest
from becmirror.analysis.poincare import poincare_section
from becmirror.analysis.sampling import sample_energy_shell, trajectory_seeds
from becmirror.analysis.spectrum import analysis_band, power_spectrum
from becmirror.analysis.stability import linearize_fixed_point
from becmirror.config import SETTINGS, ExperimentConfig, load_config
from becmirror.dynamics import State, integrate_conservative, integrate_damped, total_energy
from becmirror.errors import (BecMirrorError, ConfigError, ConvergenceError, EmptyShellError,
                              IntegrationDiverged, ParameterError)
from becmirror.io import write_csv, write_json
from becmirror.model import derive_model
from becmirror.potential import find_critical_points, potential_grid
from becmirror.steadystate import solve_steady_states, sweep_bistability

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

# double-well example at pump ratio 1.8: label -> (q, Q, energy / hbar omega_m)
REFERENCE_POINTS = {
    "A": (1.7, -3.2, 148.8),
    "B": (9.6, -18.1, 137.4),
    "C": (5.9, -11.1, 157.6),
}


def exit_code(exc: BaseException) -> int:
    """Exit status for an error category: 2 config, 3 numerical, 4 I/O, 1 anything else."""
    if isinstance(exc, (ConfigError, ParameterError)):
        return EXIT_CONFIG
    if isinstance(exc, (ConvergenceError, IntegrationDiverged, EmptyShellError, ArithmeticError)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, BecMirrorError):
        return EXIT_NUMERICAL
    return 1


def _metadata(cfg: ExperimentConfig, model, **extra) -> dict:
    meta = cfg.metadata()
    meta["tool"] = f"becmirror {becmirror.__version__}"
    meta["model"] = model.metadata()
    meta.update(extra)
    return meta


def _box(settings):
    b = settings.get("box")
    return None if b is None else ((b[0], b[1]), (b[2], b[3]))


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def label_critical_points(points) -> dict:
    """Name the lowest minimum B, the other minimum A and the saddle C."""
    minima = sorted((p for p in points if p.kind == "minimum"), key=lambda p: p.energy)
    saddles = [p for p in points if p.kind == "saddle"]
    labels = {}
    if minima:
        labels["B"] = minima[0]
    if len(minima) > 1:
        labels["A"] = minima[1]
    if saddles:
        labels["C"] = min(saddles, key=lambda p: p.energy)
    return labels


def comparison_table(points) -> tuple[str, dict]:
    """Text table of computed critical points against the reference values."""
    labels = label_critical_points(points)
    rows = ["point  kind      q        Q         E        ref q   ref Q   ref E   dq%    dQ%    dE%"]
    devs = {}
    for name in ("A", "B", "C"):
        rq, rQ, rE = REFERENCE_POINTS[name]
        p = labels.get(name)
        if p is None:
            rows.append(f"{name:<6} missing")
            continue
        d = (100 * abs(p.q / rq - 1), 100 * abs(p.Q / rQ - 1), 100 * abs(p.energy / rE - 1))
        devs[name] = d
        rows.append(f"{name:<6} {p.kind:<8} {p.q:7.3f} {p.Q:9.3f} {p.energy:8.2f}   "
                    f"{rq:5.1f} {rQ:7.1f} {rE:7.1f} {d[0]:6.1f} {d[1]:6.1f} {d[2]:6.1f}")
    return "\n".join(rows), devs


def run_bistability(cfg: ExperimentConfig) -> list[Path]:
    s = cfg.settings
    model = derive_model(cfg.params)
    sweep = sweep_bistability(model, (s["pump_min"], s["pump_max"]), s["n_points"])
    rows = [(r, i, b.n_s, b.q_s, b.Q_s, b.stable)
            for r, branches in zip(sweep.pump_ratios, sweep.branches)
            for i, b in enumerate(branches)]
    meta = _metadata(cfg, model, folds=sweep.folds, fold_bisection_rel_width=1e-6)
    return [write_csv(cfg.out_dir / "bistability.csv",
                      ["pump_ratio", "branch_index", "n_s", "q_s", "Q_s", "stable"], rows, meta)]


def run_potential_map(cfg: ExperimentConfig) -> list[Path]:
    model = derive_model(cfg.params)
    box = _box(cfg.settings)
    res = cfg.settings["resolution"]
    q_axis, Q_axis, V = potential_grid(model, box, (res, res))
    rows = ((q, Q, V[i, j]) for i, q in enumerate(q_axis) for j, Q in enumerate(Q_axis))
    meta = _metadata(cfg, model, box=[[q_axis[0], q_axis[-1]], [Q_axis[0], Q_axis[-1]]])
    files = [write_csv(cfg.out_dir / "potential_grid.csv", ["q", "Q", "V"], rows, meta)]
    files += run_critical_points(dataclasses.replace(
        cfg, settings={"box": cfg.settings.get("box"), "seeds_per_axis": 64}))
    return files


def run_critical_points(cfg: ExperimentConfig) -> list[Path]:
    model = derive_model(cfg.params)
    box = _box(cfg.settings)
    points = find_critical_points(model, box, cfg.settings["seeds_per_axis"])
    table, devs = comparison_table(points)
    log.info("critical points vs reference:\n%s", table)
    labels = {name: [p.q, p.Q] for name, p in label_critical_points(points).items()}
    meta = _metadata(cfg, model, newton={"grad_tol": 1e-12, "dedup_radius": 1e-6})
    content = {"critical_points": [p.to_dict() for p in points], "labels": labels,
               "reference": REFERENCE_POINTS, "percent_deviation": devs}
    return [write_json(cfg.out_dir / "critical_points.json", content, meta)]


def run_trajectory(cfg: ExperimentConfig, name: str = "trajectory.csv") -> list[Path]:
    s = cfg.settings
    model = derive_model(cfg.params)
    initial = State(*s["initial"])
    if s["damped"]:
        traj = integrate_damped(initial, model, s["tau_end"], s["dtau_out"], s["rtol"], s["atol"])
        extra = {}
    else:
        traj, report = integrate_conservative(initial, model, s["tau_end"], s["dt"], s["dtau_out"])
        extra = {"E0": report.E0, "max_relative_drift": report.max_relative_drift}
    E = total_energy(traj.y, model)
    data = np.column_stack([traj.tau, traj.y, E])
    meta = _metadata(cfg, model, integrator=traj.integrator, **extra)
    return [write_csv(cfg.out_dir / name, ["tau", "q", "p", "Q", "P", "energy"], data, meta)]


def run_poincare(cfg: ExperimentConfig) -> list[Path]:
    s = cfg.settings
    model = derive_model(cfg.params).conservative()
    files = []
    for E in s["energies"]:
        sec = poincare_section(model, E, s["n_trajectories"], s["tau_end"], cfg.seed,
                               dt=s["dt"], dtau_out=s["dtau_out"], threads=cfg.threads)
        rows = [(i, k, c[0], c[1]) for i, cr in enumerate(sec.crossings) for k, c in enumerate(cr)]
        meta = _metadata(cfg, model, energy=E, section_Q=sec.section_Q, trajectory_seeds=sec.seeds,
                         initial_states=[None if st is None else dataclasses.asdict(st)
                                         for st in sec.initial_states],
                         failures=sec.failures, section=sec.settings)
        files.append(write_csv(cfg.out_dir / f"poincare_E{E:g}.csv",
                               ["trajectory_id", "crossing_index", "q", "p"], rows, meta))
        if sec.failures:
            log.warning("E=%g: %d trajectories diverged", E, len(sec.failures))
    return files


def run_spectrum(cfg: ExperimentConfig) -> list[Path]:
    s = cfg.settings
    files = []
    for ratio in s["pump_ratios"]:
        params = cfg.params.with_pump_ratio(ratio)
        model = derive_model(params).conservative()
        traj, report = integrate_conservative(State(0.0, 0.0, 0.0, 0.0), model, s["tau_end"], s["dt"], s["dtau_out"])
        spec = power_spectrum(traj, s["component"], s["window"])
        band = analysis_band(model)
        sub = dataclasses.replace(cfg, params=params)
        meta = _metadata(sub, model, integrator=traj.integrator, max_relative_drift=report.max_relative_drift)
        E = total_energy(traj.y, model)
        files.append(write_csv(cfg.out_dir / f"trajectory_pump{ratio:g}.csv",
                               ["tau", "q", "p", "Q", "P", "energy"],
                               np.column_stack([traj.tau, traj.y, E]), meta))
        meta = dict(meta, window=spec.window, record_length=spec.record_length, dtau=spec.dtau,
                    analysis_band=band, flatness_in_band=spec.flatness(band),
                    peaks_in_band=list(spec.peaks(band)))
        files.append(write_csv(cfg.out_dir / f"spectrum_pump{ratio:g}.csv", ["frequency", "psd"],
                               np.column_stack([spec.frequencies, spec.psd]), meta))
    return files


def run_stability(cfg: ExperimentConfig) -> list[Path]:
    s = cfg.settings
    model = derive_model(cfg.params)
    entries = []
    for ratio in np.linspace(s["pump_min"], s["pump_max"], s["n_points"]):
        m = model.with_pump_ratio(float(ratio))
        for i, b in enumerate(solve_steady_states(m)):
            rep = linearize_fixed_point(b, m)
            entries.append({"pump_ratio": float(ratio), "branch_index": i,
                            "fixed_point": list(rep.fixed_point),
                            "eigenvalues": [complex(v) for v in rep.eigenvalues],
                            "classification": rep.classification})
    return [write_json(cfg.out_dir / "stability.json", {"branches": entries}, _metadata(cfg, model))]


def run_lyapunov(cfg: ExperimentConfig) -> list[Path]:
    s = cfg.settings
    model = derive_model(cfg.params).conservative()
    seeds = trajectory_seeds(cfg.seed, s["n_trajectories"])
    rows, counts = [], {}
    for E in s["energies"]:
        def work(seed, E=E):
            state = sample_energy_shell(model, E, seed)
            return lyapunov_largest(model, state, s["tau_end"], s["renorm_interval"], s["dt"])
        exps = _map(work, seeds, cfg.threads)
        for i, (seed, lam) in enumerate(zip(seeds, exps)):
            rows.append((E, i, seed, lam))
        counts[f"{E:g}"] = {c: sum(classify_exponent(x) == c for x in exps)
                            for c in ("regular", "undetermined", "chaotic")}
    meta = _metadata(cfg, model, trajectory_seeds=seeds, classification_counts=counts,
                     shadow_offset=1e-8)
    return [write_csv(cfg.out_dir / "lyapunov.csv", ["energy", "trajectory_id", "seed", "exponent"], rows, meta)]


FIGURE_JOBS = [
    ("bistability", "bistability", []),
    ("double_well", "potential_map", ["model.pump_ratio=1.8"]),
    ("sections", "poincare", ["model.pump_ratio=1.8"]),
    ("spectra", "spectrum", []),
    ("damped", "trajectory", ["model.pump_ratio=2", "experiment.damped=1", "experiment.tau_end=500",
                            "experiment.dtau_out=0.01", "model.mirror_damping=0.1*2*pi*19e3",
                            "model.sidemode_damping=0.1*2*pi*19e3"]),
]

RUNNERS = {
    "bistability": run_bistability,
    "potential_map": run_potential_map,
    "critical_points": run_critical_points,
    "trajectory": run_trajectory,
    "poincare": run_poincare,
    "spectrum": run_spectrum,
    "stability": run_stability,
    "lyapunov": run_lyapunov,
}


def run(cfg: ExperimentConfig) -> list[Path]:
    """Execute the configured experiment and return the files written."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.experiment](cfg)


def figure_suite(out_dir, seed: int = 1, threads: int = 1, overrides=()):
    """Regenerate every figure dataset under ``out_dir``.

    ``overrides`` are ``key=value`` strings applied on top of each figure's
    own settings; an ``experiment.*`` key only reaches experiments that have
    that setting. Returns ``(files, summary_text, status)``; a failing
    sub-experiment is logged and reflected in ``status`` while the rest still run.
    """
    out_dir = Path(out_dir)
    files: list[Path] = []
    status = EXIT_OK
    failures = []
    for sub, experiment, extra in FIGURE_JOBS:
        try:
            mine = [o for o in overrides if _applies(o, experiment)]
            cfg = load_config(None, experiment, overrides=[*extra, *mine], environ={},
                              out_dir=out_dir / sub, seed=seed, threads=threads)
            files += run(cfg)
        except Exception as exc:  # noqa: BLE001 - the suite keeps going
            status = max(status, exit_code(exc))
            log.error("%s failed: %s", sub, exc)
            failures.append(f"{sub}: {exc}")

    try:
        mine = [o for o in overrides if _applies(o, "critical_points")]
        cfg = load_config(None, "critical_points", overrides=["model.pump_ratio=1.8", *mine], environ={})
        table, _ = comparison_table(find_critical_points(derive_model(cfg.params).conservative()))
    except Exception as exc:  # noqa: BLE001
        status = max(status, exit_code(exc))
        table = f"critical point comparison failed: {exc}"
    summary = table if not failures else table + "\n\nfailures:\n" + "\n".join(failures)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.txt").write_text(summary + "\n")
    files.append(out_dir / "summary.txt")
    return files, summary, status


def _applies(override: str, experiment: str) -> bool:
    key = override.split("=", 1)[0].strip()
    section, _, sub = key.partition(".")
    return section != "experiment" or sub in SETTINGS[experiment]
