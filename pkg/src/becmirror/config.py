"""Experiment configuration: flat ``key = value`` files with section prefixes.

Keys are ``model.<PhysicalParams field>`` (plus ``model.pump_ratio``),
``experiment.name`` and ``experiment.<setting>``, and ``run.seed``,
``run.threads``, ``run.out``. Search boxes are given as
``experiment.box = q_min, q_max, Q_min, Q_max``. Any key can be overridden from the
environment as ``BECMIRROR_<SECTION>__<KEY>``, e.g.
``BECMIRROR_EXPERIMENT__TAU_END=100``.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from becmirror.errors import ConfigError, ParameterError
from becmirror.io import PARAM_FIELDS, parse_number, read_key_values
from becmirror.model import PhysicalParams, reference_params

ENV_PREFIX = "BECMIRROR_"

EXPERIMENTS = ("bistability", "potential_map", "critical_points", "trajectory",
               "poincare", "spectrum", "stability", "lyapunov")

SECTION_ENERGIES = (140.0, 157.0, 160.0, 170.0)

# (type, default) per experiment setting; "floats" is a comma-separated list
SETTINGS = {
    "bistability": {
        "pump_min": ("float", 0.0), "pump_max": ("float", 3.0), "n_points": ("int", 301),
    },
    "potential_map": {
        "box": ("floats", None),
        "resolution": ("int", 201),
    },
    "critical_points": {
        "box": ("floats", None),
        "seeds_per_axis": ("int", 64),
    },
    "trajectory": {
        "initial": ("floats", (0.0, 0.0, 0.0, 0.0)),
        "tau_end": ("float", 2000.0), "dt": ("float", 1e-3), "dtau_out": ("float", 0.1),
        "damped": ("bool", False), "rtol": ("float", 1e-9), "atol": ("float", 1e-12),
    },
    "poincare": {
        "energies": ("floats", SECTION_ENERGIES), "n_trajectories": ("int", 24),
        "tau_end": ("float", 5000.0), "dt": ("float", 1e-3), "dtau_out": ("float", 0.01),
    },
    "spectrum": {
        "pump_ratios": ("floats", (1.8, 2.0)), "tau_end": ("float", 6553.5),
        "dt": ("float", 1e-3), "dtau_out": ("float", 0.1),
        "component": ("str", "q"), "window": ("str", "hann"),
    },
    "stability": {
        "pump_min": ("float", 0.0), "pump_max": ("float", 3.0), "n_points": ("int", 61),
    },
    "lyapunov": {
        "energies": ("floats", (140.0, 170.0)), "n_trajectories": ("int", 24),
        "tau_end": ("float", 5000.0), "dt": ("float", 1e-3), "renorm_interval": ("float", 1.0),
    },
}

_ALIASES = {"potential": "potential_map", "critical-points": "critical_points",
            "potential-map": "potential_map"}


def experiment_name(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}",
                          key="experiment.name")
    return name


@dataclass
class ExperimentConfig:
    params: PhysicalParams
    experiment: str
    settings: dict = field(default_factory=dict)
    out_dir: Path = Path("out")
    seed: int = 1
    threads: int = 1

    def metadata(self) -> dict:
        return {
            "experiment": self.experiment,
            "settings": dict(self.settings),
            "seed": self.seed,
            "physical_params": dataclasses.asdict(self.params),
        }


def _convert(kind: str, text, line, key):
    if not isinstance(text, str):
        return text
    if kind == "float":
        return parse_number(text, line=line, key=key)
    if kind == "int":
        value = parse_number(text, line=line, key=key)
        if value != int(value):
            raise ConfigError(f"expected an integer, got {text!r}", line, key)
        return int(value)
    if kind == "bool":
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}", line, key)
    if kind == "floats":
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        if not parts:
            raise ConfigError("expected a comma-separated list of numbers", line, key)
        return tuple(parse_number(p, line=line, key=key) for p in parts)
    return text.strip()


def env_overrides(environ=None) -> list[tuple[None, str, str]]:
    environ = os.environ if environ is None else environ
    out = []
    for name, value in sorted(environ.items()):
        if name.startswith(ENV_PREFIX) and "__" in name[len(ENV_PREFIX):]:
            section, key = name[len(ENV_PREFIX):].split("__", 1)
            out.append((None, f"{section.lower()}.{key.lower()}", value))
    return out


def build_config(entries, experiment: str | None = None, *, out_dir=None, seed=None,
                 threads=None) -> ExperimentConfig:
    """Assemble a config from ``(line, key, value)`` entries; later entries win."""
    model_values: dict = {}
    pump_ratio = None
    raw_settings: dict = {}
    name = experiment
    run = {}
    for line, key, value in entries:
        section, _, sub = key.partition(".")
        if not sub:
            raise ConfigError("keys need a section prefix (model., experiment., run.)", line, key)
        if section == "model":
            if sub == "pump_ratio":
                pump_ratio = (line, value)
            elif sub in PARAM_FIELDS:
                model_values[sub] = parse_number(value, line=line, key=key)
            else:
                raise ConfigError(f"unknown model parameter {sub!r}", line, key)
        elif section == "experiment":
            if sub == "name":
                if experiment is None:
                    name = value.strip()
            else:
                raw_settings[sub] = (line, value)
        elif section == "run":
            if sub not in ("seed", "threads", "out"):
                raise ConfigError(f"unknown run option {sub!r}", line, key)
            run[sub] = (line, value)
        else:
            raise ConfigError(f"unknown section {section!r}", line, key)
    if name is None:
        raise ConfigError("no experiment named (experiment.name)")
    name = experiment_name(name)

    params = dataclasses.replace(reference_params(), **model_values)
    if pump_ratio is not None:
        line, value = pump_ratio
        try:
            params = params.with_pump_ratio(parse_number(value, line=line, key="model.pump_ratio"))
        except ParameterError as exc:
            raise ConfigError(str(exc), line, "model.pump_ratio") from None
    try:
        params.validate()
    except ParameterError as exc:
        raise ConfigError(str(exc), key=f"model.{exc.field}") from None

    settings = {k: default for k, (_, default) in SETTINGS[name].items()}
    for sub, (line, value) in raw_settings.items():
        if sub not in SETTINGS[name]:
            raise ConfigError(f"unknown setting {sub!r} for experiment {name!r}", line, f"experiment.{sub}")
        settings[sub] = _convert(SETTINGS[name][sub][0], value, line, f"experiment.{sub}")

    cfg_seed = 1
    cfg_threads = os.cpu_count() or 1
    cfg_out = Path("out")
    if "seed" in run:
        cfg_seed = _convert("int", run["seed"][1], run["seed"][0], "run.seed")
    if "threads" in run:
        cfg_threads = _convert("int", run["threads"][1], run["threads"][0], "run.threads")
    if "out" in run:
        cfg_out = Path(run["out"][1].strip())
    if seed is not None:
        cfg_seed = int(seed)
    if threads is not None:
        cfg_threads = int(threads)
    if out_dir is not None:
        cfg_out = Path(out_dir)
    if cfg_threads < 1:
        raise ConfigError("threads must be >= 1", key="run.threads")
    validate_settings(name, settings)
    return ExperimentConfig(params, name, settings, cfg_out, cfg_seed, cfg_threads)


def validate_settings(name: str, s: dict) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(msg, key=f"experiment.{key}")

    for key in ("tau_end", "dt", "dtau_out", "renorm_interval"):
        if key in s:
            need(s[key] > 0, key, f"{key} must be positive")
    if "initial" in s:
        need(len(s["initial"]) == 4, "initial", "initial state needs four numbers q, p, Q, P")
    for key in ("n_points", "n_trajectories", "seeds_per_axis", "resolution"):
        if key in s:
            need(s[key] >= (2 if key != "n_trajectories" else 1), key, f"{key} too small")
    if "pump_min" in s:
        need(0 <= s["pump_min"] <= s["pump_max"], "pump_min", "need 0 <= pump_min <= pump_max")
    if name == "spectrum":
        need(s["component"] in ("q", "Q"), "component", "component must be q or Q")
        need(s["window"] in ("hann", "rect"), "window", "window must be hann or rect")
        need(all(r >= 0 for r in s["pump_ratios"]), "pump_ratios", "pump ratios must be >= 0")
    if s.get("box") is not None:
        b = s["box"]
        need(len(b) == 4 and b[0] < b[1] and b[2] < b[3], "box",
             "box must be q_min, q_max, Q_min, Q_max with min < max")


def load_config(path=None, experiment: str | None = None, *, overrides=(), environ=None,
                out_dir=None, seed=None, threads=None) -> ExperimentConfig:
    """Read ``path`` (optional), apply ``key=value`` overrides and environment overrides."""
    entries = []
    if path is not None:
        try:
            entries.extend(read_key_values(path))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
    for text in overrides:
        if "=" not in text:
            raise ConfigError(f"override must be key=value, got {text!r}")
        key, value = (s.strip() for s in text.split("=", 1))
        entries.append((None, key, value))
    entries.extend(env_overrides(environ))
    return build_config(entries, experiment, out_dir=out_dir, seed=seed, threads=threads)
