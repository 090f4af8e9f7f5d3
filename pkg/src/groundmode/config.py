"""Run configuration: one JSON document per run.

    {
      "network": "canonical.json",
      "regime": "actual" | ["actual", "projected", ...],
      "init": "field_ground",
      "g": 1.0,
      "integrator": {"dt": 0.002, "t_max": 20, "record_stride": 50,
                     "projection_stride": 1, "pair_mean_fields": false},
      "schedule": {"sigma0": 1.0, "envelope": "linear", "t_max": 20,
                   "decay": 5.0, "correlation_time": 1e4, "seed": 0,
                   "noise_dt": null},
      "ensemble": {"n_traj": 200, "master_seed": 7},
      "output": "runs/anneal"
    }

Relative paths resolve against the config file's directory. In the
schedule block ``t_max`` is the time at which the linear envelope reaches
zero.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .evolution import IntegratorConfig
from .hamiltonian import NoiseSchedule
from .network import BooleanNetwork, load_network


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"network", "regime", "init", "g", "integrator", "schedule", "ensemble", "output", "grid", "experiment", "generator", "analysis"}
_INTEGRATOR_KEYS = {"dt", "t_max", "record_stride", "projection_stride", "pair_mean_fields"}
_SCHEDULE_KEYS = {"sigma0", "envelope", "t_max", "decay", "correlation_time", "seed", "noise_dt"}
_ENSEMBLE_KEYS = {"n_traj", "master_seed"}


@dataclass
class RunConfig:
    network_path: Path
    network: BooleanNetwork
    regimes: list[str]
    init: str
    g: float
    integrator: dict
    schedule: NoiseSchedule
    n_traj: int
    master_seed: int
    output: Path
    raw: dict = field(repr=False, default_factory=dict)

    def integrator_config(self, regime: str) -> IntegratorConfig:
        return IntegratorConfig(regime=regime, **self.integrator)


def _check_keys(block: dict, allowed: set, name: str) -> None:
    if not isinstance(block, dict):
        raise ConfigError(f"'{name}' must be an object")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")


def schedule_from_dict(d: dict) -> NoiseSchedule:
    _check_keys(d, _SCHEDULE_KEYS, "schedule")
    kw = dict(d)
    if "t_max" in kw:
        kw["t_end"] = kw.pop("t_max")
    try:
        return NoiseSchedule(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def build_run_config(raw: dict, base_dir: Path) -> RunConfig:
    _check_keys(raw, _TOP_KEYS, "config")
    for key in ("network", "integrator", "schedule"):
        if key not in raw:
            raise ConfigError(f"missing '{key}'")
    net_path = Path(raw["network"])
    if not net_path.is_absolute():
        net_path = base_dir / net_path
    if not net_path.exists():
        raise ConfigError(f"network file not found: {net_path}")
    network = load_network(net_path)
    regimes = raw.get("regime", "actual")
    regimes = [regimes] if isinstance(regimes, str) else list(regimes)
    for r in regimes:
        if r not in ("actual", "comparison", "projected"):
            raise ConfigError(f"unknown regime {r!r}")
    integ = raw["integrator"]
    _check_keys(integ, _INTEGRATOR_KEYS, "integrator")
    if "dt" not in integ or "t_max" not in integ:
        raise ConfigError("integrator needs dt and t_max")
    sched = schedule_from_dict(raw["schedule"])
    ens = raw.get("ensemble", {})
    _check_keys(ens, _ENSEMBLE_KEYS, "ensemble")
    out = Path(raw.get("output", "run"))
    if not out.is_absolute():
        out = base_dir / out
    g = float(raw.get("g", 1.0))
    # validate the integrator block once up front
    IntegratorConfig(regime=regimes[0], **integ)
    return RunConfig(
        network_path=net_path,
        network=network,
        regimes=regimes,
        init=raw.get("init", "random_symmetric"),
        g=g,
        integrator=dict(integ),
        schedule=sched,
        n_traj=int(ens.get("n_traj", 1)),
        master_seed=int(ens.get("master_seed", sched.seed)),
        output=out,
        raw=copy.deepcopy(raw),
    )


def load_json(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return build_run_config(load_json(path), path.resolve().parent)


def set_dotted(d: dict, key: str, value) -> None:
    """Set ``d['a']['b'] = value`` for key 'a.b', creating blocks as needed."""
    parts = key.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
    d[parts[-1]] = value
