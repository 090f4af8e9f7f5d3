"""File-level drivers behind the command line: simulate, analyze, sweep."""

from __future__ import annotations

import copy
import csv
import itertools
import json
import subprocess
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_trace, piecewise_rates
from .config import ConfigError, RunConfig, build_run_config, load_json, set_dotted
from .evolution import (
    EnsembleResult,
    IntegratorConfig,
    ensemble_run,
    evolve,
    initial_state,
    init_rng,
    read_trace_csv,
    trajectory_seeds,
    write_trace_csv,
)
from .hamiltonian import HamiltonianConfig
from .network import bitstring, brute_force_solutions, is_solution, parse_network, random_network
from .observables import projector_set

MANIFEST_SCHEMA = "groundmode.manifest/1"


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _dump_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def measurement_report(res: EnsembleResult, network) -> dict:
    """Counts per sampled bitstring with an oracle verdict for each."""
    solutions = None
    if network.Q <= 24:
        solutions = {bitstring(a) for a in brute_force_solutions(network)}
    out = {}
    for key, count in res.counts.items():
        bits = tuple(int(c) for c in key)
        verdict = key in solutions if solutions is not None else is_solution(network, bits)
        out[key] = {"count": count, "solution": bool(verdict)}
    return {"shots": res.n_traj, "assignments": out}


def simulate(cfg: RunConfig) -> dict[str, EnsembleResult]:
    cfg.output.mkdir(parents=True, exist_ok=True)
    hcfg = HamiltonianConfig(cfg.network, cfg.g)
    results = {}
    for regime in cfg.regimes:
        res = ensemble_run(
            cfg.network, cfg.integrator_config(regime), cfg.schedule, cfg.n_traj, cfg.master_seed, cfg.init, hcfg
        )
        results[regime] = res
        write_trace_csv(cfg.output / f"trace_{regime}.csv", res)
        np.savez(
            cfg.output / f"trajectories_{regime}.npz",
            times=res.times,
            **{k: res.per_trajectory(k) for k in ("p0", "pF", "pV", "energy", "weight")},
        )
        _dump_json(cfg.output / f"measurements_{regime}.json", measurement_report(res, cfg.network))
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": version_string(),
        "config": cfg.raw,
        "network": {"path": str(cfg.network_path), "Q": cfg.network.Q, "T": cfg.network.T, "W": cfg.network.W, **cfg.network.to_dict()},
        "master_seed": cfg.master_seed,
        "seeds": trajectory_seeds(cfg.master_seed, cfg.n_traj),
        "regimes": cfg.regimes,
        "traces": {r: f"trace_{r}.csv" for r in cfg.regimes},
    }
    _dump_json(cfg.output / "manifest.json", manifest)
    return results


REPORT_FIELDS = (
    "regime",
    "Q",
    "k",
    "k_ci",
    "t_h",
    "t_h_ci",
    "dT_threshold",
    "r_squared",
    "p0_final",
    "baseline",
    "baseline_generic",
    "baseline_network",
    "trajectories",
)


def analyze(trace_dir, threshold: float = 0.3, n_boot: int = 1000, pieces: int = 4) -> list[dict]:
    """Rate fit, nucleation and rate-consistency reports for every trace in a run directory."""
    trace_dir = Path(trace_dir)
    traces = sorted(trace_dir.glob("trace_*.csv"))
    if not traces:
        raise ConfigError(f"no trace_*.csv files in {trace_dir}")
    Q = net_baseline = None
    man = trace_dir / "manifest.json"
    if man.exists():
        info = load_json(man).get("network", {})
        Q = info.get("Q")
        if "triodes" in info:
            net = parse_network(json.dumps({k: info[k] for k in ("triodes", "wires")}))
            net_baseline = float(projector_set(net).d0.sum()) / 3**net.T
    reports = []
    for path in traces:
        regime = path.stem[len("trace_") :]
        tr = read_trace_csv(path)
        per = trace_dir / f"trajectories_{regime}.npz"
        p0_tr = pF_tr = w_tr = None
        if per.exists():
            with np.load(per) as z:
                p0_tr, pF_tr, w_tr = z["p0"], z["pF"], z["weight"]
            if regime != "projected":
                w_tr = None
        row = analyze_trace(tr["t"], tr["p0"], tr["pF"], Q, p0_tr, pF_tr, w_tr, threshold, n_boot, network_baseline=net_baseline)
        entry = {"regime": regime, **{k: getattr(row, k) for k in REPORT_FIELDS if k != "regime"}}
        try:
            fits, check = piecewise_rates(tr["t"], tr["pF"], pieces)
            entry["piecewise_k"] = [f.k for f in fits]
            entry["rate_consistency_residual"] = check.relative_residual
            entry["rate_consistent"] = check.consistent
        except ValueError as exc:
            entry["piecewise_error"] = str(exc)
        reports.append(entry)
    _dump_json(trace_dir / "report.json", reports)
    with open(trace_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(REPORT_FIELDS)
        for e in reports:
            wr.writerow(["" if e.get(k) is None else e.get(k) for k in REPORT_FIELDS])
    return reports


# ---------------------------------------------------------------- sweeps


def grid_points(grid: dict) -> list[dict]:
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("sweep needs a non-empty 'grid' object")
    keys = list(grid)
    for k in keys:
        if not isinstance(grid[k], list) or not grid[k]:
            raise ConfigError(f"grid entry {k!r} must be a non-empty list")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def projection_distance(cfg: RunConfig) -> dict:
    """Terminal distance between matched projected-comparison and actual runs,
    averaged over the ensemble's trajectory seeds."""
    hcfg = HamiltonianConfig(cfg.network, cfg.g)
    base = dict(cfg.integrator)
    base["record_stride"] = 10**9
    base.pop("pair_mean_fields", None)
    dists = []
    for seed in trajectory_seeds(cfg.master_seed, cfg.n_traj):
        sched = replace(cfg.schedule, seed=seed)
        psi0 = initial_state(cfg.network, cfg.init if cfg.init != "field_ground" else "random_symmetric", init_rng(seed))
        a = evolve(cfg.network, IntegratorConfig(regime="actual", pair_mean_fields=True, **base), sched, psi0, hcfg)
        p = evolve(cfg.network, IntegratorConfig(regime="projected", **base), sched, psi0, hcfg)
        dists.append(float(np.linalg.norm(a.final_state - p.final_state)))
    return {"dt": base["dt"], "distance": float(np.mean(dists)), "distances": dists}


def convergence_order(dts, distances) -> float:
    """Slope of log(distance) against log(dt)."""
    return float(np.polyfit(np.log(dts), np.log(distances), 1)[0])


def sweep(config_path) -> dict:
    config_path = Path(config_path)
    raw = load_json(config_path)
    base_dir = config_path.resolve().parent
    points = grid_points(raw.get("grid"))
    experiment = raw.get("experiment", "scaling")
    if experiment not in ("scaling", "projection_convergence"):
        raise ConfigError(f"unknown experiment {experiment!r}")
    out_root = Path(raw.get("output", "sweep"))
    if not out_root.is_absolute():
        out_root = base_dir / out_root
    out_root.mkdir(parents=True, exist_ok=True)
    base = {k: v for k, v in raw.items() if k not in ("grid", "experiment", "generator", "output")}
    gen = raw.get("generator", {})

    rows = []
    for idx, params in enumerate(points):
        point_dir = out_root / f"point_{idx:03d}"
        point_dir.mkdir(exist_ok=True)
        conf = copy.deepcopy(base)
        for key, value in params.items():
            if key == "Q":
                conf["network"] = str(_generated_network(point_dir, int(value), gen))
            else:
                set_dotted(conf, key, value)
        if "network" in conf and not Path(conf["network"]).is_absolute():
            conf["network"] = str((base_dir / conf["network"]).resolve())
        conf["output"] = str(point_dir)
        _dump_json(point_dir / "config.json", conf)
        cfg = build_run_config(conf, point_dir)
        row = {"point": idx, "params": params, "Q": cfg.network.Q}
        if experiment == "scaling":
            simulate(cfg)
            row["reports"] = analyze(point_dir, n_boot=int(raw.get("analysis", {}).get("n_boot", 200)))
        else:
            row.update(projection_distance(cfg))
        rows.append(row)

    aggregate = {"experiment": experiment, "points": rows}
    if experiment == "projection_convergence":
        dts = [r["dt"] for r in rows]
        if len(set(dts)) >= 2:
            aggregate["order"] = convergence_order(dts, [r["distance"] for r in rows])
    _dump_json(out_root / "sweep.json", aggregate)
    _write_sweep_csv(out_root / "sweep.csv", experiment, rows)
    return aggregate


def _generated_network(point_dir: Path, Q: int, gen: dict) -> Path:
    if Q % 3:
        raise ConfigError(f"Q must be a multiple of 3, got {Q}")
    T = Q // 3
    rng = np.random.default_rng([int(gen.get("seed", 0)), Q])
    net = random_network(T, int(round(gen.get("wires_per_triode", 1.5) * T)), rng, planted=True)
    path = point_dir / "network.json"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(net.to_json() + "\n")
    return path


def _write_sweep_csv(path: Path, experiment: str, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if experiment == "projection_convergence":
            wr.writerow(["point", "Q", "dt", "distance"])
            for r in rows:
                wr.writerow([r["point"], r["Q"], r["dt"], r["distance"]])
            return
        wr.writerow(["point", "params"] + list(REPORT_FIELDS))
        for r in rows:
            for e in r["reports"]:
                wr.writerow([r["point"], json.dumps(r["params"], sort_keys=True)] + ["" if e.get(k) is None else e.get(k) for k in REPORT_FIELDS])
