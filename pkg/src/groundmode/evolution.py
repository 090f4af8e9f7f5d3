"""Trajectory integration in three regimes and ensemble averaging.

* actual: symmetric fields, exact unitary steps exp(-i H dt).
* comparison: independent fields on each proton, exact unitary steps.
* projected: comparison steps, with the state projected onto the
  all-triplet space at the end of every slice; the squared norm lost to
  each projection multiplies the trajectory's survival weight.

Fields are sampled at the start of each step and held for the step.
Trajectories of an ensemble are integrated together as one batch; each
keeps its own random streams, so results do not depend on batch size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .hamiltonian import (
    FieldProcess,
    HamiltonianConfig,
    NoiseSchedule,
    _pauli_stack,
    norm_bound,
    wire_hamiltonian,
)
from .network import BooleanNetwork
from .observables import decompose_batch, energy_batch, measure, projector_set
from .spin_algebra import HERMITIAN_TOL, PAIR_Q_BASIS, dim, is_hermitian, rowwise_matmul, symmetrizer

Regime = Literal["actual", "comparison", "projected"]
InitKind = Literal["random_symmetric", "uniform_triplet", "basis_symmetric", "field_ground"]

NORM_TOL = 1e-9
EXTINCTION_NORM = 1e-12
STEP_BOUND = 0.1


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_max: float
    regime: Regime = "actual"
    record_stride: int = 1
    projection_stride: int = 1
    # actual regime only: drive with the mean of an asymmetric field pair,
    # i.e. the same noise a comparison/projected twin with this seed sees
    pair_mean_fields: bool = False
    store_states: bool = False

    def __post_init__(self):
        if not 0 < self.dt <= self.t_max:
            raise ValueError(f"need 0 < dt <= t_max, got dt={self.dt}, t_max={self.t_max}")
        if self.regime not in ("actual", "comparison", "projected"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.record_stride < 1 or self.projection_stride < 1:
            raise ValueError("strides must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def field_mode(self) -> str:
        if self.regime == "actual" and not self.pair_mean_fields:
            return "symmetric"
        return "asymmetric"


@dataclass
class Trajectory:
    times: np.ndarray
    p0: np.ndarray
    pF: np.ndarray
    pV: np.ndarray
    energy: np.ndarray
    weight: np.ndarray
    final_state: np.ndarray
    states: np.ndarray | None = None
    extinguished: bool = False
    mean_fields: np.ndarray | None = None

    @property
    def survival_weight(self) -> float:
        return float(self.weight[-1])


# ---------------------------------------------------------------- seeds


def trajectory_seeds(master_seed: int, n_traj: int) -> list[int]:
    """Per-trajectory 64-bit seeds; seed k depends only on (master_seed, k)."""
    children = np.random.SeedSequence(master_seed).spawn(n_traj)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def noise_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def init_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 1])


def measure_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 2])


# ---------------------------------------------------------------- states


def _pair_triplets() -> np.ndarray:
    return np.asarray(PAIR_Q_BASIS)[:, 1:]


def _product(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


def initial_state(
    network: BooleanNetwork, kind: InitKind = "random_symmetric", rng: np.random.Generator | int | None = None
) -> np.ndarray:
    """Normalized state in the all-triplet space.

    random_symmetric: complex Gaussian amplitudes, projected and normalized.
    uniform_triplet: per pair, equal superposition of the three Cartesian
      triplet states (each triode row equally likely on measurement).
    basis_symmetric: per pair, one Cartesian triplet state chosen at random.
    """
    rng = np.random.default_rng(rng)
    T = network.T
    trip = _pair_triplets()
    if kind == "random_symmetric":
        z = rng.standard_normal(dim(T)) + 1j * rng.standard_normal(dim(T))
        psi = symmetrizer(T) @ z
    elif kind == "uniform_triplet":
        psi = _product([trip.sum(axis=1) / np.sqrt(3)] * T)
    elif kind == "basis_symmetric":
        psi = _product([trip[:, rng.integers(3)] for _ in range(T)])
    elif kind == "field_ground":
        raise ValueError("field_ground depends on the trajectory's fields; pass it to evolve()")
    else:
        raise ValueError(f"unknown initial state kind {kind!r}")
    return psi / np.linalg.norm(psi)


def _ground_in_triplet_space(H: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Lowest eigenvectors of P H P inside ran(P), batched over leading axes."""
    shift = 2.0 * np.max(np.abs(H)) * H.shape[-1] + 1.0
    eye = np.eye(H.shape[-1])
    K = P @ H @ P + shift * (eye - P)
    _, vecs = np.linalg.eigh(K)
    psi = vecs[..., :, 0]
    # fix the global phase for reproducibility
    k = np.argmax(np.abs(psi), axis=-1)
    ph = np.take_along_axis(psi, k[..., None], axis=-1)
    return psi * (np.abs(ph) / ph)


# ---------------------------------------------------------------- stepping


def step(state: np.ndarray, H: np.ndarray, dt: float) -> np.ndarray:
    """Apply exp(-i H dt) to a state (scaled Taylor series, exact to round-off)."""
    H = np.asarray(H)
    if not is_hermitian(H, HERMITIAN_TOL * max(1.0, float(np.max(np.abs(H))))):
        raise ValueError("step() needs a Hermitian operator")
    return expm_apply(H[None], np.asarray(state, dtype=complex)[None], dt)[0]


def expm_apply(H: np.ndarray, states: np.ndarray, dt: float, theta: float = 0.5, terms: int = 16) -> np.ndarray:
    """exp(-i H dt) psi for batches H (B, d, d), psi (B, d).

    Each row's step is split into s substeps with ||H||_1 dt / s <= theta and
    each substep is a Taylor sum of fixed length; the truncation error is
    below theta^(terms+1) / (terms+1)! ~ 2e-20. Rows are treated
    independently, so a trajectory's result does not depend on its batch.
    """
    norms = np.abs(H).sum(axis=-2).max(axis=-1)
    subs = np.maximum(1, np.ceil(norms * abs(dt) / theta)).astype(int)
    h = (dt / subs)[:, None]
    out = np.array(states, dtype=complex)
    for r in range(int(subs.max())):
        active = subs > r
        term = out
        acc = out.copy()
        for k in range(1, terms + 1):
            term = (-1j * h / k) * np.matmul(H, term[..., None])[..., 0]
            acc += term
        out = np.where(active[:, None], acc, out)
    return out


def _coupling_basis(T: int, mode: str) -> np.ndarray:
    """Flattened Pauli stack: (n_field_components, d*d)."""
    S = _pauli_stack(T)
    if mode == "symmetric":
        S = S.sum(axis=1)
    return S.reshape(-1, dim(T) ** 2)


def _evolve_batch(
    network: BooleanNetwork,
    cfg: IntegratorConfig,
    sched: NoiseSchedule,
    seeds: Sequence[int],
    init: np.ndarray | str,
    hcfg: HamiltonianConfig | None = None,
    log_fields: bool = False,
) -> list[Trajectory]:
    hcfg = hcfg or HamiltonianConfig(network)
    T, d = network.T, dim(network.T)
    bound = norm_bound(hcfg, sched.sigma0)
    if cfg.dt * bound > STEP_BOUND * (1 + 1e-12):
        raise ValueError(
            f"dt={cfg.dt} too large: dt * bound = {cfg.dt * bound:.3g} > {STEP_BOUND} "
            f"(bound g(W + 18 T sigma0) = {bound:.3g})"
        )
    B = len(seeds)
    HN = wire_hamiltonian(hcfg)
    P = symmetrizer(T)
    ps = projector_set(network)
    mode = cfg.field_mode
    basis = _coupling_basis(T, "asymmetric" if mode == "asymmetric" else "symmetric")
    proc = FieldProcess(sched, T, mode, [noise_rng(s) for s in seeds])

    def hamiltonians(t: float) -> tuple[np.ndarray, np.ndarray]:
        vals = proc.sample_values(t)
        if mode == "asymmetric" and cfg.regime == "actual":
            used = 0.5 * (vals[:, :, 0] + vals[:, :, 1])
            flat = rowwise_matmul(used.reshape(B, -1), _coupling_basis(T, "symmetric"))
        else:
            flat = rowwise_matmul(vals.reshape(B, -1), basis)
        return HN + hcfg.g * flat.reshape(B, d, d), vals

    n = cfg.n_steps
    H, vals = hamiltonians(0.0)
    if isinstance(init, str):
        if init != "field_ground":
            states = np.stack([initial_state(network, init, init_rng(s)) for s in seeds])
        else:
            states = _ground_in_triplet_space(H, P)
    else:
        init = np.asarray(init, dtype=complex)
        states = np.broadcast_to(init, (B, d)).copy() if init.ndim == 1 else init.copy()
    if np.any(np.abs(np.linalg.norm(states, axis=1) - 1) > NORM_TOL):
        raise ValueError("initial state is not normalized")

    record = sorted(set(range(0, n + 1, cfg.record_stride)) | {n})
    n_rec = len(record)
    times = np.array(record) * cfg.dt
    obs = np.zeros((B, n_rec, 3))
    energy = np.zeros((B, n_rec))
    weight_tr = np.ones((B, n_rec))
    stored = np.zeros((B, n_rec, d), dtype=complex) if cfg.store_states else None
    field_log = [] if log_fields else None
    weight = np.ones(B)
    alive = np.ones(B, dtype=bool)

    def snapshot(r: int) -> None:
        obs[:, r] = decompose_batch(states, ps)
        energy[:, r] = energy_batch(states, ps, hcfg.g)
        weight_tr[:, r] = weight
        if stored is not None:
            stored[:, r] = states

    snapshot(0)
    r = 1
    for k in range(n):
        if k > 0:
            H, vals = hamiltonians(k * cfg.dt)
        if field_log is not None:
            field_log.append(vals.copy())
        new = expm_apply(H, states, cfg.dt)
        states = np.where(alive[:, None], new, states)
        if cfg.regime == "projected" and (k + 1) % cfg.projection_stride == 0:
            proj = rowwise_matmul(states, P.T)
            nrm2 = np.einsum("bi,bi->b", proj.conj(), proj).real
            dead = alive & (nrm2 < EXTINCTION_NORM**2)
            weight = np.where(alive, weight * nrm2, weight)
            alive &= ~dead
            weight[dead] = 0.0
            safe = np.where(alive, np.sqrt(np.maximum(nrm2, 1e-300)), 1.0)
            states = np.where(alive[:, None], proj / safe[:, None], states)
        if r < n_rec and record[r] == k + 1:
            snapshot(r)
            r += 1

    out = []
    for b in range(B):
        out.append(
            Trajectory(
                times=times,
                p0=obs[b, :, 0],
                pF=obs[b, :, 1],
                pV=obs[b, :, 2],
                energy=energy[b],
                weight=weight_tr[b],
                final_state=states[b],
                states=None if stored is None else stored[b],
                extinguished=not alive[b],
                mean_fields=None
                if field_log is None
                else np.stack([v[b] if mode == "symmetric" else 0.5 * (v[b][:, 0] + v[b][:, 1]) for v in field_log]),
            )
        )
    return out


def evolve(
    network: BooleanNetwork,
    cfg: IntegratorConfig,
    sched: NoiseSchedule,
    init: np.ndarray | str,
    hcfg: HamiltonianConfig | None = None,
    log_fields: bool = False,
) -> Trajectory:
    """Integrate one trajectory; the noise stream is seeded by ``sched.seed``.

    ``init`` is a normalized state vector, an initial-state kind (drawn from
    the trajectory's init stream), or ``"field_ground"``: the lowest state of
    the projected Hamiltonian at t = 0 inside the all-triplet space.
    """
    return _evolve_batch(network, cfg, sched, [sched.seed], init, hcfg, log_fields)[0]


# ---------------------------------------------------------------- ensembles


@dataclass
class EnsembleResult:
    times: np.ndarray
    p0: np.ndarray
    pF: np.ndarray
    pV: np.ndarray
    energy: np.ndarray
    weight: np.ndarray
    seeds: list[int]
    trajectories: list[Trajectory] = field(repr=False)
    samples: list[tuple[int, ...]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return len(self.seeds)

    def per_trajectory(self, name: str) -> np.ndarray:
        return np.stack([getattr(t, name) for t in self.trajectories])


def weighted_average(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Average over axis 0 weighted per snapshot; plain mean if all weights vanish."""
    tot = weights.sum(axis=0)
    safe = np.where(tot > 0, tot, 1.0)
    avg = (weights * values).sum(axis=0) / safe
    return np.where(tot > 0, avg, values.mean(axis=0))


def ensemble_run(
    network: BooleanNetwork,
    cfg: IntegratorConfig,
    sched: NoiseSchedule,
    n_traj: int,
    master_seed: int,
    init: np.ndarray | str = "random_symmetric",
    hcfg: HamiltonianConfig | None = None,
    batch_size: int = 256,
) -> EnsembleResult:
    """Run ``n_traj`` trajectories and average their traces.

    Projected-regime averages are weighted by survival weight. One terminal
    measurement per trajectory (weighted trajectories are sampled as-is;
    their weights are reported alongside).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    seeds = trajectory_seeds(master_seed, n_traj)
    trajs: list[Trajectory] = []
    for start in range(0, n_traj, batch_size):
        chunk = seeds[start : start + batch_size]
        trajs += _evolve_batch(network, cfg, sched, chunk, init, hcfg)
    stack = {k: np.stack([getattr(t, k) for t in trajs]) for k in ("p0", "pF", "pV", "energy", "weight")}
    w = stack["weight"] if cfg.regime == "projected" else np.ones_like(stack["weight"])
    avg = {k: weighted_average(stack[k], w) for k in ("p0", "pF", "pV", "energy")}
    samples = [measure(t.final_state, network, measure_rng(s)) for t, s in zip(trajs, seeds)]
    counts: dict[str, int] = {}
    for a in samples:
        key = "".join(map(str, a))
        counts[key] = counts.get(key, 0) + 1
    return EnsembleResult(
        times=trajs[0].times,
        p0=avg["p0"],
        pF=avg["pF"],
        pV=avg["pV"],
        energy=avg["energy"],
        weight=stack["weight"].mean(axis=0),
        seeds=seeds,
        trajectories=trajs,
        samples=samples,
        counts=dict(sorted(counts.items())),
    )


TRACE_HEADER = ("t", "p0", "pF", "pV", "E_N", "weight")


def write_trace_csv(path, res: EnsembleResult | Trajectory) -> None:
    """Snapshot trace, header t,p0,pF,pV,E_N,weight; floats in repr form."""
    w = res.weight
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_HEADER)
        for row in zip(res.times, res.p0, res.pF, res.pV, res.energy, w):
            wr.writerow([repr(float(v)) for v in row])


def read_trace_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        missing = [c for c in TRACE_HEADER if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = [list(map(float, r)) for r in rd if r]
    arr = np.array(rows).reshape(-1, len(header))
    return {name: arr[:, k] for k, name in enumerate(header)}


def with_dt(cfg: IntegratorConfig, dt: float) -> IntegratorConfig:
    return replace(cfg, dt=dt)
