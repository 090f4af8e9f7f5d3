"""Wire frustration Hamiltonian, network-bath couplings and the stochastic field bath.

The bath is a classical surrogate: each Cartesian field component is an
Ornstein-Uhlenbeck process with unit stationary variance, scaled by
``sigma0 * envelope(t)``. Averaging over field realizations stands in for
the trace over bath degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .network import BooleanNetwork
from .spin_algebra import AXES, dim, embed_pauli, exchange_operator, q_node

Mode = Literal["symmetric", "asymmetric"]
Envelope = Literal["linear", "exponential", "constant"]


@dataclass(frozen=True)
class HamiltonianConfig:
    network: BooleanNetwork
    g: float = 1.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")

    @property
    def T(self) -> int:
        return self.network.T


@dataclass(frozen=True)
class NoiseSchedule:
    """Field amplitude schedule and OU correlation time.

    ``t_end`` is where the linear envelope reaches zero; ``decay`` is the
    e-folding time of the exponential envelope. ``noise_dt``, when set, fixes
    the grid on which the OU path is generated independently of the
    integrator step (fields are held piecewise constant between grid points),
    so runs at different ``dt`` can share one field realization.
    """

    sigma0: float = 0.5
    envelope: Envelope = "linear"
    t_end: float = 10.0
    decay: float = 5.0
    correlation_time: float = 1.0
    seed: int = 0
    noise_dt: float | None = None

    def __post_init__(self):
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be >= 0")
        if not self.correlation_time > 0:
            raise ValueError("correlation_time must be > 0")
        if self.envelope not in ("linear", "exponential", "constant"):
            raise ValueError(f"unknown envelope {self.envelope!r}")
        if self.envelope == "linear" and not self.t_end > 0:
            raise ValueError("linear envelope needs t_end > 0")
        if self.envelope == "exponential" and not self.decay > 0:
            raise ValueError("exponential envelope needs decay > 0")
        if self.noise_dt is not None and not self.noise_dt > 0:
            raise ValueError("noise_dt must be > 0")

    def amplitude(self, t) -> np.ndarray | float:
        """Stationary standard deviation of each field component at time t."""
        t = np.asarray(t, dtype=float)
        if self.envelope == "linear":
            env = np.clip(1.0 - t / self.t_end, 0.0, 1.0)
        elif self.envelope == "exponential":
            env = np.exp(-np.maximum(t, 0.0) / self.decay)
        else:
            env = np.ones_like(t)
        out = self.sigma0 * env
        return float(out) if out.ndim == 0 else out


@dataclass
class FieldSample:
    """Per-triode field vectors, shape (T, 3) symmetric or (T, 2, 3) asymmetric."""

    mode: Mode
    values: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        if self.mode == "symmetric":
            return self.values
        return 0.5 * (self.values[:, 0] + self.values[:, 1])

    def symmetric_part(self) -> "FieldSample":
        return FieldSample("symmetric", self.mean)


def field_shape(T: int, mode: Mode) -> tuple[int, ...]:
    if mode == "symmetric":
        return (T, 3)
    if mode == "asymmetric":
        return (T, 2, 3)
    raise ValueError(f"unknown field mode {mode!r}")


class FieldProcess:
    """OU field state for a batch of trajectories, one random stream each.

    ``sample(t)`` must be called with non-decreasing t. The unit process
    advances on its own grid (``noise_dt``, or exactly to each requested time
    when that is None) and is held constant between grid points. Normals are
    drawn from each stream in blocks; numpy's generators yield the same
    sequence in blocks as one at a time, so block size does not matter.
    """

    BLOCK = 512

    def __init__(self, sched: NoiseSchedule, T: int, mode: Mode, rngs=None):
        if rngs is None:
            rngs = [np.random.default_rng(sched.seed)]
        elif isinstance(rngs, np.random.Generator):
            rngs = [rngs]
        self.sched = sched
        self.T = T
        self.mode = mode
        self.rngs = list(rngs)
        self.shape = field_shape(T, mode)
        self.t = 0.0
        self._buf = np.empty((len(self.rngs), 0) + self.shape)
        self._pos = 0
        self.y = self._normals()

    @property
    def batch(self) -> int:
        return len(self.rngs)

    def _normals(self) -> np.ndarray:
        if self._pos == self._buf.shape[1]:
            self._buf = np.stack([r.standard_normal((self.BLOCK,) + self.shape) for r in self.rngs])
            self._pos = 0
        out = self._buf[:, self._pos]
        self._pos += 1
        return out

    def advance(self, h: float) -> None:
        if h < 0:
            raise ValueError("time must not decrease")
        if h == 0:
            return
        a = np.exp(-h / self.sched.correlation_time)
        self.y = a * self.y + np.sqrt(1.0 - a * a) * self._normals()
        self.t += h

    def sample_values(self, t: float) -> np.ndarray:
        """Field arrays at time t, shape (batch, *field_shape)."""
        grid = self.sched.noise_dt
        if grid is None:
            self.advance(t - self.t)
        else:
            # whole grid cells only; tolerate float error at cell edges
            while self.t + grid <= t + 1e-9 * grid:
                self.advance(grid)
        return self.sched.amplitude(t) * self.y

    def sample(self, t: float) -> FieldSample:
        if self.batch != 1:
            raise ValueError("sample() is for single-trajectory processes; use sample_values()")
        return FieldSample(self.mode, self.sample_values(t)[0].copy())


def sample_fields(
    sched: NoiseSchedule, t: float, mode: Mode, state: FieldProcess | None = None, T: int = 1
) -> tuple[FieldSample, FieldProcess]:
    """Draw the fields at time t, creating the process state on first use."""
    if state is None:
        state = FieldProcess(sched, T, mode)
    elif state.mode != mode:
        raise ValueError(f"process is {state.mode}, requested {mode}")
    return state.sample(t), state


def field_path(
    sched: NoiseSchedule, T: int, mode: Mode, times: np.ndarray, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Fields at every time in ``times`` (non-decreasing), stacked on axis 0.
    Consumes random numbers in exactly the order of repeated ``sample`` calls."""
    proc = FieldProcess(sched, T, mode, rng)
    return np.stack([proc.sample_values(float(t))[0] for t in times])


# ---------------------------------------------------------------- operators


@lru_cache(maxsize=32)
def _wire_hamiltonian(network: BooleanNetwork, g: float) -> np.ndarray:
    H = np.zeros((dim(network.T),) * 2, dtype=complex)
    for i, j in network.wires:
        d = q_node(network, i) - q_node(network, j)
        H += d @ d
    H *= g
    H.setflags(write=False)
    return H


def wire_hamiltonian(cfg: HamiltonianConfig) -> np.ndarray:
    """H_N = g * sum over wires of (q_i - q_j)^2."""
    return _wire_hamiltonian(cfg.network, float(cfg.g))


@lru_cache(maxsize=8)
def _pauli_stack(T: int) -> np.ndarray:
    """Array (T, 2, 3, d, d) of embedded Pauli matrices."""
    out = np.empty((T, 2, 3, dim(T), dim(T)), dtype=complex)
    for tau in range(T):
        for p in range(2):
            for a, ax in enumerate(AXES):
                out[tau, p, a] = embed_pauli(tau + 1, p + 1, ax, T)
    out.setflags(write=False)
    return out


def coupling_from_values(values: np.ndarray, mode: Mode, g: float, T: int) -> np.ndarray:
    """Coupling operator(s) for raw field arrays; leading batch axes allowed."""
    S = _pauli_stack(T)
    if mode == "symmetric":
        # same field on both protons
        return g * np.einsum("...ta,tpaij->...ij", values, S)
    return g * np.einsum("...tpa,tpaij->...ij", values, S)


def coupling_symmetric(fields: FieldSample, cfg: HamiltonianConfig) -> np.ndarray:
    """g * sum_tau B_tau . (sigma_tau1 + sigma_tau2)."""
    if fields.mode != "symmetric":
        raise ValueError("coupling_symmetric needs a symmetric field sample (use .symmetric_part())")
    _check_T(fields, cfg)
    return coupling_from_values(fields.values, "symmetric", cfg.g, cfg.T)


def coupling_asymmetric(fields: FieldSample, cfg: HamiltonianConfig) -> np.ndarray:
    """g * sum_tau (B_tau1 . sigma_tau1 + B_tau2 . sigma_tau2)."""
    if fields.mode != "asymmetric":
        raise ValueError("coupling_asymmetric needs an asymmetric field sample")
    _check_T(fields, cfg)
    return coupling_from_values(fields.values, "asymmetric", cfg.g, cfg.T)


def _check_T(fields: FieldSample, cfg: HamiltonianConfig) -> None:
    if fields.values.shape != field_shape(cfg.T, fields.mode):
        raise ValueError(f"field shape {fields.values.shape} does not match T={cfg.T}")


def total_hamiltonian(fields: FieldSample, cfg: HamiltonianConfig) -> np.ndarray:
    """H_N plus the coupling matching the sample's mode. The bath self-energy is
    not represented: the bath is the classical field process."""
    HN = wire_hamiltonian(cfg)
    if fields.mode == "symmetric":
        return HN + coupling_symmetric(fields, cfg)
    return HN + coupling_asymmetric(fields, cfg)


def hamiltonian_at(
    t: float, mode: Mode, cfg: HamiltonianConfig, state: FieldProcess
) -> tuple[np.ndarray, FieldSample]:
    fields, _ = sample_fields(state.sched, t, mode, state)
    return total_hamiltonian(fields, cfg), fields


def norm_bound(cfg: HamiltonianConfig, sigma: float) -> float:
    """Operator-norm bound g * (W + 6T * 3 sigma) used to limit the time step."""
    return cfg.g * (cfg.network.W + 6 * cfg.T * 3 * sigma)


def exchange_commutators(H: np.ndarray, T: int) -> list[float]:
    out = []
    for tau in range(1, T + 1):
        X = exchange_operator(tau, T)
        out.append(float(np.max(np.abs(H @ X - X @ H))))
    return out
