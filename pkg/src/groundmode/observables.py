"""Solution / frustrated / violated decomposition, network energy, and measurement.

Every operator here (the q's, P, H_N and the three projectors) is diagonal
in the joint q eigenbasis, so expectation values are computed from Born
weights in that basis. The explicit matrices are kept as the reference
form and are checked against the diagonal form in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hamiltonian import HamiltonianConfig, wire_hamiltonian
from .network import Assignment, BooleanNetwork
from .spin_algebra import PAIR_Q_VALUES, dim, q_eigenbasis, q_node, rowwise_matmul, symmetrizer

SUM_TOL = 1e-9


@dataclass(frozen=True)
class ProbabilityDecomposition:
    p0: float
    pF: float
    pV: float
    t: float = 0.0

    def total(self) -> float:
        return self.p0 + self.pF + self.pV


@dataclass(frozen=True)
class ProjectorSet:
    network: BooleanNetwork
    Pi0: np.ndarray
    PiF: np.ndarray
    PiV: np.ndarray
    # diagonals of Pi0, PiF, PiV and H_N/g in the joint q eigenbasis
    d0: np.ndarray
    dF: np.ndarray
    dV: np.ndarray
    frustration: np.ndarray
    # q values of every eigenbasis column, shape (4^T, Q), node order 1..Q
    assignments: np.ndarray


def basis_assignments(network: BooleanNetwork) -> np.ndarray:
    """Node values (q_1..q_Q) of each joint eigenvector, shape (4^T, Q)."""
    T = network.T
    out = np.zeros((4**T, network.Q), dtype=np.int8)
    for col in range(4**T):
        digits = np.base_repr(col, 4).zfill(T)
        for tau, tri in enumerate(network.triodes):
            vals = PAIR_Q_VALUES[int(digits[tau])]
            for ax, node in enumerate(tri):
                out[col, node - 1] = vals[ax]
    return out


@lru_cache(maxsize=32)
def projector_set(network: BooleanNetwork) -> ProjectorSet:
    """Pi_sat = prod_w (1 - (q_i - q_j)^2); Pi0 = P Pi_sat; PiF = P (1 - Pi_sat); PiV = 1 - P."""
    T = network.T
    eye = np.eye(dim(T), dtype=complex)
    P = symmetrizer(T)
    sat = eye.copy()
    for i, j in network.wires:
        d = q_node(network, i) - q_node(network, j)
        sat = sat @ (eye - d @ d)
    Pi0 = P @ sat
    PiF = P @ (eye - sat)
    PiV = eye - P

    bits = basis_assignments(network)
    triplet = np.all(
        [bits[:, [i - 1 for i in tri]].sum(axis=1) == 2 for tri in network.triodes], axis=0
    )
    n_frustrated = np.zeros(4**T)
    for i, j in network.wires:
        n_frustrated += bits[:, i - 1] != bits[:, j - 1]
    d0 = (triplet & (n_frustrated == 0)).astype(float)
    dF = (triplet & (n_frustrated > 0)).astype(float)
    dV = (~triplet).astype(float)
    for a in (Pi0, PiF, PiV, d0, dF, dV, n_frustrated, bits):
        a.setflags(write=False)
    return ProjectorSet(network, Pi0, PiF, PiV, d0, dF, dV, n_frustrated, bits)


def born_weights(states: np.ndarray, T: int) -> np.ndarray:
    """|<e_k|psi>|^2 in the joint q eigenbasis; works on (d,) or (..., d)."""
    V = q_eigenbasis(T)
    c = rowwise_matmul(np.asarray(states), V.conj())
    return (c.real**2 + c.imag**2)


def _density_diagonal(rho: np.ndarray, T: int) -> np.ndarray:
    V = q_eigenbasis(T)
    return np.einsum("ki,ij,jk->k", V.conj().T, rho, V).real


def _weights(x: np.ndarray, T: int) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 2 and x.shape[0] == x.shape[1] == dim(T):
        return _density_diagonal(x, T)
    return born_weights(x, T)


def decompose(x: np.ndarray, ps: ProjectorSet, t: float = 0.0) -> ProbabilityDecomposition:
    """Probabilities (p0, pF, pV) of a state vector or a density matrix."""
    w = _weights(x, ps.network.T)
    return ProbabilityDecomposition(float(w @ ps.d0), float(w @ ps.dF), float(w @ ps.dV), t)


def decompose_batch(states: np.ndarray, ps: ProjectorSet) -> np.ndarray:
    """(p0, pF, pV) for a batch of state vectors, shape (..., 3)."""
    w = born_weights(states, ps.network.T)
    return rowwise_matmul(w, np.stack([ps.d0, ps.dF, ps.dV], axis=-1))


def decompose_explicit(x: np.ndarray, ps: ProjectorSet, t: float = 0.0) -> ProbabilityDecomposition:
    """Same as ``decompose`` but through the full projector matrices."""
    x = np.asarray(x)
    if x.ndim == 2:
        vals = [np.trace(Pi @ x).real for Pi in (ps.Pi0, ps.PiF, ps.PiV)]
    else:
        vals = [np.vdot(x, Pi @ x).real for Pi in (ps.Pi0, ps.PiF, ps.PiV)]
    return ProbabilityDecomposition(*map(float, vals), t)


@dataclass(frozen=True)
class Energy:
    total: float
    frustrated_part: float


def network_energy(x: np.ndarray, cfg: HamiltonianConfig) -> Energy:
    """<H_N>, and Tr(PiF rho PiF H_N), the part carried by the frustrated sector."""
    HN = wire_hamiltonian(cfg)
    ps = projector_set(cfg.network)
    x = np.asarray(x)
    rho = x if x.ndim == 2 else np.outer(x, x.conj())
    total = np.trace(HN @ rho).real
    frustrated = np.trace(ps.PiF @ rho @ ps.PiF @ HN).real
    return Energy(float(total), float(frustrated))


def energy_batch(states: np.ndarray, ps: ProjectorSet, g: float = 1.0) -> np.ndarray:
    return g * rowwise_matmul(born_weights(states, ps.network.T), ps.frustration[:, None])[..., 0]


def measure(state: np.ndarray, network: BooleanNetwork, rng: np.random.Generator) -> Assignment:
    """Joint projective measurement of every node variable (Born rule)."""
    ps = projector_set(network)
    w = born_weights(np.asarray(state), network.T)
    w = w / w.sum()
    k = rng.choice(w.size, p=w)
    return tuple(int(b) for b in ps.assignments[k])


def measure_many(
    state: np.ndarray, network: BooleanNetwork, rng: np.random.Generator, shots: int
) -> dict[str, int]:
    """Histogram of ``shots`` measurements keyed by bitstring q_1..q_Q."""
    ps = projector_set(network)
    w = born_weights(np.asarray(state), network.T)
    counts = rng.multinomial(shots, w / w.sum())
    out = {}
    for k in np.nonzero(counts)[0]:
        out["".join(map(str, ps.assignments[k]))] = int(counts[k])
    return dict(sorted(out.items()))
