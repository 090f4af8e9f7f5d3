"""Operator algebra for T proton pairs on the 4^T-dimensional network space.

Tensor factors are ordered triode-major, proton-minor: factor 2*tau + p
(0-based) is proton p of triode tau, with the leftmost factor most
significant. Each spin uses the basis (up, down). Operators are dense
complex numpy arrays, returned read-only so they can be shared.
"""

from __future__ import annotations

from functools import lru_cache, reduce
from typing import Literal, TextIO

import numpy as np

Axis = Literal["x", "y", "z"]
AXES: tuple[Axis, ...] = ("x", "y", "z")

HERMITIAN_TOL = 1e-12
MAX_T = 5

I2 = np.eye(2, dtype=complex)
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Joint eigenbasis of (q_x, q_y, q_z) on one pair, basis |up up>, |up dn>, |dn up>, |dn dn>.
# Columns: singlet (0,0,0); the s_x = 0, s_y = 0, s_z = 0 triplet states.
_r = 1 / np.sqrt(2)
PAIR_Q_BASIS = np.array(
    [
        [0, -_r, 1j * _r, 0],
        [_r, 0, 0, _r],
        [-_r, 0, 0, _r],
        [0, _r, 1j * _r, 0],
    ],
    dtype=complex,
)
PAIR_Q_VALUES = ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0))
PAIR_Q_BASIS.setflags(write=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _axis_index(axis: Axis | int) -> int:
    if isinstance(axis, str):
        if axis not in PAULI:
            raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
        return AXES.index(axis)
    if axis not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2; got {axis!r}")
    return int(axis)


def _check_site(triode: int, T: int) -> None:
    if not 1 <= T <= MAX_T:
        raise ValueError(f"T must be in 1..{MAX_T}, got {T}")
    if not 1 <= triode <= T:
        raise ValueError(f"triode index {triode} outside 1..{T}")


def dim(T: int) -> int:
    return 4**T


@lru_cache(maxsize=None)
def embed_pauli(triode: int, proton: int, axis: Axis, T: int) -> np.ndarray:
    """Pauli matrix of proton ``proton`` (1 or 2) in triode ``triode`` (1-based)."""
    _check_site(triode, T)
    if proton not in (1, 2):
        raise ValueError(f"proton must be 1 or 2, got {proton}")
    slot = 2 * (triode - 1) + (proton - 1)
    factors = [I2] * (2 * T)
    factors[slot] = PAULI[AXES[_axis_index(axis)]]
    return _frozen(reduce(np.kron, factors))


@lru_cache(maxsize=None)
def spin_component(triode: int, axis: Axis, T: int) -> np.ndarray:
    """Total spin s = (sigma_1 + sigma_2) / 2 of one pair along ``axis``."""
    return _frozen(0.5 * (embed_pauli(triode, 1, axis, T) + embed_pauli(triode, 2, axis, T)))


@lru_cache(maxsize=None)
def q_operator(triode: int, axis: Axis, T: int) -> np.ndarray:
    """Node observable q = s^2, eigenvalues 0 and 1."""
    s = spin_component(triode, axis, T)
    return _frozen(s @ s)


def q_node(network, node: int) -> np.ndarray:
    """q operator of a 1-based network node: position in its triode picks the axis."""
    tau, ax = network.node_site(node)
    return q_operator(tau + 1, AXES[ax], network.T)


@lru_cache(maxsize=None)
def exchange_operator(triode: int, T: int) -> np.ndarray:
    """Swap of the two proton factors of one triode: (1 + sigma_1 . sigma_2) / 2."""
    _check_site(triode, T)
    swap = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            swap[2 * b + a, 2 * a + b] = 1
    left = np.eye(4 ** (triode - 1), dtype=complex)
    right = np.eye(4 ** (T - triode), dtype=complex)
    return _frozen(np.kron(np.kron(left, swap), right))


@lru_cache(maxsize=None)
def triplet_projector(triode: int, T: int) -> np.ndarray:
    """(1 + X) / 2 for one pair."""
    X = exchange_operator(triode, T)
    return _frozen(0.5 * (np.eye(dim(T), dtype=complex) + X))


@lru_cache(maxsize=None)
def symmetrizer(T: int) -> np.ndarray:
    """P = 2^-T prod_tau (1 + X_tau): orthogonal projector onto the all-triplet space."""
    if not 1 <= T <= MAX_T:
        raise ValueError(f"T must be in 1..{MAX_T}, got {T}")
    pair = 0.5 * (np.eye(4, dtype=complex) + exchange_operator(1, 1))
    return _frozen(reduce(np.kron, [pair] * T))


@lru_cache(maxsize=None)
def q_eigenbasis(T: int) -> np.ndarray:
    """Unitary whose columns jointly diagonalize every q; column index in base 4
    (triode-major) picks the PAIR_Q_VALUES row per triode."""
    return _frozen(reduce(np.kron, [np.asarray(PAIR_Q_BASIS)] * T))


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def rowwise_matmul(X: np.ndarray, M: np.ndarray) -> np.ndarray:
    """X @ M computed one row at a time, so each row's result is bitwise
    independent of how many rows are stacked with it."""
    return np.matmul(X[..., None, :], M)[..., 0, :]


def maxabs(A: np.ndarray) -> float:
    return float(np.max(np.abs(A))) if A.size else 0.0


def is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return maxabs(A - A.conj().T) < tol


def is_projector(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return is_hermitian(A, tol) and maxabs(A @ A - A) < tol


def dump_operator(A: np.ndarray, fh: TextIO, precision: int = 17) -> None:
    """Write a matrix as text: a header line ``rows cols`` then one row per line
    of ``re,im`` pairs separated by spaces."""
    A = np.asarray(A, dtype=complex)
    fh.write(f"{A.shape[0]} {A.shape[1]}\n")
    for row in A:
        fh.write(" ".join(f"{z.real:.{precision}g},{z.imag:.{precision}g}" for z in row) + "\n")


def load_operator(fh: TextIO) -> np.ndarray:
    rows, cols = (int(v) for v in fh.readline().split())
    A = np.empty((rows, cols), dtype=complex)
    for r in range(rows):
        parts = fh.readline().split()
        for c, tok in enumerate(parts):
            re_, im = tok.split(",")
            A[r, c] = complex(float(re_), float(im))
    return A
