"""Boolean networks in triode/wire normal form.

Nodes are numbered 1..Q. Every node belongs to exactly one triode, so
Q = 3T. A triode (x, y, z) demands q_x + q_y + q_z = 2; a wire {i, j}
demands q_i = q_j. The looser XOR gate demands even parity on a triode.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

Assignment = tuple[int, ...]
GateKind = Literal["triode", "xor"]

ENUMERATION_BOUND = 24


class NetworkError(ValueError):
    """Raised for malformed or inconsistent network descriptions."""


@dataclass(frozen=True)
class BooleanNetwork:
    triodes: tuple[tuple[int, int, int], ...]
    wires: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        triodes = tuple(tuple(int(i) for i in t) for t in self.triodes)
        wires = tuple(tuple(int(i) for i in w) for w in self.wires)
        object.__setattr__(self, "triodes", triodes)
        object.__setattr__(self, "wires", wires)
        _validate(triodes, wires)

    @property
    def T(self) -> int:
        return len(self.triodes)

    @property
    def Q(self) -> int:
        return 3 * len(self.triodes)

    @property
    def W(self) -> int:
        return len(self.wires)

    def node_site(self, node: int) -> tuple[int, int]:
        """Return (triode index, axis index), both 0-based, of a 1-based node id."""
        for tau, tri in enumerate(self.triodes):
            if node in tri:
                return tau, tri.index(node)
        raise NetworkError(f"unknown node {node}")

    def to_dict(self) -> dict:
        return {
            "triodes": [list(t) for t in self.triodes],
            "wires": [list(w) for w in self.wires],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_text(self) -> str:
        lines = [f"triode {a} {b} {c}" for a, b, c in self.triodes]
        lines += [f"wire {i} {j}" for i, j in self.wires]
        return "\n".join(lines) + "\n"


def _validate(triodes, wires) -> None:
    if len(triodes) < 1:
        raise NetworkError("network needs at least one triode")
    Q = 3 * len(triodes)
    seen: dict[int, int] = {}
    for k, tri in enumerate(triodes):
        if len(tri) != 3:
            raise NetworkError(f"triode {k + 1} must have 3 nodes, got {len(tri)}")
        for node in tri:
            if not 1 <= node <= Q:
                raise NetworkError(
                    f"triode {k + 1}: node {node} outside 1..{Q} (node count is 3 x triodes)"
                )
            if node in seen:
                raise NetworkError(
                    f"node {node} appears in two triodes ({seen[node] + 1} and {k + 1})"
                )
            seen[node] = k
    # every id in 1..Q is now covered exactly once (3T distinct ids in range)
    pairs = set()
    for k, w in enumerate(wires):
        if len(w) != 2:
            raise NetworkError(f"wire {k + 1} must have 2 nodes, got {len(w)}")
        i, j = w
        for node in (i, j):
            if not 1 <= node <= Q:
                raise NetworkError(f"wire {k + 1}: unknown node {node}")
        if i == j:
            raise NetworkError(f"wire {k + 1}: endpoints must be distinct")
        key = frozenset((i, j))
        if key in pairs:
            raise NetworkError(f"wire {k + 1}: duplicate wire {{{i},{j}}}")
        pairs.add(key)


def canonical_network() -> BooleanNetwork:
    """Six-node, two-triode, four-wire example with the single solution
    q3 = q5 = 0, q1 = q2 = q4 = q6 = 1."""
    return BooleanNetwork(triodes=((1, 2, 3), (4, 5, 6)), wires=((1, 2), (3, 5), (1, 4), (2, 6)))


# ---------------------------------------------------------------- parsing


def parse_network(text: str) -> BooleanNetwork:
    """Parse either the JSON format or the line-based text format."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return parse_json(text)
    return parse_text(text)


def parse_json(text: str) -> BooleanNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"JSON syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise NetworkError("network document must be a JSON object")
    unknown = set(doc) - {"triodes", "wires"}
    if unknown:
        raise NetworkError(f"unknown keys: {sorted(unknown)}")
    if "triodes" not in doc:
        raise NetworkError("missing key 'triodes'")
    triodes = _int_rows(doc["triodes"], "triodes")
    wires = _int_rows(doc.get("wires", []), "wires")
    return BooleanNetwork(triodes=tuple(triodes), wires=tuple(wires))


def _int_rows(rows, name):
    if not isinstance(rows, list):
        raise NetworkError(f"'{name}' must be an array")
    out = []
    for k, row in enumerate(rows):
        if not isinstance(row, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in row
        ):
            raise NetworkError(f"'{name}'[{k}] must be an array of integers")
        out.append(tuple(row))
    return out


_LINE = re.compile(r"^(triode|wire)((?:\s+\S+)*)\s*$")


def parse_text(text: str) -> BooleanNetwork:
    triodes, wires = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise NetworkError(f"line {lineno}, column 1: expected 'triode' or 'wire'")
        kind, rest = m.group(1), m.group(2).split()
        want = 3 if kind == "triode" else 2
        if len(rest) != want:
            raise NetworkError(f"line {lineno}: '{kind}' takes {want} node ids, got {len(rest)}")
        bad = [tok for tok in rest if not re.fullmatch(r"-?\d+", tok)]
        if bad:
            col = raw.find(bad[0]) + 1
            raise NetworkError(f"line {lineno}, column {col}: node id {bad[0]!r} is not an integer")
        ids = tuple(int(tok) for tok in rest)
        (triodes if kind == "triode" else wires).append(ids)
    return BooleanNetwork(triodes=tuple(triodes), wires=tuple(wires))


# ---------------------------------------------------------------- gate checks


def check_triode(a: Sequence[int], t: Sequence[int]) -> bool:
    """True iff the triode's three node values sum to 2 (1-based node ids)."""
    return a[t[0] - 1] + a[t[1] - 1] + a[t[2] - 1] == 2


def check_wire(a: Sequence[int], w: Sequence[int]) -> bool:
    return a[w[0] - 1] == a[w[1] - 1]


def check_xor(a: Sequence[int], t: Sequence[int]) -> bool:
    return (a[t[0] - 1] + a[t[1] - 1] + a[t[2] - 1]) % 2 == 0


def is_solution(n: BooleanNetwork, a: Sequence[int], gate_kind: GateKind = "triode") -> bool:
    if len(a) != n.Q:
        raise NetworkError(f"assignment has {len(a)} bits, network has Q={n.Q}")
    gate = check_triode if gate_kind == "triode" else check_xor
    return all(gate(a, t) for t in n.triodes) and all(check_wire(a, w) for w in n.wires)


def brute_force_solutions(
    n: BooleanNetwork, gate_kind: GateKind = "triode", bound: int = ENUMERATION_BOUND
) -> list[Assignment]:
    """Enumerate all 2^Q assignments and keep those satisfying every gate and wire.

    Output is lexicographic in (q1, ..., qQ), i.e. q1 is the most significant bit.
    """
    if gate_kind not in ("triode", "xor"):
        raise ValueError(f"unknown gate kind {gate_kind!r}")
    Q = n.Q
    if Q > bound:
        raise NetworkError(f"Q={Q} exceeds the enumeration bound {bound}")
    shifts = {node: Q - node for node in range(1, Q + 1)}
    found: list[np.ndarray] = []
    chunk = 1 << 20
    for start in range(0, 1 << Q, chunk):
        x = np.arange(start, min(start + chunk, 1 << Q), dtype=np.int64)
        bit = {node: (x >> s) & 1 for node, s in shifts.items()}
        ok = np.ones(x.shape, dtype=bool)
        for a, b, c in n.triodes:
            total = bit[a] + bit[b] + bit[c]
            ok &= (total == 2) if gate_kind == "triode" else (total % 2 == 0)
        for i, j in n.wires:
            ok &= bit[i] == bit[j]
        found.append(x[ok])
    codes = np.concatenate(found)
    return [tuple(int((c >> shifts[node]) & 1) for node in range(1, Q + 1)) for c in codes]


# ---------------------------------------------------------------- GF(2)


def gf2_rref(A: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2). Returns (R, pivot columns)."""
    R = (np.asarray(A, dtype=np.uint8) & 1).copy()
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(R[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        mask = R[:, c].astype(bool)
        mask[r] = False
        R[mask] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


@dataclass(frozen=True)
class AffineSolution:
    """Solution set {particular + span(basis)} over GF(2)."""

    particular: Assignment
    basis: tuple[Assignment, ...]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def enumerate(self) -> list[Assignment]:
        p = np.array(self.particular, dtype=np.uint8)
        B = np.array(self.basis, dtype=np.uint8).reshape(len(self.basis), len(p))
        out = []
        for mask in range(1 << len(self.basis)):
            v = p.copy()
            for k in range(len(self.basis)):
                if (mask >> k) & 1:
                    v ^= B[k]
            out.append(tuple(int(b) for b in v))
        return sorted(out)


def gf2_solve(A: np.ndarray, b: np.ndarray) -> AffineSolution | None:
    """Solve A x = b over GF(2); None if inconsistent. Free variables are set to 0."""
    A = np.asarray(A, dtype=np.uint8) & 1
    b = np.asarray(b, dtype=np.uint8).reshape(-1, 1) & 1
    n = A.shape[1]
    R, pivots = gf2_rref(np.hstack([A, b]))
    if n in pivots:
        return None
    x = np.zeros(n, dtype=np.uint8)
    for row, c in enumerate(pivots):
        x[c] = R[row, n]
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.uint8)
        v[f] = 1
        for row, c in enumerate(pivots):
            v[c] = R[row, f]
        basis.append(tuple(int(t) for t in v))
    return AffineSolution(tuple(int(t) for t in x), tuple(basis))


def xor_system(n: BooleanNetwork) -> np.ndarray:
    """Rows: one even-parity row per triode, one equality row per wire."""
    A = np.zeros((n.T + n.W, n.Q), dtype=np.uint8)
    for r, tri in enumerate(n.triodes):
        A[r, [i - 1 for i in tri]] = 1
    for r, (i, j) in enumerate(n.wires, start=n.T):
        A[r, i - 1] = A[r, j - 1] = 1
    return A


def solve_xor_network(n: BooleanNetwork) -> AffineSolution:
    sol = gf2_solve(xor_system(n), np.zeros(n.T + n.W, dtype=np.uint8))
    assert sol is not None  # homogeneous system
    return sol


# ---------------------------------------------------------------- generators


def random_network(
    T: int,
    n_wires: int,
    rng: np.random.Generator,
    planted: bool = False,
    shuffle_nodes: bool = True,
) -> BooleanNetwork:
    """Seeded random network. With ``planted`` the wires only join nodes that
    agree under a hidden triode-satisfying assignment, so at least one
    solution exists."""
    Q = 3 * T
    ids = rng.permutation(Q) + 1 if shuffle_nodes else np.arange(1, Q + 1)
    triodes = [tuple(int(v) for v in ids[3 * k : 3 * k + 3]) for k in range(T)]
    hidden = np.zeros(Q + 1, dtype=int)
    for tri in triodes:
        zero = tri[rng.integers(3)]
        for node in tri:
            hidden[node] = 0 if node == zero else 1
    candidates = [
        (i, j)
        for i in range(1, Q + 1)
        for j in range(i + 1, Q + 1)
        if not planted or hidden[i] == hidden[j]
    ]
    k = min(n_wires, len(candidates))
    picks = rng.choice(len(candidates), size=k, replace=False) if k else []
    wires = [candidates[p] for p in sorted(picks)]
    return BooleanNetwork(triodes=tuple(triodes), wires=tuple(wires))


def load_network(path) -> BooleanNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def bitstring(a: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in a)
