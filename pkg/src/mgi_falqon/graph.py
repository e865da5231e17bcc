"""Weighted graphs, cut values, the QUBO form and an exhaustive MaxCut oracle.

Assignments are bit sequences indexed by vertex; ``bits[i] == 1`` puts vertex
``i`` in the subset S.  Where an assignment is encoded as an integer, vertex
``i`` is bit ``i`` of that integer (least significant bit first), matching the
qubit order used by the simulator.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import InvalidInstanceError, ResourceLimitError

MAX_BRUTE_FORCE_VERTICES = 30
TIE_RTOL = 1e-12

_CHUNK_BITS = 20


@dataclass(frozen=True)
class WeightedGraph:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise InvalidInstanceError(f"n_vertices must be positive, got {self.n_vertices}")
        seen = set()
        normalized = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i > j:
                i, j = j, i
            if i == j or i < 0 or j >= self.n_vertices:
                raise InvalidInstanceError(f"invalid edge ({i}, {j}) for {self.n_vertices} vertices")
            if not np.isfinite(w) or w < 0:
                raise InvalidInstanceError(f"edge ({i}, {j}) has invalid weight {w!r}")
            if (i, j) in seen:
                raise InvalidInstanceError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            normalized.append((i, j, w))
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(i, j, w)`` as parallel numpy arrays."""
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), np.zeros(0)
        i, j, w = zip(*self.edges)
        return np.array(i, dtype=np.int64), np.array(j, dtype=np.int64), np.array(w, dtype=float)

    def digest(self) -> str:
        """SHA-256 of the canonical edge-list serialization."""
        return hashlib.sha256(dumps_edge_list(self).encode()).hexdigest()


def random_complete(n_vertices: int, seed) -> WeightedGraph:
    """Complete graph with i.i.d. Unif(0, 1) weights.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.  Weights are
    drawn in lexicographic edge order ``(0,1), (0,2), ..., (n-2,n-1)``.
    """
    if n_vertices < 2:
        raise InvalidInstanceError(f"a complete graph needs at least 2 vertices, got {n_vertices}")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)]
    weights = rng.random(len(pairs))
    return WeightedGraph(n_vertices, tuple((i, j, float(w)) for (i, j), w in zip(pairs, weights)))


def _check_assignment(n: int, a: Sequence[int]) -> np.ndarray:
    x = np.asarray(a, dtype=np.int64)
    if x.ndim != 1 or x.shape[0] != n:
        raise ValueError(f"assignment of length {x.shape} does not match {n} vertices")
    if np.any((x != 0) & (x != 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return x


def cut_value(g: WeightedGraph, a: Sequence[int]) -> float:
    """Total weight of edges crossing the partition, via x_i + x_j - 2 x_i x_j."""
    x = _check_assignment(g.n_vertices, a)
    total = 0.0
    for i, j, w in g.edges:
        total += w * (x[i] + x[j] - 2 * x[i] * x[j])
    return float(total)


def qubo_matrix(g: WeightedGraph) -> np.ndarray:
    """Upper-triangular QUBO matrix with ``x^T Q x == cut_value``.

    The diagonal holds weighted degrees and ``Q[i, j] = -2 w_ij`` for ``i < j``.
    Only the upper triangle is populated; mirroring it would double count the
    quadratic terms.
    """
    q = np.zeros((g.n_vertices, g.n_vertices))
    for i, j, w in g.edges:
        q[i, i] += w
        q[j, j] += w
        q[i, j] += -2.0 * w
    return q


def qubo_eval(q: np.ndarray, a: Sequence[int]) -> float:
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"QUBO matrix must be square, got shape {q.shape}")
    x = _check_assignment(q.shape[0], a).astype(float)
    return float(x @ q @ x)


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((int(index) >> k) & 1 for k in range(n))


def bits_to_index(bits: Sequence[int]) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


def bitstring(index: int, n: int) -> str:
    """Render an index with bit 0 leftmost."""
    return "".join(str(b) for b in index_to_bits(index, n))


def cut_values_all(g: WeightedGraph, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Cut values for every integer-encoded assignment in ``[start, stop)``."""
    n = g.n_vertices
    if stop is None:
        stop = 1 << n
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.zeros(idx.shape[0])
    for i, j, w in g.edges:
        out += w * (((idx >> i) ^ (idx >> j)) & 1)
    return out


def brute_force_maxcut(g: WeightedGraph) -> tuple[float, set[tuple[int, ...]]]:
    """Exhaustively enumerate all assignments.

    Returns the maximum cut and every assignment within ``TIE_RTOL`` of it,
    mirror pairs included.
    """
    n = g.n_vertices
    if n > MAX_BRUTE_FORCE_VERTICES:
        raise ResourceLimitError(f"brute force limited to {MAX_BRUTE_FORCE_VERTICES} vertices, got {n}")
    size = 1 << n
    chunk = 1 << _CHUNK_BITS
    best = -np.inf
    for start in range(0, size, chunk):
        best = max(best, float(cut_values_all(g, start, min(size, start + chunk)).max()))
    threshold = best - TIE_RTOL * abs(best)
    optima = set()
    for start in range(0, size, chunk):
        values = cut_values_all(g, start, min(size, start + chunk))
        for k in np.nonzero(values >= threshold)[0]:
            optima.add(index_to_bits(start + int(k), n))
    return best, optima


def complement(a: Sequence[int]) -> tuple[int, ...]:
    return tuple(1 - int(b) for b in a)


# -- edge-list I/O ---------------------------------------------------------

def dumps_edge_list(g: WeightedGraph) -> str:
    buf = io.StringIO()
    buf.write(f"{g.n_vertices} {len(g.edges)}\n")
    for i, j, w in g.edges:
        buf.write(f"{i} {j} {w:.17g}\n")
    return buf.getvalue()


def loads_edge_list(text: str) -> WeightedGraph:
    """Parse ``n m`` followed by ``m`` lines of ``i j w``."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InvalidInstanceError("empty edge-list file")
    header = lines[0].split()
    if len(header) != 2:
        raise InvalidInstanceError(f"header must be 'n m', got {lines[0]!r}")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError as exc:
        raise InvalidInstanceError(f"bad header {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise InvalidInstanceError(f"header declares {m} edges, found {len(lines) - 1}")
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise InvalidInstanceError(f"edge line must be 'i j w', got {ln!r}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise InvalidInstanceError(f"bad edge line {ln!r}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInstanceError(f"edge ({i}, {j}) out of range for {n} vertices")
        edges.append((i, j, w))
    return WeightedGraph(n, tuple(edges))


def read_edge_list(path: str | Path) -> WeightedGraph:
    return loads_edge_list(Path(path).read_text())


def write_edge_list(g: WeightedGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_edge_list(g))


def from_edges(n_vertices: int, edges: Iterable[tuple[int, int, float]]) -> WeightedGraph:
    return WeightedGraph(n_vertices, tuple(edges))
