"""Diagonal Ising cost Hamiltonians built from weighted graphs.

Energy of basis index ``b`` is ``scale * (sum J_ij z_i z_j + sum h_j z_j)``
with ``z_k = 1 - 2 * bit_k(b)``.  Couplings carry ``J_ij = +w_ij`` so that the
lowest energy corresponds to the largest cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ResourceLimitError
from .graph import WeightedGraph

DEFAULT_SCALE = 0.25
MAX_TABLE_QUBITS = 26
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class IsingHamiltonian:
    n_qubits: int
    couplings: tuple[tuple[int, int, float], ...] = ()
    fields: tuple[tuple[int, float], ...] = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        pairs = set()
        for i, j, _ in self.couplings:
            if not (0 <= i < j < self.n_qubits):
                raise ValueError(f"coupling ({i}, {j}) invalid for {self.n_qubits} qubits")
            if (i, j) in pairs:
                raise ValueError(f"duplicate coupling ({i}, {j})")
            pairs.add((i, j))
        for j, _ in self.fields:
            if not (0 <= j < self.n_qubits):
                raise ValueError(f"field on qubit {j} invalid for {self.n_qubits} qubits")

    def energy(self, bits) -> float:
        """Energy of a single bit sequence (qubit 0 first), term by term."""
        z = [1 - 2 * int(b) for b in bits]
        if len(z) != self.n_qubits:
            raise ValueError(f"expected {self.n_qubits} bits, got {len(z)}")
        total = sum(J * z[i] * z[j] for i, j, J in self.couplings)
        total += sum(h * z[j] for j, h in self.fields)
        return self.scale * total


def from_graph_full(g: WeightedGraph, scale: float = DEFAULT_SCALE) -> IsingHamiltonian:
    return IsingHamiltonian(g.n_vertices, tuple(g.edges), (), float(scale))


def reduced_vertex_order(n_vertices: int, fixed_vertex: int) -> list[int]:
    """Vertices kept by the reduction, in qubit order."""
    return [v for v in range(n_vertices) if v != fixed_vertex]


def from_graph_reduced(g: WeightedGraph, fixed_vertex: int = 0,
                       scale: float = DEFAULT_SCALE) -> IsingHamiltonian:
    """Remove the global bit-flip symmetry by pinning ``fixed_vertex`` to x = 0.

    Edges touching the fixed vertex become linear fields; the remaining
    vertices are relabelled in increasing order.
    """
    n = g.n_vertices
    if not (0 <= fixed_vertex < n):
        raise ValueError(f"fixed vertex {fixed_vertex} out of range for {n} vertices")
    if n < 2:
        raise ValueError("reduction needs at least 2 vertices")
    qubit_of = {v: q for q, v in enumerate(reduced_vertex_order(n, fixed_vertex))}
    couplings = []
    fields: dict[int, float] = {}
    for i, j, w in g.edges:
        if i == fixed_vertex or j == fixed_vertex:
            other = qubit_of[j if i == fixed_vertex else i]
            fields[other] = fields.get(other, 0.0) + w
        else:
            a, b = sorted((qubit_of[i], qubit_of[j]))
            couplings.append((a, b, w))
    return IsingHamiltonian(n - 1, tuple(couplings), tuple(sorted(fields.items())), float(scale))


def expand_reduced_index(index: int, fixed_vertex: int) -> int:
    """Map a reduced-register index to the full assignment index with x_fixed = 0."""
    low = index & ((1 << fixed_vertex) - 1)
    high = index >> fixed_vertex
    return low | (high << (fixed_vertex + 1))


def energy_table(h: IsingHamiltonian, max_qubits: int = MAX_TABLE_QUBITS) -> np.ndarray:
    """Full diagonal of ``h`` over all ``2**n_qubits`` basis indices."""
    n = h.n_qubits
    if n > max_qubits:
        raise ResourceLimitError(f"energy table limited to {max_qubits} qubits, got {n}")
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n)
    for i, j, J in h.couplings:
        # z_i z_j = 1 - 2 * (b_i xor b_j)
        out += J * (1.0 - 2.0 * (((idx >> i) ^ (idx >> j)) & 1))
    for j, hj in h.fields:
        out += hj * (1.0 - 2.0 * ((idx >> j) & 1))
    return h.scale * out


def ground_states(table: np.ndarray) -> tuple[float, frozenset[int]]:
    t = np.asarray(table, dtype=float)
    if t.size == 0:
        raise ValueError("empty energy table")
    e_star = float(t.min())
    threshold = e_star + TIE_RTOL * abs(e_star)
    return e_star, frozenset(int(k) for k in np.nonzero(t <= threshold)[0])
