"""Dense state-vector engine.

States are 1-D complex128 numpy arrays of length ``2**n``; qubit ``k`` is bit
``k`` of the basis index.  The driver is the transverse field ``sum_k X_k``
and the cost operator is a diagonal energy table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import ResourceLimitError
from .ising import IsingHamiltonian, energy_table

MAX_QUBITS = 26
NORM_TOL = 1e-9

# Above this width the dense Walsh matrix is too large; rotate qubit by qubit.
_WALSH_MAX_QUBITS = 10


class NormError(ValueError):
    pass


@dataclass
class BitstringCounts:
    n_qubits: int
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def total_shots(self) -> int:
        return sum(self.counts.values())

    def as_strings(self) -> dict[str, int]:
        from .graph import bitstring
        return {bitstring(k, self.n_qubits): m for k, m in sorted(self.counts.items())}


def n_qubits_of(psi: np.ndarray) -> int:
    size = psi.shape[0]
    n = size.bit_length() - 1
    if psi.ndim != 1 or size < 2 or (1 << n) != size:
        raise ValueError(f"state length {psi.shape} is not a power of two")
    return n


def check_norm(psi: np.ndarray, tol: float = NORM_TOL) -> None:
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > tol:
        raise NormError(f"state norm^2 = {norm2!r} deviates from 1 by more than {tol}")


def _check_size(n_qubits: int) -> None:
    if n_qubits < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise ResourceLimitError(f"state vector limited to {MAX_QUBITS} qubits, got {n_qubits}")


def _table_for(h_or_table) -> np.ndarray:
    if isinstance(h_or_table, IsingHamiltonian):
        return energy_table(h_or_table)
    return np.asarray(h_or_table, dtype=float)


def _check_table(psi: np.ndarray, table: np.ndarray) -> None:
    if table.shape != psi.shape:
        raise ValueError(f"energy table of shape {table.shape} does not match state {psi.shape}")


def uniform_state(n_qubits: int) -> np.ndarray:
    _check_size(n_qubits)
    return np.full(1 << n_qubits, 2.0 ** (-n_qubits / 2), dtype=complex)


def product_state(thetas: Iterable[float]) -> np.ndarray:
    """Tensor product of ``R_y(theta_k)|0> = cos(theta_k/2)|0> + sin(theta_k/2)|1>``."""
    thetas = np.asarray(list(thetas), dtype=float)
    _check_size(thetas.shape[0])
    if not np.all(np.isfinite(thetas)):
        raise ValueError("angles must be finite")
    psi = np.ones(1, dtype=complex)
    # kron(new, psi) puts the new qubit in the high bit
    for theta in thetas:
        psi = np.kron(np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex), psi)
    return psi


def basis_state(index: int, n_qubits: int) -> np.ndarray:
    _check_size(n_qubits)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def apply_cost_phase(psi: np.ndarray, table: np.ndarray, dt: float) -> np.ndarray:
    """Multiply each amplitude by ``exp(-i E_b dt)``."""
    table = np.asarray(table, dtype=float)
    _check_table(psi, table)
    if not np.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt!r}")
    return psi * np.exp(-1j * dt * table)


@lru_cache(maxsize=None)
def _walsh(n: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    w = np.ones((1, 1))
    for _ in range(n):
        w = np.kron(h, w)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def _z_sum(n: int) -> np.ndarray:
    """Eigenvalues of ``sum_k Z_k`` per basis index: ``n - 2 * popcount``."""
    idx = np.arange(1 << n, dtype=np.int64)
    pop = np.zeros(1 << n)
    for k in range(n):
        pop += (idx >> k) & 1
    s = n - 2.0 * pop
    s.setflags(write=False)
    return s


def _rotate_qubit(psi: np.ndarray, k: int, c: float, s: float) -> np.ndarray:
    n = n_qubits_of(psi)
    v = psi.reshape(1 << (n - k - 1), 2, 1 << k)
    out = np.empty_like(v)
    out[:, 0, :] = c * v[:, 0, :] - 1j * s * v[:, 1, :]
    out[:, 1, :] = -1j * s * v[:, 0, :] + c * v[:, 1, :]
    return out.reshape(-1)


def _flip_qubit(psi: np.ndarray, k: int) -> np.ndarray:
    n = n_qubits_of(psi)
    return psi.reshape(1 << (n - k - 1), 2, 1 << k)[:, ::-1, :].reshape(-1)


def apply_driver(psi: np.ndarray, beta: float, dt: float) -> np.ndarray:
    """Apply ``exp(-i beta dt sum_k X_k)``."""
    angle = float(beta) * float(dt)
    if not np.isfinite(angle):
        raise ValueError(f"beta*dt must be finite, got {angle!r}")
    n = n_qubits_of(psi)
    if n <= _WALSH_MAX_QUBITS:
        w = _walsh(n)
        return w @ (np.exp(-1j * angle * _z_sum(n)) * (w @ psi))
    return apply_driver_axiswise(psi, beta, dt)


def apply_driver_axiswise(psi: np.ndarray, beta: float, dt: float) -> np.ndarray:
    """Qubit-by-qubit form of :func:`apply_driver`, independent of the Walsh path."""
    angle = float(beta) * float(dt)
    c, s = np.cos(angle), np.sin(angle)
    out = psi
    for k in range(n_qubits_of(psi)):
        out = _rotate_qubit(out, k, c, s)
    return out


def expect_cost(psi: np.ndarray, table: np.ndarray) -> float:
    table = np.asarray(table, dtype=float)
    _check_table(psi, table)
    return float(np.dot(table, (psi.conj() * psi).real))


def expect_commutator(psi: np.ndarray, h_or_table) -> float:
    """``<i[H_d, H_p]> = -2 Im <psi| H_d H_p |psi>``."""
    table = _table_for(h_or_table)
    _check_table(psi, table)
    n = n_qubits_of(psi)
    phi = table * psi
    if n <= _WALSH_MAX_QUBITS:
        w = _walsh(n)
        overlap = np.vdot(w @ psi, _z_sum(n) * (w @ phi))
    else:
        overlap = sum(np.vdot(psi, _flip_qubit(phi, k)) for k in range(n))
    return float(-2.0 * overlap.imag)


def sample(psi: np.ndarray, shots: int, rng: np.random.Generator) -> BitstringCounts:
    """Draw ``shots`` basis indices by inverse CDF over ``|amp|^2``."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    n = n_qubits_of(psi)
    cdf = np.cumsum((psi.conj() * psi).real)
    u = rng.random(shots) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.shape[0] - 1)
    hist = np.bincount(idx, minlength=cdf.shape[0])
    return BitstringCounts(n, {int(k): int(hist[k]) for k in np.nonzero(hist)[0]})


def success_probability(psi: np.ndarray, optima: Iterable[int]) -> float:
    idx = np.fromiter(optima, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    if idx.min() < 0 or idx.max() >= psi.shape[0]:
        raise ValueError("optimum index out of range")
    amps = psi[idx]
    return float((amps.conj() * amps).real.sum())


def probabilities(psi: np.ndarray) -> np.ndarray:
    return (psi.conj() * psi).real
