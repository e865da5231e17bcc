"""Layer-by-layer FALQON with the commutator feedback law."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import qstate
from .ising import IsingHamiltonian, energy_table


class BetaSource(str, enum.Enum):
    EXACT = "exact-expectation"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class FalqonParams:
    layers: int
    dt: float
    alpha: float = 1.0
    beta_source: BetaSource = BetaSource.EXACT

    def __post_init__(self):
        if int(self.layers) != self.layers or self.layers < 1:
            raise ValueError(f"layers must be a positive integer, got {self.layers!r}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        object.__setattr__(self, "beta_source", BetaSource(self.beta_source))


@dataclass
class FalqonTrace:
    betas: np.ndarray
    energies: np.ndarray
    final_state: np.ndarray
    # Only filled when optima are passed to run_falqon; length L + 1.
    success_probs: np.ndarray = field(default_factory=lambda: np.zeros(0))


def run_falqon(h: IsingHamiltonian, psi0: np.ndarray, params: FalqonParams,
               table: np.ndarray | None = None,
               optima: Iterable[int] | None = None) -> FalqonTrace:
    """Grow a depth-L circuit, picking each beta from the previous layer's state.

    ``table`` may carry a precomputed :func:`energy_table` of ``h``.  When
    ``optima`` is given the exact success probability is recorded per layer.
    """
    if params.beta_source is not BetaSource.EXACT:
        raise NotImplementedError("shot-estimated feedback is not supported; use exact-expectation")
    if table is None:
        table = energy_table(h)
    if psi0.shape != table.shape:
        raise ValueError(f"initial state of length {psi0.shape[0]} does not match {h.n_qubits} qubits")
    qstate.check_norm(psi0)
    optima = None if optima is None else frozenset(optima)

    psi = np.asarray(psi0, dtype=complex)
    if h.n_qubits <= qstate._WALSH_MAX_QUBITS:
        betas, energies, success, psi = _evolve_walsh(psi, table, params, optima)
    else:
        betas, energies, success, psi = _evolve_generic(psi, table, params, optima)
    qstate.check_norm(psi)
    return FalqonTrace(betas, energies, psi, success)


def _evolve_generic(psi, table, params, optima):
    betas = np.empty(params.layers)
    energies = np.empty(params.layers + 1)
    success = np.empty(params.layers + 1) if optima is not None else np.zeros(0)
    energies[0] = qstate.expect_cost(psi, table)
    if optima is not None:
        success[0] = qstate.success_probability(psi, optima)
    for layer in range(params.layers):
        beta = -params.alpha * qstate.expect_commutator(psi, table)
        psi = qstate.apply_cost_phase(psi, table, params.dt)
        psi = qstate.apply_driver(psi, beta, params.dt)
        betas[layer] = beta
        energies[layer + 1] = qstate.expect_cost(psi, table)
        if optima is not None:
            success[layer + 1] = qstate.success_probability(psi, optima)
    return betas, energies, success, psi


def _evolve_walsh(psi, table, params, optima):
    """Same recursion as :func:`_evolve_generic`, in the Hadamard frame.

    ``sum_k X_k = W (sum_k Z_k) W`` with ``W`` the n-fold Hadamard, so both the
    driver and the commutator reduce to two dense matvecs with ``W``.
    """
    n = qstate.n_qubits_of(psi)
    w = qstate._walsh(n).astype(complex)
    zsum = qstate._z_sum(n)
    cost_phase = np.exp(-1j * params.dt * table)
    drive_gen = -1j * params.dt * zsum
    opt = None if optima is None else np.fromiter(optima, dtype=np.int64)

    betas = np.empty(params.layers)
    energies = np.empty(params.layers + 1)
    success = np.empty(params.layers + 1) if opt is not None else np.zeros(0)
    prob = psi.real ** 2 + psi.imag ** 2
    energies[0] = table @ prob
    if opt is not None:
        success[0] = prob[opt].sum()
    for layer in range(params.layers):
        # beta = -alpha * (-2 Im <psi|H_d H_p|psi>)
        beta = 2.0 * params.alpha * np.vdot(w @ psi, zsum * (w @ (table * psi))).imag
        psi = w @ (np.exp(beta * drive_gen) * (w @ (cost_phase * psi)))
        prob = psi.real ** 2 + psi.imag ** 2
        betas[layer] = beta
        energies[layer + 1] = table @ prob
        if opt is not None:
            success[layer + 1] = prob[opt].sum()
    return betas, energies, success, psi


def depth_to_target(energies: Sequence[float], e_star: float, delta0: float = 0.1) -> int | None:
    """First layer where the normalized gap (E_l - E*) / (E_0 - E*) drops to ``delta0``."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        raise ValueError("energies must be nonempty")
    gap0 = energies[0] - e_star
    if gap0 <= 0:
        return 0
    hits = np.nonzero((energies - e_star) / gap0 <= delta0)[0]
    return int(hits[0]) if hits.size else None


def is_nonincreasing(energies: Sequence[float], tol: float = 1e-9) -> bool:
    return bool(np.all(np.diff(np.asarray(energies, dtype=float)) <= tol))
