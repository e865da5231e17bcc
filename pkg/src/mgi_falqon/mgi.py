"""Measurement-guided initialization (MGI) around shallow FALQON runs.

Each outer iteration runs FALQON, samples the output, keeps the ``n`` most
frequent bitstrings, and re-prepares a product state whose per-qubit
probability of reading 1 equals the filtered marginal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import qstate
from .falqon import FalqonParams, run_falqon
from .ising import IsingHamiltonian, energy_table
from .qstate import BitstringCounts

DIST_TOL = 1e-9


# -- schedules -------------------------------------------------------------

@dataclass(frozen=True)
class NSchedule:
    kind: str
    n_max: int
    n_min: int

    def __post_init__(self):
        if self.kind not in ("fixed", "linear"):
            raise ValueError(f"unknown n-schedule kind {self.kind!r}")
        if self.kind == "fixed" and self.n_max != self.n_min:
            raise ValueError("a fixed schedule has a single n")
        if not (1 <= self.n_min <= self.n_max):
            raise ValueError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")

    @classmethod
    def fixed(cls, n: int) -> "NSchedule":
        return cls("fixed", int(n), int(n))

    @classmethod
    def linear(cls, n_max: int, n_min: int) -> "NSchedule":
        return cls("linear", int(n_max), int(n_min))

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed({self.n_max})"
        return f"linear({self.n_max},{self.n_min})"

    def at(self, r: int, R: int) -> int:
        return n_at(self, r, R)


@dataclass(frozen=True)
class DtSchedule:
    kind: str
    start: float
    end: float

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise ValueError(f"unknown dt-schedule kind {self.kind!r}")
        if self.kind == "constant" and self.start != self.end:
            raise ValueError("a constant schedule has a single dt")
        for v in (self.start, self.end):
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"time steps must be positive, got {v!r}")

    @classmethod
    def constant(cls, dt: float) -> "DtSchedule":
        return cls("constant", float(dt), float(dt))

    @classmethod
    def linear(cls, start: float, end: float) -> "DtSchedule":
        return cls("linear", float(start), float(end))

    def __str__(self):
        if self.kind == "constant":
            return f"constant({self.start!r})"
        return f"linear({self.start!r},{self.end!r})"

    def at(self, r: int, R: int) -> float:
        return dt_at(self, r, R)


_SCHEDULE_RE = re.compile(r"^\s*(\w+)\s*\(\s*([^,()]+?)\s*(?:,\s*([^,()]+?)\s*)?\)\s*$")


def parse_n_schedule(text: str) -> NSchedule:
    """Parse ``fixed(5)`` or ``linear(30,5)``."""
    m = _SCHEDULE_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse n-schedule {text!r}")
    kind, a, b = m.groups()
    if kind == "fixed" and b is None:
        return NSchedule.fixed(int(a))
    if kind == "linear" and b is not None:
        return NSchedule.linear(int(a), int(b))
    raise ValueError(f"cannot parse n-schedule {text!r}")


def parse_dt_schedule(text: str) -> DtSchedule:
    """Parse ``constant(0.2)`` or ``linear(0.055,0.035)``."""
    m = _SCHEDULE_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse dt-schedule {text!r}")
    kind, a, b = m.groups()
    if kind == "constant" and b is None:
        return DtSchedule.constant(float(a))
    if kind == "linear" and b is not None:
        return DtSchedule.linear(float(a), float(b))
    raise ValueError(f"cannot parse dt-schedule {text!r}")


def _check_iteration(r: int, R: int) -> None:
    if not (1 <= r <= R):
        raise ValueError(f"iteration {r} outside 1..{R}")


def n_at(schedule: NSchedule, r: int, R: int) -> int:
    """Filter size at iteration r: floor of the line from n_max (r=1) to n_min (r=R)."""
    _check_iteration(r, R)
    if schedule.kind == "fixed" or R == 1:
        return schedule.n_max
    # Exact rational floor; float division can land a hair below an integer.
    span = schedule.n_max - schedule.n_min
    return schedule.n_max - (-((-span * (r - 1)) // (R - 1)))


def dt_at(schedule: DtSchedule, r: int, R: int) -> float:
    _check_iteration(r, R)
    if schedule.kind == "constant" or R == 1:
        return schedule.start
    if r == R:
        return schedule.end
    return schedule.start + (schedule.end - schedule.start) * (r - 1) / (R - 1)


# -- filtering and state preparation ---------------------------------------

def top_n_filter(counts: BitstringCounts, n: int, table: np.ndarray) -> list[tuple[int, int]]:
    """The ``n`` most frequent outcomes.

    Equal multiplicities are ordered by lower energy, then lower index.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not counts.counts:
        raise ValueError("no measurement outcomes to filter")
    ranked = sorted(counts.counts.items(), key=lambda kv: (-kv[1], float(table[kv[0]]), kv[0]))
    return ranked[:n]


def marginals(filtered: Sequence[tuple[int, int]], n_qubits: int) -> np.ndarray:
    """Multiplicity-weighted frequency of reading 1 on each qubit."""
    if not filtered:
        raise ValueError("filtered set is empty")
    idx = np.array([k for k, _ in filtered], dtype=np.int64)
    mult = np.array([m for _, m in filtered], dtype=float)
    bits = (idx[:, None] >> np.arange(n_qubits)) & 1
    return (mult @ bits) / mult.sum()


def angles_from_marginals(c: Iterable[float], clamp_eps: float = 0.0) -> np.ndarray:
    """``theta_i = 2 arcsin(sqrt(c_i))``, optionally clamping c into [eps, 1 - eps]."""
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c < 0) or np.any(c > 1):
        raise ValueError(f"marginals must lie in [0, 1], got {c}")
    if not (0.0 <= clamp_eps < 0.5):
        raise ValueError(f"clamp_eps must be in [0, 0.5), got {clamp_eps}")
    if clamp_eps > 0:
        c = np.clip(c, clamp_eps, 1.0 - clamp_eps)
    return 2.0 * np.arcsin(np.sqrt(c))


# -- outer loop -------------------------------------------------------------

@dataclass(frozen=True)
class MgiConfig:
    iterations: int
    falqon: FalqonParams
    shots: int
    n_schedule: NSchedule
    # None means a constant schedule at falqon.dt.
    dt_schedule: DtSchedule | None = None
    clamp_eps: float = 0.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if not (0.0 <= self.clamp_eps < 0.5):
            raise ValueError(f"clamp_eps must be in [0, 0.5), got {self.clamp_eps}")
        if self.dt_schedule is None:
            object.__setattr__(self, "dt_schedule", DtSchedule.constant(self.falqon.dt))


@dataclass
class IterationRecord:
    r: int
    n_used: int
    dt_used: float
    initial_energy: float
    final_energy: float
    success_probability: float
    marginals: np.ndarray
    thetas: np.ndarray


@dataclass
class MgiTrace:
    records: list[IterationRecord] = field(default_factory=list)
    final_state: np.ndarray | None = None

    @property
    def final_energies(self) -> np.ndarray:
        return np.array([rec.final_energy for rec in self.records])

    @property
    def success_probabilities(self) -> np.ndarray:
        return np.array([rec.success_probability for rec in self.records])


def run_mgi(cfg: MgiConfig, h: IsingHamiltonian, optima: Iterable[int],
            rng: np.random.Generator, table: np.ndarray | None = None) -> MgiTrace:
    if table is None:
        table = energy_table(h)
    optima = frozenset(optima)
    R = cfg.iterations
    trace = MgiTrace()
    psi0 = qstate.uniform_state(h.n_qubits)
    for r in range(1, R + 1):
        dt = dt_at(cfg.dt_schedule, r, R)
        params = FalqonParams(cfg.falqon.layers, dt, cfg.falqon.alpha, cfg.falqon.beta_source)
        run = run_falqon(h, psi0, params, table=table)
        counts = qstate.sample(run.final_state, cfg.shots, rng)
        n = n_at(cfg.n_schedule, r, R)
        c = marginals(top_n_filter(counts, n, table), h.n_qubits)
        thetas = angles_from_marginals(c, cfg.clamp_eps)
        trace.records.append(IterationRecord(
            r=r, n_used=n, dt_used=dt,
            initial_energy=float(run.energies[0]),
            final_energy=float(run.energies[-1]),
            success_probability=qstate.success_probability(run.final_state, optima),
            marginals=c, thetas=thetas,
        ))
        trace.final_state = run.final_state
        psi0 = qstate.product_state(thetas)
    return trace


def iterations_to_target(trace: MgiTrace, e_star: float, delta0: float = 0.1) -> int | None:
    """First iteration whose final energy closes all but ``delta0`` of the gap.

    The reference energy is the starting energy of iteration 1.
    """
    e0 = trace.records[0].initial_energy
    gap0 = e0 - e_star
    if gap0 <= 0:
        return 0
    for rec in trace.records:
        if (rec.final_energy - e_star) / gap0 <= delta0:
            return rec.r
    return None


# -- product-distribution projection ------------------------------------------

def _check_distribution(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -DIST_TOL) or abs(p.sum() - 1.0) > DIST_TOL:
        raise ValueError(f"{name} is not a normalized distribution")
    return p


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """``sum p ln(p/q)`` with 0 ln 0 = 0; ``inf`` when p is not absolutely continuous w.r.t. q."""
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if p.shape != q.shape:
        raise ValueError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def product_projection(p: np.ndarray) -> np.ndarray:
    """Per-bit marginals of p: the parameters of the KL-closest product distribution."""
    p = _check_distribution(p, "p")
    n = n_bits_of(p)
    idx = np.arange(p.shape[0], dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return p @ bits


def product_distribution(c: Sequence[float]) -> np.ndarray:
    """Joint distribution of independent bits with ``P(bit_i = 1) = c_i``."""
    q = np.ones(1)
    for ci in c:
        q = np.kron(np.array([1.0 - ci, ci]), q)
    return q


def n_bits_of(p: np.ndarray) -> int:
    n = p.shape[0].bit_length() - 1
    if (1 << n) != p.shape[0] or n < 1:
        raise ValueError(f"distribution length {p.shape[0]} is not a power of two")
    return n
