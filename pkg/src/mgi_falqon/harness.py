"""Batch experiments: instance sets, parameter grids and metric aggregation.

Every run draws from its own generator seeded by
``SeedSequence([master_seed, graph_id, cell_id, run_id])``, so results do not
depend on worker count or completion order.  Aggregates are computed from the
per-run records in run-index order.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__, qstate
from .falqon import FalqonParams, depth_to_target, is_nonincreasing, run_falqon
from .graph import WeightedGraph, random_complete, read_edge_list
from .ising import (DEFAULT_SCALE, IsingHamiltonian, energy_table, from_graph_full,
                    from_graph_reduced, ground_states)
from .mgi import (DtSchedule, MgiConfig, NSchedule, iterations_to_target, parse_dt_schedule,
                  parse_n_schedule, run_mgi)

log = logging.getLogger(__name__)

RUN_COLUMNS = ["graph_id", "cell_id", "run_id", "iteration", "n_used", "dt_used",
               "final_energy", "success_prob"]
AGGREGATE_COLUMNS = ["cell_id", "L", "R", "n_schedule", "dt_schedule", "shots", "mean_success",
                     "std_success", "frac_above_half", "mean_final_energy", "std_final_energy",
                     "mean_depth_to_target"]

SHOT_BUDGET_NOTE = ("every grid cell uses its own 'shots' value; the reference protocol "
                    "quotes a single global budget of 2000 shots")


# -- problems -----------------------------------------------------------------

@dataclass
class Problem:
    """A graph together with the Hamiltonian the solver actually sees."""
    graph: WeightedGraph
    hamiltonian: IsingHamiltonian
    table: np.ndarray
    e_star: float
    optima: frozenset[int]
    fix_vertex: int | None


def build_problem(g: WeightedGraph, fix_vertex: int | None = 0,
                  scale: float = DEFAULT_SCALE) -> Problem:
    if fix_vertex is None:
        h = from_graph_full(g, scale)
    else:
        h = from_graph_reduced(g, fix_vertex, scale)
    table = energy_table(h)
    e_star, optima = ground_states(table)
    return Problem(g, h, table, e_star, optima, fix_vertex)


# -- experiment definitions ----------------------------------------------------

@dataclass(frozen=True)
class Grid:
    layers: tuple[int, ...]
    iterations: tuple[int, ...]
    n_schedules: tuple[NSchedule, ...]
    dt_schedules: tuple[DtSchedule, ...]
    shots: tuple[int, ...] = (2000,)
    alpha: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        for name in ("layers", "iterations", "n_schedules", "dt_schedules", "shots", "alpha"):
            if not getattr(self, name):
                raise ValueError(f"grid axis {name!r} is empty")
        if any(v < 1 for v in self.layers + self.iterations + self.shots):
            raise ValueError("layers, iterations and shots must be >= 1")
        if any(not (a > 0) for a in self.alpha):
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class ExperimentSpec:
    graph_source: dict[str, Any]
    grid: Grid
    runs_per_cell: int = 1
    master_seed: int = 0
    fix_vertex: int | None = 0
    scale: float = DEFAULT_SCALE
    delta0: float = 0.1
    clamp_eps: float = 0.0

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")
        src = self.graph_source
        if set(src) == {"generated"}:
            gen = src["generated"]
            if set(gen) != {"count", "n_vertices", "seed"}:
                raise ValueError("generated source needs exactly count, n_vertices, seed")
            if gen["count"] < 1:
                raise ValueError("generated count must be >= 1")
        elif set(src) == {"files"}:
            if not src["files"]:
                raise ValueError("file source lists no files")
        else:
            raise ValueError("graph_source must have exactly one of 'generated' or 'files'")


def spec_from_dict(d: dict[str, Any]) -> ExperimentSpec:
    known = {"graph_source", "grid", "runs_per_cell", "master_seed", "fix_vertex", "scale",
             "delta0", "clamp_eps"}
    unknown = set(d) - known - {"comment"}
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    g = d["grid"]
    unknown = set(g) - {"layers", "iterations", "n_schedules", "dt_schedules", "shots", "alpha"}
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    grid = Grid(
        layers=tuple(int(v) for v in g["layers"]),
        iterations=tuple(int(v) for v in g["iterations"]),
        n_schedules=tuple(parse_n_schedule(v) for v in g["n_schedules"]),
        dt_schedules=tuple(parse_dt_schedule(v) for v in g["dt_schedules"]),
        shots=tuple(int(v) for v in g.get("shots", [2000])),
        alpha=tuple(float(v) for v in g.get("alpha", [1.0])),
    )
    return ExperimentSpec(
        graph_source=d["graph_source"],
        grid=grid,
        runs_per_cell=int(d.get("runs_per_cell", 1)),
        master_seed=int(d.get("master_seed", 0)),
        fix_vertex=d.get("fix_vertex", 0),
        scale=float(d.get("scale", DEFAULT_SCALE)),
        delta0=float(d.get("delta0", 0.1)),
        clamp_eps=float(d.get("clamp_eps", 0.0)),
    )


def spec_to_dict(spec: ExperimentSpec) -> dict[str, Any]:
    g = spec.grid
    return {
        "graph_source": spec.graph_source,
        "grid": {
            "layers": list(g.layers),
            "iterations": list(g.iterations),
            "n_schedules": [str(s) for s in g.n_schedules],
            "dt_schedules": [str(s) for s in g.dt_schedules],
            "shots": list(g.shots),
            "alpha": list(g.alpha),
        },
        "runs_per_cell": spec.runs_per_cell,
        "master_seed": spec.master_seed,
        "fix_vertex": spec.fix_vertex,
        "scale": spec.scale,
        "delta0": spec.delta0,
        "clamp_eps": spec.clamp_eps,
    }


def load_spec(path: str | Path) -> ExperimentSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def load_instances(spec: ExperimentSpec) -> list[WeightedGraph]:
    src = spec.graph_source
    if "generated" in src:
        gen = src["generated"]
        return [random_complete(int(gen["n_vertices"]), np.random.SeedSequence([int(gen["seed"]), k]))
                for k in range(int(gen["count"]))]
    return [read_edge_list(p) for p in src["files"]]


# -- grid execution -------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    cell_id: int
    layers: int
    iterations: int
    n_schedule: NSchedule
    dt_schedule: DtSchedule
    shots: int
    alpha: float

    def mgi_config(self, clamp_eps: float = 0.0) -> MgiConfig:
        falqon = FalqonParams(self.layers, self.dt_schedule.start, self.alpha)
        return MgiConfig(self.iterations, falqon, self.shots, self.n_schedule,
                         self.dt_schedule, clamp_eps)


def grid_cells(grid: Grid) -> list[Cell]:
    axes = itertools.product(grid.layers, grid.iterations, grid.n_schedules,
                             grid.dt_schedules, grid.shots, grid.alpha)
    return [Cell(k, *values) for k, values in enumerate(axes)]


def run_seed(master_seed: int, graph_id: int, cell_id: int, run_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, graph_id, cell_id, run_id])


@dataclass
class RunRecord:
    graph_id: int
    cell_id: int
    run_id: int
    n_used: list[int]
    dt_used: list[float]
    final_energy: list[float]
    success_prob: list[float]
    initial_energy: float
    iterations_to_target: int | None

    @property
    def final_success(self) -> float:
        return self.success_prob[-1]


@dataclass
class CellResult:
    cell: Cell
    n_runs: int
    mean_success: float
    std_success: float
    frac_above_half: float
    mean_final_energy: float
    std_final_energy: float
    mean_depth_to_target: float | None


@dataclass
class GridResult:
    spec: ExperimentSpec
    cells: list[CellResult]
    runs: list[RunRecord]
    problems: list[Problem] = field(repr=False, default_factory=list)


def _run_one(task) -> RunRecord:
    graph_id, cell_id, run_id, h, table, optima, e_star, cfg, seed, delta0 = task
    trace = run_mgi(cfg, h, optima, np.random.default_rng(seed), table=table)
    return RunRecord(
        graph_id=graph_id, cell_id=cell_id, run_id=run_id,
        n_used=[rec.n_used for rec in trace.records],
        dt_used=[rec.dt_used for rec in trace.records],
        final_energy=[rec.final_energy for rec in trace.records],
        success_prob=[rec.success_probability for rec in trace.records],
        initial_energy=trace.records[0].initial_energy,
        iterations_to_target=iterations_to_target(trace, e_star, delta0),
    )


def _tasks(spec: ExperimentSpec, problems: Sequence[Problem], cells: Sequence[Cell]):
    for cell in cells:
        cfg = cell.mgi_config(spec.clamp_eps)
        for graph_id, prob in enumerate(problems):
            for run_id in range(spec.runs_per_cell):
                yield (graph_id, cell.cell_id, run_id, prob.hamiltonian, prob.table, prob.optima,
                       prob.e_star, cfg, run_seed(spec.master_seed, graph_id, cell.cell_id, run_id),
                       spec.delta0)


def run_grid(spec: ExperimentSpec, workers: int = 1,
             graphs: Sequence[WeightedGraph] | None = None) -> GridResult:
    """Run MGI for every (cell, instance, run); output is in grid order."""
    if graphs is None:
        graphs = load_instances(spec)
    problems = [build_problem(g, spec.fix_vertex, spec.scale) for g in graphs]
    cells = grid_cells(spec.grid)
    total = len(cells) * len(problems) * spec.runs_per_cell
    log.info("running %d cells x %d instances x %d runs = %d MGI runs",
             len(cells), len(problems), spec.runs_per_cell, total)
    tasks = _tasks(spec, problems, cells)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, tasks, chunksize=max(1, total // (8 * workers))))
    else:
        runs = [_run_one(t) for t in tasks]
    return GridResult(spec, aggregate(cells, runs), runs, problems)


def aggregate(cells: Sequence[Cell], runs: Iterable[RunRecord]) -> list[CellResult]:
    """Per-cell statistics from run records, summed in (graph, run) order."""
    by_cell: dict[int, list[RunRecord]] = {c.cell_id: [] for c in cells}
    for run in runs:
        by_cell[run.cell_id].append(run)
    out = []
    for cell in cells:
        recs = sorted(by_cell[cell.cell_id], key=lambda r: (r.graph_id, r.run_id))
        if not recs:
            raise ValueError(f"cell {cell.cell_id} has no runs")
        success = np.array([r.final_success for r in recs])
        energy = np.array([r.final_energy[-1] for r in recs])
        depths = [r.iterations_to_target for r in recs if r.iterations_to_target is not None]
        out.append(CellResult(
            cell=cell,
            n_runs=len(recs),
            mean_success=float(success.mean()),
            std_success=float(success.std()),
            frac_above_half=float(np.count_nonzero(success > 0.5) / len(recs)),
            mean_final_energy=float(energy.mean()),
            std_final_energy=float(energy.std()),
            mean_depth_to_target=float(np.mean(depths)) if depths else None,
        ))
    return out


# -- output ---------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def runs_csv(runs: Iterable[RunRecord]) -> str:
    def rows():
        for run in runs:
            for k in range(len(run.success_prob)):
                yield (run.graph_id, run.cell_id, run.run_id, k + 1, run.n_used[k],
                       float(run.dt_used[k]), float(run.final_energy[k]), float(run.success_prob[k]))
    return _csv_text(RUN_COLUMNS, rows())


def aggregate_csv(results: Iterable[CellResult]) -> str:
    rows = ((r.cell.cell_id, r.cell.layers, r.cell.iterations, str(r.cell.n_schedule),
             str(r.cell.dt_schedule), r.cell.shots, r.mean_success, r.std_success,
             r.frac_above_half, r.mean_final_energy, r.std_final_energy, r.mean_depth_to_target)
            for r in results)
    return _csv_text(AGGREGATE_COLUMNS, rows)


def summary(result: GridResult, wall_clock: float | None = None) -> dict[str, Any]:
    out = {
        "software": {"package": "mgi_falqon", "version": __version__},
        "spec": spec_to_dict(result.spec),
        "cells": [{"cell_id": c.cell.cell_id, "L": c.cell.layers, "R": c.cell.iterations,
                   "n_schedule": str(c.cell.n_schedule), "dt_schedule": str(c.cell.dt_schedule),
                   "shots": c.cell.shots, "alpha": c.cell.alpha, "n_runs": c.n_runs}
                  for c in result.cells],
        "instances": [{"graph_id": k, "n_vertices": p.graph.n_vertices,
                       "n_edges": len(p.graph.edges), "sha256": p.graph.digest(),
                       "ground_energy": p.e_star,
                       "n_optima": len(p.optima)}
                      for k, p in enumerate(result.problems)],
        "notes": [SHOT_BUDGET_NOTE,
                  "iterations-to-target uses the first iteration's starting energy as reference; "
                  "mean_depth_to_target averages only runs that reached the target"],
    }
    if wall_clock is not None:
        out["wall_clock_seconds"] = wall_clock
    return out


def write_outputs(result: GridResult, out_dir: str | Path, wall_clock: float | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs.csv").write_text(runs_csv(result.runs))
    (out / "aggregate.csv").write_text(aggregate_csv(result.cells))
    (out / "summary.json").write_text(json.dumps(summary(result, wall_clock), indent=2) + "\n")


# -- baselines and diagnostics ------------------------------------------------------

@dataclass
class BaselineResult:
    graph_id: int
    energies: np.ndarray
    betas: np.ndarray
    success_probs: np.ndarray
    e_star: float
    depth_to_target: int | None


def falqon_baseline(graphs: Sequence[WeightedGraph], layers: int, dt: float, alpha: float = 1.0,
                    scale: float = DEFAULT_SCALE, fix_vertex: int | None = 0,
                    delta0: float = 0.1, psi0: np.ndarray | None = None) -> list[BaselineResult]:
    """Deep FALQON from the uniform state (or ``psi0``) without MGI."""
    params = FalqonParams(layers, dt, alpha)
    out = []
    for k, g in enumerate(graphs):
        prob = build_problem(g, fix_vertex, scale)
        start = qstate.uniform_state(prob.hamiltonian.n_qubits) if psi0 is None else psi0
        trace = run_falqon(prob.hamiltonian, start, params, table=prob.table, optima=prob.optima)
        out.append(BaselineResult(k, trace.energies, trace.betas, trace.success_probs, prob.e_star,
                                  depth_to_target(trace.energies, prob.e_star, delta0)))
    return out


def monotonicity_check(h: IsingHamiltonian, psi0: np.ndarray, dt_candidates: Sequence[float],
                       layers: int, tol: float = 1e-9) -> float | None:
    """Largest candidate time step whose depth-``layers`` energy trace never rises by more than ``tol``."""
    if list(dt_candidates) != sorted(dt_candidates):
        raise ValueError("dt candidates must be sorted ascending")
    table = energy_table(h)
    best = None
    for dt in dt_candidates:
        trace = run_falqon(h, psi0, FalqonParams(layers, dt), table=table)
        if is_nonincreasing(trace.energies, tol):
            best = dt
    return best


def standard_error(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return math.nan
    return float(values.std(ddof=1) / math.sqrt(values.size))
