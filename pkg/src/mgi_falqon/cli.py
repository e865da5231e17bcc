"""Command-line interface.

Data goes to stdout or the ``--out`` file; logs and errors go to stderr.
Exit status is 0 on success, 1 on a usage error and 2 on a runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time

import numpy as np

from . import __version__, harness
from .falqon import FalqonParams, run_falqon
from .graph import bitstring, brute_force_maxcut, random_complete, read_edge_list, write_edge_list
from .ising import DEFAULT_SCALE, expand_reduced_index
from .mgi import DtSchedule, MgiConfig, NSchedule, run_mgi
from .qstate import uniform_state

log = logging.getLogger("mgi_falqon")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge-list file")
    fix = p.add_mutually_exclusive_group()
    fix.add_argument("--fix-vertex", type=int, default=0, metavar="V",
                     help="pin vertex V to x=0 and drop its qubit (default 0)")
    fix.add_argument("--no-fix", action="store_true", help="simulate the full register")
    p.add_argument("--scale", type=float, default=DEFAULT_SCALE,
                   help=f"overall Hamiltonian factor (default {DEFAULT_SCALE})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mgi-falqon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mgi-falqon {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-graph", help="write a random complete graph with Unif(0,1) weights")
    p.add_argument("--vertices", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("oracle", help="exhaustive MaxCut and ground energy of an instance")
    _add_problem_flags(p)

    p = sub.add_parser("falqon", help="standard FALQON; writes a per-layer trace CSV")
    _add_problem_flags(p)
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mgi", help="MGI-FALQON; writes a per-iteration trace CSV")
    _add_problem_flags(p)
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--n", type=int, help="fixed filter size")
    p.add_argument("--n-max", type=int, help="linear filter schedule start")
    p.add_argument("--n-min", type=int, help="linear filter schedule end")
    p.add_argument("--dt", type=float, help="constant time step")
    p.add_argument("--dt-start", type=float, help="linear time-step schedule start")
    p.add_argument("--dt-end", type=float, help="linear time-step schedule end")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--clamp-eps", type=float, default=0.0,
                   help="clamp marginals into [eps, 1-eps] (default 0: off)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run a parameter grid from a JSON spec")
    p.add_argument("--spec", required=True, help="JSON experiment spec")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock time in summary.json (makes it non-reproducible)")
    return parser


def _problem(args) -> harness.Problem:
    g = read_edge_list(args.graph)
    fix = None if args.no_fix else args.fix_vertex
    if fix is not None and not (0 <= fix < g.n_vertices):
        raise UsageError(f"--fix-vertex {fix} out of range for {g.n_vertices} vertices")
    return harness.build_problem(g, fix, args.scale)


def _register_bitstring(prob: harness.Problem, index: int) -> str:
    """Render a register index as a full-graph assignment."""
    if prob.fix_vertex is not None:
        index = expand_reduced_index(index, prob.fix_vertex)
    return bitstring(index, prob.graph.n_vertices)


def _cmd_gen_graph(args) -> None:
    if args.vertices < 2:
        raise UsageError("--vertices must be at least 2")
    write_edge_list(random_complete(args.vertices, args.seed), args.out)


def _cmd_oracle(args) -> None:
    prob = _problem(args)
    best, optima = brute_force_maxcut(prob.graph)
    out = {
        "max_cut": best,
        "optimal_bitstrings": sorted("".join(map(str, a)) for a in optima),
        "fix_vertex": prob.fix_vertex,
        "scale": prob.hamiltonian.scale,
        "ground_energy": prob.e_star,
        "ground_bitstrings": sorted(_register_bitstring(prob, k) for k in prob.optima),
    }
    sys.stdout.write(json.dumps(out, indent=2) + "\n")


def _cmd_falqon(args) -> None:
    try:
        params = FalqonParams(args.layers, args.dt, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    prob = _problem(args)
    trace = run_falqon(prob.hamiltonian, uniform_state(prob.hamiltonian.n_qubits), params,
                       table=prob.table, optima=prob.optima)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer", "beta", "energy", "success_prob"])
        for k in range(params.layers + 1):
            beta = "" if k == 0 else repr(float(trace.betas[k - 1]))
            w.writerow([k, beta, repr(float(trace.energies[k])), repr(float(trace.success_probs[k]))])
    log.info("final energy %.6f (ground %.6f)", trace.energies[-1], prob.e_star)


def _mgi_config(args) -> MgiConfig:
    if args.n is not None and (args.n_max is not None or args.n_min is not None):
        raise UsageError("use either --n or --n-max/--n-min")
    if args.n is not None:
        n_sched = NSchedule.fixed(args.n)
    elif args.n_max is not None and args.n_min is not None:
        n_sched = NSchedule.linear(args.n_max, args.n_min)
    else:
        raise UsageError("a filter size is required: --n N or --n-max A --n-min B")
    if args.dt is not None and (args.dt_start is not None or args.dt_end is not None):
        raise UsageError("use either --dt or --dt-start/--dt-end")
    if args.dt is not None:
        dt_sched = DtSchedule.constant(args.dt)
    elif args.dt_start is not None and args.dt_end is not None:
        dt_sched = DtSchedule.linear(args.dt_start, args.dt_end)
    else:
        raise UsageError("a time step is required: --dt D or --dt-start D1 --dt-end D2")
    return MgiConfig(args.iterations, FalqonParams(args.layers, dt_sched.start, args.alpha),
                     args.shots, n_sched, dt_sched, args.clamp_eps)


def _cmd_mgi(args) -> None:
    try:
        cfg = _mgi_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    prob = _problem(args)
    trace = run_mgi(cfg, prob.hamiltonian, prob.optima, np.random.default_rng(args.seed),
                    table=prob.table)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "n_used", "dt_used", "initial_energy", "final_energy",
                    "success_prob", "marginals", "thetas"])
        for rec in trace.records:
            w.writerow([rec.r, rec.n_used, repr(rec.dt_used), repr(rec.initial_energy),
                        repr(rec.final_energy), repr(rec.success_probability),
                        " ".join(repr(float(c)) for c in rec.marginals),
                        " ".join(repr(float(t)) for t in rec.thetas)])
    last = trace.records[-1]
    log.info("iteration %d: energy %.6f, success %.4f", last.r, last.final_energy,
             last.success_probability)


def _cmd_sweep(args) -> None:
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    try:
        spec = harness.load_spec(args.spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid spec {args.spec}: {exc}") from exc
    start = time.perf_counter()
    result = harness.run_grid(spec, workers=args.workers)
    elapsed = time.perf_counter() - start
    log.info("sweep finished in %.1f s", elapsed)
    harness.write_outputs(result, args.out, elapsed if args.timing else None)


_COMMANDS = {
    "gen-graph": _cmd_gen_graph,
    "oracle": _cmd_oracle,
    "falqon": _cmd_falqon,
    "mgi": _cmd_mgi,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mgi-falqon {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"mgi-falqon {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
