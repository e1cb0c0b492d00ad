# app/cli.py

"""
Command line front end: ``piff <command> ...``.

Exit status is 0 on success, 1 on a model, matrix or analysis error
(diagnostics go to stderr as ``file:line:col: severity: message``) and 2
on a usage error.
"""

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from app.conf.config import get_settings
from app.conf.logging import configure_logging
from app.errors import PiffError
from app.repository.artifacts import (
    read_matrix, read_text, write_matrix, write_partition, write_simulation, write_text, write_trajectory,
    write_verdict,
)
from app.services.analysis import (
    block_map, check_pctl, fast_simulation, meanfield_trajectory, parse_occupancy, parse_pctl, point_mass,
    verify_quotient,
)
from app.services.bisim import reduce_matrix
from app.services.exactsim import PopulationConfig, monte_carlo
from app.services.flyfast import render_flat_spec, render_matrix_spec
from app.services.idtmc import LabelMap, PolyMatrix
from app.services.labels import label_states, pair_labels, parse_label_file
from app.services.pipeline import compile_model

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


def _labels(args, M: PolyMatrix, stored: Optional[LabelMap] = None) -> LabelMap:
    if getattr(args, "pairs", False):
        return pair_labels(M)
    if args.labels:
        return label_states(parse_label_file(read_text(args.labels)), M)
    if stored:
        return stored
    raise _UsageError("either --labels or --pairs is required")


# --- commands ---
def cmd_compile(args) -> int:
    source = read_text(args.model)
    result = compile_model(source, prune=not args.no_prune, threads=args.threads)
    logger.info("compiled %s", args.model)
    header = f"generated from {os.path.basename(args.model)}"
    text = render_flat_spec(result.spec, header=header)
    if args.output:
        write_text(args.output, text)
    else:
        sys.stdout.write(text)
    if args.matrix:
        write_matrix(args.matrix, result.matrix)
    print(f"{len(result.spec.states)} states, {len(result.spec.actions)} actions", file=sys.stderr)
    return 0


def cmd_reduce(args) -> int:
    M, stored = read_matrix(args.matrix)
    quotient = reduce_matrix(M, _labels(args, M, stored))
    write_matrix(args.output, quotient.matrix, quotient.labels)
    if args.emit_ff:
        write_text(args.emit_ff, render_matrix_spec(quotient.matrix, header=f"reduced from {args.matrix}"))
    if args.partition:
        write_partition(args.partition, quotient)
    for name, members in quotient.blocks():
        print(f"{name}: {' '.join(members)}")
    print(f"{M.dimension} states -> {quotient.matrix.dimension} blocks", file=sys.stderr)
    return 0


def cmd_meanfield(args) -> int:
    M, _ = read_matrix(args.matrix)
    trajectory = meanfield_trajectory(M, parse_occupancy(args.init, M), args.steps)
    write_trajectory(args.output, M.states, trajectory)
    return 0


def cmd_fastsim(args) -> int:
    M, _ = read_matrix(args.matrix)
    trajectory = fast_simulation(M, parse_occupancy(args.init, M), point_mass(M, args.start), args.steps)
    write_trajectory(args.output, M.states, trajectory)
    return 0


def cmd_check(args) -> int:
    M, stored = read_matrix(args.matrix)
    labels = _labels(args, M, stored)
    verdict = check_pctl(M, labels, parse_occupancy(args.init, M), args.state, args.time, parse_pctl(args.formula))
    if args.output:
        write_verdict(args.output, verdict)
    line = f"{verdict.state}@{verdict.time} |= {verdict.formula}: {verdict.verdict}"
    if verdict.probability is not None:
        line += f" (p = {verdict.probability:.12g})"
    print(line)
    return 0


def cmd_simulate(args) -> int:
    M, _ = read_matrix(args.matrix)
    population = args.N or M.population
    if not population:
        raise _UsageError("--N is required when the matrix stores no population size")
    cfg0 = PopulationConfig.from_occupancy(parse_occupancy(args.init, M), population)
    result = monte_carlo(M, cfg0, args.steps, args.replicas, args.seed, threads=args.threads)
    paths = write_simulation(args.output, result)
    print(f"wrote {len(paths)} file(s) to {args.output}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    full, stored_full = read_matrix(args.full)
    reduced, stored_reduced = read_matrix(args.reduced)
    full_labels = _labels(args, full, stored_full)
    reduced_labels = _labels(args, reduced, stored_reduced)
    formulas = [parse_pctl(text) for text in args.formula]
    agreement = verify_quotient(
        full, full_labels, reduced, reduced_labels, block_map(full, reduced), parse_occupancy(args.init, full),
        args.steps, formulas, args.time,
    )
    print(f"max trajectory gap {agreement.max_gap:.3e}")
    for state, t, what in agreement.disagreements:
        print(f"disagreement at {state}@{t}: {what}", file=sys.stderr)
    return 0 if agreement.ok else 1


# --- parser ---
def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="piff", description="PiFF to FlyFast compiler and analyses")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (-vv for debug)")
    parser.add_argument("--threads", type=int, default=settings.THREADS, help="worker threads")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("compile", help="compile a .piff model")
    p.add_argument("model")
    p.add_argument("-o", "--output", help="FlyFast output file (stdout when omitted)")
    p.add_argument("--matrix", help="also write the matrix document")
    p.add_argument("--no-prune", action="store_true", help="keep unreachable and zero-probability states")
    p.set_defaults(func=cmd_compile)

    p = commands.add_parser("reduce", help="minimize a matrix by bisimulation")
    p.add_argument("matrix")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--labels", help="label file")
    group.add_argument("--pairs", action="store_true", help="label by (agent state, store) pair")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--emit-ff", help="also write the reduced model as FlyFast text")
    p.add_argument("--partition", help="also write the partition document")
    p.set_defaults(func=cmd_reduce)

    for name, func, doc in (("mf", cmd_meanfield, "mean-field trajectory"),
                            ("fastsim", cmd_fastsim, "fast simulation of one individual")):
        p = commands.add_parser(name, help=doc)
        p.add_argument("matrix")
        p.add_argument("--init", help="NAME:value,... (stored occupancy when omitted)")
        p.add_argument("--steps", type=int, required=True)
        p.add_argument("-o", "--output", required=True)
        if name == "fastsim":
            p.add_argument("--start", required=True, help="state of the tracked individual")
        p.set_defaults(func=func)

    p = commands.add_parser("check", help="bounded PCTL at one state and time")
    p.add_argument("matrix")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--labels", help="label file (labels stored in the matrix when omitted)")
    group.add_argument("--pairs", action="store_true")
    p.add_argument("--init")
    p.add_argument("--state", required=True)
    p.add_argument("--time", type=int, default=0)
    p.add_argument("--formula", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_check)

    p = commands.add_parser("simulate", help="exact population simulation")
    p.add_argument("matrix")
    p.add_argument("--init")
    p.add_argument("--N", type=int, help="population size (stored size when omitted)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = commands.add_parser("verify", help="compare a model with its quotient")
    p.add_argument("full")
    p.add_argument("reduced")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--labels")
    group.add_argument("--pairs", action="store_true")
    p.add_argument("--init")
    p.add_argument("--formula", action="append", default=[])
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--time", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def _report(exc: PiffError, filename: str) -> None:
    for diagnostic in exc.diagnostics():
        print(diagnostic.render(filename), file=sys.stderr)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(("WARNING", "INFO", "DEBUG")[min(args.verbose, 2)])
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except PiffError as exc:
        filename = getattr(args, "model", None) or getattr(args, "matrix", None) or getattr(args, "full", "<input>")
        _report(exc, filename)
        return 1


def main() -> None:
    sys.exit(run_cli())
