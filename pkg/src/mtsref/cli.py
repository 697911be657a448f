"""Command-line interface.

Verdicts go to stdout, diagnostics to stderr.  Exit codes: 0 the checked
refinement holds (or plain success), 1 it does not hold, 2 the approximate
mode could not decide, 64 usage error, 65 input error, 70 internal limit or
solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .approx import Answer, decide_thorough_approx
from .errors import (
    CyclicInputError,
    GenFailureError,
    InconsistentInputError,
    KindError,
    MtsrefError,
    OutDegreeLimitError,
    ParamLimitError,
    SizeLimitError,
    SolverProtocolError,
    SolverTimeoutError,
    SolverUnavailableError,
    StateLimitError,
    VarLimitError,
)
from .generate import GenConfig, generate
from .modal import bounded_refines, refines_pmts, refines_pmts_fixed_relation
from .qbf import encode_bmts, encode_pmts, evaluate_qbf, solve_external, to_qdimacs
from .systems import System, SystemKind, classify, prune
from .textfmt import ParseError, parse_file, serialize_system
from .thorough import thorough_refines
from .transform import (
    denegate,
    deparameterize,
    deterministic_hull,
    parameter_free_hull,
    simplify_obligations,
)

EXIT_HOLDS = 0
EXIT_DOES_NOT_HOLD = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_INPUT = 65
EXIT_INTERNAL = 70

_LIMIT_ERRORS = (
    OutDegreeLimitError,
    ParamLimitError,
    StateLimitError,
    VarLimitError,
    SizeLimitError,
    SolverUnavailableError,
    SolverTimeoutError,
    SolverProtocolError,
)
_INPUT_ERRORS = (
    ParseError,
    KindError,
    CyclicInputError,
    InconsistentInputError,
    GenFailureError,
    FileNotFoundError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def load_system_ref(ref: str) -> System:
    """Resolve a ``path#systemName`` reference (the name part is optional)."""
    path, _, name = ref.partition("#")
    text = Path(path).read_text(encoding="utf-8")
    parsed = parse_file(text)
    if not name:
        if len(parsed) > 1:
            raise MtsrefError(
                f"{path} contains {len(parsed)} systems; use {path}#NAME with one of: "
                + ", ".join(p.name for p in parsed)
            )
        return parsed[0].system
    for entry in parsed:
        if entry.name == name:
            return entry.system
    raise MtsrefError(
        f"no system named {name!r} in {path}; available: " + ", ".join(p.name for p in parsed)
    )


def _initial_or_fail(sys: System, ref: str) -> int:
    if sys.initial is None:
        raise MtsrefError(f"system {ref!r} has no initial state")
    return sys.initial


def _print_verdict(holds: bool) -> int:
    print("HOLDS" if holds else "DOES-NOT-HOLD")
    return EXIT_HOLDS if holds else EXIT_DOES_NOT_HOLD


def cmd_check_modal(args) -> int:
    left = load_system_ref(args.left)
    right = load_system_ref(args.right)
    s0 = _initial_or_fail(left, args.left)
    t0 = _initial_or_fail(right, args.right)

    if args.bound is not None:
        if left.params or right.params:
            raise KindError("--bound applies to parameter-free systems only")
        return _print_verdict(bounded_refines(left, s0, right, t0, args.bound))

    if args.engine == "direct":
        if args.definition == "original":
            verdict = refines_pmts_fixed_relation(left, s0, right, t0)
        else:
            verdict = refines_pmts(left, s0, right, t0)
        return _print_verdict(verdict.holds)

    if args.definition == "original":
        raise MtsrefError("the QBF engines decide the per-valuation definition only")
    if left.params or right.params:
        inst = encode_pmts(left, s0, right, t0)
    else:
        inst = encode_bmts(left, s0, right, t0)
    if args.engine == "qbf-internal":
        return _print_verdict(evaluate_qbf(inst, max_vars=args.max_qbf_vars))
    if not args.solver:
        raise MtsrefError("--engine qbf-external needs --solver CMD")
    return _print_verdict(solve_external(inst, args.solver, args.timeout_secs))


def cmd_check_thorough(args) -> int:
    left = load_system_ref(args.left)
    right = load_system_ref(args.right)
    s0 = _initial_or_fail(left, args.left)
    t0 = _initial_or_fail(right, args.right)

    if args.mode == "exact":
        return _print_verdict(thorough_refines(left, s0, right, t0))

    left_p, removed_l = prune(left)
    right_p, removed_r = prune(right)
    if s0 in removed_l:
        return _print_verdict(True)
    if t0 in removed_r:
        return _print_verdict(False)
    verdict = decide_thorough_approx(
        left_p, s0, right_p, t0, allow_exact=(args.mode == "auto")
    )
    if verdict.answer == Answer.YES:
        return _print_verdict(True)
    if verdict.answer == Answer.NO:
        return _print_verdict(False)
    print(f"UNKNOWN({verdict.rule.value})")
    return EXIT_UNKNOWN


def cmd_transform(args) -> int:
    sys_in = load_system_ref(args.source)
    name = args.source.partition("#")[2] or "M"
    initials = None
    if args.op == "prune":
        result, removed = prune(sys_in)
        if removed:
            print(f"removed {len(removed)} state(s)", file=sys.stderr)
    elif args.op == "deparam":
        result, _ = deparameterize(sys_in, _initial_or_fail(sys_in, args.source), trim=args.trim)
    elif args.op == "denegate":
        multi = denegate(sys_in, _initial_or_fail(sys_in, args.source))
        result = multi.system
        initials = multi.initials
    elif args.op == "dethull":
        result, _ = deterministic_hull(sys_in, _initial_or_fail(sys_in, args.source))
    elif args.op == "pfhull":
        result = parameter_free_hull(sys_in)
    else:
        raise MtsrefError(f"unknown transform {args.op!r}")
    if args.simplify:
        result = simplify_obligations(result)
    text = serialize_system(result, f"{name}_{args.op}", initials=initials)
    Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_HOLDS


def cmd_encode_qbf(args) -> int:
    left = load_system_ref(args.left)
    right = load_system_ref(args.right)
    s0 = _initial_or_fail(left, args.left)
    t0 = _initial_or_fail(right, args.right)
    if left.params or right.params:
        inst = encode_pmts(left, s0, right, t0)
    else:
        inst = encode_bmts(left, s0, right, t0)
    Path(args.output).write_text(to_qdimacs(inst), encoding="utf-8")
    return EXIT_HOLDS


def cmd_classify(args) -> int:
    print(classify(load_system_ref(args.source)).name)
    return EXIT_HOLDS


def cmd_gen(args) -> int:
    cfg = GenConfig(
        kind=SystemKind[args.kind.upper()],
        num_states=args.states,
        alphabet_size=args.alphabet,
        branching_degree=args.branching,
        num_params=args.params,
        topology=args.topology,
        formula_depth=args.formula_depth,
        seed=args.seed,
    )
    Path(args.output).write_text(serialize_system(generate(cfg), "G"), encoding="utf-8")
    return EXIT_HOLDS


def cmd_bench(args) -> int:
    spec = json.loads(Path(args.matrix).read_text(encoding="utf-8"))
    cells = [
        GenConfig(
            kind=SystemKind[cell["kind"].upper()],
            num_states=cell["states"],
            alphabet_size=cell.get("alphabet", 2),
            branching_degree=cell.get("branching", 2),
            num_params=cell.get("params", 0),
            topology=cell.get("topology", "tree-noise"),
            formula_depth=cell.get("formula_depth", 3),
            seed=cell.get("seed", spec.get("seed", 0)),
        )
        for cell in spec["cells"]
    ]
    rows = bench_mod.run_bench(
        cells,
        pairs_per_cell=spec.get("pairs_per_cell", 5),
        checkers=tuple(spec.get("checkers", ["direct"])),
        timeout_secs=args.timeout_secs,
        workers=args.workers,
        solver_cmd=args.solver,
    )
    Path(args.output).write_text(bench_mod.rows_to_csv(rows), encoding="utf-8")
    timeouts = sum(1 for r in rows if r.timed_out)
    print(f"{len(rows)} rows, {timeouts} timeout(s)", file=sys.stderr)
    return EXIT_HOLDS


def build_parser() -> _Parser:
    parser = _Parser(prog="mtsref", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-modal", help="decide modal refinement between two states")
    p.add_argument("left", help="FILE#SYSTEM whose initial state refines")
    p.add_argument("right", help="FILE#SYSTEM whose initial state is refined")
    p.add_argument("--definition", choices=["new", "original"], default="new")
    p.add_argument("--engine", choices=["direct", "qbf-internal", "qbf-external"], default="direct")
    p.add_argument("--solver", help="external solver command template with {file}")
    p.add_argument("--bound", type=int, help="bounded refinement rounds instead of the fixpoint")
    p.add_argument("--timeout-secs", type=float, default=None, help="external solver wall-clock budget")
    p.add_argument("--max-qbf-vars", type=int, default=24, help="internal evaluator variable cap")
    p.set_defaults(func=cmd_check_modal)

    p = sub.add_parser("check-thorough", help="decide thorough refinement between two states")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--mode", choices=["exact", "approx", "auto"], default="auto")
    p.set_defaults(func=cmd_check_thorough)

    p = sub.add_parser("transform", help="apply a system transformation")
    p.add_argument("source", help="FILE#SYSTEM to transform")
    p.add_argument("--op", required=True, choices=["deparam", "denegate", "dethull", "pfhull", "prune"])
    p.add_argument("--simplify", action="store_true", help="constant-fold the output obligations")
    p.add_argument("--trim", action="store_true", help="keep only the reachable part (deparam)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("encode-qbf", help="write the refinement formula as QDIMACS")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode_qbf)

    p = sub.add_parser("classify", help="print the most specific kind of a system")
    p.add_argument("source")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gen", help="generate a random system")
    p.add_argument("--kind", required=True, choices=["mts", "dmts", "bmts", "pmts"], type=str.lower)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--params", type=int, default=0)
    p.add_argument("--topology", choices=["tree-noise", "clusters"], default="tree-noise")
    p.add_argument("--formula-depth", type=int, default=3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run a benchmark matrix and write CSV")
    p.add_argument("--matrix", required=True, help="JSON matrix description")
    p.add_argument("--timeout-secs", type=float, default=60.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--solver", help="external solver command for the qbf-external checker")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _LIMIT_ERRORS as exc:
        print(f"limit error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except MtsrefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
