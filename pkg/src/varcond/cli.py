"""Command-line front end: ``varcond <command> PROBLEM.varc [flags]``.

Exit codes: 0 success, 2 usage or parse error, 3 numeric failure (including a
failed oracle cross-check), 4 INCONCLUSIVE verdict without
``--allow-inconclusive``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys

from . import __version__
from .oracle import DEFAULT_NODES, DEFAULT_STEP, PlacementError, cross_check, random_bumps
from .problemfile import ProblemFileError, load
from .report import (
    classification_section,
    cross_check_entry,
    el_section,
    falsifier_section,
    hessian_section,
    header,
    layout_section,
    render_machine,
    render_text,
)
from .second_order import (
    DEFAULT_TOL,
    NumericError,
    ShapeError,
    Verdict,
    assemble_A,
    classify,
    sufficient_thmmm_falsifier,
)
from .symexpr import EvaluationError, ParseError
from .variational import (
    ConstraintArityError,
    augment,
    augment_underdetermined,
    euler_lagrange,
    multiplier_system,
    multiplier_system_underdetermined,
)

log = logging.getLogger("varcond")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GATE = 0, 2, 3, 4
COMMANDS = ("jet", "el", "hessian", "classify", "verify")
DEFAULT_BUMPS = 5


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="varcond",
        description="Euler-Lagrange equations and second-order extremum tests "
        "for multiple integrals with higher derivatives.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("problem", help="path to a .varc problem file")
    fmt = ap.add_mutually_exclusive_group()
    fmt.add_argument("--machine", action="store_true", help="emit the JSON report")
    fmt.add_argument("--text", action="store_true", help="emit plain text (default)")
    ap.add_argument("--tol", type=float, help="definiteness tolerance")
    ap.add_argument("--grid-scale", type=float, default=1.0, help="refine or coarsen the grid")
    ap.add_argument("--seed", type=int, help="seed for bump placement")
    ap.add_argument("--allow-inconclusive", action="store_true")
    ap.add_argument("--no-timestamp", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _options(pf, args) -> dict:
    o = pf.options
    opts = {
        "tol": o.get("tol", DEFAULT_TOL),
        "fd_step": o.get("fd_step", DEFAULT_STEP),
        "quad_nodes": o.get("quad_nodes", DEFAULT_NODES),
        "bumps": o.get("bumps", DEFAULT_BUMPS),
        "seed": o.get("seed", 0),
        "grid_scale": args.grid_scale,
    }
    if args.tol is not None:
        opts["tol"] = args.tol
    if args.seed is not None:
        opts["seed"] = args.seed
    return opts


def _el(report, pf):
    p = pf.problem
    lay = p.layout
    if not p.constraints:
        report["euler_lagrange"] = el_section(euler_lagrange(p.lagrangian, lay))
        return
    exprs = [c.expr for c in p.constraints]
    lams = [c.multiplier for c in p.constraints]
    if p.underdetermined:
        G = augment_underdetermined(p.lagrangian, exprs, lams, p.extra_multipliers, p.split)
        ms = multiplier_system_underdetermined(exprs, lams, p.extra_multipliers, p.split, lay)
        report["notes"].append(
            "auxiliary multipliers enter only through their sum; "
            "the combined system is used as written"
        )
    else:
        G = augment(p.lagrangian, exprs, lams, p.m)
        ms = multiplier_system(exprs, lams, lay)
    report["euler_lagrange"] = el_section(euler_lagrange(G, lay), G, ms)


def run(command: str, pf, opts: dict) -> tuple[dict, int]:
    report = header(pf, command, opts)
    p = pf.problem
    code = EXIT_OK
    if command == "jet":
        report["layout"] = layout_section(p.layout)
    elif command == "el":
        _el(report, pf)
    elif command == "hessian":
        report["hessian"] = hessian_section(assemble_A(p.effective_lagrangian(), p.layout))
    elif command == "classify":
        rep = classify(p, pf.candidate, tol=opts["tol"], scale=opts["grid_scale"])
        report["classification"] = classification_section(rep)
        report["notes"].extend(rep.notes)
        if rep.verdict is Verdict.INCONCLUSIVE:
            code = EXIT_GATE
    elif command == "verify":
        A = assemble_A(p.effective_lagrangian(), p.layout)
        bumps = random_bumps(p, opts["bumps"], opts["seed"])
        checks = [
            cross_check(p, pf.candidate, b, opts["fd_step"], opts["quad_nodes"], A=A)
            for b in bumps
        ]
        report["cross_checks"] = [cross_check_entry(c) for c in checks]
        report["all_passed"] = all(c.passed for c in checks)
        fals = sufficient_thmmm_falsifier(
            p, pf.candidate, opts["bumps"], opts["seed"], A=A, nodes=opts["quad_nodes"]
        )
        report["falsifier"] = falsifier_section(fals)
        report["notes"].append(f"bump placement seed {opts['seed']}")
        if not report["all_passed"]:
            code = EXIT_NUMERIC
    return report, code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        pf = load(args.problem)
        opts = _options(pf, args)
        report, code = run(args.command, pf, opts)
    except (ProblemFileError, ParseError, ConstraintArityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvaluationError, NumericError, ShapeError, PlacementError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.no_timestamp:
        report["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    if args.machine:
        sys.stdout.write(render_machine(report))
    elif args.command == "jet":
        sys.stdout.write("".join(f"{c['name']}\n" for c in report["layout"]["coordinates"]))
    else:
        sys.stdout.write(render_text(report))
    if code == EXIT_GATE and args.allow_inconclusive:
        code = EXIT_OK
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
