"""Report assembly and rendering.

A report is a plain ``dict`` of JSON-compatible values; the machine form is
``json.dumps(report, sort_keys=True, indent=2)`` and the text form is derived
from the same dict, so the two cannot drift apart.
"""

from __future__ import annotations

import json

import numpy as np

from .jetspace import JetLayout
from .oracle import CrossCheck
from .problemfile import ProblemFile
from .second_order import ClassificationReport, FalsifierResult, SecondVariationMatrix
from .symexpr import ZERO
from .symexpr import to_text as expr_text

VERSION = "varcond-report/1"


def _num(x) -> float:
    """Plain float, with ``-0.0`` folded to ``0.0`` for stable output."""
    x = float(x)
    return 0.0 if x == 0 else x


def header(pf: ProblemFile, command: str, options: dict) -> dict:
    p = pf.problem
    return {
        "version": VERSION,
        "command": command,
        "input": {
            "file": pf.path,
            "n": p.n,
            "m": p.m,
            "order": p.s,
            "lagrangian": pf.source["lagrangian"],
            "domain": [[_num(a), _num(b)] for a, b in p.domain],
            "grid": list(p.grid),
            "candidate": list(pf.source["candidate"]),
            "constraints": pf.source["constraints"],
            "split": None if p.split is None else f"{p.split[0]}:{p.split[1]}",
            "options": dict(sorted(options.items())),
        },
        "notes": [],
    }


def layout_section(lay: JetLayout) -> dict:
    return {
        "q": lay.q,
        "coordinates": [
            {"index": i, "name": c.name, "dep": c.dep, "order": c.order, "slot": c.slot}
            for i, c in enumerate(lay.coords, start=1)
        ],
    }


def el_section(residuals, augmented=None, multiplier=None) -> dict:
    out = {"residuals": [expr_text(r) for r in residuals]}
    if augmented is not None:
        out["augmented_lagrangian"] = expr_text(augmented)
    if multiplier is not None:
        out["multiplier_system"] = [expr_text(r) for r in multiplier]
    return out


def hessian_section(A: SecondVariationMatrix) -> dict:
    lay = A.layout
    entries = []
    for r, cr in enumerate(lay.coords, start=1):
        for c, cc in enumerate(lay.coords, start=1):
            e = A.entries[r - 1][c - 1]
            if e == ZERO:
                continue
            entries.append(
                {
                    "row": r,
                    "col": c,
                    "block": [cr.dep, cc.dep, cr.order, cc.order, cr.slot, cc.slot],
                    "expr": expr_text(e),
                }
            )
    return {"size": A.size, "nonzero": entries}


def classification_section(rep: ClassificationReport) -> dict:
    return {
        "verdict": rep.verdict.value,
        "el_residual": _num(rep.el_residual),
        "grid": list(rep.grid),
        "nodes": rep.nodes,
        "tally": dict(rep.tally),
        "legendre": {str(l): s.value for l, s in sorted(rep.legendre.items())},
        "diagonal_blocks": {
            f"{j},{k}": s.value for (j, k), s in sorted(rep.diagonal_blocks.items())
        },
        "eigenvalue_range": [_num(rep.min_eigenvalue), _num(rep.max_eigenvalue)],
    }


def cross_check_entry(cc: CrossCheck) -> dict:
    b = cc.direction
    out = {
        "first_symbolic": _num(cc.first_symbolic),
        "first_fd": _num(cc.first_fd),
        "second_symbolic": _num(cc.second_symbolic),
        "second_fd": _num(cc.second_fd),
        "first_ok": cc.first_ok,
        "second_ok": cc.second_ok,
        "passed": cc.passed,
    }
    if hasattr(b, "center"):
        out["direction"] = {
            "family": b.family,
            "l": b.l,
            "center": [_num(c) for c in b.center],
            "eps": _num(b.eps),
            "weights": [_num(w) for w in b.weights],
        }
    return out


def falsifier_section(res: FalsifierResult) -> dict:
    out = {"outcome": res.outcome, "tried": res.tried, "note": res.note}
    if res.counterexample:
        out["value"] = _num(res.value)
    return out


def render_machine(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def render_text(report: dict) -> str:
    lines = []
    inp = report["input"]
    lines.append(f"{report['version']}  command={report['command']}")
    lines.append(f"n={inp['n']} m={inp['m']} order={inp['order']}  L = {inp['lagrangian']}")
    dom = " x ".join(f"[{_fmt(a)}, {_fmt(b)}]" for a, b in inp["domain"])
    lines.append(f"domain {dom}  grid {'x'.join(map(str, inp['grid']))}")
    for j, u in enumerate(inp["candidate"], start=1):
        lines.append(f"candidate u{j} = {u}")
    if "layout" in report:
        lay = report["layout"]
        lines.append(f"jet coordinates (q={lay['q']}):")
        lines.extend(f"  {c['index']:>3}  {c['name']}" for c in lay["coordinates"])
    if "euler_lagrange" in report:
        el = report["euler_lagrange"]
        if "augmented_lagrangian" in el:
            lines.append(f"augmented Lagrangian: {el['augmented_lagrangian']}")
        for j, r in enumerate(el["residuals"], start=1):
            lines.append(f"EL[{j}] = {r}")
        for j, r in enumerate(el.get("multiplier_system", []), start=1):
            lines.append(f"multiplier system[{j}] = {r}")
    if "hessian" in report:
        h = report["hessian"]
        lines.append(f"second-variation matrix A: {h['size']}x{h['size']}, nonzero entries:")
        for e in h["nonzero"]:
            j, jp, k, kp, s, sp = e["block"]
            lines.append(
                f"  A[{e['row']},{e['col']}]  (j={j},j'={jp},k={k},k'={kp},h={s},h'={sp})"
                f"  {e['expr']}"
            )
    if "classification" in report:
        c = report["classification"]
        lines.append(f"EL residual on grid: {c['el_residual']:.3e}")
        tally = ", ".join(f"{k}={v}" for k, v in sorted(c["tally"].items()) if v)
        lines.append(f"node definiteness ({c['nodes']} nodes): {tally}")
        lines.append("Legendre (condensed): " + ", ".join(
            f"l={l}: {s}" for l, s in c["legendre"].items()))
        lines.append("diagonal blocks: " + ", ".join(
            f"(j,k)=({jk}): {s}" for jk, s in c["diagonal_blocks"].items()))
        lo, hi = c["eigenvalue_range"]
        lines.append(f"eigenvalue range over nodes: [{_fmt(lo)}, {_fmt(hi)}]")
        lines.append(f"verdict: {c['verdict']}")
    if "cross_checks" in report:
        for i, cc in enumerate(report["cross_checks"], start=1):
            status = "pass" if cc["passed"] else "FAIL"
            lines.append(
                f"bump {i}: {status}  dF {_fmt(cc['first_symbolic'])} vs FD {_fmt(cc['first_fd'])};"
                f"  d2F {_fmt(cc['second_symbolic'])} vs FD {_fmt(cc['second_fd'])}"
            )
    if "falsifier" in report:
        f = report["falsifier"]
        extra = f" (J2+I2 = {_fmt(f['value'])})" if "value" in f else ""
        lines.append(f"J2+I2 search over {f['tried']} bumps: {f['outcome']}{extra}")
    for note in report.get("notes", []):
        lines.append(f"note: {note}")
    if "generated" in report:
        lines.append(f"generated {report['generated']}")
    return "\n".join(lines) + "\n"
