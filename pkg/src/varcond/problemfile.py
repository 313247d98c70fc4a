"""Loader for the line-oriented ``.varc`` problem format.

::

    # comment
    [problem]
    n = 1
    m = 1
    order = 1
    lagrangian = sqrt(1 + u1_x1^2)

    [domain]
    x1 = 0 1
    grid = 41

    [candidate]
    u1 = x1

    [constraint]          # repeatable
    f = u1_x1 - x1
    multiplier = x1

    [options]
    tol = 1e-9

Expressions are single-line strings in the expression grammar.  Errors carry
the 1-based line and column of the offending text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .jetspace import layout
from .symexpr import Expr, ParseError, parse, parse_x
from .variational import Candidate, Constraint, Problem


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column


SECTIONS = ("problem", "domain", "candidate", "constraint", "options")
_OPTION_TYPES = {"tol": float, "fd_step": float, "quad_nodes": int, "bumps": int, "seed": int}
_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_PAIR = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


@dataclass
class _Value:
    text: str
    line: int
    column: int  # 1-based column of the value's first character


@dataclass
class ProblemFile:
    problem: Problem
    candidate: Candidate
    options: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)
    path: str | None = None

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def m(self) -> int:
        return self.problem.m

    @property
    def s(self) -> int:
        return self.problem.s


def _strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0].rstrip()


def _scan(text: str):
    """Sections as ``(name, line, {key: _Value})`` in file order."""
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        head = _SECTION.match(stripped)
        if head:
            name = head.group(1)
            if name not in SECTIONS:
                raise ProblemFileError(f"unknown section [{name}]", lineno, indent + 1)
            if name != "constraint" and any(s[0] == name for s in sections):
                raise ProblemFileError(f"duplicate section [{name}]", lineno, indent + 1)
            current = (name, lineno, {})
            sections.append(current)
            continue
        pair = _PAIR.match(stripped)
        if pair is None:
            raise ProblemFileError("expected 'key = value'", lineno, indent + 1)
        if current is None:
            raise ProblemFileError("key outside any section", lineno, indent + 1)
        key, value = pair.group(1), pair.group(2).strip()
        if key in current[2]:
            raise ProblemFileError(f"duplicate key {key!r}", lineno, indent + 1)
        col = indent + stripped.index(value) + 1 if value else len(line) + 1
        current[2][key] = _Value(value, lineno, col)
    return sections


def _int(v: _Value, what: str, minimum: int = 0) -> int:
    try:
        out = int(v.text)
    except ValueError:
        raise ProblemFileError(f"{what} must be an integer, got {v.text!r}", v.line, v.column)
    if out < minimum:
        raise ProblemFileError(f"{what} must be >= {minimum}", v.line, v.column)
    return out


def _float(v: _Value, what: str) -> float:
    try:
        return float(v.text)
    except ValueError:
        raise ProblemFileError(f"{what} must be a number, got {v.text!r}", v.line, v.column)


def _expr(v: _Value, parser, *args) -> Expr:
    if not v.text:
        raise ProblemFileError("empty expression", v.line, v.column)
    try:
        return parser(v.text, *args)
    except ParseError as exc:
        raise ProblemFileError(exc.message, v.line, v.column + exc.position) from None


def _need(keys: dict, key: str, section: str, line: int) -> _Value:
    if key not in keys:
        raise ProblemFileError(f"[{section}] is missing {key!r}", line)
    return keys[key]


def _reject_unknown(keys: dict, allowed, section: str):
    for k, v in keys.items():
        if k not in allowed:
            raise ProblemFileError(f"unknown key {k!r} in [{section}]", v.line, 1)


def loads(text: str, path: str | None = None) -> ProblemFile:
    sections = _scan(text)
    by_name = {}
    constraints = []
    for name, line, keys in sections:
        if name == "constraint":
            constraints.append((line, keys))
        else:
            by_name[name] = (line, keys)
    for required in ("problem", "domain", "candidate"):
        if required not in by_name:
            raise ProblemFileError(f"missing [{required}] section")

    pline, pkeys = by_name["problem"]
    _reject_unknown(pkeys, ("n", "m", "order", "lagrangian", "split"), "problem")
    n = _int(_need(pkeys, "n", "problem", pline), "n", 1)
    m = _int(_need(pkeys, "m", "problem", pline), "m", 1)
    s = _int(_need(pkeys, "order", "problem", pline), "order", 0)
    lay = layout(n, m, s)
    lag = _expr(_need(pkeys, "lagrangian", "problem", pline), parse, lay)
    split = None
    if "split" in pkeys:
        v = pkeys["split"]
        hit = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*", v.text)
        if hit is None:
            raise ProblemFileError("split must look like 'm_u:m_aux'", v.line, v.column)
        split = (int(hit.group(1)), int(hit.group(2)))
        if split[0] + split[1] != m:
            raise ProblemFileError(
                f"split {v.text} does not add up to m={m}", v.line, v.column
            )

    dline, dkeys = by_name["domain"]
    allowed = {f"x{i}" for i in range(1, n + 1)} | {"grid"}
    _reject_unknown(dkeys, allowed, "domain")
    domain = []
    for i in range(1, n + 1):
        v = _need(dkeys, f"x{i}", "domain", dline)
        parts = v.text.split()
        if len(parts) != 2:
            raise ProblemFileError(f"x{i} needs two bounds 'a b'", v.line, v.column)
        a, b = (_float(_Value(p, v.line, v.column), f"x{i} bound") for p in parts)
        if not a < b:
            raise ProblemFileError(f"x{i} interval [{a}, {b}] is empty", v.line, v.column)
        domain.append((a, b))
    gv = _need(dkeys, "grid", "domain", dline)
    gparts = gv.text.split()
    if len(gparts) != n:
        raise ProblemFileError(f"grid needs {n} resolutions, got {len(gparts)}", gv.line, gv.column)
    grid = tuple(_int(_Value(g, gv.line, gv.column), "grid resolution", 2) for g in gparts)

    cline, ckeys = by_name["candidate"]
    for k, v in ckeys.items():
        if not re.fullmatch(r"u\d+", k):
            raise ProblemFileError(f"unknown key {k!r} in [candidate]", v.line, 1)
    if len(ckeys) != m:
        raise ProblemFileError(f"candidate has {len(ckeys)} components, m={m}", cline)
    comps = []
    for j in range(1, m + 1):
        v = _need(ckeys, f"u{j}", "candidate", cline)
        comps.append(_expr(v, parse_x, n))

    cons, extra = [], []
    for line, keys in constraints:
        _reject_unknown(keys, ("f", "multiplier", "multiplier_tilde"), "constraint")
        f = _expr(_need(keys, "f", "constraint", line), parse, lay)
        lam = _expr(_need(keys, "multiplier", "constraint", line), parse_x, n)
        cons.append(Constraint(f, lam))
        if "multiplier_tilde" in keys:
            extra.append(_expr(keys["multiplier_tilde"], parse_x, n))

    options = {}
    if "options" in by_name:
        oline, okeys = by_name["options"]
        _reject_unknown(okeys, _OPTION_TYPES, "options")
        for k, v in okeys.items():
            kind = _OPTION_TYPES[k]
            options[k] = _int(v, k, 1 if k != "seed" else 0) if kind is int else _float(v, k)
            if kind is float and options[k] <= 0:
                raise ProblemFileError(f"{k} must be positive", v.line, v.column)

    try:
        problem = Problem(lay, lag, tuple(domain), grid, tuple(cons), split, tuple(extra))
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None
    source = {
        "lagrangian": pkeys["lagrangian"].text,
        "candidate": [ckeys[f"u{j}"].text for j in range(1, m + 1)],
        "constraints": [
            {k: v.text for k, v in sorted(keys.items())} for _, keys in constraints
        ],
    }
    return ProblemFile(problem, Candidate(tuple(comps)), options, source, path)


def load(path) -> ProblemFile:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ProblemFileError(f"no such file: {p}") from None
    except UnicodeDecodeError as exc:
        raise ProblemFileError(f"{p} is not valid UTF-8 ({exc.reason})") from None
    return loads(text, str(p))
