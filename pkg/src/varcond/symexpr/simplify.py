"""Bottom-up simplification: flattening, folding and like-term collection.

The result is semantically equal to the input wherever the input is defined.
It is not a canonical form; radicals in particular are left alone.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction

from .expr import (
    ONE,
    ZERO,
    Add,
    Bump,
    Const,
    Expr,
    Func,
    Indicator,
    Jet,
    Mul,
    Pow,
    Var,
    _fold,
    _fold_const_power,
    power,
)

_AT_ZERO = {"exp": 1, "sin": 0, "sinh": 0, "tanh": 0, "cos": 1, "cosh": 1}


def simplify(e: Expr) -> Expr:
    memo: dict[Expr, Expr] = {}

    def go(node):
        hit = memo.get(node)
        if hit is None:
            hit = _simplify_node(node, go)
            memo[node] = hit
        return hit

    return go(e)


def _simplify_node(node, go):
    if isinstance(node, (Const, Var, Jet, Indicator)):
        return node
    if isinstance(node, Add):
        return _collect_sum([go(t) for t in node.terms])
    if isinstance(node, Mul):
        return _collect_product([go(f) for f in node.factors])
    if isinstance(node, Pow):
        return _simplify_power(go(node.base), node.exp, go)
    if isinstance(node, Func):
        arg = go(node.arg)
        if isinstance(arg, Const) and arg.value == 0 and node.name in _AT_ZERO:
            return Const(_AT_ZERO[node.name])
        if node.name == "log":
            if isinstance(arg, Const) and arg.value == 1:
                return ZERO
            if isinstance(arg, Func) and arg.name == "exp":
                return arg.arg
        return Func(node.name, arg)
    if isinstance(node, Bump):
        arg = go(node.arg)
        if node.l == 0:
            return ONE if node.order == 0 else ZERO
        if node.order > node.l:
            return ZERO
        return Bump(node.l, node.order, arg)
    raise TypeError(f"cannot simplify {node!r}")


def split_coefficient(term: Expr) -> tuple[object, Expr]:
    """``c * rest`` decomposition with a numeric ``c``."""
    if isinstance(term, Mul) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        return term.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), term


def _scaled_sum(t) -> bool:
    return (
        isinstance(t, Mul)
        and len(t.factors) == 2
        and isinstance(t.factors[0], Const)
        and isinstance(t.factors[1], Add)
    )


def _collect_sum(terms):
    const = Fraction(0)
    coeffs: dict[Expr, object] = defaultdict(lambda: Fraction(0))
    stack = list(reversed(terms))
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
        elif isinstance(t, Const):
            const = _fold(const, t.value, lambda a, b: a + b)
        elif _scaled_sum(t):
            # c * (a + b) inside a sum: distribute so like terms can meet
            c, inner = t.factors
            stack.extend(reversed([_collect_product([c, u]) for u in inner.terms]))
        else:
            c, rest = split_coefficient(t)
            coeffs[rest] = _fold(coeffs[rest], c, lambda a, b: a + b)
    out = []
    for rest, c in coeffs.items():
        if c == 0:
            continue
        if c == 1:
            out.append(rest)
        elif isinstance(rest, Mul):
            out.append(Mul((Const(c),) + rest.factors))
        else:
            out.append(Mul((Const(c), rest)))
    out.sort(key=Expr.sort_key)
    if const != 0:
        out.insert(0, Const(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(out)


def _collect_product(factors):
    coeff = Fraction(1)
    exponents: dict[Expr, Fraction] = defaultdict(Fraction)
    opaque = []
    stack = list(reversed(factors))
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
        elif isinstance(f, Const):
            coeff = _fold(coeff, f.value, lambda a, b: a * b)
        elif isinstance(f, Pow):
            exponents[f.base] += f.exp
        else:
            exponents[f] += 1
    if coeff == 0:
        return ZERO
    for base, p in exponents.items():
        if p == 0:
            continue
        if isinstance(base, Const):
            folded = _fold_const_power(base.value, p)
            if folded is not None:
                coeff = _fold(coeff, folded, lambda a, b: a * b)
                continue
        opaque.append(Pow(base, p) if p != 1 else base)
    opaque.sort(key=Expr.sort_key)
    if not opaque:
        return Const(coeff)
    if coeff == 1 and len(opaque) == 1:
        return opaque[0]
    if coeff != 1:
        opaque.insert(0, Const(coeff))
    return Mul(opaque)


def _simplify_power(base, p: Fraction, go):
    if p == 0:
        return ONE
    if p == 1:
        return base
    if isinstance(base, Const):
        return power(base, p)
    if isinstance(base, Pow):
        q = base.exp
        # (b^q)^p == b^(qp) needs p integral, or q odd so b^q keeps b's sign
        if p.denominator == 1 or (q.denominator == 1 and q % 2 == 1):
            combined = q * p
            if combined.denominator in (1, 2):
                return _simplify_power(base.base, combined, go)
        return Pow(base, p)
    if isinstance(base, Mul) and p.denominator == 1:
        return _collect_product([_simplify_power(f, p, go) for f in base.factors])
    return Pow(base, p)
