"""Partial derivatives with respect to jet symbols and total derivatives."""

from __future__ import annotations

from ..jetspace import JetCoordinate, MultiIndex
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
    add,
    free_jets,
    func,
    mul,
    power,
)
from .simplify import simplify


def diff(e: Expr, symbol: Expr, *, simplified: bool = True) -> Expr:
    """Partial derivative of ``e`` by a ``Var`` or ``Jet`` leaf.

    Jet coordinates are treated as independent symbols; ``Indicator`` nodes
    differentiate to zero (almost everywhere).
    """
    if not isinstance(symbol, (Var, Jet)):
        raise TypeError(f"can only differentiate by Var or Jet, got {symbol!r}")
    memo: dict[int, Expr] = {}

    def d(node):
        if symbol not in node.free_symbols:
            return ZERO
        hit = memo.get(id(node))
        if hit is None:
            hit = _d(node, d)
            memo[id(node)] = hit
        return hit

    def _d(node, d):
        if isinstance(node, (Var, Jet)):
            return ONE if node == symbol else ZERO
        if isinstance(node, Add):
            return add(*(d(t) for t in node.terms))
        if isinstance(node, Mul):
            fs = node.factors
            terms = []
            for i, f in enumerate(fs):
                df = d(f)
                if df is ZERO or (isinstance(df, Const) and df.value == 0):
                    continue
                terms.append(mul(*fs[:i], df, *fs[i + 1 :]))
            return add(*terms)
        if isinstance(node, Pow):
            p = node.exp
            return mul(Const(p), power(node.base, p - 1), d(node.base))
        if isinstance(node, Func):
            a = node.arg
            da = d(a)
            name = node.name
            if name == "exp":
                outer = node
            elif name == "log":
                outer = power(a, -1)
            elif name == "sin":
                outer = func("cos", a)
            elif name == "cos":
                outer = mul(Const(-1), func("sin", a))
            elif name == "sinh":
                outer = func("cosh", a)
            elif name == "cosh":
                outer = func("sinh", a)
            else:
                outer = add(ONE, mul(Const(-1), power(node, 2)))
            return mul(outer, da)
        if isinstance(node, Bump):
            return mul(Bump(node.l, node.order + 1, node.arg), d(node.arg))
        if isinstance(node, (Const, Indicator)):
            return ZERO
        raise TypeError(f"cannot differentiate {node!r}")

    out = d(e)
    return simplify(out) if simplified else out


def diff_jet(e: Expr, c: JetCoordinate) -> Expr:
    """``dL/du^j_(k)[h]`` with every jet coordinate an independent symbol."""
    return diff(e, Jet(c))


def diff_x(e: Expr, axis: int) -> Expr:
    """Explicit partial derivative by ``x<axis>`` (jets held fixed)."""
    return diff(e, Var(axis))


def total_derivative(e: Expr, axis: int) -> Expr:
    """``D_i e = de/dx^i + sum_c (de/dc) * c_{,i}`` over the jets of ``e``."""
    if axis < 1:
        raise ValueError(f"axis must be >= 1, got {axis}")
    terms = [diff(e, Var(axis), simplified=False)]
    for c in sorted(free_jets(e), key=lambda c: (c.dep, c.order, c.slot)):
        terms.append(mul(diff(e, Jet(c), simplified=False), Jet(c.raised(axis))))
    return simplify(add(*terms))


def total_derivative_multi(e: Expr, mi: MultiIndex) -> Expr:
    """Iterated total derivative ``D^mi e`` (axes applied in ascending order)."""
    out = e
    for axis, count in enumerate(mi.exponents, start=1):
        for _ in range(count):
            out = total_derivative(out, axis)
    return out

