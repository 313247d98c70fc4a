"""Seeded random expression trees over a jet layout, for property tests."""

import numpy as np

from varcond.symexpr import Const, Jet, Var, add, cos, exp, mul, power, sin, sqrt, tanh

UNARY = ("sin", "cos", "tanh", "exp_sin", "sqrt1p", "square")


def random_expr(rng: np.random.Generator, lay, depth: int = 3, x_only: bool = False):
    """Well-defined on all of R^n x jet space, so sampling never hits a
    domain error."""
    if depth == 0 or rng.random() < 0.25:
        pick = rng.random()
        if pick < 0.2:
            return Const(int(rng.integers(-3, 4)))
        if x_only or pick < 0.45:
            return Var(int(rng.integers(1, lay.n + 1)))
        return Jet(lay.coords[int(rng.integers(0, lay.q))])
    kind = rng.random()
    if kind < 0.35:
        return add(random_expr(rng, lay, depth - 1, x_only), random_expr(rng, lay, depth - 1, x_only))
    if kind < 0.7:
        return mul(random_expr(rng, lay, depth - 1, x_only), random_expr(rng, lay, depth - 1, x_only))
    op = UNARY[int(rng.integers(0, len(UNARY)))]
    a = random_expr(rng, lay, depth - 1, x_only)
    if op == "sin":
        return sin(a)
    if op == "cos":
        return cos(a)
    if op == "tanh":
        return tanh(a)
    if op == "exp_sin":
        return exp(sin(a))
    if op == "sqrt1p":
        return sqrt(add(1, power(a, 2)))
    return power(a, 2)


def random_env(rng, symbols, lo=-1.5, hi=1.5):
    return {s: float(rng.uniform(lo, hi)) for s in sorted(symbols, key=lambda e: e.sort_key())}
