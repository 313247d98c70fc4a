"""Point assignments and sampled numeric comparison of expressions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..jetspace import JetLayout
from .expr import EvaluationError, Expr, Jet, Var, evaluate

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-9
SAMPLE_BOX = (-2.0, 2.0)


@dataclass(frozen=True)
class PointAssignment:
    """Values for ``x`` (length n) and the jet (ordered as ``layout``)."""

    layout: JetLayout
    x: tuple[float, ...]
    jet: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != self.layout.n:
            raise ValueError(f"expected {self.layout.n} x values, got {len(self.x)}")
        if len(self.jet) != self.layout.q:
            raise ValueError(f"expected {self.layout.q} jet values, got {len(self.jet)}")

    def values(self) -> dict:
        env = {Var(i + 1): float(v) for i, v in enumerate(self.x)}
        env.update({Jet(c): float(v) for c, v in zip(self.layout.coords, self.jet)})
        return env


def eval_at(e: Expr, p: PointAssignment) -> float:
    return float(evaluate(e, p.values()))


def random_values(symbols, rng: np.random.Generator, box=SAMPLE_BOX) -> dict:
    lo, hi = box
    return {s: float(rng.uniform(lo, hi)) for s in sorted(symbols, key=Expr.sort_key)}


def sample_points(exprs, count: int, seed: int = 0, box=SAMPLE_BOX, max_tries: int = 1000):
    """``count`` assignments of every free symbol of ``exprs`` at which all of
    them evaluate; points hitting a domain error are redrawn."""
    exprs = list(exprs)
    symbols = frozenset().union(*(e.free_symbols for e in exprs))
    rng = np.random.default_rng(seed)
    points = []
    tries = 0
    while len(points) < count:
        tries += 1
        if tries > max_tries:
            raise EvaluationError(f"could not find {count} valid sample points")
        env = random_values(symbols, rng, box)
        try:
            vals = [evaluate(e, env) for e in exprs]
        except EvaluationError:
            continue
        if all(np.isfinite(v) for v in vals):
            points.append(env)
    return points


def numerically_equal(
    a: Expr,
    b: Expr,
    count: int = 20,
    seed: int = 0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> bool:
    """Whether ``a`` and ``b`` agree at ``count`` random points of ``[-2, 2]``."""
    for env in sample_points([a, b], count, seed):
        va, vb = evaluate(a, env), evaluate(b, env)
        if abs(va - vb) > atol + rtol * max(abs(va), abs(vb)):
            return False
    return True


def max_discrepancy(a: Expr, b: Expr, count: int = 20, seed: int = 0) -> float:
    worst = 0.0
    for env in sample_points([a, b], count, seed):
        worst = max(worst, abs(evaluate(a, env) - evaluate(b, env)))
    return worst
