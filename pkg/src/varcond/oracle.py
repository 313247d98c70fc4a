"""Numeric oracle: test directions, tensor quadrature and finite differences.

Everything here is computed independently of the symbolic variation
formulas where possible: ``Phi(t) = F(u + t*phi)`` is integrated directly
and differenced, then compared with the symbolic first and second variation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .symexpr import (
    ONE,
    Bump,
    Const,
    Expr,
    Indicator,
    Jet,
    Var,
    add,
    free_jets,
    mul,
    power,
)
from .variational import (
    Candidate,
    Problem,
    Prolongation,
    evaluate_at_nodes,
    first_variation_integrand,
)

DEFAULT_NODES = 32
DEFAULT_STEP = 1e-4
FIRST_TOL = 1e-5
SECOND_TOL = 1e-4


class PlacementError(ValueError):
    """Test-direction support does not fit inside the domain."""


def psi(l: int, y):
    """Profile ``psi_l``: one for ``l = 0``; ``1 - |y|^l`` on ``[-1, 1]``
    and zero outside otherwise."""
    y = np.asarray(y, dtype=float)
    if l == 0:
        return np.ones_like(y)
    return np.where(np.abs(y) <= 1.0, 1.0 - np.abs(y) ** l, 0.0)


# --------------------------------------------------------------------------
# directions


@dataclass(frozen=True)
class BumpDirection:
    """``xi * eps^l * sum_i psi_l((x_i - c_i)/eps)`` cut to the ball of
    radius ``eps*sqrt(n)`` (family ``"psi"``) or the smooth
    ``xi * prod_i (1 - y_i^2)^l`` on the box of half-width ``eps``
    (family ``"smooth"``)."""

    l: int
    center: tuple[float, ...]
    eps: float
    weights: tuple[float, ...]
    family: str = "psi"

    def __post_init__(self):
        if self.family not in ("psi", "smooth"):
            raise ValueError(f"unknown bump family {self.family!r}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.l < 0:
            raise ValueError("profile index must be >= 0")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def radius(self) -> float:
        if self.family == "psi":
            return self.eps * math.sqrt(self.n)
        return self.eps

    def validate(self, domain) -> None:
        for i, ((a, b), c) in enumerate(zip(domain, self.center), start=1):
            if c - self.radius <= a or c + self.radius >= b:
                raise PlacementError(
                    f"support of radius {self.radius:g} around x{i}={c:g} "
                    f"leaves [{a:g}, {b:g}]"
                )

    def components(self) -> tuple[Expr, ...]:
        ys = [
            mul(add(Var(i + 1), Const(-c)), Const(1 / self.eps))
            for i, c in enumerate(self.center)
        ]
        if self.family == "psi":
            shape = mul(
                Const(self.eps**self.l), add(*(Bump(self.l, 0, y) for y in ys))
            )
            cut = Indicator(self.center, self.radius, "ball")
        else:
            shape = mul(*(power(add(ONE, mul(-1, power(y, 2))), self.l) for y in ys))
            cut = Indicator(self.center, self.eps, "box")
        return tuple(mul(Const(w), shape, cut) for w in self.weights)

    def breakpoints(self) -> list[list[float]]:
        """Per-axis points where the direction or its derivatives kink."""
        out = []
        for c in self.center:
            pts = {c - self.eps, c, c + self.eps}
            if self.family == "psi":
                pts |= {c - self.radius, c + self.radius}
            out.append(sorted(pts))
        return out


def bump_direction(l, center, eps, weights, domain=None) -> BumpDirection:
    b = BumpDirection(int(l), tuple(map(float, center)), float(eps), tuple(map(float, weights)))
    if domain is not None:
        b.validate(domain)
    return b


def smooth_bump_direction(power_, center, eps, weights, domain=None) -> BumpDirection:
    b = BumpDirection(
        int(power_), tuple(map(float, center)), float(eps), tuple(map(float, weights)), "smooth"
    )
    if domain is not None:
        b.validate(domain)
    return b


def random_bumps(
    problem: Problem, count: int, seed: int = 0, family: str = "psi", min_l: int | None = None
) -> list[BumpDirection]:
    """Seeded directions fitting inside the domain.

    For ``family="psi"`` the profile index is drawn from ``min_l..min_l+1``
    with ``min_l = max(1, s)`` by default; smooth bumps use exponent
    ``s + 1`` so they are ``C^s``.
    """
    rng = np.random.default_rng(seed)
    n, m, s = problem.n, problem.m, problem.s
    widths = [b - a for a, b in problem.domain]
    shrink = math.sqrt(n) if family == "psi" else 1.0
    eps_max = 0.45 * min(widths) / shrink
    if min_l is None:
        min_l = max(1, s)
    out = []
    for _ in range(count):
        eps = float(rng.uniform(0.4, 0.9) * eps_max)
        radius = eps * shrink
        center = tuple(
            float(rng.uniform(a + radius, b - radius) if b - a > 2 * radius else (a + b) / 2)
            for a, b in problem.domain
        )
        xi = rng.uniform(-1.0, 1.0, size=m)
        xi = xi / max(1e-3, float(np.max(np.abs(xi))))
        if family == "psi":
            l = int(rng.integers(min_l, min_l + 2))
            b = bump_direction(l, center, eps, xi, problem.domain)
        else:
            b = smooth_bump_direction(s + 1, center, eps, xi, problem.domain)
        out.append(b)
    return out


def direction_components(phi) -> tuple[Expr, ...]:
    if isinstance(phi, BumpDirection):
        return phi.components()
    comps = tuple(phi)
    for c in comps:
        if free_jets(c):
            raise ValueError(f"direction component {c} must depend on x only")
    return comps


# --------------------------------------------------------------------------
# quadrature


@dataclass
class QuadratureRule:
    """Tensor-product Gauss-Legendre nodes, flattened, with weights."""

    points: list[np.ndarray]
    weights: np.ndarray
    axes: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def integrate(self, values) -> float:
        return float(np.sum(np.broadcast_to(values, self.weights.shape) * self.weights))

    @property
    def size(self) -> int:
        return int(self.weights.size)


def _axis_rule(a: float, b: float, nodes: int, breaks) -> tuple[np.ndarray, np.ndarray]:
    y, w = leggauss(nodes)
    cuts = sorted({a, b} | {t for t in breaks if a < t < b})
    xs, ws = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (hi - lo)
        xs.append(lo + half * (y + 1.0))
        ws.append(half * w)
    return np.concatenate(xs), np.concatenate(ws)


def quadrature_rule(domain, nodes: int = DEFAULT_NODES, breakpoints=None) -> QuadratureRule:
    """``nodes`` Gauss-Legendre points per panel per axis; each axis is split
    into panels at ``breakpoints[i]``."""
    if nodes < 1:
        raise ValueError("quadrature needs at least one node")
    breakpoints = breakpoints or [[] for _ in domain]
    axes = [_axis_rule(a, b, nodes, br) for (a, b), br in zip(domain, breakpoints)]
    mesh = np.meshgrid(*[x for x, _ in axes], indexing="ij")
    wmesh = np.meshgrid(*[w for _, w in axes], indexing="ij")
    weights = np.prod(np.stack([w.ravel() for w in wmesh]), axis=0)
    return QuadratureRule([g.ravel() for g in mesh], weights, axes)


def rule_for(problem: Problem, phi=None, nodes: int = DEFAULT_NODES) -> QuadratureRule:
    breaks = phi.breakpoints() if isinstance(phi, BumpDirection) else None
    return quadrature_rule(problem.domain, nodes, breaks)


# --------------------------------------------------------------------------
# functional values and differences


def _lagrangian_jets(problem: Problem, L: Expr):
    return sorted(free_jets(L), key=lambda c: (c.dep, c.order, c.index))


def _integrand_env(rule, jet_values):
    env = {Var(i + 1): x for i, x in enumerate(rule.points)}
    env.update(jet_values)
    return env


def functional_value(
    problem: Problem, u_components, rule: QuadratureRule | None = None, nodes=DEFAULT_NODES
) -> float:
    """``F(u)`` by tensor Gauss-Legendre quadrature of ``L`` along ``u``."""
    L = problem.effective_lagrangian()
    rule = rule or quadrature_rule(problem.domain, nodes)
    pro = Prolongation(u_components, problem.n)
    env = _integrand_env(rule, pro.values(_lagrangian_jets(problem, L), rule.points))
    return rule.integrate(evaluate_at_nodes(L, env, rule.points))


def _shifted_integrand(problem, L, u_vals, phi_vals, t, rule):
    jets = {k: u_vals[k] + t * phi_vals[k] for k in u_vals}
    env = _integrand_env(rule, jets)
    val = evaluate_at_nodes(L, env, rule.points)
    return np.broadcast_to(np.asarray(val, dtype=float), rule.weights.shape)


def fd_first_second(
    problem: Problem,
    cand: Candidate,
    phi,
    h: float = DEFAULT_STEP,
    rule: QuadratureRule | None = None,
    nodes: int = DEFAULT_NODES,
) -> tuple[float, float]:
    """Central differences of ``Phi(t) = F(u + t*phi)`` at ``t = 0``.

    The three values of ``Phi`` share one quadrature rule, so differencing the
    integrands node by node equals differencing the integrals and loses less
    to cancellation.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    L = problem.effective_lagrangian()
    rule = rule or rule_for(problem, phi, nodes)
    coords = _lagrangian_jets(problem, L)
    u_vals = Prolongation(cand.components, problem.n).values(coords, rule.points)
    phi_vals = Prolongation(direction_components(phi), problem.n).values(coords, rule.points)
    plus = _shifted_integrand(problem, L, u_vals, phi_vals, h, rule)
    mid = _shifted_integrand(problem, L, u_vals, phi_vals, 0.0, rule)
    minus = _shifted_integrand(problem, L, u_vals, phi_vals, -h, rule)
    d1 = rule.integrate((plus - minus) / (2.0 * h))
    d2 = rule.integrate((plus - 2.0 * mid + minus) / (h * h))
    return d1, d2


def first_variation_value(
    problem: Problem, cand: Candidate, phi, rule: QuadratureRule | None = None, nodes=DEFAULT_NODES
) -> float:
    """Quadrature of the symbolic first-variation integrand along ``cand``."""
    L = problem.effective_lagrangian()
    rule = rule or rule_for(problem, phi, nodes)
    integrand = first_variation_integrand(L, problem.layout, direction_components(phi))
    pro = Prolongation(cand.components, problem.n)
    coords = sorted(free_jets(integrand), key=lambda c: (c.dep, c.order, c.index))
    env = _integrand_env(rule, pro.values(coords, rule.points))
    return rule.integrate(evaluate_at_nodes(integrand, env, rule.points))


@dataclass
class CrossCheck:
    first_symbolic: float
    first_fd: float
    second_symbolic: float
    second_fd: float
    first_ok: bool
    second_ok: bool
    direction: object = None

    @property
    def passed(self) -> bool:
        return self.first_ok and self.second_ok


def cross_check(
    problem: Problem,
    cand: Candidate,
    phi,
    h: float = DEFAULT_STEP,
    nodes: int = DEFAULT_NODES,
    A=None,
) -> CrossCheck:
    """Symbolic first and second variation against central differences."""
    from .second_order import second_variation

    rule = rule_for(problem, phi, nodes)
    d1, d2 = fd_first_second(problem, cand, phi, h, rule)
    s1 = first_variation_value(problem, cand, phi, rule)
    s2 = second_variation(problem, cand, phi, A=A, rule=rule)
    return CrossCheck(
        first_symbolic=s1,
        first_fd=d1,
        second_symbolic=s2,
        second_fd=d2,
        first_ok=abs(s1 - d1) <= FIRST_TOL * (1.0 + abs(d1)),
        second_ok=abs(s2 - d2) <= SECOND_TOL * (1.0 + abs(d2)),
        direction=phi,
    )
