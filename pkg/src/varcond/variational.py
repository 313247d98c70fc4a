"""First variations, Euler-Lagrange systems and multiplier formulations.

The Euler-Lagrange residual of dependent variable ``j`` is

    sum_{k=0..s} (-1)^k sum_{h=1..p_k} D^{(k)[h]} ( dL / du^j_(k)[h] )

where ``D^{(k)[h]}`` is the iterated total derivative named by slot ``h`` of
order ``k``.  Candidates are closed-form functions of ``x``; their
prolongations are obtained by symbolic differentiation and evaluated on
tensor grids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .jetspace import JetCoordinate, JetLayout, MultiIndex
from .symexpr import (
    ZERO,
    EvaluationError,
    Expr,
    Jet,
    Var,
    add,
    diff_jet,
    diff_x,
    evaluate,
    free_jets,
    free_vars,
    max_jet_order,
    mul,
    simplify,
    total_derivative_multi,
)

log = logging.getLogger(__name__)


class ConstraintArityError(ValueError):
    """Numbers of constraints, multipliers and dependent variables disagree."""


class GridEvaluationError(EvaluationError):
    """Evaluation failed at a specific grid or quadrature node."""

    def __init__(self, message, subexpr=None, location=None):
        super().__init__(message, subexpr)
        self.location = location


@dataclass(frozen=True)
class Constraint:
    """``expr(x, u^(s2)) = 0`` paired with the multiplier ``lambda(x)``."""

    expr: Expr
    multiplier: Expr


@dataclass(frozen=True)
class Problem:
    """A variational problem on the box ``prod_i [a_i, b_i]``.

    ``split = (m_u, m_tilde)`` declares that the last ``m_tilde`` dependent
    variables play the role of the auxiliary functions of an
    under-determined constraint system; it requires one ``extra_multipliers``
    entry per auxiliary function.
    """

    layout: JetLayout
    lagrangian: Expr
    domain: tuple[tuple[float, float], ...]
    grid: tuple[int, ...]
    constraints: tuple[Constraint, ...] = ()
    split: tuple[int, int] | None = None
    extra_multipliers: tuple[Expr, ...] = ()

    def __post_init__(self):
        lay = self.layout
        if max_jet_order(self.lagrangian) > lay.s:
            raise ValueError("Lagrangian order exceeds the declared order s")
        for c in self.constraints:
            if max_jet_order(c.expr) > lay.s:
                raise ValueError("constraint order exceeds the declared order s")
            if free_jets(c.multiplier):
                raise ValueError("multipliers must depend on x only")
        if len(self.domain) != lay.n or len(self.grid) != lay.n:
            raise ValueError(f"domain and grid need {lay.n} entries")
        for a, b in self.domain:
            if not a < b:
                raise ValueError(f"empty interval [{a}, {b}]")
        if any(r < 2 for r in self.grid):
            raise ValueError("grid resolutions must be >= 2")
        for (a, b) in self.domain:
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ValueError("domain bounds must be finite")
        if self.split is not None:
            m_u, m_t = self.split
            if m_u < 1 or m_t < 0 or m_u + m_t != lay.m:
                raise ValueError(f"split {m_u}:{m_t} does not add up to m={lay.m}")
            if self.constraints and len(self.constraints) != m_u:
                raise ConstraintArityError(
                    f"{len(self.constraints)} constraints for split {m_u}:{m_t}; need {m_u}"
                )
            if len(self.extra_multipliers) != m_t:
                raise ConstraintArityError(
                    f"split needs {m_t} extra multipliers, got {len(self.extra_multipliers)}"
                )
        elif self.extra_multipliers:
            raise ConstraintArityError("extra multipliers need a declared split")
        elif self.constraints and len(self.constraints) != lay.m:
            raise ConstraintArityError(
                f"{len(self.constraints)} constraints for m={lay.m}; "
                "need exactly m (declare a split otherwise)"
            )

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def m(self) -> int:
        return self.layout.m

    @property
    def s(self) -> int:
        return self.layout.s

    @property
    def underdetermined(self) -> bool:
        return self.split is not None

    def effective_lagrangian(self) -> Expr:
        """``L`` itself, or the augmented Lagrangian when constraints exist."""
        if not self.constraints:
            return self.lagrangian
        exprs = [c.expr for c in self.constraints]
        lams = [c.multiplier for c in self.constraints]
        if self.underdetermined:
            return augment_underdetermined(
                self.lagrangian, exprs, lams, self.extra_multipliers, self.split
            )
        return augment(self.lagrangian, exprs, lams, self.m)

    def grid_axes(self, scale: float = 1.0) -> list[np.ndarray]:
        return [
            np.linspace(a, b, max(2, int(round((r - 1) * scale)) + 1))
            for (a, b), r in zip(self.domain, self.grid)
        ]

    def grid_nodes(self, scale: float = 1.0) -> list[np.ndarray]:
        """Flattened coordinate arrays of the tensor grid, one per axis."""
        mesh = np.meshgrid(*self.grid_axes(scale), indexing="ij")
        return [g.ravel() for g in mesh]


@dataclass(frozen=True)
class Candidate:
    """Closed-form candidate extremal ``u^j(x)``, one expression per ``j``."""

    components: tuple[Expr, ...]

    def __post_init__(self):
        for u in self.components:
            if free_jets(u):
                raise ValueError(f"candidate component {u} contains jet coordinates")

    @property
    def m(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class ELSystem:
    """Euler-Lagrange residuals, one per dependent variable, of order <= 2s."""

    residuals: tuple[Expr, ...]
    layout: JetLayout

    def __iter__(self):
        return iter(self.residuals)

    def __len__(self):
        return len(self.residuals)

    def __getitem__(self, j):
        return self.residuals[j]


def variational_derivative(e: Expr, lay: JetLayout, dep: int, s: int | None = None) -> Expr:
    """Euler operator of ``e`` with respect to the dependent variable ``dep``."""
    s = lay.s if s is None else s
    terms = []
    for k in range(s + 1):
        sign = -1 if k % 2 else 1
        for mi in lay.slot_tables[k] if k <= lay.s else ():
            partial = diff_jet(e, JetCoordinate(dep, mi))
            if partial == ZERO:
                continue
            terms.append(mul(sign, total_derivative_multi(partial, mi)))
    return simplify(add(*terms))


def euler_lagrange(L: Expr, lay: JetLayout) -> ELSystem:
    residuals = tuple(variational_derivative(L, lay, j) for j in range(1, lay.m + 1))
    return ELSystem(residuals, lay.with_order(2 * lay.s))


class Prolongation:
    """Symbolic and numeric jets of x-only functions ``f^1..f^m``.

    Derivatives are built incrementally and cached, so ``expr`` for a
    fourth-order coordinate reuses the third-order one.
    """

    def __init__(self, components, n: int):
        self.components = tuple(components)
        self.n = n
        self._cache: dict[JetCoordinate, Expr] = {}

    def expr(self, c: JetCoordinate) -> Expr:
        if not 1 <= c.dep <= len(self.components):
            raise ValueError(f"{c} refers to a missing component")
        hit = self._cache.get(c)
        if hit is not None:
            return hit
        if c.order == 0:
            out = self.components[c.dep - 1]
        else:
            # peel the last axis of the nondecreasing sequence
            seq = c.index.sequence()
            parent = JetCoordinate(c.dep, MultiIndex.from_sequence(self.n, seq[:-1]))
            out = diff_x(self.expr(parent), seq[-1])
        self._cache[c] = out
        return out

    def values(self, coords, xs) -> dict:
        """``{Jet(c): values}`` for every coordinate in ``coords`` at ``xs``."""
        env = {Var(i + 1): x for i, x in enumerate(xs)}
        shape = np.shape(xs[0])
        out = {}
        for c in coords:
            val = evaluate_at_nodes(self.expr(c), env, xs)
            out[Jet(c)] = np.broadcast_to(np.asarray(val, dtype=float), shape)
        return out


def evaluate_at_nodes(e: Expr, env: dict, xs):
    """Evaluate with grid-location reporting on domain errors."""
    try:
        return evaluate(e, env)
    except EvaluationError as exc:
        loc = None
        if exc.index is not None:
            loc = tuple(float(np.ravel(x)[exc.index]) for x in xs)
        where = f" at x={loc}" if loc is not None else ""
        raise GridEvaluationError(f"{exc}{where}", exc.subexpr, loc) from exc


def substitute_values(e: Expr, prolongation: Prolongation, xs) -> np.ndarray:
    """``e(x, f^(r)(x))`` at the nodes ``xs`` for the jets of ``prolongation``."""
    env = {Var(i + 1): x for i, x in enumerate(xs)}
    env.update(prolongation.values(free_jets(e), xs))
    val = evaluate_at_nodes(e, env, xs)
    return np.broadcast_to(np.asarray(val, dtype=float), np.shape(xs[0]))


def prolongation_coefficient(phi: Prolongation, c: JetCoordinate) -> Expr:
    return phi.expr(c)


def first_variation_integrand(L: Expr, lay: JetLayout, phi) -> Expr:
    """``sum_{j,k,h} phi^j_(k)[h] * dL/du^j_(k)[h]`` for x-only ``phi``."""
    phi = Prolongation(phi, lay.n)
    terms = []
    for c in lay.coords:
        partial = diff_jet(L, c)
        if partial == ZERO:
            continue
        terms.append(mul(phi.expr(c), partial))
    return simplify(add(*terms))


def _check_multipliers(constraints, multipliers, m):
    constraints, multipliers = list(constraints), list(multipliers)
    if len(constraints) != len(multipliers):
        raise ConstraintArityError(
            f"{len(constraints)} constraints but {len(multipliers)} multipliers"
        )
    if constraints and len(constraints) != m:
        raise ConstraintArityError(
            f"{len(constraints)} constraints for m={m} dependent variables; "
            "the multiplier theorem needs exactly m (declare a split otherwise)"
        )
    for lam in multipliers:
        if free_jets(lam):
            raise ValueError(f"multiplier {lam} must depend on x only")
    return constraints, multipliers


def _weighted_sum(constraints, weights) -> Expr:
    return add(*(mul(w, f) for w, f in zip(weights, constraints)))


def augment(L: Expr, constraints, multipliers, m: int | None = None) -> Expr:
    """``G = L + sum_l lambda^l(x) F_l``."""
    constraints, multipliers = list(constraints), list(multipliers)
    if m is None:
        m = len(constraints)
    constraints, multipliers = _check_multipliers(constraints, multipliers, m)
    if not constraints:
        return L
    return simplify(add(L, _weighted_sum(constraints, multipliers)))


def multiplier_system(constraints, multipliers, lay: JetLayout) -> list[Expr]:
    """Euler operator of ``sum_l lambda^l F_l`` for every dependent variable."""
    constraints, multipliers = _check_multipliers(constraints, multipliers, lay.m)
    if not constraints:
        return []
    combined = _weighted_sum(constraints, multipliers)
    return [variational_derivative(combined, lay, j) for j in range(1, lay.m + 1)]


def _combined_weights(multipliers, extra):
    extra_sum = add(*extra)
    return [simplify(add(lam, extra_sum)) for lam in multipliers]


def _check_split(constraints, multipliers, extra, split, m):
    m_u, m_t = split
    if m_u + m_t != m:
        raise ConstraintArityError(f"split {m_u}:{m_t} does not add up to m={m}")
    if len(list(extra)) != m_t:
        raise ConstraintArityError(f"{len(list(extra))} extra multipliers for m~={m_t}")
    return _check_multipliers(constraints, multipliers, m_u)


def augment_underdetermined(L: Expr, constraints, multipliers, extra, split) -> Expr:
    """``G = sum_l (lambda^l + sum_t lambda~^t) F_l + L``.

    The auxiliary multipliers only enter through their sum, once per
    constraint.
    """
    constraints, multipliers, extra = list(constraints), list(multipliers), list(extra)
    m = split[0] + split[1]
    constraints, multipliers = _check_split(constraints, multipliers, extra, split, m)
    if not constraints:
        return L
    weights = _combined_weights(multipliers, extra)
    return simplify(add(_weighted_sum(constraints, weights), L))


def multiplier_system_underdetermined(
    constraints, multipliers, extra, split, lay: JetLayout
) -> list[Expr]:
    """Residuals for ``u^1..u^{m_u}`` followed by those for the auxiliary
    functions ``u^{m_u+1}..u^m``; all of the combined-weight constraint sum."""
    constraints, multipliers, extra = list(constraints), list(multipliers), list(extra)
    constraints, multipliers = _check_split(constraints, multipliers, extra, split, lay.m)
    if not constraints:
        return []
    combined = _weighted_sum(constraints, _combined_weights(multipliers, extra))
    return [variational_derivative(combined, lay, j) for j in range(1, lay.m + 1)]


@dataclass
class ResidualReport:
    max_abs: float
    per_equation: list[float]
    nodes: int = 0
    worst_location: tuple[float, ...] | None = field(default=None)

    def __iter__(self):
        # allows ``max_abs, per_eq = el_residual_on_grid(...)``
        return iter((self.max_abs, self.per_equation))


def residuals_on_nodes(exprs, cand: Candidate, xs, n: int) -> list[np.ndarray]:
    pro = Prolongation(cand.components, n)
    return [substitute_values(e, pro, xs) for e in exprs]


def el_residual_on_grid(
    problem: Problem, cand: Candidate, system: ELSystem | None = None, scale: float = 1.0
) -> ResidualReport:
    """Max-abs Euler-Lagrange residual of ``cand`` on the problem's grid."""
    if cand.m != problem.m:
        raise ValueError(f"candidate has {cand.m} components, m={problem.m}")
    if system is None:
        system = euler_lagrange(problem.effective_lagrangian(), problem.layout)
    xs = problem.grid_nodes(scale)
    values = residuals_on_nodes(system.residuals, cand, xs, problem.n)
    per_eq = [float(np.max(np.abs(v))) for v in values]
    stacked = np.max(np.abs(np.vstack(values)), axis=0)
    worst = int(np.argmax(stacked))
    loc = tuple(float(x[worst]) for x in xs)
    return ResidualReport(max(per_eq), per_eq, len(xs[0]), loc)


def constraint_residual_on_grid(problem: Problem, cand: Candidate, scale: float = 1.0):
    """Max-abs violation of each constraint by ``cand`` on the grid."""
    if not problem.constraints:
        return []
    xs = problem.grid_nodes(scale)
    values = residuals_on_nodes([c.expr for c in problem.constraints], cand, xs, problem.n)
    return [float(np.max(np.abs(v))) for v in values]


def x_only(e: Expr) -> bool:
    return not free_jets(e)


def depends_on_axes(e: Expr) -> set[int]:
    return free_vars(e)
