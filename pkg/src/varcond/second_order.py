"""Second-variation matrix, definiteness and extremum classification.

``A[r, c] = d^2 L / dc_r dc_c`` over the jet coordinates of the layout, so the
second variation is ``integral of phi^(s) A phi^(s)^T``.  Block addresses
``(j, j', k, k', h, h')`` follow the layout order: dependent variable, then
derivative order, then slot.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .jetspace import AddressingError, JetLayout
from .symexpr import ZERO, Expr, Jet, Var, add, diff_jet, free_jets, simplify
from .symexpr.sampling import PointAssignment
from .variational import (
    Candidate,
    Problem,
    Prolongation,
    el_residual_on_grid,
    euler_lagrange,
    evaluate_at_nodes,
)

RESIDUAL_GATE = 1e-6
DEFAULT_TOL = 1e-9
JACOBI_THRESHOLD = 1e-12
JACOBI_MAX_SWEEPS = 100


class ShapeError(ValueError):
    """Matrix is not square or not symmetric within tolerance."""


class NumericError(ArithmeticError):
    """Iterative eigen-solver failed to converge."""


class Definiteness(enum.Enum):
    ZERO = "ZERO"
    POSITIVE_DEFINITE = "POSITIVE_DEFINITE"
    POSITIVE_SEMIDEFINITE = "POSITIVE_SEMIDEFINITE"
    NEGATIVE_DEFINITE = "NEGATIVE_DEFINITE"
    NEGATIVE_SEMIDEFINITE = "NEGATIVE_SEMIDEFINITE"
    INDEFINITE = "INDEFINITE"

    @property
    def nonnegative(self) -> bool:
        return self in _NONNEG

    @property
    def nonpositive(self) -> bool:
        return self in _NONPOS

    def negated(self) -> "Definiteness":
        return _NEGATED[self]


D = Definiteness
_NONNEG = {D.ZERO, D.POSITIVE_DEFINITE, D.POSITIVE_SEMIDEFINITE}
_NONPOS = {D.ZERO, D.NEGATIVE_DEFINITE, D.NEGATIVE_SEMIDEFINITE}
_NEGATED = {
    D.ZERO: D.ZERO,
    D.POSITIVE_DEFINITE: D.NEGATIVE_DEFINITE,
    D.NEGATIVE_DEFINITE: D.POSITIVE_DEFINITE,
    D.POSITIVE_SEMIDEFINITE: D.NEGATIVE_SEMIDEFINITE,
    D.NEGATIVE_SEMIDEFINITE: D.POSITIVE_SEMIDEFINITE,
    D.INDEFINITE: D.INDEFINITE,
}


class Verdict(enum.Enum):
    STRICT_WEAK_MIN = "STRICT_WEAK_MIN"
    WEAK_MIN = "WEAK_MIN"
    STRICT_WEAK_MAX = "STRICT_WEAK_MAX"
    WEAK_MAX = "WEAK_MAX"
    SADDLE = "SADDLE"
    INCONCLUSIVE = "INCONCLUSIVE"

    def mirrored(self) -> "Verdict":
        """Verdict expected for ``-L``."""
        return _MIRROR.get(self, self)


_MIRROR = {
    Verdict.STRICT_WEAK_MIN: Verdict.STRICT_WEAK_MAX,
    Verdict.STRICT_WEAK_MAX: Verdict.STRICT_WEAK_MIN,
    Verdict.WEAK_MIN: Verdict.WEAK_MAX,
    Verdict.WEAK_MAX: Verdict.WEAK_MIN,
}


# --------------------------------------------------------------------------
# the matrix


@dataclass(frozen=True)
class SecondVariationMatrix:
    layout: JetLayout
    entries: tuple[tuple[Expr, ...], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def entry(self, row: int, col: int) -> Expr:
        """Flat address, 1-based."""
        q = self.size
        if not (1 <= row <= q and 1 <= col <= q):
            raise AddressingError(f"entry ({row}, {col}) outside {q}x{q}")
        return self.entries[row - 1][col - 1]

    def block_entry(self, j: int, jp: int, k: int, kp: int, h: int, hp: int) -> Expr:
        lay = self.layout
        r = lay.index_of(lay.coordinate(j, k, h))
        c = lay.index_of(lay.coordinate(jp, kp, hp))
        return self.entries[r - 1][c - 1]

    def block(self, j: int, jp: int, k: int, kp: int) -> list[list[Expr]]:
        """``A^{j j'}_{k k'}``, a ``p_k x p_k'`` matrix of expressions."""
        rows = self.layout.group(j, k)
        cols = self.layout.group(jp, kp)
        lay = self.layout
        return [
            [self.entries[lay.index_of(r) - 1][lay.index_of(c) - 1] for c in cols]
            for r in rows
        ]

    def negated(self) -> "SecondVariationMatrix":
        return SecondVariationMatrix(
            self.layout, tuple(tuple(simplify(-e) for e in row) for row in self.entries)
        )

    def is_zero(self) -> bool:
        return all(e == ZERO for row in self.entries for e in row)


def assemble_A(L: Expr, lay: JetLayout) -> SecondVariationMatrix:
    """All second partials of ``L``; each entry is differentiated on its own,
    so symmetry is a property of the result rather than a copy."""
    grads = [diff_jet(L, c) for c in lay.coords]
    rows = []
    for g in grads:
        rows.append(tuple(diff_jet(g, c) if g != ZERO else ZERO for c in lay.coords))
    return SecondVariationMatrix(lay, tuple(rows))


def _entry_values(A: SecondVariationMatrix, env: dict, xs, count: int) -> np.ndarray:
    q = A.size
    out = np.empty((count, q, q))
    cache: dict[Expr, np.ndarray] = {}
    for r, row in enumerate(A.entries):
        for c, e in enumerate(row):
            val = cache.get(e)
            if val is None:
                val = np.broadcast_to(
                    np.asarray(evaluate_at_nodes(e, env, xs), dtype=float), (count,)
                )
                cache[e] = val
            out[:, r, c] = val
    return 0.5 * (out + np.swapaxes(out, 1, 2))


def evaluate_A(A: SecondVariationMatrix, p: PointAssignment) -> np.ndarray:
    """Numeric ``q x q`` matrix at one point, symmetrized."""
    env = p.values()
    xs = [np.array([v]) for v in p.x]
    env = {k: np.array([v]) for k, v in env.items()}
    return _entry_values(A, env, xs, 1)[0]


def evaluate_A_along(A: SecondVariationMatrix, cand: Candidate, xs) -> np.ndarray:
    """``(N, q, q)`` stack of ``A`` along the prolongation of ``cand`` at the
    nodes ``xs`` (one flat array per axis)."""
    lay = A.layout
    count = len(xs[0])
    pro = Prolongation(cand.components, lay.n)
    needed = set()
    for row in A.entries:
        for e in row:
            needed |= free_jets(e)
    env = {Var(i + 1): x for i, x in enumerate(xs)}
    env.update(pro.values(sorted(needed, key=lambda c: (c.dep, c.order, c.index)), xs))
    return _entry_values(A, env, xs, count)


# --------------------------------------------------------------------------
# eigenvalues and definiteness


def _check_square_symmetric(M: np.ndarray, tol: float) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericError("matrix has non-finite entries")
    sigma = max(1.0, float(np.linalg.norm(M)))
    if M.size and np.max(np.abs(M - M.T)) > tol * sigma:
        raise ShapeError("matrix is not symmetric within tolerance")
    return M


def jacobi_eigenvalues(
    M, tol: float = DEFAULT_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.

    Iteration stops once the off-diagonal Frobenius norm falls below
    ``1e-12 * ||M||_F``.
    """
    a = _check_square_symmetric(M, tol).copy()
    a = 0.5 * (a + a.T)
    size = a.shape[0]
    fro = float(np.linalg.norm(a))
    if size == 0:
        return np.zeros(0)
    if fro == 0.0:
        return np.zeros(size)
    target = JACOBI_THRESHOLD * fro
    for _ in range(max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= target:
            return np.sort(np.diag(a).copy())
        for p in range(size - 1):
            for r in range(p + 1, size):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * apr)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_r = a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p = a[p, :].copy()
                row_r = a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
    raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def status_from_eigenvalues(eigs, sigma: float, tol: float = DEFAULT_TOL) -> Definiteness:
    thr = tol * max(1.0, sigma)
    eigs = np.asarray(eigs, dtype=float)
    if np.all(np.abs(eigs) <= thr):
        return D.ZERO
    if np.all(eigs > thr):
        return D.POSITIVE_DEFINITE
    if np.all(eigs >= -thr):
        return D.POSITIVE_SEMIDEFINITE
    if np.all(eigs < -thr):
        return D.NEGATIVE_DEFINITE
    if np.all(eigs <= thr):
        return D.NEGATIVE_SEMIDEFINITE
    return D.INDEFINITE


def definiteness(M, tol: float = DEFAULT_TOL) -> Definiteness:
    M = np.asarray(M, dtype=float)
    eigs = jacobi_eigenvalues(M, tol)
    return status_from_eigenvalues(eigs, float(np.linalg.norm(M)), tol)


def weakest(statuses) -> Definiteness:
    """Strongest status implied by every member of ``statuses``.

    Positive and negative members together give INDEFINITE: no single sign
    condition holds across the collection.
    """
    statuses = set(statuses)
    if not statuses:
        return D.ZERO
    if len(statuses) == 1:
        return next(iter(statuses))
    if D.INDEFINITE in statuses:
        return D.INDEFINITE
    if statuses <= _NONNEG:
        return D.POSITIVE_SEMIDEFINITE
    if statuses <= _NONPOS:
        return D.NEGATIVE_SEMIDEFINITE
    return D.INDEFINITE


# --------------------------------------------------------------------------
# Legendre conditions


def legendre_matrix(A: SecondVariationMatrix, l: int) -> list[list[Expr]]:
    """Condensed ``m x m`` matrix: entry ``(j, j')`` sums the whole block
    ``A^{j j'}_{l l}``."""
    lay = A.layout
    if not 0 <= l <= lay.s:
        raise AddressingError(f"order {l} outside 0..{lay.s}")
    out = []
    for j in range(1, lay.m + 1):
        row = []
        for jp in range(1, lay.m + 1):
            block = A.block(j, jp, l, l)
            row.append(simplify(add(*(e for r in block for e in r))))
        out.append(row)
    return out


@dataclass
class LegendreReport:
    condensed: dict[int, Definiteness]
    diagonal_blocks: dict[tuple[int, int], Definiteness]

    def holds_for_min(self) -> bool:
        return all(s.nonnegative for s in self.condensed.values()) and all(
            s.nonnegative for s in self.diagonal_blocks.values()
        )

    def holds_for_max(self) -> bool:
        return all(s.nonpositive for s in self.condensed.values()) and all(
            s.nonpositive for s in self.diagonal_blocks.values()
        )

    def strict_for_min(self) -> bool:
        return all(s is D.POSITIVE_DEFINITE for s in self.condensed.values())


def _node_statuses(stack: np.ndarray, tol: float) -> list[Definiteness]:
    return [definiteness(M, tol) for M in stack]


def legendre_from_values(lay: JetLayout, stack: np.ndarray, tol=DEFAULT_TOL) -> LegendreReport:
    """Both Legendre readings from an ``(N, q, q)`` stack of ``A`` values."""
    condensed = {}
    for l in range(lay.s + 1):
        mats = np.empty((stack.shape[0], lay.m, lay.m))
        for j in range(1, lay.m + 1):
            rows = [lay.index_of(c) - 1 for c in lay.group(j, l)]
            for jp in range(1, lay.m + 1):
                cols = [lay.index_of(c) - 1 for c in lay.group(jp, l)]
                mats[:, j - 1, jp - 1] = stack[:, rows][:, :, cols].sum(axis=(1, 2))
        condensed[l] = weakest(_node_statuses(mats, tol))
    blocks = {}
    for j in range(1, lay.m + 1):
        for k in range(lay.s + 1):
            idx = [lay.index_of(c) - 1 for c in lay.group(j, k)]
            blocks[(j, k)] = weakest(_node_statuses(stack[:, idx][:, :, idx], tol))
    return LegendreReport(condensed, blocks)


def legendre_check(
    A: SecondVariationMatrix, problem: Problem, cand: Candidate, tol=DEFAULT_TOL, scale=1.0
) -> LegendreReport:
    stack = evaluate_A_along(A, cand, problem.grid_nodes(scale))
    return legendre_from_values(A.layout, stack, tol)


# --------------------------------------------------------------------------
# quadratic form along a direction


def _direction_parts(problem: Problem, cand: Candidate, phi, A, rule, nodes):
    from . import oracle

    if A is None:
        A = assemble_A(problem.effective_lagrangian(), problem.layout)
    if rule is None:
        rule = oracle.rule_for(problem, phi, nodes)
    comps = oracle.direction_components(phi)
    if len(comps) != problem.m:
        raise ValueError(f"direction has {len(comps)} components, m={problem.m}")
    lay = problem.layout
    xs = rule.points
    vals = Prolongation(comps, lay.n).values(lay.coords, xs)
    v = np.vstack([vals[Jet(c)] for c in lay.coords])
    stack = evaluate_A_along(A, cand, xs)
    return lay, rule, v, stack


def decompose_J1_J2_I2(
    problem: Problem, cand: Candidate, phi, A=None, rule=None, nodes: int = 32
) -> tuple[float, float, float]:
    """Split the second variation into same-block, cross-variable and
    cross-order parts.

    Off-diagonal groups are counted once per unordered pair (half of the
    symmetric double sum), which is what makes ``J1 + 2*(J2 + I2)`` the whole
    second variation.
    """
    lay, rule, v, stack = _direction_parts(problem, cand, phi, A, rule, nodes)
    deps = np.array([c.dep for c in lay.coords])
    orders = np.array([c.order for c in lay.coords])
    same_dep = deps[:, None] == deps[None, :]
    same_ord = orders[:, None] == orders[None, :]
    # pointwise contributions v_r A_rc v_c, integrated per (r, c)
    contrib = np.einsum("rn,nrc,cn,n->rc", v, stack, v, rule.weights)
    J1 = float(np.sum(contrib[same_dep & same_ord]))
    J2 = 0.5 * float(np.sum(contrib[~same_dep & same_ord]))
    I2 = 0.5 * float(np.sum(contrib[~same_ord]))
    return J1, J2, I2


def second_variation(problem: Problem, cand: Candidate, phi, A=None, rule=None, nodes=32) -> float:
    """Quadrature of ``phi^(s) A phi^(s)^T`` along the candidate."""
    lay, rule, v, stack = _direction_parts(problem, cand, phi, A, rule, nodes)
    return float(np.sum(np.einsum("rn,nrc,cn->n", v, stack, v) * rule.weights))


@dataclass
class FalsifierResult:
    counterexample: bool
    tried: int
    value: float | None = None
    direction: object = None
    note: str = (
        "search over random bump directions; absence of a counterexample "
        "is not a proof that J2 + I2 >= 0"
    )

    @property
    def outcome(self) -> str:
        return "counterexample" if self.counterexample else "no_counterexample"


def sufficient_thmmm_falsifier(
    problem: Problem, cand: Candidate, count: int, seed: int = 0, A=None, nodes: int = 32
) -> FalsifierResult:
    """Look for a bump direction with ``J2 + I2 < 0``."""
    from . import oracle

    if count < 1:
        raise ValueError("falsifier needs count >= 1")
    if A is None:
        A = assemble_A(problem.effective_lagrangian(), problem.layout)
    bumps = oracle.random_bumps(problem, count, seed, min_l=max(1, problem.s))
    for i, b in enumerate(bumps, start=1):
        J1, J2, I2 = decompose_J1_J2_I2(problem, cand, b, A=A, nodes=nodes)
        if J2 + I2 < -1e-9 * (1.0 + abs(J1)):
            return FalsifierResult(True, i, J2 + I2, b)
    return FalsifierResult(False, len(bumps))


# --------------------------------------------------------------------------
# classification


@dataclass
class ClassificationReport:
    verdict: Verdict
    el_residual: float
    tally: dict[str, int]
    legendre: dict[int, Definiteness]
    diagonal_blocks: dict[tuple[int, int], Definiteness]
    grid: tuple[int, ...]
    nodes: int
    min_eigenvalue: float
    max_eigenvalue: float
    notes: list[str] = field(default_factory=list)


def _min_side_verdict(statuses: set) -> Verdict | None:
    if statuses == {D.POSITIVE_DEFINITE}:
        return Verdict.STRICT_WEAK_MIN
    if statuses <= _NONNEG and statuses != {D.ZERO}:
        return Verdict.WEAK_MIN
    return None


def classify(
    problem: Problem,
    cand: Candidate,
    tol: float = DEFAULT_TOL,
    residual_gate: float = RESIDUAL_GATE,
    scale: float = 1.0,
) -> ClassificationReport:
    """Pointwise grid definiteness of ``A`` along ``cand`` turned into a verdict."""
    L = problem.effective_lagrangian()
    lay = problem.layout
    system = euler_lagrange(L, lay)
    residual = el_residual_on_grid(problem, cand, system, scale).max_abs
    xs = problem.grid_nodes(scale)
    grid = tuple(len(a) for a in problem.grid_axes(scale))
    A = assemble_A(L, lay)
    stack = evaluate_A_along(A, cand, xs)
    eigs = [jacobi_eigenvalues(M, tol) for M in stack]
    statuses = [
        status_from_eigenvalues(e, float(np.linalg.norm(M)), tol) for e, M in zip(eigs, stack)
    ]
    tally = {s.value: 0 for s in Definiteness}
    for s in statuses:
        tally[s.value] += 1
    leg = legendre_from_values(lay, stack, tol)
    notes = [
        f"sufficient conditions checked only at the {len(statuses)} sampled grid "
        f"nodes (resolution {'x'.join(map(str, grid))})",
        "domain is a bounded box, as the semi-definite criterion requires",
    ]
    if problem.underdetermined:
        notes.append(
            "auxiliary multipliers enter only through their sum; "
            "the combined system is used as written"
        )

    seen = set(statuses)
    verdict = Verdict.INCONCLUSIVE
    if D.INDEFINITE in seen:
        verdict = Verdict.SADDLE
    elif seen == {D.ZERO}:
        notes.append("second-variation matrix vanishes at every node; no sign information")
    else:
        verdict = _min_side_verdict(seen)
        if verdict is not None and not leg.holds_for_min():
            notes.append("Legendre necessary condition fails; minimum verdict withheld")
            verdict = Verdict.INCONCLUSIVE
        elif verdict is None:
            flipped = _min_side_verdict({s.negated() for s in seen})
            if flipped is not None:
                notes.append("maximum verdict derived by applying the minimum tests to -A")
                verdict = flipped.mirrored()
                if not leg.holds_for_max():
                    notes.append("Legendre condition for -A fails; maximum verdict withheld")
                    verdict = Verdict.INCONCLUSIVE
            else:
                verdict = Verdict.INCONCLUSIVE
                notes.append("semi-definite nodes of both signs; no verdict")

    if residual >= residual_gate:
        notes.insert(
            0,
            f"candidate fails Euler-Lagrange residual ({residual:.3e} >= {residual_gate:g})",
        )
        verdict = Verdict.INCONCLUSIVE

    all_eigs = np.concatenate(eigs) if eigs else np.zeros(1)
    return ClassificationReport(
        verdict=verdict,
        el_residual=residual,
        tally=tally,
        legendre=leg.condensed,
        diagonal_blocks=leg.diagonal_blocks,
        grid=grid,
        nodes=len(statuses),
        min_eigenvalue=float(np.min(all_eigs)),
        max_eigenvalue=float(np.max(all_eigs)),
        notes=notes,
    )
