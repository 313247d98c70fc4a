"""Immutable expression trees, light canonicalisation and numeric evaluation.

Node kinds: :class:`Const`, :class:`Var` (independent variable ``x<i>``),
:class:`Jet` (jet coordinate), :class:`Add`, :class:`Mul`, :class:`Pow`
(integer or half-integer exponent), :class:`Func` (named unary function),
plus two piecewise nodes used by test directions: :class:`Bump` and
:class:`Indicator`.  Negation and division are expressed through ``Mul`` by
``-1`` and ``Pow(., -1)``.

Equality is structural.  Semantic equality is always checked numerically.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Number

import numpy as np

from ..jetspace import JetCoordinate

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos", "sinh", "cosh", "tanh")
HALF = Fraction(1, 2)


class EvaluationError(ArithmeticError):
    """Numeric evaluation left the real domain of a subexpression.

    ``index`` is the flat position of the first offending sample when the
    evaluation was vectorised, otherwise ``None``.
    """

    def __init__(self, message, subexpr=None, index=None):
        super().__init__(message)
        self.subexpr = subexpr
        self.index = index


class Expr:
    __slots__ = ("_hash", "_key", "_free")

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _init(self, **fields):
        for name, value in fields.items():
            object.__setattr__(self, name, value)
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._args()))
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_free", None)

    def _args(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._args() == other._args()

    def __repr__(self):
        args = ", ".join(repr(a) for a in self._args())
        return f"{type(self).__name__}({args})"

    def __str__(self):
        from .printer import to_text

        return to_text(self)

    # arithmetic builds lightly-folded trees; use simplify() for collection
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    @property
    def free_symbols(self) -> frozenset:
        """Var and Jet leaves appearing in the tree."""
        if self._free is None:
            acc = frozenset().union(*(c.free_symbols for c in self.children()))
            object.__setattr__(self, "_free", acc)
        return self._free

    def sort_key(self) -> tuple:
        if self._key is None:
            object.__setattr__(self, "_key", self._make_key())
        return self._key

    def _make_key(self) -> tuple:
        raise NotImplementedError


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, bool) or not isinstance(value, (Number, Fraction)):
            raise TypeError(f"constant must be a number, got {value!r}")
        if isinstance(value, (int, Fraction)):
            value = Fraction(value)
        else:
            value = float(value)
            if value.is_integer() and abs(value) < 2**53:
                value = Fraction(int(value))
        self._init(value=value)

    def _args(self):
        return (self.value,)

    def _make_key(self):
        return (0, float(self.value))

    @property
    def free_symbols(self):
        return frozenset()

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)


class Var(Expr):
    """Independent variable ``x<axis>`` (1-based)."""

    __slots__ = ("axis",)

    def __init__(self, axis: int):
        if axis < 1:
            raise ValueError(f"axis must be >= 1, got {axis}")
        self._init(axis=int(axis))

    def _args(self):
        return (self.axis,)

    def _make_key(self):
        return (1, self.axis)

    @property
    def free_symbols(self):
        if self._free is None:
            object.__setattr__(self, "_free", frozenset((self,)))
        return self._free


class Jet(Expr):
    __slots__ = ("coord",)

    def __init__(self, coord: JetCoordinate):
        if not isinstance(coord, JetCoordinate):
            raise TypeError(f"Jet needs a JetCoordinate, got {coord!r}")
        self._init(coord=coord)

    def _args(self):
        return (self.coord,)

    def _make_key(self):
        c = self.coord
        return (2, c.dep, c.order, c.slot)

    @property
    def free_symbols(self):
        if self._free is None:
            object.__setattr__(self, "_free", frozenset((self,)))
        return self._free


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self._init(terms=tuple(terms))

    def _args(self):
        return self.terms

    def children(self):
        return self.terms

    def _make_key(self):
        return (8, tuple(t.sort_key() for t in self.terms))


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self._init(factors=tuple(factors))

    def _args(self):
        return self.factors

    def children(self):
        return self.factors

    def _make_key(self):
        return (7, tuple(f.sort_key() for f in self.factors))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        exp = Fraction(exp)
        if exp.denominator not in (1, 2):
            raise ValueError(
                f"exponent {exp} is not a half-integer; use exp/log for general powers"
            )
        self._init(base=base, exp=exp)

    def _args(self):
        return (self.base, self.exp)

    def children(self):
        return (self.base,)

    def _make_key(self):
        return (3, self.base.sort_key(), float(self.exp))


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS or name == "sqrt":
            raise ValueError(f"unknown function {name!r}")
        self._init(name=name, arg=arg)

    def _args(self):
        return (self.name, self.arg)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (4, self.name, self.arg.sort_key())


class Bump(Expr):
    """``order``-th derivative of the piecewise profile ``psi_l`` at ``arg``.

    ``psi_0`` is identically one; for ``l >= 1`` the profile is
    ``1 - |y|**l`` on ``[-1, 1]`` and zero outside.
    """

    __slots__ = ("l", "order", "arg")

    def __init__(self, l: int, order: int, arg: Expr):
        if l < 0 or order < 0:
            raise ValueError("Bump needs l >= 0 and order >= 0")
        self._init(l=int(l), order=int(order), arg=arg)

    def _args(self):
        return (self.l, self.order, self.arg)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (5, self.l, self.order, self.arg.sort_key())


class Indicator(Expr):
    """Characteristic function of an open ball or box in x-space.

    Its derivative is zero almost everywhere, which is how test directions
    restricted to a support set are differentiated.
    """

    __slots__ = ("center", "radius", "shape")

    def __init__(self, center, radius: float, shape: str = "ball"):
        if shape not in ("ball", "box"):
            raise ValueError(f"unknown indicator shape {shape!r}")
        self._init(
            center=tuple(float(c) for c in center), radius=float(radius), shape=shape
        )

    def _args(self):
        return (self.center, self.radius, self.shape)

    def _make_key(self):
        return (6, self.shape, self.center, self.radius)

    @property
    def free_symbols(self):
        if self._free is None:
            vars_ = frozenset(Var(i + 1) for i in range(len(self.center)))
            object.__setattr__(self, "_free", vars_)
        return self._free


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1


def _fold(a, b, op):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return op(a, b)
    return op(float(a), float(b))


def add(*terms) -> Expr:
    """Sum with flattening and constant folding (no like-term collection)."""
    flat = []
    const = Fraction(0)
    for t in map(as_expr, terms):
        parts = t.terms if isinstance(t, Add) else (t,)
        for p in parts:
            if isinstance(p, Const):
                const = _fold(const, p.value, lambda x, y: x + y)
            else:
                flat.append(p)
    if const != 0:
        flat.insert(0, Const(const))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(flat)


def mul(*factors) -> Expr:
    """Product with flattening, constant folding and zero annihilation."""
    flat = []
    coeff = Fraction(1)
    for f in map(as_expr, factors):
        parts = f.factors if isinstance(f, Mul) else (f,)
        for p in parts:
            if isinstance(p, Const):
                coeff = _fold(coeff, p.value, lambda x, y: x * y)
            else:
                flat.append(p)
    if coeff == 0:
        return ZERO
    if not flat:
        return Const(coeff)
    if coeff != 1:
        flat.insert(0, Const(coeff))
    if len(flat) == 1:
        return flat[0]
    return Mul(flat)


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and b.value != 0:
        inv = 1 / b.value if isinstance(b.value, Fraction) else 1.0 / b.value
        return mul(a, Const(inv))
    return mul(a, power(b, -1))


def _exact_sqrt(q: Fraction):
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def _fold_const_power(value, exp: Fraction):
    """Exact value of ``value**exp`` when representable, else ``None``."""
    if exp.denominator == 1:
        if value == 0 and exp < 0:
            return None
        if isinstance(value, Fraction):
            return value ** int(exp)
        return float(value) ** int(exp)
    if value < 0:
        return None
    if isinstance(value, Fraction):
        root = _exact_sqrt(value)
        if root is None or (root == 0 and exp < 0):
            return None
        return root ** int(exp * 2)
    if value == 0 and exp < 0:
        return None
    return float(value) ** float(exp)


def power(base, exp) -> Expr:
    base = as_expr(base)
    exp = Fraction(exp)
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Const):
        folded = _fold_const_power(base.value, exp)
        if folded is not None:
            return Const(folded)
    return Pow(base, exp)


def sqrt(e) -> Expr:
    return power(as_expr(e), HALF)


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if name == "sqrt":
        return sqrt(arg)
    return Func(name, arg)


def exp(e):
    return func("exp", e)


def log(e):
    return func("log", e)


def sin(e):
    return func("sin", e)


def cos(e):
    return func("cos", e)


def sinh(e):
    return func("sinh", e)


def cosh(e):
    return func("cosh", e)


def tanh(e):
    return func("tanh", e)


def walk(e: Expr):
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def free_jets(e: Expr) -> set[JetCoordinate]:
    return {s.coord for s in e.free_symbols if isinstance(s, Jet)}


def free_vars(e: Expr) -> set[int]:
    return {s.axis for s in e.free_symbols if isinstance(s, Var)}


def max_jet_order(e: Expr) -> int:
    """Highest derivative order among the jets of ``e`` (``-1`` if none)."""
    return max((c.order for c in free_jets(e)), default=-1)


# --- numeric evaluation -----------------------------------------------------

_UNARY = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
}


def _first_index(mask):
    if np.ndim(mask) == 0:
        return None
    return int(np.flatnonzero(mask)[0])


def _bump_values(l: int, order: int, y):
    y = np.asarray(y, dtype=float)
    if l == 0:
        return np.full_like(y, 1.0 if order == 0 else 0.0)
    inside = np.abs(y) < 1.0
    if order > l:
        return np.zeros_like(y)
    coeff = math.factorial(l) / math.factorial(l - order)
    ay = np.abs(y)
    body = -coeff * ay ** (l - order) * np.sign(y) ** order
    if order == 0:
        body = body + 1.0
    return np.where(inside, body, 0.0)


def evaluate(e: Expr, values) -> float | np.ndarray:
    """Evaluate ``e`` with ``values`` mapping ``Var``/``int`` axes and
    ``Jet``/``JetCoordinate`` keys to floats or equally-shaped arrays.

    Raises :class:`EvaluationError` for log of a non-positive number, a
    square root of a negative number, or division by zero.
    """
    env = {}
    for key, val in values.items():
        if isinstance(key, int):
            key = Var(key)
        elif isinstance(key, JetCoordinate):
            key = Jet(key)
        env[key] = val
    memo: dict[int, object] = {}

    def ev(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        out = _eval_node(node, ev, env)
        memo[id(node)] = out
        return out

    with np.errstate(all="ignore"):
        out = ev(e)
    if isinstance(out, np.ndarray) and out.ndim == 0:
        return float(out)
    return out


def _eval_node(node, ev, env):
    if isinstance(node, Const):
        return float(node.value)
    if isinstance(node, (Var, Jet)):
        try:
            return env[node]
        except KeyError:
            raise EvaluationError(f"no value supplied for {node}", node) from None
    if isinstance(node, Add):
        acc = ev(node.terms[0])
        for t in node.terms[1:]:
            acc = acc + ev(t)
        return acc
    if isinstance(node, Mul):
        acc = ev(node.factors[0])
        for f in node.factors[1:]:
            acc = acc * ev(f)
        return acc
    if isinstance(node, Pow):
        b = ev(node.base)
        p = node.exp
        if p < 0:
            bad = np.asarray(b) == 0
            if np.any(bad):
                raise EvaluationError(
                    f"division by zero in {node}", node, _first_index(bad)
                )
        if p.denominator == 2:
            bad = np.asarray(b) < 0
            if np.any(bad):
                raise EvaluationError(
                    f"square root of a negative number in {node}",
                    node,
                    _first_index(bad),
                )
            if p == HALF:
                return np.sqrt(b)
            return np.sqrt(b) ** int(p * 2)
        return np.asarray(b, dtype=float) ** int(p) if np.ndim(b) else float(b) ** int(p)
    if isinstance(node, Func):
        a = ev(node.arg)
        if node.name == "log":
            bad = np.asarray(a) <= 0
            if np.any(bad):
                raise EvaluationError(
                    f"log of a non-positive number in {node}", node, _first_index(bad)
                )
        return _UNARY[node.name](a)
    if isinstance(node, Bump):
        return _bump_values(node.l, node.order, ev(node.arg))
    if isinstance(node, Indicator):
        xs = []
        for i in range(len(node.center)):
            try:
                xs.append(np.asarray(env[Var(i + 1)], dtype=float) - node.center[i])
            except KeyError:
                raise EvaluationError(f"no value supplied for x{i + 1}", node) from None
        if node.shape == "ball":
            inside = sum(d * d for d in xs) < node.radius**2
        else:
            inside = np.logical_and.reduce([np.abs(d) < node.radius for d in xs])
        return np.where(inside, 1.0, 0.0)
    raise TypeError(f"cannot evaluate {node!r}")
