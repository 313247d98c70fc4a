"""Canonical jet coordinates ``u^j_(k)[h]`` and their combinatorics.

A jet coordinate names one distinct partial derivative of one dependent
variable.  Derivatives are stored as exponent vectors (``MultiIndex``); the
slot number ``h`` of a derivative inside its order group is its position in
:func:`enumerate_slots`, which lists the order-``k`` derivatives in
lexicographic order of their nondecreasing variable-index sequences::

    n=2, k=2:  u_x1x1, u_x1x2, u_x2x2

The full coordinate vector ``u^(s)`` groups coordinates by dependent variable,
then by order, then by slot.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb


class AddressingError(IndexError):
    """A multi-index, coordinate or flat index does not fit the layout."""


def p_count(n: int, k: int) -> int:
    """Number of distinct order-``k`` partial derivatives in ``n`` variables."""
    if n < 1 or k < 0:
        raise ValueError(f"p_count needs n >= 1 and k >= 0, got n={n}, k={k}")
    return comb(n + k - 1, k)


def q_count(n: int, m: int, s: int) -> int:
    """Length of the order-``s`` jet of ``m`` functions of ``n`` variables."""
    if n < 1 or m < 1 or s < 0:
        raise ValueError(f"q_count needs n, m >= 1 and s >= 0, got {n}, {m}, {s}")
    return m * comb(n + s, s)


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Exponent vector of a mixed partial derivative ``d^|a| / dx^a``."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if not exps:
            raise ValueError("a multi-index needs at least one variable")
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def zero(cls, n: int) -> MultiIndex:
        return cls((0,) * n)

    @classmethod
    def from_sequence(cls, n: int, axes) -> MultiIndex:
        """Build from a sequence of 1-based axes, e.g. ``(1, 1, 2)``."""
        exps = [0] * n
        for axis in axes:
            if not 1 <= axis <= n:
                raise AddressingError(f"axis {axis} outside 1..{n}")
            exps[axis - 1] += 1
        return cls(tuple(exps))

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def order(self) -> int:
        return sum(self.exponents)

    def sequence(self) -> tuple[int, ...]:
        """Nondecreasing 1-based axis sequence, e.g. ``(1, 1, 2)``."""
        return tuple(i + 1 for i, e in enumerate(self.exponents) for _ in range(e))

    def raised(self, axis: int) -> MultiIndex:
        """Compose with one more derivative along the 1-based ``axis``."""
        if not 1 <= axis <= self.n:
            raise AddressingError(f"axis {axis} outside 1..{self.n}")
        exps = list(self.exponents)
        exps[axis - 1] += 1
        return MultiIndex(tuple(exps))

    def suffix(self) -> str:
        """Canonical derivative suffix such as ``x1x1x2`` (empty for order 0)."""
        return "".join(f"x{i}" for i in self.sequence())


def raise_index(mi: MultiIndex, axis: int) -> MultiIndex:
    return mi.raised(axis)


@lru_cache(maxsize=None)
def _slots(n: int, k: int) -> tuple[MultiIndex, ...]:
    return tuple(
        MultiIndex.from_sequence(n, seq)
        for seq in itertools.combinations_with_replacement(range(1, n + 1), k)
    )


@lru_cache(maxsize=None)
def _slot_numbers(n: int, k: int) -> dict[MultiIndex, int]:
    return {mi: h for h, mi in enumerate(_slots(n, k), start=1)}


def enumerate_slots(n: int, k: int) -> list[MultiIndex]:
    """The ``p_count(n, k)`` order-``k`` multi-indices in slot order."""
    if n < 1 or k < 0:
        raise ValueError(f"enumerate_slots needs n >= 1 and k >= 0, got {n}, {k}")
    return list(_slots(n, k))


def slot_of(mi: MultiIndex) -> int:
    """1-based slot ``h`` of ``mi`` inside its order group."""
    return _slot_numbers(mi.n, mi.order)[mi]


@dataclass(frozen=True, order=True)
class JetCoordinate:
    """The coordinate ``u^dep_(order)[slot]``, stored by its multi-index."""

    dep: int
    index: MultiIndex

    def __post_init__(self):
        if self.dep < 1:
            raise AddressingError(f"dependent index must be >= 1, got {self.dep}")

    @classmethod
    def from_slot(cls, n: int, dep: int, order: int, slot: int) -> JetCoordinate:
        slots = _slots(n, order)
        if not 1 <= slot <= len(slots):
            raise AddressingError(
                f"slot {slot} outside 1..{len(slots)} for order {order}, n={n}"
            )
        return cls(dep, slots[slot - 1])

    @classmethod
    def base(cls, n: int, dep: int) -> JetCoordinate:
        return cls(dep, MultiIndex.zero(n))

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def order(self) -> int:
        return self.index.order

    @property
    def slot(self) -> int:
        return slot_of(self.index)

    def raised(self, axis: int) -> JetCoordinate:
        return JetCoordinate(self.dep, self.index.raised(axis))

    @property
    def name(self) -> str:
        """Canonical textual name: ``u2`` or ``u1_x1x1x2``."""
        suffix = self.index.suffix()
        return f"u{self.dep}_{suffix}" if suffix else f"u{self.dep}"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class JetLayout:
    """Ordered coordinates of ``u^(s)`` for ``m`` functions of ``n`` variables."""

    n: int
    m: int
    s: int
    coords: tuple[JetCoordinate, ...] = field(init=False, repr=False, compare=False)
    slot_tables: tuple[tuple[MultiIndex, ...], ...] = field(
        init=False, repr=False, compare=False
    )
    _positions: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.s < 0:
            raise ValueError(
                f"invalid layout dimensions n={self.n}, m={self.m}, s={self.s}"
            )
        tables = tuple(_slots(self.n, k) for k in range(self.s + 1))
        coords = tuple(
            JetCoordinate(j, mi)
            for j in range(1, self.m + 1)
            for table in tables
            for mi in table
        )
        object.__setattr__(self, "slot_tables", tables)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(
            self, "_positions", {c: i for i, c in enumerate(coords, start=1)}
        )

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __contains__(self, c) -> bool:
        return c in self._positions

    @property
    def q(self) -> int:
        return len(self.coords)

    def index_of(self, c: JetCoordinate) -> int:
        """1-based position of ``c`` in the layout."""
        try:
            return self._positions[c]
        except KeyError:
            raise AddressingError(f"{c} is not a coordinate of {self}") from None

    def coordinate_at(self, i: int) -> JetCoordinate:
        """Coordinate at the 1-based position ``i``."""
        if not 1 <= i <= len(self.coords):
            raise AddressingError(f"index {i} outside 1..{len(self.coords)}")
        return self.coords[i - 1]

    def coordinate(self, dep: int, order: int, slot: int) -> JetCoordinate:
        if not 1 <= dep <= self.m or not 0 <= order <= self.s:
            raise AddressingError(f"(dep={dep}, order={order}) outside {self}")
        return JetCoordinate.from_slot(self.n, dep, order, slot)

    def group(self, dep: int, order: int) -> list[JetCoordinate]:
        """The coordinates ``u^dep_(order)`` in slot order."""
        return [JetCoordinate(dep, mi) for mi in self.slot_tables[order]]

    def with_order(self, s: int) -> JetLayout:
        return JetLayout(self.n, self.m, s)

    def names(self) -> list[str]:
        return [c.name for c in self.coords]


def layout(n: int, m: int, s: int) -> JetLayout:
    return JetLayout(n, m, s)


def index_of(lay: JetLayout, c: JetCoordinate) -> int:
    return lay.index_of(c)


def coordinate_at(lay: JetLayout, i: int) -> JetCoordinate:
    return lay.coordinate_at(i)
