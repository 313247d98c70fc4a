"""Text form of expressions, readable back by :func:`varcond.symexpr.parse`.

``Bump`` and ``Indicator`` nodes print in a descriptive form outside the
input grammar; everything else round-trips.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Add, Bump, Const, Expr, Func, Indicator, Jet, Mul, Pow, Var

# precedence levels: sum < product < unary minus < power < atom
_SUM, _PRODUCT, _UNARY, _POWER, _ATOM = range(5)


def _number(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def _const_level(value) -> int:
    if value < 0:
        return _UNARY
    if isinstance(value, Fraction) and value.denominator != 1:
        return _PRODUCT
    if not isinstance(value, Fraction) and "e" in repr(float(value)):
        return _PRODUCT
    return _ATOM


def to_text(e: Expr) -> str:
    return _fmt(e)[0]


def _wrap(pair, level):
    text, lvl = pair
    return f"({text})" if lvl < level else text


def _exponent(p: Fraction) -> str:
    if p.denominator == 1 and p > 0:
        return str(p.numerator)
    return f"({_number(p)})"


def _fmt(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return _number(e.value), _const_level(e.value)
    if isinstance(e, Var):
        return f"x{e.axis}", _ATOM
    if isinstance(e, Jet):
        return e.coord.name, _ATOM
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            negative, body = _split_sign(t)
            text = _wrap(_fmt(body), _PRODUCT) if negative else _wrap(_fmt(t), _SUM)
            if i == 0:
                parts.append(f"-{text}" if negative else text)
            else:
                parts.append(f" - {text}" if negative else f" + {text}")
        return "".join(parts), _SUM
    if isinstance(e, Mul):
        return _fmt_product(e)
    if isinstance(e, Pow):
        if e.exp == Fraction(1, 2):
            return f"sqrt({to_text(e.base)})", _ATOM
        if e.exp < 0:
            return _fmt_product(Mul((Const(1), e)))
        return f"{_wrap(_fmt(e.base), _ATOM)}^{_exponent(e.exp)}", _POWER
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})", _ATOM
    if isinstance(e, Bump):
        primes = "'" * e.order
        return f"psi{e.l}{primes}({to_text(e.arg)})", _ATOM
    if isinstance(e, Indicator):
        center = ", ".join(repr(c) for c in e.center)
        return f"chi_{e.shape}([{center}], {e.radius!r})", _ATOM
    raise TypeError(f"cannot print {e!r}")


def _split_sign(t: Expr):
    """``(True, -t)`` when ``t`` carries a negative numeric coefficient."""
    if isinstance(t, Const) and t.value < 0:
        return True, Const(-t.value)
    if isinstance(t, Mul) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
        c = -t.factors[0].value
        rest = t.factors[1:]
        if c == 1:
            body = rest[0] if len(rest) == 1 else Mul(rest)
        else:
            body = Mul((Const(c),) + rest)
        return True, body
    return False, t


def _fmt_product(e: Mul) -> tuple[str, int]:
    factors = list(e.factors)
    coeff = None
    if isinstance(factors[0], Const):
        coeff = factors.pop(0).value
    num, den = [], []
    for f in factors:
        if isinstance(f, Pow) and f.exp < 0:
            den.append(f.base if f.exp == -1 else Pow(f.base, -f.exp))
        else:
            num.append(f)
    sign = ""
    if coeff is not None and coeff < 0:
        sign, coeff = "-", -coeff
    if coeff is not None and isinstance(coeff, Fraction) and coeff.denominator != 1:
        if coeff.numerator != 1 or not num:
            num.insert(0, Const(coeff.numerator))
        den.insert(0, Const(coeff.denominator))
    elif coeff is not None and coeff != 1:
        num.insert(0, Const(coeff))
    num_text = "*".join(_wrap(_fmt(f), _POWER) for f in num) if num else "1"
    if len(num) > 1 or (num and _fmt(num[0])[1] < _UNARY):
        num_level = _PRODUCT
    else:
        num_level = _fmt(num[0])[1] if num else _ATOM
    if den:
        den_text = "*".join(_wrap(_fmt(f), _POWER) for f in den)
        if len(den) > 1:
            den_text = f"({den_text})"
        text = f"{num_text}/{_wrap((den_text, _POWER), _POWER)}"
        num_level = _PRODUCT
    else:
        text = num_text
    if sign:
        return f"-{_wrap((text, num_level), _UNARY)}", _UNARY
    return text, num_level
