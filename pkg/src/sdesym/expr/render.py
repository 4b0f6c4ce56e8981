"""Text form of expressions.

The output is re-parseable by :mod:`sdesym.expr.parse` and parses back to
the same canonical tree.
"""

from __future__ import annotations

from fractions import Fraction

from .core import Add, Const, Func, Mul, Pow, Sym


def _const(v: Fraction) -> str:
    if v.denominator == 1 and v >= 0:
        return str(v.numerator)
    if v.denominator == 1:
        return f"({v.numerator})"
    return f"({v.numerator}/{v.denominator})"


def _atomic(e) -> bool:
    return isinstance(e, (Sym, Func, Const)) or (
        isinstance(e, Pow) and isinstance(e.exponent, Const) and e.exponent.value == Fraction(1, 2)
    )


def _atom_text(e) -> str:
    t = render(e)
    return t if _atomic(e) else f"({t})"


def _pow(base, x) -> str:
    if isinstance(x, Const) and x.value == Fraction(1, 2):
        return f"sqrt({render(base)})"
    if isinstance(x, Sym) or (isinstance(x, Const) and x.value >= 0 and x.value.denominator == 1):
        xt = render(x)
    else:
        xt = _atom_text(x)
    return f"{_atom_text(base)}^{xt}"


def _factor_text(f) -> str:
    # inside a product: powers bind tighter than '*', sums need parentheses
    if isinstance(f, Pow):
        return _pow(f.base, f.exponent)
    return _atom_text(f)


def _product(coeff: Fraction, num, den) -> str:
    sign = "-" if coeff < 0 else ""
    coeff = abs(coeff)
    pieces = []
    if coeff != 1 or not num:
        pieces.append(_const(coeff))
    pieces.extend(_factor_text(f) for f in num)
    text = "*".join(pieces)
    if den:
        dtexts = [_pow(b, x) if x.value != 1 else _atom_text(b) for b, x in den]
        if len(dtexts) == 1:
            text += "/" + dtexts[0]
        else:
            text += "/(" + "*".join(dtexts) + ")"
    return sign + text


def _split(e):
    """(coefficient, numerator factors, denominator (base, exponent) pairs)."""
    if isinstance(e, Const):
        return e.value, [], []
    factors = e.factors if isinstance(e, Mul) else (e,)
    coeff = Fraction(1)
    num, den = [], []
    for f in factors:
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Pow) and isinstance(f.exponent, Const) and f.exponent.value < 0:
            den.append((f.base, Const(-f.exponent.value)))
        else:
            num.append(f)
    return coeff, num, den


def render(e) -> str:
    if isinstance(e, Const):
        return _const(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({render(e.arg)})"
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.terms):
            coeff, num, den = _split(t)
            body = _product(abs(coeff), num, den)
            if i == 0:
                out.append("-" + body if coeff < 0 else body)
            else:
                out.append((" - " if coeff < 0 else " + ") + body)
        return "".join(out)
    coeff, num, den = _split(e)
    if coeff == 1 and len(num) == 1 and not den:
        return _pow(num[0].base, num[0].exponent)
    return _product(coeff, num, den)
