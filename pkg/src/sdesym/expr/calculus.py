"""Differentiation, substitution, expansion and a small antiderivative table."""

from __future__ import annotations

from fractions import Fraction

from .core import (
    Add, Const, Func, Mul, Pow, Sym, MINUS_ONE, ONE, ZERO,
    add, cos, depends_on, free_symbols, func, log, mul, power, sin,
)


def differentiate(e, v: str):
    if not depends_on(e, v):
        return ZERO
    if isinstance(e, Sym):
        return ONE
    if isinstance(e, Add):
        return add(*(differentiate(t, v) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = differentiate(f, v)
            if df != ZERO:
                terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        b, x = e.base, e.exponent
        db = differentiate(b, v)
        if not depends_on(x, v):
            return mul(x, power(b, add(x, MINUS_ONE)), db)
        dx = differentiate(x, v)
        return mul(e, add(mul(dx, log(b)), mul(x, db, power(b, MINUS_ONE))))
    if isinstance(e, Func):
        a = e.arg
        da = differentiate(a, v)
        if e.name == "exp":
            return mul(e, da)
        if e.name == "log":
            return mul(da, power(a, MINUS_ONE))
        if e.name == "sin":
            return mul(cos(a), da)
        if e.name == "cos":
            return mul(MINUS_ONE, sin(a), da)
    raise TypeError(f"cannot differentiate {e!r}")


def substitute(e, mapping: dict):
    """Replace symbols by expressions (simultaneously)."""
    if not mapping:
        return e
    if isinstance(e, Sym):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if not free_symbols(e) & mapping.keys():
        return e
    if isinstance(e, Add):
        return add(*(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), substitute(e.exponent, mapping))
    return func(e.name, substitute(e.arg, mapping))


_MAX_POW_EXPAND = 6


def expand(e):
    """Distribute products over sums and small integer powers of sums."""
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Add):
        return add(*(expand(t) for t in e.terms))
    if isinstance(e, Func):
        return func(e.name, expand(e.arg))
    if isinstance(e, Pow):
        b = expand(e.base)
        x = expand(e.exponent)
        if isinstance(b, Add) and isinstance(x, Const) and x.value.denominator == 1 and 1 < x.value <= _MAX_POW_EXPAND:
            out = b
            for _ in range(int(x.value) - 1):
                out = _distribute(out, b)
            return out
        return power(b, x)
    # Mul
    out = ONE
    for f in e.factors:
        out = _distribute(out, expand(f))
    return out


def _distribute(a, b):
    ta = a.terms if isinstance(a, Add) else (a,)
    tb = b.terms if isinstance(b, Add) else (b,)
    if len(ta) == 1 and len(tb) == 1:
        return mul(a, b)
    return add(*(mul(x, y) for x in ta for y in tb))


def simplify(e):
    """Canonical rebuild followed by expansion, to a fixpoint."""
    from .core import rebuild

    prev = None
    cur = rebuild(e)
    for _ in range(8):
        if cur == prev:
            break
        prev = cur
        cur = rebuild(expand(cur))
    return cur


# --------------------------------------------------------------------------
# antiderivatives in one variable
# --------------------------------------------------------------------------


def _split_free(term, v):
    """term -> (factor free of v, factor containing v)."""
    factors = term.factors if isinstance(term, Mul) else (term,)
    free = [f for f in factors if not depends_on(f, v)]
    dep = [f for f in factors if depends_on(f, v)]
    return mul(*free), mul(*dep)


def _linear(e, v):
    """If e = a*v + b with a, b free of v, return (a, b)."""
    d = differentiate(e, v)
    if depends_on(d, v):
        return None
    b = expand(add(e, mul(MINUS_ONE, d, Sym(v))))
    if depends_on(b, v):
        return None
    return d, b


def _integrate_term(term, v):
    c, core = _split_free(term, v)
    if core == ONE:
        return mul(c, Sym(v))
    sv = Sym(v)
    if core == sv:
        return mul(Fraction(1, 2), c, power(sv, 2))
    if isinstance(core, Pow) and not depends_on(core.exponent, v):
        n = core.exponent
        lin = _linear(core.base, v)
        if lin is not None:
            a, _ = lin
            if n == MINUS_ONE:
                return mul(c, power(a, MINUS_ONE), log(core.base))
            n1 = add(n, ONE)
            return mul(c, power(mul(a, n1), MINUS_ONE), power(core.base, n1))
        return None
    if isinstance(core, Func) and core.name == "exp":
        lin = _linear(core.arg, v)
        if lin is not None:
            return mul(c, power(lin[0], MINUS_ONE), core)
        return None
    if isinstance(core, Func) and core.name in ("sin", "cos"):
        lin = _linear(core.arg, v)
        if lin is None:
            return None
        if core.name == "sin":
            return mul(MINUS_ONE, c, power(lin[0], MINUS_ONE), cos(core.arg))
        return mul(c, power(lin[0], MINUS_ONE), sin(core.arg))
    if isinstance(core, Mul):
        # v^n * exp(a*v+b) for small positive integer n, by parts
        fs = core.factors
        exps = [f for f in fs if isinstance(f, Func) and f.name == "exp"]
        rest = [f for f in fs if f not in exps]
        if len(exps) == 1 and len(rest) == 1:
            p = rest[0]
            n = None
            if p == sv:
                n = 1
            elif isinstance(p, Pow) and p.base == sv and isinstance(p.exponent, Const) \
                    and p.exponent.value.denominator == 1 and 0 < p.exponent.value <= 4:
                n = int(p.exponent.value)
            lin = _linear(exps[0].arg, v)
            if n is not None and lin is not None:
                a = lin[0]
                # int v^n e^{av} = v^n e^{av}/a - n/a int v^{n-1} e^{av}
                first = mul(power(sv, n), exps[0], power(a, MINUS_ONE))
                lower = _integrate_term(mul(power(sv, n - 1), exps[0]), v)
                if lower is None:
                    return None
                return mul(c, add(first, mul(-n, power(a, MINUS_ONE), lower)))
    return None


def antiderivative_x(e, v: str):
    """Return F with dF/dv = e, or None when the table cannot integrate e."""
    e = expand(e)
    terms = e.terms if isinstance(e, Add) else (e,)
    out = []
    for t in terms:
        F = _integrate_term(t, v)
        if F is None:
            return None
        out.append(F)
    return add(*out)


antiderivative = antiderivative_x
