"""Immutable expression trees with canonicalizing constructors.

Every node is built through :func:`add`, :func:`mul`, :func:`power` or
:func:`func`, which flatten nested sums/products, fold rational constants,
collect like terms and merge powers of a common base.  Two canonical trees
compare equal iff they are structurally identical.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos")

# ordering of node kinds inside sums and products
_RANK = {"Const": 0, "Sym": 1, "Pow": 3, "Mul": 4, "Add": 5, "Func": 2}


class Expr:
    __slots__ = ("args", "_hash", "_key")

    def __init__(self, *args):
        self.args = args
        self._hash = hash((type(self).__name__,) + args)
        self._key = None

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and self._hash == other._hash and self.args == other.args

    def __hash__(self):
        return self._hash

    def sort_key(self):
        if self._key is None:
            from .render import render

            self._key = (_RANK[type(self).__name__], render(self))
        return self._key

    def __repr__(self):
        from .render import render

        return f"{type(self).__name__}({render(self)!r})"

    def __str__(self):
        from .render import render

        return render(self)

    # arithmetic sugar ------------------------------------------------------
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
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    @property
    def free_symbols(self) -> frozenset:
        return free_symbols(self)


class Const(Expr):
    __slots__ = ()

    def __init__(self, value):
        super().__init__(Fraction(value))

    @property
    def value(self) -> Fraction:
        return self.args[0]


class Sym(Expr):
    __slots__ = ()

    def __init__(self, name: str):
        super().__init__(name)

    @property
    def name(self) -> str:
        return self.args[0]


class Add(Expr):
    __slots__ = ()

    def __init__(self, *terms):
        super().__init__(*terms)

    @property
    def terms(self):
        return self.args


class Mul(Expr):
    __slots__ = ()

    def __init__(self, *factors):
        super().__init__(*factors)

    @property
    def factors(self):
        return self.args


class Pow(Expr):
    __slots__ = ()

    def __init__(self, base, exponent):
        super().__init__(base, exponent)

    @property
    def base(self):
        return self.args[0]

    @property
    def exponent(self):
        return self.args[1]


class Func(Expr):
    __slots__ = ()

    def __init__(self, name: str, arg):
        super().__init__(name, arg)

    @property
    def name(self) -> str:
        return self.args[0]

    @property
    def arg(self):
        return self.args[1]


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
HALF = Const(Fraction(1, 2))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction, Rational)):
        return Const(Fraction(value))
    if isinstance(value, str):
        return Sym(value)
    raise TypeError(f"cannot use {type(value).__name__} inside an expression; use exact rationals")


def sym(name: str) -> Sym:
    return Sym(name)


def const(value) -> Const:
    return Const(Fraction(value))


def is_const(e, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def is_integer_const(e) -> bool:
    return isinstance(e, Const) and e.value.denominator == 1


def free_symbols(e: Expr) -> frozenset:
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Sym):
            out.add(node.name)
        elif isinstance(node, Const):
            continue
        elif isinstance(node, Func):
            stack.append(node.arg)
        else:
            stack.extend(node.args)
    return frozenset(out)


def depends_on(e: Expr, name: str) -> bool:
    return name in free_symbols(e)


# --------------------------------------------------------------------------
# canonical constructors
# --------------------------------------------------------------------------


def _split_coeff(term):
    """term -> (rational coefficient, coefficient-free core)."""
    if isinstance(term, Const):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        core = rest[0] if len(rest) == 1 else Mul(*rest)
        return term.factors[0].value, core
    return Fraction(1), term


def _with_coeff(c: Fraction, core):
    if c == 0:
        return ZERO
    if core == ONE:
        return Const(c)
    if c == 1:
        return core
    if isinstance(core, Mul):
        return Mul(Const(c), *core.factors)
    return Mul(Const(c), core)


def add(*args) -> Expr:
    constant = Fraction(0)
    coeffs: dict = {}
    stack = list(reversed([as_expr(a) for a in args]))
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
            continue
        if isinstance(t, Const):
            constant += t.value
            continue
        c, core = _split_coeff(t)
        coeffs[core] = coeffs.get(core, Fraction(0)) + c
    terms = [_with_coeff(c, core) for core, c in coeffs.items() if c != 0]
    terms.sort(key=Expr.sort_key)
    if constant != 0:
        terms.insert(0, Const(constant))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(*terms)


def neg(e) -> Expr:
    return mul(MINUS_ONE, e)


def _known_positive(e) -> bool:
    if isinstance(e, Const):
        return e.value > 0
    if isinstance(e, Func):
        return e.name == "exp"
    if isinstance(e, Pow):
        # a non-integer power is only defined for a positive base
        return not is_integer_const(e.exponent) or (
            is_integer_const(e.exponent) and _known_positive(e.base)
        )
    if isinstance(e, Mul):
        return all(_known_positive(f) for f in e.factors)
    return False


def mul(*args) -> Expr:
    coeff = Fraction(1)
    exps: dict = {}
    exp_args = []
    stack = list(reversed([as_expr(a) for a in args]))
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
        elif isinstance(f, Const):
            coeff *= f.value
            if coeff == 0:
                return ZERO
        elif isinstance(f, Func) and f.name == "exp":
            exp_args.append(f.arg)
        elif isinstance(f, Pow):
            exps.setdefault(f.base, []).append(f.exponent)
        else:
            exps.setdefault(f, []).append(ONE)
    factors = []
    again = False
    for base, elist in exps.items():
        if len(elist) == 1:
            p = base if elist[0] == ONE else Pow(base, elist[0])
        else:
            p = power(base, add(*elist))
            # merging exponents may expose new constants or products
            again = again or isinstance(p, (Const, Mul)) or (isinstance(p, Func) and p.name == "exp")
        if p != ONE:
            factors.append(p)
    if exp_args:
        ex = func("exp", add(*exp_args)) if len(exp_args) > 1 else Func("exp", exp_args[0])
        again = again or (len(exp_args) > 1 and not isinstance(ex, Func))
        if ex != ONE:
            factors.append(ex)
    if again:
        return mul(Const(coeff), *factors)
    factors.sort(key=Expr.sort_key)
    if not factors:
        return Const(coeff)
    if len(factors) == 1:
        if coeff == 1:
            return factors[0]
        if isinstance(factors[0], Add):
            # distribute a rational coefficient over a single sum
            return add(*(mul(Const(coeff), t) for t in factors[0].terms))
    if coeff != 1:
        factors.insert(0, Const(coeff))
    return Mul(*factors)


def _rational_root(value: Fraction, q: int):
    """Exact q-th root of a positive rational, or None."""
    if value <= 0:
        return None

    def iroot(n):
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == n:
                return cand
        return None

    num, den = iroot(value.numerator), iroot(value.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def power(base, exponent) -> Expr:
    base = as_expr(base)
    exponent = as_expr(exponent)
    if exponent == ZERO:
        return ONE
    if exponent == ONE:
        return base
    if base == ONE:
        return ONE
    if isinstance(base, Const) and isinstance(exponent, Const):
        b, p = base.value, exponent.value
        if b == 0:
            if p > 0:
                return ZERO
            # any negative power of zero is the same pole
            return Pow(base, Const(-1))
        if p.denominator == 1:
            return Const(b ** p.numerator)
        root = _rational_root(b, p.denominator)
        if root is not None:
            return Const(root ** p.numerator)
        return Pow(base, exponent)
    if isinstance(base, Func) and base.name == "exp":
        return func("exp", mul(base.arg, exponent))
    if isinstance(base, Pow):
        inner = base.exponent
        if is_integer_const(exponent) or not is_integer_const(inner):
            return power(base.base, mul(inner, exponent))
    if isinstance(base, Mul):
        if is_integer_const(exponent):
            return mul(*(power(f, exponent) for f in base.factors))
        unknown = [f for f in base.factors if not _known_positive(f)]
        if len(unknown) <= 1:
            return mul(*(power(f, exponent) for f in base.factors))
        known = [f for f in base.factors if _known_positive(f)]
        if known:
            return mul(*(power(f, exponent) for f in known), Pow(mul(*unknown), exponent))
    return Pow(base, exponent)


def _log_parts(e):
    """If e == c * log(u) return (c, u), else None."""
    if isinstance(e, Func) and e.name == "log":
        return ONE, e.arg
    if isinstance(e, Mul):
        logs = [f for f in e.factors if isinstance(f, Func) and f.name == "log"]
        if len(logs) == 1:
            rest = [f for f in e.factors if f is not logs[0]]
            return mul(*rest), logs[0].arg
    return None


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if name == "sqrt":
        return power(arg, HALF)
    if name == "exp":
        if arg == ZERO:
            return ONE
        terms = arg.terms if isinstance(arg, Add) else (arg,)
        pulled = []
        kept = []
        for t in terms:
            parts = _log_parts(t)
            if parts is None:
                kept.append(t)
            else:
                pulled.append(power(parts[1], parts[0]))
        if pulled:
            rest = add(*kept)
            return mul(*pulled, *(() if rest == ZERO else (Func("exp", rest),)))
        return Func("exp", arg)
    if name == "log":
        if arg == ONE:
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
        if isinstance(arg, Pow) and not is_integer_const(arg.exponent):
            return mul(arg.exponent, func("log", arg.base))
        return Func("log", arg)
    if name == "sin":
        if arg == ZERO:
            return ZERO
        return Func("sin", arg)
    if name == "cos":
        if arg == ZERO:
            return ONE
        return Func("cos", arg)
    raise ValueError(f"unknown function {name!r}")


def exp(a) -> Expr:
    return func("exp", a)


def log(a) -> Expr:
    return func("log", a)


def sqrt(a) -> Expr:
    return func("sqrt", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def rebuild(e: Expr) -> Expr:
    """Re-run the canonical constructors bottom-up."""
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Add):
        return add(*(rebuild(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(rebuild(f) for f in e.factors))
    if isinstance(e, Pow):
        return power(rebuild(e.base), rebuild(e.exponent))
    return func(e.name, rebuild(e.arg))


def node_count(e: Expr) -> int:
    if isinstance(e, (Const, Sym)):
        return 1
    if isinstance(e, Func):
        return 1 + node_count(e.arg)
    return 1 + sum(node_count(a) for a in e.args)
