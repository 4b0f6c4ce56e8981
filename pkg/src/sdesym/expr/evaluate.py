"""Numeric evaluation with singularity guards.

Scalar evaluation raises on a domain violation.  Batch evaluation works on
numpy arrays and instead returns a validity mask so callers can discard the
offending points.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Add, Const, Func, Mul, Pow, Sym


class EvaluationError(ArithmeticError):
    pass


class DomainError(EvaluationError):
    pass


class DivisionError(EvaluationError, ZeroDivisionError):
    pass


def _is_int(x) -> bool:
    return isinstance(x, Const) and x.value.denominator == 1


def evaluate(e, point: dict, eps_sing: float = 0.0) -> float:
    """Evaluate at a single point (mapping name -> float)."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(point[e.name])
        except KeyError:
            raise KeyError(f"no value for symbol {e.name!r}") from None
    if isinstance(e, Add):
        return math.fsum(evaluate(t, point, eps_sing) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, point, eps_sing)
        return out
    if isinstance(e, Pow):
        b = evaluate(e.base, point, eps_sing)
        x = evaluate(e.exponent, point, eps_sing)
        if _is_int(e.exponent):
            if x < 0 and abs(b) <= eps_sing:
                raise DivisionError(f"division by {b!r} in {e}")
            try:
                return b ** int(x)
            except OverflowError:
                return math.inf
        if b <= 0 or b <= eps_sing:
            raise DomainError(f"non-integer power of {b!r} in {e}")
        try:
            return b**x
        except OverflowError:
            return math.inf
    if isinstance(e, Func):
        a = evaluate(e.arg, point, eps_sing)
        if e.name == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                return math.inf
        if e.name == "log":
            if a <= 0 or a <= eps_sing:
                raise DomainError(f"log of {a!r}")
            return math.log(a)
        if e.name == "sin":
            return math.sin(a)
        if e.name == "cos":
            return math.cos(a)
    raise TypeError(f"cannot evaluate {e!r}")


def evaluate_batch(e, env: dict, eps_sing: float = 1e-6, size: int | None = None):
    """Vectorized evaluation.

    ``env`` maps names to arrays (or scalars) broadcastable to a common
    shape.  Returns ``(values, valid)``; ``valid`` is false wherever some
    subexpression divided by something within ``eps_sing`` of zero, took a
    log of a base below ``eps_sing``, raised a negative base to a fractional
    power, or overflowed.
    """
    if size is None:
        shapes = [np.shape(v) for v in env.values()]
        shape = np.broadcast_shapes(*shapes) if shapes else ()
    else:
        shape = (size,)
    valid = np.ones(shape, dtype=bool)
    cache = {}

    def ev(node):
        hit = cache.get(node)
        if hit is not None:
            return hit
        out = _ev(node)
        cache[node] = out
        return out

    def _ev(node):
        nonlocal valid
        if isinstance(node, Const):
            return np.full(shape, float(node.value))
        if isinstance(node, Sym):
            try:
                return np.broadcast_to(np.asarray(env[node.name], dtype=float), shape)
            except KeyError:
                raise KeyError(f"no value for symbol {node.name!r}") from None
        if isinstance(node, Add):
            out = ev(node.terms[0]).copy()
            for t in node.terms[1:]:
                out = out + ev(t)
            return out
        if isinstance(node, Mul):
            out = ev(node.factors[0]).copy()
            for f in node.factors[1:]:
                out = out * ev(f)
            return out
        if isinstance(node, Pow):
            b = ev(node.base)
            x = ev(node.exponent)
            if _is_int(node.exponent):
                k = int(node.exponent.value)
                if k < 0:
                    bad = np.abs(b) <= eps_sing
                    valid &= ~bad
                    safe = np.where(bad, 1.0, b)
                    return safe**k
                return b**k
            # a positive fractional power is allowed at exactly zero so clipped paths survive
            bad = np.where(x > 0, b < 0, b <= eps_sing)
            valid &= ~bad
            return np.where(bad, 1.0, b) ** x
        if isinstance(node, Func):
            a = ev(node.arg)
            if node.name == "exp":
                return np.exp(a)
            if node.name == "log":
                bad = a <= eps_sing
                valid &= ~bad
                return np.log(np.where(bad, 1.0, a))
            if node.name == "sin":
                return np.sin(a)
            if node.name == "cos":
                return np.cos(a)
        raise TypeError(f"cannot evaluate {node!r}")

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = ev(e)
    valid = valid & np.isfinite(vals)
    return vals, valid


def lambdify(e, names):
    """Return f(*arrays) -> (values, valid) for repeated evaluation."""
    names = list(names)

    def f(*arrays, eps_sing=1e-6):
        return evaluate_batch(e, dict(zip(names, arrays)), eps_sing)

    return f
