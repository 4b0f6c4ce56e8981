"""Probabilistic identity testing by seeded random-point evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import Add, free_symbols
from .evaluate import evaluate_batch
from .symbols import DEFAULT_DOMAIN, SymbolTable


class SamplingExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    points: int = 64
    # per-symbol overrides (name -> (lo, hi)); beats the symbol table
    domains: dict = field(default_factory=dict)
    time_domain: Optional[tuple] = None
    eps_sing: float = 1e-6
    eps_zero: float = 1e-9
    seed: int = 42

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.eps_sing <= 0 or self.eps_zero <= 0:
            raise ValueError("eps_sing and eps_zero must be positive")
        for name, (lo, hi) in self.domains.items():
            if not lo < hi:
                raise ValueError(f"degenerate sampling interval for {name}")


class ZeroTest(NamedTuple):
    result: bool
    witness: Optional[dict] = None
    residual: Optional[float] = None

    def __bool__(self):
        return self.result


def _domain(name, spec: SampleSpec, symbols: Optional[SymbolTable]):
    if name in spec.domains:
        return spec.domains[name]
    if symbols is not None:
        if name == symbols.time and spec.time_domain is not None:
            return spec.time_domain
        return symbols.domain(name)
    return DEFAULT_DOMAIN


def sample_points(names, n, spec: SampleSpec, symbols=None, rng=None):
    """Draw n uniform points over the declared domains (fixed params pinned)."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    fixed = symbols.fixed_values() if symbols is not None else {}
    env = {}
    for name in sorted(names):
        if name in fixed:
            env[name] = np.full(n, float(fixed[name]))
        else:
            lo, hi = _domain(name, spec, symbols)
            env[name] = rng.uniform(lo, hi, n)
    return env


def valid_points(exprs, spec: SampleSpec, symbols=None, names=None):
    """spec.points points at which every expression in exprs is defined."""
    exprs = list(exprs)
    if names is None:
        names = set()
        for e in exprs:
            names |= free_symbols(e)
    rng = np.random.default_rng(spec.seed)
    need = spec.points
    kept = {n: [] for n in names}
    got = 0
    drawn = 0
    while got < need:
        if drawn >= 100 * need:
            raise SamplingExhausted(
                f"found only {got} of {need} valid points after {drawn} draws"
            )
        batch = max(need - got, 16) * 2
        env = sample_points(names, batch, spec, symbols, rng)
        drawn += batch
        ok = np.ones(batch, dtype=bool)
        for e in exprs:
            _, v = evaluate_batch(e, env, spec.eps_sing, size=batch)
            ok &= v
        take = np.flatnonzero(ok)[: need - got]
        for n in names:
            kept[n].append(env[n][take])
        got += len(take)
    return {n: np.concatenate(v) if v else np.zeros(0) for n, v in kept.items()}


def is_zero(e, spec: SampleSpec = None, symbols: SymbolTable = None, points=None) -> ZeroTest:
    """Random-point zero test.

    Passes iff |e(p)| <= eps_zero * (1 + max(1, scale(p))) at every retained
    point, where scale(p) is the largest |term| among e's top-level summands.
    """
    spec = spec or SampleSpec()
    names = free_symbols(e)
    if not names:
        from .evaluate import evaluate

        val = evaluate(e, {})
        ok = abs(val) <= spec.eps_zero * 2
        return ZeroTest(ok, None if ok else {}, None if ok else val)
    env = points if points is not None else valid_points([e], spec, symbols, names)
    n = len(next(iter(env.values())))
    vals, valid = evaluate_batch(e, env, spec.eps_sing, size=n)
    scale = np.abs(vals)
    if isinstance(e, Add):
        for t in e.terms:
            tv, _ = evaluate_batch(t, env, spec.eps_sing, size=n)
            scale = np.maximum(scale, np.abs(tv))
    tol = spec.eps_zero * (1.0 + np.maximum(1.0, scale))
    bad = valid & ~(np.abs(vals) <= tol)
    if points is not None:
        # caller-supplied points that turned out invalid count as failures
        bad |= ~valid
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        witness = {k: float(v[i]) for k, v in env.items()}
        return ZeroTest(False, witness, float(vals[i]))
    return ZeroTest(True)


def equal(a, b, spec: SampleSpec = None, symbols: SymbolTable = None) -> ZeroTest:
    from .core import add, neg

    return is_zero(add(a, neg(b)), spec, symbols)
