"""Changes of dynamical variables by Ito calculus, Kozlov-type substitutions,
characteristic variables and pushforward of symmetry fields."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional


from .expr import (
    HALF, Add, Const, Func, Mul, Pow, SampleSpec, Sym, SymbolTable, add,
    antiderivative_x, depends_on, differentiate, evaluate_batch, exp, free_symbols, is_zero,
    log, mul, power, simplify, substitute, valid_points,
)
from .model import ITO, STRATONOVICH, SdeSystem, VectorField, classify
from .deteq import check_symmetry, ito_laplacian


class NotIntegrable(ValueError):
    pass


class InversionError(ValueError):
    pass


class NoiseMixingError(ValueError):
    pass


class NotSplitW(ValueError):
    pass


@dataclass(frozen=True)
class Substitution:
    """New variables y^i = Psi^i(x, t, w) with inverse x^j = Xi^j(y, t, w).

    t and the noises are left untouched.
    """

    old: SymbolTable
    new: SymbolTable
    forward: tuple  # ((new name, Psi), ...)
    inverse: tuple  # ((old name, Xi), ...)
    name: str = "sub"

    @property
    def new_names(self):
        return [n for n, _ in self.forward]

    def psi(self):
        return [e for _, e in self.forward]

    def inverse_map(self) -> dict:
        return dict(self.inverse)


def _fresh_names(k, taken):
    names = []
    i = 0
    while len(names) < k:
        cand = "y" if i == 0 else f"y{i}"
        if cand not in taken:
            names.append(cand)
        i += 1
    return names


def invert_scalar(psi, x: str, y: str):
    """Solve psi(x, ...) = y for x by peeling invertible layers."""
    target = Sym(y)
    e = psi
    for _ in range(64):
        if e == Sym(x):
            return target
        if not depends_on(e, x):
            break
        if isinstance(e, Add):
            free = [t for t in e.terms if not depends_on(t, x)]
            dep = [t for t in e.terms if depends_on(t, x)]
            if free and dep:
                target = add(target, mul(-1, add(*free)))
                e = add(*dep)
                continue
        elif isinstance(e, Mul):
            free = [f for f in e.factors if not depends_on(f, x)]
            dep = [f for f in e.factors if depends_on(f, x)]
            if free and dep:
                target = mul(target, power(mul(*free), -1))
                e = mul(*dep)
                continue
        elif isinstance(e, Pow):
            if not depends_on(e.exponent, x):
                target = power(target, power(e.exponent, -1))
                e = e.base
                continue
            if not depends_on(e.base, x):
                target = mul(log(target), power(log(e.base), -1))
                e = e.exponent
                continue
        elif isinstance(e, Func) and e.name == "exp":
            target = log(target)
            e = e.arg
            continue
        elif isinstance(e, Func) and e.name == "log":
            target = exp(target)
            e = e.arg
            continue
        # affine fallback
        a = differentiate(e, x)
        if not depends_on(a, x):
            b = simplify(add(e, mul(-1, a, Sym(x))))
            if not depends_on(b, x):
                return mul(add(target, mul(-1, b)), power(a, -1))
        break
    raise InversionError(f"cannot invert {psi} for {x}; supply the inverse")


def _image_domains(old: SymbolTable, psis, names, spec: SampleSpec):
    """Bounding box of Psi over the old sampling domain."""
    env = valid_points(psis, SampleSpec(max(spec.points, 256), spec.domains, spec.time_domain,
                                        spec.eps_sing, spec.eps_zero, spec.seed),
                       old, names=set(old.names()))
    n = len(next(iter(env.values())))
    out = {}
    for name, e in zip(names, psis):
        vals, ok = evaluate_batch(e, env, spec.eps_sing, size=n)
        vals = vals[ok]
        lo, hi = float(vals.min()), float(vals.max())
        if hi - lo < 1e-9:
            lo, hi = lo - 0.5, hi + 0.5
        out[name] = (lo, hi)
    return out


def make_substitution(symbols: SymbolTable, forward: dict, inverse: Optional[dict] = None,
                      name: str = "sub", spec: SampleSpec = None) -> Substitution:
    """Validated substitution; the inverse is derived when omitted (scalar case)."""
    spec = spec or SampleSpec()
    noises = set(symbols.noises)
    for new, psi in forward.items():
        if new in noises or new == symbols.time:
            raise NoiseMixingError(
                "changing t or the noise is outside the Ito change-of-variables engine; "
                "the transformed equation is not an Ito equation of either kind")
    new_names = list(forward)
    if len(new_names) != symbols.n:
        raise ValueError(f"need {symbols.n} new variables, got {len(new_names)}")
    clash = set(new_names) & (set(symbols.names()) - set(symbols.dynamical))
    if clash:
        raise ValueError(f"new variable names clash with existing symbols: {sorted(clash)}")
    psis = [forward[k] for k in new_names]
    if inverse is None:
        if symbols.n != 1:
            raise InversionError("automatic inversion covers scalar substitutions only; supply the inverse")
        inverse = {symbols.dynamical[0]: invert_scalar(psis[0], symbols.dynamical[0], new_names[0])}
    missing = set(symbols.dynamical) - set(inverse)
    if missing:
        raise ValueError(f"inverse misses {sorted(missing)}")
    inv = {k: simplify(v) for k, v in inverse.items()}
    # Xi(Psi(x)) == x on the old domain
    bind = dict(zip(new_names, psis))
    for v in symbols.dynamical:
        back = substitute(inv[v], bind)
        if not is_zero(add(back, mul(-1, Sym(v))), spec, symbols):
            raise InversionError(f"supplied inverse for {v} does not undo the forward map")
    doms = _image_domains(symbols, psis, new_names, spec)
    keep = {k: v for k, v in symbols.domains if k not in symbols.dynamical}
    keep.update(doms)
    new_sym = SymbolTable(new_names, symbols.time, symbols.noises, symbols.params, tuple(keep.items()))
    return Substitution(symbols, new_sym, tuple(zip(new_names, psis)),
                        tuple((v, inv[v]) for v in symbols.dynamical), name)


def substitution_from_spec(symbols: SymbolTable, sub_spec, spec: SampleSpec = None) -> Substitution:
    inverse = dict(sub_spec.inverse) or None
    return make_substitution(symbols, dict(sub_spec.forward), inverse, sub_spec.name, spec)


def _to_new(e, sub: Substitution):
    return simplify(substitute(e, sub.inverse_map()))


def ito_change_of_vars(sys: SdeSystem, sub: Substitution) -> SdeSystem:
    if sys.calculus != ITO:
        raise ValueError("ito_change_of_vars needs an Ito system; use strat_change_of_vars")
    xs, t, ws = sys.symbols.dynamical, sys.symbols.time, sys.symbols.noises
    F, S = [], []
    for psi in sub.psi():
        terms = [differentiate(psi, t), mul(HALF, ito_laplacian(psi, sys))]
        terms += [mul(f, differentiate(psi, x)) for f, x in zip(sys.drift, xs)]
        F.append(_to_new(add(*terms), sub))
        row = []
        for k, w in enumerate(ws):
            s = [differentiate(psi, w)] + [mul(sys.noise[j][k], differentiate(psi, x)) for j, x in enumerate(xs)]
            row.append(_to_new(add(*s), sub))
        S.append(row)
    return SdeSystem(sub.new, F, S, ITO)


def strat_change_of_vars(sys: SdeSystem, sub: Substitution) -> SdeSystem:
    """Plain chain rule, valid for Stratonovich equations."""
    if sys.calculus != STRATONOVICH:
        raise ValueError("strat_change_of_vars needs a Stratonovich system")
    xs, t, ws = sys.symbols.dynamical, sys.symbols.time, sys.symbols.noises
    F, S = [], []
    for psi in sub.psi():
        terms = [differentiate(psi, t)] + [mul(b, differentiate(psi, x)) for b, x in zip(sys.drift, xs)]
        F.append(_to_new(add(*terms), sub))
        row = []
        for k, w in enumerate(ws):
            s = [differentiate(psi, w)] + [mul(sys.noise[j][k], differentiate(psi, x)) for j, x in enumerate(xs)]
            row.append(_to_new(add(*s), sub))
        S.append(row)
    return SdeSystem(sub.new, F, S, STRATONOVICH)


def change_of_vars(sys: SdeSystem, sub: Substitution) -> SdeSystem:
    return ito_change_of_vars(sys, sub) if sys.calculus == ITO else strat_change_of_vars(sys, sub)


def pushforward_field(X: VectorField, sub: Substitution) -> VectorField:
    phi = [_to_new(X.apply(psi), sub) for psi in sub.psi()]
    if X.general:
        return VectorField(sub.new, phi, xi=[_to_new(x, sub) for x in X.xi], name=X.name)
    return VectorField(sub.new, phi, R=X.R, name=X.name)


def post_transform_check(sys: SdeSystem, X: VectorField, sub: Substitution, spec: SampleSpec = None):
    new_sys = change_of_vars(sys, sub)
    return check_symmetry(new_sys, pushforward_field(X, sub), spec)


class KozlovResult(NamedTuple):
    substitution: Substitution
    system: SdeSystem
    field: VectorField
    checks: dict


def _free_of(e, v, symbols, spec):
    if not depends_on(e, v):
        return True
    return bool(is_zero(simplify(differentiate(e, v)), spec, symbols))


def kozlov(sys: SdeSystem, X: VectorField, new_name: Optional[str] = None,
           inverse=None, spec: SampleSpec = None) -> KozlovResult:
    """Straighten a standard symmetry: y = int dx / phi, so X becomes d/dy."""
    spec = spec or SampleSpec()
    if sys.n != 1:
        raise ValueError("kozlov needs a scalar system")
    if not X.standard:
        raise ValueError("kozlov needs a standard symmetry (no noise action)")
    x = sys.symbols.dynamical[0]
    psi = antiderivative_x(power(X.phi[0], -1), x)
    if psi is None:
        raise NotIntegrable(f"cannot integrate 1/({X.phi[0]}) in {x}")
    y = new_name or _fresh_names(1, set(sys.symbols.names()))[0]
    sub = make_substitution(sys.symbols, {y: simplify(psi)}, inverse, name="kozlov", spec=spec)
    return _finish(sys, X, sub, spec, scaling=None)


def modified_kozlov(sys: SdeSystem, X: VectorField, new_name: Optional[str] = None,
                    inverse=None, spec: SampleSpec = None) -> KozlovResult:
    """Bring a split W-symmetry to scaling form: y = exp(r int dx / phi)."""
    spec = spec or SampleSpec()
    if sys.n != 1 or sys.m != 1:
        raise ValueError("modified_kozlov needs a scalar system")
    if classify(X) != "split-W":
        raise NotSplitW(f"modified Kozlov substitution needs a split W-symmetry, got {classify(X)}")
    x = sys.symbols.dynamical[0]
    r = X.R[0][0]
    integral = antiderivative_x(power(X.phi[0], -1), x)
    if integral is None:
        raise NotIntegrable(f"cannot integrate 1/({X.phi[0]}) in {x}")
    psi = simplify(exp(simplify(mul(Const(r), integral))))
    y = new_name or _fresh_names(1, set(sys.symbols.names()))[0]
    sub = make_substitution(sys.symbols, {y: psi}, inverse, name="modified-kozlov", spec=spec)
    return _finish(sys, X, sub, spec, scaling=r)


def _finish(sys, X, sub, spec, scaling):
    new_sys = change_of_vars(sys, sub)
    Y = pushforward_field(X, sub)
    y = sub.new_names[0]
    checks = {}
    if scaling is None:
        checks["pushforward_is_d_y"] = bool(is_zero(add(Y.phi[0], -1), spec, sub.new))
        checks["coefficients_free_of_y"] = all(_free_of(e, y, sub.new, spec) for e in new_sys.entries())
    else:
        checks["scaling_form"] = bool(is_zero(add(Y.phi[0], mul(-scaling, Sym(y))), spec, sub.new))
    return KozlovResult(sub, new_sys, Y, checks)


def characteristic_chi(X: VectorField):
    """chi = w exp(-int r/phi dx), invariant along a scalar split W-symmetry."""
    s = X.symbols
    if s.n != 1 or s.m != 1:
        raise ValueError("characteristic_chi needs a scalar field")
    if classify(X) not in ("split-W", "deterministic-standard"):
        raise NotSplitW("characteristic_chi needs a split W-symmetry")
    r = X.R[0][0]
    w = Sym(s.noises[0])
    if r == 0:
        return w
    integral = antiderivative_x(power(X.phi[0], -1), s.dynamical[0])
    if integral is None:
        raise NotIntegrable(f"cannot integrate 1/({X.phi[0]})")
    return simplify(mul(w, exp(simplify(mul(Const(-r), integral)))))


def straightening_check(X: VectorField, psi, theta, zeta, spec: SampleSpec = None) -> dict:
    """Check X(psi) = 1, X(theta) = 0, X(zeta) = 0 and that zeta really reads w."""
    spec = spec or SampleSpec()
    s = X.symbols
    out = {}
    for label, e in (("X(psi)-1", add(X.apply(psi), -1)), ("X(theta)", X.apply(theta)), ("X(zeta)", X.apply(zeta))):
        e = simplify(e)
        z = is_zero(e, spec, s)
        out[label] = {"pass": z.result, "residual": e, "witness": z.witness, "value": z.residual}
    reads_w = any(not is_zero(simplify(differentiate(zeta, w)), spec, s) for w in s.noises)
    out["zeta-admissible"] = {"pass": reads_w, "residual": None, "witness": None, "value": None}
    return out


def restrict_system(sys: SdeSystem, keep) -> SdeSystem:
    """Sub-system for the variables in ``keep``; their equations must not read the others."""
    keep = list(keep)
    xs = sys.symbols.dynamical
    unknown = set(keep) - set(xs)
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)}")
    dropped = set(xs) - set(keep)
    idx = [xs.index(v) for v in keep]
    drift = [sys.drift[i] for i in idx]
    noise = [sys.noise[i] for i in idx]
    for e in drift + [c for r in noise for c in r]:
        if free_symbols(e) & dropped:
            raise ValueError(f"equations for {keep} still involve {sorted(free_symbols(e) & dropped)}")
    doms = {k: v for k, v in sys.symbols.domains if k not in dropped}
    symbols = SymbolTable(keep, sys.symbols.time, sys.symbols.noises, sys.symbols.params, tuple(doms.items()))
    return SdeSystem(symbols, drift, noise, sys.calculus)
