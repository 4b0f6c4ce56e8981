"""Ito <-> Stratonovich maps, the persistence condition and finite group actions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .expr import (
    HALF, ONE, ZERO, Const, SampleSpec, Sym, add, as_expr, differentiate, is_zero, mul,
    parse, power, simplify, substitute,
)
from .model import ITO, STRATONOVICH, SdeSystem, VectorField


class CalculusMismatch(ValueError):
    pass


class GeneralizedInputError(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class NotOrthogonal(ValueError):
    pass


def _correction(sys: SdeSystem):
    """c^i = sum_k (sum_j d_j sigma^i_k sigma^j_k + d_{w_k} sigma^i_k)."""
    xs, ws = sys.symbols.dynamical, sys.symbols.noises
    out = []
    for i in range(sys.n):
        terms = []
        for k, w in enumerate(ws):
            sik = sys.noise[i][k]
            for j, x in enumerate(xs):
                terms.append(mul(differentiate(sik, x), sys.noise[j][k]))
            terms.append(differentiate(sik, w))
        out.append(add(*terms))
    return out


def to_stratonovich(sys: SdeSystem) -> SdeSystem:
    if sys.calculus != ITO:
        raise CalculusMismatch("to_stratonovich needs an Ito system")
    b = [simplify(add(f, mul(-HALF, c))) for f, c in zip(sys.drift, _correction(sys))]
    return replace(sys, drift=b, calculus=STRATONOVICH)


def to_ito(sys: SdeSystem) -> SdeSystem:
    if sys.calculus != STRATONOVICH:
        raise CalculusMismatch("to_ito needs a Stratonovich system")
    f = [simplify(add(b, mul(HALF, c))) for b, c in zip(sys.drift, _correction(sys))]
    return replace(sys, drift=f, calculus=ITO)


def convert(sys: SdeSystem, to: str) -> SdeSystem:
    to = to.lower()
    if to == sys.calculus:
        return sys
    return to_stratonovich(sys) if to == STRATONOVICH else to_ito(sys)


def persistence_condition(sys: SdeSystem, X: VectorField):
    """r (sigma_w + sigma sigma_x); zero iff the Ito and Stratonovich verdicts agree."""
    if sys.n != 1 or sys.m != 1:
        raise ShapeMismatch("the persistence condition is available for scalar systems only")
    x, w, t = sys.symbols.dynamical[0], sys.symbols.noises[0], sys.symbols.time
    if X.general:
        # xi = r w with r free of (x, t, w), e.g. r = 1 - alpha
        r = simplify(differentiate(X.xi[0], w))
        spec = SampleSpec()
        if any(not is_zero(simplify(differentiate(r, v)), spec, sys.symbols) for v in (x, t, w)) or \
                not is_zero(simplify(add(X.xi[0], mul(-1, r, Sym(w)))), spec, sys.symbols):
            raise ValueError("the persistence condition needs a noise action r w with constant r")
    else:
        r = Const(X.R[0][0])
    s = sys.noise[0][0]
    return simplify(mul(r, add(differentiate(s, w), mul(s, differentiate(s, x)))))


def normalize_noise(sys: SdeSystem, new_name: Optional[str] = None):
    """Change variable to xi = int dx / sigma so the noise coefficient becomes 1."""
    from .expr import antiderivative_x
    from .transform import NotIntegrable, ito_change_of_vars, make_substitution

    if sys.n != 1 or sys.m != 1:
        raise ShapeMismatch("noise normalization is available for scalar systems only")
    if not sys.proper:
        raise GeneralizedInputError(
            "noise normalization needs a proper equation: with sigma depending on w the "
            "unit-noise form is not reachable"
        )
    s = sys.noise[0][0]
    x = sys.symbols.dynamical[0]
    if s == ONE:
        sub = make_substitution(sys.symbols, {x: Sym(x)}, {x: Sym(x)}, name="identity")
        return sys, sub
    psi = antiderivative_x(power(s, -1), x)
    if psi is None:
        raise NotIntegrable(f"cannot integrate 1/({s}) in {x}")
    sub = make_substitution(sys.symbols, {new_name or "y": psi}, None, name="normalize")
    return ito_change_of_vars(sys, sub), sub


# --------------------------------------------------------------------------
# finite group actions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupElement:
    """Dilation x^i -> lam^a_i x^i, w^k -> lam^b_k w^k, or a rotation M acting
    simultaneously on a block of variables and a block of noises."""

    kind: str  # "dilation" | "rotation"
    lam: object = None
    exponents: tuple = ()  # ((name, Fraction), ...)
    matrix: tuple = ()
    var_block: tuple = ()
    noise_block: tuple = ()

    @classmethod
    def dilation(cls, lam, exponents: dict):
        lam = parse(lam) if isinstance(lam, str) else as_expr(lam)
        return cls("dilation", lam, tuple((k, Fraction(v)) for k, v in exponents.items()))

    @classmethod
    def rotation(cls, matrix, var_block, noise_block):
        M = tuple(tuple(parse(e) if isinstance(e, str) else as_expr(e) for e in row) for row in matrix)
        return cls("rotation", matrix=M, var_block=tuple(var_block), noise_block=tuple(noise_block))

    @classmethod
    def from_field(cls, X: VectorField, lam="lambda"):
        """Dilation generated by a diagonal linear field phi^i = a_i x^i, R diagonal."""
        s = X.symbols
        exps = {}
        for v, p in zip(s.dynamical, X.phi):
            c = simplify(mul(p, power(Sym(v), -1)))
            if not isinstance(c, Const):
                raise ValueError(f"field component {p} is not a multiple of {v}")
            exps[v] = c.value
        if X.general:
            raise ValueError("need a constant noise action")
        for k, w in enumerate(s.noises):
            if any(X.R[k][j] != 0 for j in range(len(s.noises)) if j != k):
                raise ValueError("noise action is not diagonal")
            exps[w] = X.R[k][k]
        return cls.dilation(lam, exps)


def _matrices(sys: SdeSystem, g: GroupElement, spec):
    """G (n x n), G^-1, H (m x m), H^-1 as expression matrices."""
    xs, ws = list(sys.symbols.dynamical), list(sys.symbols.noises)
    n, m = len(xs), len(ws)

    def eye(k):
        return [[ONE if i == j else ZERO for j in range(k)] for i in range(k)]

    G, Gi, H, Hi = eye(n), eye(n), eye(m), eye(m)
    if g.kind == "dilation":
        exps = dict(g.exponents)
        unknown = set(exps) - set(xs) - set(ws)
        if unknown:
            raise ShapeMismatch(f"exponents given for unknown names {sorted(unknown)}")
        for i, v in enumerate(xs):
            a = exps.get(v, Fraction(0))
            G[i][i] = power(g.lam, Const(a))
            Gi[i][i] = power(g.lam, Const(-a))
        for k, w in enumerate(ws):
            b = exps.get(w, Fraction(0))
            H[k][k] = power(g.lam, Const(b))
            Hi[k][k] = power(g.lam, Const(-b))
        return G, Gi, H, Hi
    if g.kind != "rotation":
        raise ValueError(f"unknown group element kind {g.kind!r}")
    M = g.matrix
    d = len(M)
    if any(len(r) != d for r in M):
        raise ShapeMismatch("rotation matrix must be square")
    if len(g.var_block) != d or len(g.noise_block) != d:
        raise ShapeMismatch("rotation blocks must match the matrix size")
    for i in range(d):
        for j in range(d):
            e = add(*(mul(M[k][i], M[k][j]) for k in range(d)), -1 if i == j else 0)
            if not is_zero(simplify(e), spec, sys.symbols):
                raise NotOrthogonal("rotation matrix is not orthogonal")
    vi = [xs.index(v) for v in g.var_block]
    wi = [ws.index(w) for w in g.noise_block]
    for a in range(d):
        for b in range(d):
            G[vi[a]][vi[b]] = M[a][b]
            Gi[vi[a]][vi[b]] = M[b][a]
            H[wi[a]][wi[b]] = M[a][b]
            Hi[wi[a]][wi[b]] = M[b][a]
    return G, Gi, H, Hi


def _matvec(A, v):
    return [add(*(mul(a, x) for a, x in zip(row, v))) for row in A]


def _matmul(A, B):
    return [[add(*(mul(A[i][k], B[k][j]) for k in range(len(B)))) for j in range(len(B[0]))] for i in range(len(A))]


def apply_group_element(sys: SdeSystem, g: GroupElement, discharge: bool = True,
                        spec: SampleSpec = None) -> SdeSystem:
    """Transform an equation by a finite symmetry-group element.

    With ``discharge`` (the default) the driving realization is kept and any
    rescaling/rotation of the noise is absorbed into sigma, giving
    dx = G f(G^-1 x) dt + G sigma(G^-1 x) dw.  Without it (x, w) are mapped
    together and dx = G f(G^-1 x, H^-1 w) dt + G sigma(G^-1 x, H^-1 w) H^-1 dw,
    which reproduces the original equation exactly for a symmetry.
    """
    spec = spec or SampleSpec()
    G, Gi, H, Hi = _matrices(sys, g, spec)
    xs, ws = sys.symbols.dynamical, sys.symbols.noises
    bind = dict(zip(xs, _matvec(Gi, [Sym(v) for v in xs])))
    if not discharge:
        bind.update(zip(ws, _matvec(Hi, [Sym(w) for w in ws])))
    f = [substitute(e, bind) for e in sys.drift]
    S = [[substitute(e, bind) for e in row] for row in sys.noise]
    f = _matvec(G, f)
    S = _matmul(G, S)
    if not discharge:
        S = _matmul(S, Hi)
    return replace(sys, drift=[simplify(e) for e in f], noise=[[simplify(e) for e in r] for r in S])
