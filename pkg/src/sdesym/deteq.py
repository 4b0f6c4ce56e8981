"""Determining equations for Lie-point symmetries of Ito and Stratonovich SDEs.

Residuals are the left-minus-right sides of the determining equations, kept
with their denominators; the random-point zero test decides whether they
vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .expr import (
    Const, HALF, ZERO, SampleSpec, add, differentiate, evaluate_batch, is_zero, mul,
    simplify, valid_points,
)
from .model import ITO, SdeSystem, SymbolMismatch, VectorField, classify


class CalculusMismatch(ValueError):
    pass


def _d(e, v):
    return differentiate(e, v)


def ito_laplacian(e, sys: SdeSystem):
    if sys.calculus != ITO:
        raise CalculusMismatch("the Ito Laplacian needs an Ito system")
    xs, ws = sys.symbols.dynamical, sys.symbols.noises
    terms = []
    for k, w in enumerate(ws):
        ew = _d(e, w)
        terms.append(_d(ew, w))
        for i, x in enumerate(xs):
            terms.append(mul(2, sys.noise[i][k], _d(ew, x)))
    for i, xi in enumerate(xs):
        ex = _d(e, xi)
        for j, xj in enumerate(xs):
            s = add(*(mul(sys.noise[i][k], sys.noise[j][k]) for k in range(len(ws))))
            if s != ZERO:
                terms.append(mul(s, _d(ex, xj)))
    return add(*terms)


@dataclass(frozen=True)
class ResidualSet:
    drift: tuple
    noise: tuple  # n x m
    calculus: str
    dim: str  # "scalar" | "n-dim"

    def items(self):
        """(label, expression) pairs in a fixed order."""
        out = [(f"drift[{i}]", e) for i, e in enumerate(self.drift)]
        for i, row in enumerate(self.noise):
            out += [(f"noise[{i}][{k}]", e) for k, e in enumerate(row)]
        return out


def _check_shared(sys, X):
    a, b = sys.symbols, X.symbols
    if a.dynamical != b.dynamical or a.noises != b.noises or a.time != b.time:
        raise SymbolMismatch("system and field use different variables")


def build_residuals_scalar(sys: SdeSystem, X: VectorField, canonical=True) -> ResidualSet:
    """Scalar determining equations, R form or general xi form."""
    _check_shared(sys, X)
    if sys.n != 1 or sys.m != 1:
        raise ValueError("scalar builder needs one variable and one noise")
    x, t, w = sys.symbols.dynamical[0], sys.symbols.time, sys.symbols.noises[0]
    f, s = sys.drift[0], sys.noise[0][0]
    phi = X.phi[0]
    xi = X.w_components()[0]
    ito = sys.calculus == ITO
    drift = [_d(phi, t), mul(f, _d(phi, x)), mul(-1, phi, _d(f, x)), mul(-1, xi, _d(f, w))]
    if ito:
        drift.append(mul(HALF, ito_laplacian(phi, sys)))
        a_terms = [mul(s, f, _d(xi, x)), mul(s, _d(xi, t)), mul(HALF, s, ito_laplacian(xi, sys))]
    else:
        a_terms = [mul(s, _d(xi, t)), mul(s, f, _d(xi, x))]
    drift.append(mul(-1, add(*a_terms)))
    noise = [
        _d(phi, w), mul(s, _d(phi, x)), mul(-1, phi, _d(s, x)),
        mul(-1, s, _d(xi, w)), mul(-1, xi, _d(s, w)), mul(-1, s, s, _d(xi, x)),
    ]
    dr, nr = add(*drift), add(*noise)
    if canonical:
        dr, nr = simplify(dr), simplify(nr)
    return ResidualSet((dr,), ((nr,),), sys.calculus, "scalar")


def build_residuals_ndim(sys: SdeSystem, X: VectorField, canonical=True) -> ResidualSet:
    """n-dimensional determining equations for a constant noise action R."""
    _check_shared(sys, X)
    if X.general:
        raise NotImplementedError("general noise actions are supported for scalar systems only")
    xs, t, ws = sys.symbols.dynamical, sys.symbols.time, sys.symbols.noises
    n, m = sys.n, sys.m
    R = X.R
    Rw = X.w_components()  # (R w)^j
    ito = sys.calculus == ITO
    drift = []
    for i in range(n):
        fi, phii = sys.drift[i], X.phi[i]
        terms = [_d(phii, t)]
        for j in range(n):
            terms.append(mul(sys.drift[j], _d(phii, xs[j])))
            terms.append(mul(-1, X.phi[j], _d(fi, xs[j])))
        if ito:
            terms.append(mul(HALF, ito_laplacian(phii, sys)))
        for j in range(m):
            terms.append(mul(-1, Rw[j], _d(fi, ws[j])))
        drift.append(add(*terms))
    noise = []
    for i in range(n):
        row = []
        for k in range(m):
            sik = sys.noise[i][k]
            terms = [_d(X.phi[i], ws[k])]
            for j in range(n):
                terms.append(mul(sys.noise[j][k], _d(X.phi[i], xs[j])))
                terms.append(mul(-1, X.phi[j], _d(sik, xs[j])))
            for j in range(m):
                if R[j][k] != 0:
                    terms.append(mul(-R[j][k], sys.noise[i][j]))
                terms.append(mul(-1, Rw[j], _d(sik, ws[j])))
            row.append(add(*terms))
        noise.append(row)
    if canonical:
        drift = [simplify(e) for e in drift]
        noise = [[simplify(e) for e in r] for r in noise]
    return ResidualSet(tuple(drift), tuple(tuple(r) for r in noise), sys.calculus, "n-dim")


def build_residuals(sys: SdeSystem, X: VectorField, canonical=True) -> ResidualSet:
    if X.general or (sys.n == 1 and sys.m == 1):
        return build_residuals_scalar(sys, X, canonical)
    return build_residuals_ndim(sys, X, canonical)


@dataclass(frozen=True)
class ResidualStatus:
    label: str
    residual: object
    passed: bool
    witness: Optional[dict] = None
    value: Optional[float] = None


@dataclass(frozen=True)
class SymmetryReport:
    verdict: str  # "symmetry" | "not-symmetry"
    statuses: tuple
    symmetry_class: str
    calculus: str

    @property
    def is_symmetry(self) -> bool:
        return self.verdict == "symmetry"

    def __bool__(self):
        return self.is_symmetry

    def failing(self):
        return [s for s in self.statuses if not s.passed]

    def residual(self, label):
        for s in self.statuses:
            if s.label == label:
                return s.residual
        raise KeyError(label)

    def to_dict(self):
        from .expr import render

        return {
            "verdict": self.verdict,
            "class": self.symmetry_class,
            "calculus": self.calculus,
            "residuals": [
                {
                    "label": s.label,
                    "expr": render(s.residual),
                    "pass": s.passed,
                    "witness": s.witness,
                    "value": s.value,
                }
                for s in self.statuses
            ],
        }


def check_symmetry(sys: SdeSystem, X: VectorField, spec: SampleSpec = None) -> SymmetryReport:
    spec = spec or SampleSpec()
    rs = build_residuals(sys, X)
    statuses = []
    for label, e in rs.items():
        z = is_zero(e, spec, sys.symbols)
        statuses.append(ResidualStatus(label, e, z.result, z.witness, z.residual))
    ok = all(s.passed for s in statuses)
    return SymmetryReport("symmetry" if ok else "not-symmetry", tuple(statuses), classify(X), sys.calculus)


# --------------------------------------------------------------------------
# ansatz search
# --------------------------------------------------------------------------


def _rationalize(v: float) -> Fraction:
    fr = Fraction(v).limit_denominator(1000)
    if abs(float(fr) - v) <= 1e-7 * max(1.0, abs(v)):
        return fr
    return Fraction(v).limit_denominator(10**6)


def find_symmetries_ansatz(sys: SdeSystem, basis, R=None, spec: SampleSpec = None, tol: float = 1e-8):
    """Symmetries phi^i = sum_a c_ia B_ia with a fixed noise action R.

    ``basis`` is either one list of expressions shared by every component or
    a list of lists (one per dynamical variable).  Returns verified fields.
    """
    spec = spec or SampleSpec()
    n, m = sys.n, sys.m
    if basis and not isinstance(basis[0], (list, tuple)):
        basis = [list(basis) for _ in range(n)]
    if len(basis) != n:
        raise ValueError("need one basis list per dynamical variable")
    R = R if R is not None else [[0] * m for _ in range(m)]
    symbols = sys.symbols
    unknowns = [(i, B) for i in range(n) for B in basis[i]]
    if not unknowns:
        return []

    def field(phi, RR):
        return VectorField(symbols, phi, R=RR)

    zero_R = [[0] * m for _ in range(m)]
    columns = []
    for i, B in unknowns:
        phi = [ZERO] * n
        phi[i] = B
        columns.append([e for _, e in build_residuals(sys, field(phi, zero_R), canonical=False).items()])
    r0 = [e for _, e in build_residuals(sys, field([ZERO] * n, R), canonical=False).items()]
    npts = max(spec.points, 3 * (len(unknowns) + 1))
    all_exprs = [e for col in columns for e in col] + r0
    pts_spec = SampleSpec(npts, spec.domains, spec.time_domain, spec.eps_sing, spec.eps_zero, spec.seed)
    env = valid_points(all_exprs, pts_spec, symbols, names=set(symbols.names()))

    def values(exprs):
        return np.concatenate([evaluate_batch(e, env, spec.eps_sing, size=npts)[0] for e in exprs])

    L = np.column_stack([values(col) for col in columns] + [values(r0)])
    # row scaling keeps large-magnitude points from dominating
    scale = np.maximum(np.abs(L).max(axis=1, keepdims=True), 1e-300)
    L = L / scale
    _, sv, vt = np.linalg.svd(L)
    if sv.size == 0:
        return []
    thresh = tol * sv[0]
    rank = int((sv > thresh).sum())
    null = vt[rank:].T  # columns span the nullspace
    if null.shape[1] == 0:
        return []
    # reduced row echelon form of the nullspace basis (as rows)
    N = null.T.copy()
    rows, cols = N.shape
    pivots = []
    r = 0
    # pivot on the inhomogeneous column first so at most one vector carries R
    order = [cols - 1] + list(range(cols - 1))
    for c in order:
        if r >= rows:
            break
        p = r + int(np.argmax(np.abs(N[r:, c])))
        if abs(N[p, c]) < 1e-9:
            continue
        N[[r, p]] = N[[p, r]]
        N[r] /= N[r, c]
        for q in range(rows):
            if q != r:
                N[q] -= N[q, c] * N[r]
        pivots.append(c)
        r += 1
    out = []
    for k in range(r):
        vec = N[k]
        s = vec[-1]
        RR = R if abs(s) > 1e-9 else zero_R
        if abs(s) > 1e-9:
            vec = vec / s
        coeffs = [_rationalize(v) if abs(v) > 1e-9 else Fraction(0) for v in vec[:-1]]
        if all(c == 0 for c in coeffs) and RR is zero_R:
            continue
        phi = [ZERO] * n
        for (i, B), c in zip(unknowns, coeffs):
            if c != 0:
                phi[i] = add(phi[i], mul(Const(c), B))
        X = VectorField(symbols, [simplify(p) for p in phi], R=RR, name=f"S{len(out)}")
        if all(p == ZERO for p in X.phi) and X.standard:
            continue
        if check_symmetry(sys, X, spec).is_symmetry:
            out.append(X)
    return out
