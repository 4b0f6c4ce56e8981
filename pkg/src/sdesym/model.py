"""SDE systems, symmetry generators and the on-disk model format."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .expr import (
    Const, ZERO, Param, ParseError, SymbolTable, UnknownIdentifierError,
    add, differentiate, free_symbols, mul, parse, render, simplify, substitute,
)
from .expr.core import FUNCTIONS, Sym

ITO = "ito"
STRATONOVICH = "stratonovich"


class ModelError(ValueError):
    """Problem in a model file; carries the 1-based line number when known."""

    def __init__(self, message, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class ShapeError(ModelError):
    pass


class SymbolMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SdeSystem:
    symbols: SymbolTable
    drift: tuple
    noise: tuple  # rows = dynamical variables, columns = noise variables
    calculus: str = ITO

    def __post_init__(self):
        object.__setattr__(self, "drift", tuple(self.drift))
        object.__setattr__(self, "noise", tuple(tuple(r) for r in self.noise))
        if self.calculus not in (ITO, STRATONOVICH):
            raise ValueError(f"unknown calculus {self.calculus!r}")
        n, m = self.symbols.n, self.symbols.m
        if len(self.drift) != n:
            raise ShapeError(f"drift has {len(self.drift)} entries for {n} variables")
        if len(self.noise) != n or any(len(r) != m for r in self.noise):
            raise ShapeError(f"noise matrix must be {n}x{m}")

    @property
    def n(self):
        return self.symbols.n

    @property
    def m(self):
        return self.symbols.m

    @property
    def proper(self) -> bool:
        noises = set(self.symbols.noises)
        for e in self.entries():
            if free_symbols(e) & noises:
                return False
        return True

    def entries(self):
        yield from self.drift
        for row in self.noise:
            yield from row

    def map(self, fn) -> "SdeSystem":
        return replace(self, drift=[fn(e) for e in self.drift], noise=[[fn(e) for e in r] for r in self.noise])


@dataclass(frozen=True)
class VectorField:
    """X = phi^i d/dx^i + (R w)^k d/dw^k, or with general w-components xi^k."""

    symbols: SymbolTable
    phi: tuple
    R: Optional[tuple] = None  # m x m rational matrix
    xi: Optional[tuple] = None  # general w-components
    name: str = "X"

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(self.phi))
        n, m = self.symbols.n, self.symbols.m
        if len(self.phi) != n:
            raise ShapeError(f"field {self.name}: phi has {len(self.phi)} entries for {n} variables")
        if self.xi is not None and self.R is not None:
            raise ValueError("give either R or xi, not both")
        if self.xi is None:
            R = self.R if self.R is not None else [[0] * m for _ in range(m)]
            R = tuple(tuple(Fraction(c) for c in row) for row in R)
            if len(R) != m or any(len(r) != m for r in R):
                raise ShapeError(f"field {self.name}: R must be {m}x{m}")
            object.__setattr__(self, "R", R)
        else:
            object.__setattr__(self, "xi", tuple(self.xi))
            if len(self.xi) != m:
                raise ShapeError(f"field {self.name}: xi must have {m} entries")

    @property
    def general(self) -> bool:
        return self.xi is not None

    @property
    def standard(self) -> bool:
        if self.general:
            return all(x == ZERO for x in self.xi)
        return all(c == 0 for row in self.R for c in row)

    def w_components(self) -> tuple:
        """xi^k, with the R form promoted to R^k_l w^l."""
        if self.general:
            return self.xi
        ws = [Sym(w) for w in self.symbols.noises]
        return tuple(add(*(mul(Const(c), ws[l]) for l, c in enumerate(row))) for row in self.R)

    def apply(self, g):
        """Derivative of g along the field."""
        terms = [mul(p, differentiate(g, v)) for p, v in zip(self.phi, self.symbols.dynamical)]
        terms += [mul(x, differentiate(g, w)) for x, w in zip(self.w_components(), self.symbols.noises)]
        return add(*terms)


SYMMETRY_CLASSES = ("deterministic-standard", "random-standard", "split-W", "general-W")


def classify(X: VectorField) -> str:
    noises = set(X.symbols.noises)
    random = any(free_symbols(p) & noises for p in X.phi)
    if X.standard:
        return "random-standard" if random else "deterministic-standard"
    return "general-W" if random else "split-W"


def conformality_warnings(X: VectorField) -> list:
    """R outside the rotation+dilation algebra is allowed but worth flagging."""
    if X.general or X.R is None:
        return []
    R = X.R
    m = len(R)
    d = R[0][0] if m else 0
    ok = all(R[i][i] == d for i in range(m)) and all(
        R[i][j] == -R[j][i] for i in range(m) for j in range(m) if i != j
    )
    if ok:
        return []
    return [f"field {X.name}: R is not of the form c*I + antisymmetric"]


def _demote(symbols, xi):
    """Return an R matrix if every xi^k is exactly linear in w with rational coefficients."""
    ws = symbols.noises
    R = []
    for x in xi:
        row = []
        rest = x
        for w in ws:
            c = simplify(differentiate(x, w))
            if not isinstance(c, Const):
                return None
            row.append(c.value)
            rest = add(rest, mul(Const(-c.value), Sym(w)))
        if simplify(rest) != ZERO:
            return None
        R.append(row)
    return R


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    if X.symbols.dynamical != Y.symbols.dynamical or X.symbols.noises != Y.symbols.noises:
        raise SymbolMismatch("fields live on different variables")
    phi = [simplify(add(X.apply(b), mul(-1, Y.apply(a)))) for a, b in zip(X.phi, Y.phi)]
    xi = [simplify(add(X.apply(b), mul(-1, Y.apply(a)))) for a, b in zip(X.w_components(), Y.w_components())]
    name = f"[{X.name},{Y.name}]"
    R = _demote(X.symbols, xi)
    if R is not None:
        return VectorField(X.symbols, phi, R=R, name=name)
    return VectorField(X.symbols, phi, xi=xi, name=name)


def restrict_field(X: VectorField, symbols: SymbolTable, keep: list) -> VectorField:
    idx = [X.symbols.dynamical.index(v) for v in keep]
    if X.general:
        return VectorField(symbols, [X.phi[i] for i in idx], xi=X.xi, name=X.name)
    return VectorField(symbols, [X.phi[i] for i in idx], R=X.R, name=X.name)


# --------------------------------------------------------------------------
# model files
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SubstitutionSpec:
    """Unvalidated [substitution] section; see transform.make_substitution."""

    name: str
    forward: tuple  # ((new name, expr), ...)
    inverse: tuple  # ((old name, expr), ...)


@dataclass
class Model:
    system: SdeSystem
    fields: dict = field(default_factory=dict)
    substitutions: dict = field(default_factory=dict)

    def __iter__(self):
        # allows `system, fields = load_model(text)`
        yield self.system
        yield self.fields

    def field(self, name: str) -> VectorField:
        try:
            return self.fields[name]
        except KeyError:
            known = ", ".join(self.fields) or "none"
            raise KeyError(f"no field {name!r} (available: {known})") from None


_SECTION = re.compile(r"^\[\s*(system|field|substitution)(?:\s+([^\]\s]+))?\s*\]$")
_RANGE = re.compile(r"^range\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)$")


def _number(text, line):
    try:
        e = parse(text, symbols=())
    except (ParseError, UnknownIdentifierError) as exc:
        raise ModelError(f"bad number {text!r}: {exc}", line) from None
    if not isinstance(e, Const):
        raise ModelError(f"not a rational number: {text!r}", line)
    return e.value


def _names(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def load_model(text: str, overrides: Optional[dict] = None) -> Model:
    """Parse a model file.

    ``overrides`` maps parameter names to values (fixing or re-fixing them),
    as done by the CLI's ``--set``.  Fixed parameters are substituted into
    every expression.
    """
    sections = []
    cur = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            kind, name = m.group(1), m.group(2)
            if kind != "system" and not name:
                raise ModelError(f"[{kind}] needs a name", lineno)
            cur = (kind, name, [], lineno)
            sections.append(cur)
            continue
        if line.startswith("["):
            raise ModelError(f"unknown section header {line!r}", lineno)
        if cur is None:
            raise ModelError("content before the first section", lineno)
        if "=" not in line:
            raise ModelError(f"expected 'key = value', got {line!r}", lineno)
        key, value = line.split("=", 1)
        cur[2].append((key.strip(), value.strip(), lineno))

    systems = [s for s in sections if s[0] == "system"]
    if len(systems) != 1:
        raise ModelError(f"expected exactly one [system] section, found {len(systems)}")
    _, _, entries, sys_line = systems[0]

    dyn, time, noises, calculus = None, "t", None, ITO
    params = {}
    domains = {}
    coeff_lines = []
    for key, value, ln in entries:
        if key == "vars":
            dyn = _names(value)
        elif key == "time":
            time = value
        elif key == "noises":
            noises = _names(value)
        elif key == "calculus":
            if value.lower() not in (ITO, STRATONOVICH):
                raise ModelError(f"calculus must be ito or stratonovich, got {value!r}", ln)
            calculus = value.lower()
        elif key.startswith("param ") or key.startswith("domain "):
            kind, pname = key.split(None, 1)
            pname = pname.strip()
            rm = _RANGE.match(value)
            if kind == "domain":
                if not rm:
                    raise ModelError("domain needs range(lo, hi)", ln)
                domains[pname] = (float(_number(rm.group(1), ln)), float(_number(rm.group(2), ln)))
            elif rm:
                params[pname] = (float(_number(rm.group(1), ln)), float(_number(rm.group(2), ln)), None, ln)
            else:
                params[pname] = (None, None, _number(value, ln), ln)
        elif key.split(".")[0] in ("f", "b", "sigma"):
            coeff_lines.append((key, value, ln))
        else:
            raise ModelError(f"unknown key {key!r} in [system]", ln)
    if not dyn:
        raise ModelError("[system] must declare vars", sys_line)
    if not noises:
        raise ModelError("[system] must declare noises", sys_line)

    for name, val in (overrides or {}).items():
        if name not in params:
            raise ModelError(f"--set names unknown parameter {name!r}")
        lo, hi, _, ln = params[name]
        params[name] = (lo, hi, Fraction(val), ln)

    plist = []
    for name, (lo, hi, val, ln) in params.items():
        if val is not None and lo is None:
            lo, hi = (0.2, 2.0) if 0.2 <= val <= 2.0 else (float(val) - 1.0, float(val) + 1.0)
        elif val is not None and not lo <= val <= hi:
            lo, hi = min(lo, float(val) - 1.0), max(hi, float(val) + 1.0)
        try:
            plist.append(Param(name, lo, hi, val))
        except ValueError as exc:
            raise ModelError(str(exc), ln) from None
    for name in dyn + noises + [time] + list(params):
        if name in FUNCTIONS:
            raise ModelError(f"{name!r} is a reserved function name", sys_line)
    unknown_dom = set(domains) - set(dyn + noises + [time])
    if unknown_dom:
        raise ModelError(f"domain given for unknown variable(s) {sorted(unknown_dom)}", sys_line)
    try:
        symbols = SymbolTable(dyn, time, noises, tuple(plist), tuple(domains.items()))
    except ValueError as exc:
        raise ModelError(str(exc), sys_line) from None

    fixed = {p.name: Const(p.value) for p in plist if p.value is not None}
    names = symbols.names()

    def expr(text, ln):
        try:
            e = parse(text, names)
        except UnknownIdentifierError as exc:
            raise ModelError(f"unknown symbol {exc.name!r}", ln) from None
        except ParseError as exc:
            raise ModelError(f"syntax error: {exc}", ln) from None
        return substitute(e, fixed) if fixed else e

    drift = {}
    noise = {}
    for key, value, ln in coeff_lines:
        parts = key.split(".")
        if parts[0] in ("f", "b"):
            if len(parts) != 2 or parts[1] not in dyn:
                raise ModelError(f"bad drift key {key!r}", ln)
            drift[parts[1]] = expr(value, ln)
        else:
            if len(parts) != 3 or parts[1] not in dyn or parts[2] not in noises:
                raise ModelError(f"bad noise key {key!r}", ln)
            noise[(parts[1], parts[2])] = expr(value, ln)
    missing = [v for v in dyn if v not in drift]
    if missing:
        raise ShapeError(f"{len(dyn)} variables but no drift line for {', '.join(missing)}", sys_line)
    system = SdeSystem(
        symbols,
        [drift[v] for v in dyn],
        [[noise.get((v, w), ZERO) for w in noises] for v in dyn],
        calculus,
    )

    fields = {}
    subs = {}
    for kind, name, entries, ln0 in sections:
        if kind == "field":
            if name in fields:
                raise ModelError(f"duplicate field {name!r}", ln0)
            phi = {}
            R = {}
            xi = {}
            for key, value, ln in entries:
                parts = key.split(".")
                if parts[0] == "phi" and len(parts) == 2:
                    if parts[1] == time:
                        raise ModelError("fields acting on time are not supported", ln)
                    if parts[1] not in dyn:
                        raise ModelError(f"phi for unknown variable {parts[1]!r}", ln)
                    phi[parts[1]] = expr(value, ln)
                elif parts[0] == "R" and len(parts) == 3:
                    if parts[1] not in noises or parts[2] not in noises:
                        raise ModelError(f"bad R key {key!r}", ln)
                    R[(parts[1], parts[2])] = _number(value, ln)
                elif parts[0] == "xi" and len(parts) == 2:
                    if parts[1] not in noises:
                        raise ModelError(f"xi for unknown noise {parts[1]!r}", ln)
                    xi[parts[1]] = expr(value, ln)
                else:
                    raise ModelError(f"unknown key {key!r} in [field {name}]", ln)
            if R and xi:
                raise ModelError(f"field {name}: use R or xi, not both", ln0)
            args = dict(symbols=symbols, phi=[phi.get(v, ZERO) for v in dyn], name=name)
            if xi:
                fields[name] = VectorField(xi=[xi.get(w, ZERO) for w in noises], **args)
            else:
                fields[name] = VectorField(R=[[R.get((a, b), 0) for b in noises] for a in noises], **args)
        elif kind == "substitution":
            fwd, inv = [], []
            new_names = [k.split(".", 1)[1] for k, _, _ in entries if k.startswith("forward.")]
            for key, value, ln in entries:
                head, _, var = key.partition(".")
                if head == "forward":
                    if var in noises or var == time:
                        raise ModelError(
                            "substitutions changing t or the noise are not handled: the transformed "
                            "equation would not be an Ito equation of either kind", ln)
                    fwd.append((var, expr(value, ln)))
                elif head == "inverse":
                    if var not in dyn:
                        raise ModelError(f"inverse for unknown variable {var!r}", ln)
                    try:
                        e = parse(value, names + new_names)
                    except UnknownIdentifierError as exc:
                        raise ModelError(f"unknown symbol {exc.name!r}", ln) from None
                    except ParseError as exc:
                        raise ModelError(f"syntax error: {exc}", ln) from None
                    inv.append((var, substitute(e, fixed) if fixed else e))
                else:
                    raise ModelError(f"unknown key {key!r} in [substitution {name}]", ln)
            subs[name] = SubstitutionSpec(name, tuple(fwd), tuple(inv))
    return Model(system, fields, subs)


def load_model_file(path, overrides=None) -> Model:
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read(), overrides)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def render_model(model, fields=None) -> str:
    """Model -> text accepted by load_model."""
    if isinstance(model, SdeSystem):
        model = Model(model, dict(fields or {}))
    sys = model.system
    s = sys.symbols
    out = ["[system]"]
    out.append(f"vars = {', '.join(s.dynamical)}")
    out.append(f"time = {s.time}")
    out.append(f"noises = {', '.join(s.noises)}")
    out.append(f"calculus = {sys.calculus}")
    for p in s.params:
        if p.value is not None:
            out.append(f"param {p.name} = {p.value}")
        else:
            out.append(f"param {p.name} = range({_fmt_float(p.lo)}, {_fmt_float(p.hi)})")
    for name, (lo, hi) in s.domains:
        out.append(f"domain {name} = range({_fmt_float(lo)}, {_fmt_float(hi)})")
    key = "f" if sys.calculus == ITO else "b"
    for v, e in zip(s.dynamical, sys.drift):
        out.append(f"{key}.{v} = {render(e)}")
    for v, row in zip(s.dynamical, sys.noise):
        for w, e in zip(s.noises, row):
            if e != ZERO:
                out.append(f"sigma.{v}.{w} = {render(e)}")
    for name, X in model.fields.items():
        out.append("")
        out.append(f"[field {name}]")
        for v, p in zip(s.dynamical, X.phi):
            if p != ZERO:
                out.append(f"phi.{v} = {render(p)}")
        if X.general:
            for w, x in zip(s.noises, X.xi):
                if x != ZERO:
                    out.append(f"xi.{w} = {render(x)}")
        else:
            for a, row in zip(s.noises, X.R):
                for b, c in zip(s.noises, row):
                    if c != 0:
                        out.append(f"R.{a}.{b} = {c}")
    for name, sub in model.substitutions.items():
        out.append("")
        out.append(f"[substitution {name}]")
        for v, e in sub.forward:
            out.append(f"forward.{v} = {render(e)}")
        for v, e in sub.inverse:
            out.append(f"inverse.{v} = {render(e)}")
    return "\n".join(out) + "\n"
