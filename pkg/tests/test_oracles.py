"""Engine vs the sympy oracle in tests/oracle.py."""

import numpy as np
import pytest
import sympy as sp

from oracle import (
    ito_transform, numerically_zero, read_model, residuals, scalar_general_residuals,
    stratonovich_drift, system,
)
from sdesym.convert import to_stratonovich
from sdesym.deteq import check_symmetry
from sdesym.expr import evaluate
from sdesym.model import load_model_file
from sdesym.runner import CORPUS_DIR
from sdesym.transform import change_of_vars, kozlov, modified_kozlov, substitution_from_spec

MODELS = sorted(CORPUS_DIR.glob("*.sde"))


def _engine_vs_oracle(engine_exprs, oracle_exprs, forward, model, seed=3, points=24):
    """Evaluate engine expressions (in new variables) at y = forward(x) and
    oracle expressions directly at x."""
    xs, t, ws, _, _ = system(model)
    free = {s for e in list(oracle_exprs) + list(forward.values()) for s in e.free_symbols}
    params = sorted(free - set(xs) - set(ws) - {t}, key=str)
    rng = np.random.default_rng(seed)
    fwd = {k: sp.lambdify(xs + [t] + ws + params, v) for k, v in forward.items()}
    ora = [sp.lambdify(xs + [t] + ws + params, e) for e in oracle_exprs]
    done = 0
    for _ in range(points * 20):
        vals = [rng.uniform(0.2, 2.0) for _ in xs + [t] + ws + params]
        point = {str(s): v for s, v in zip(xs + [t] + ws + params, vals)}
        try:
            for k, fn in fwd.items():
                point[k] = float(fn(*vals))
            got = [evaluate(e, point) for e in engine_exprs]
            want = [float(fn(*vals)) for fn in ora]
        except (ArithmeticError, ValueError, TypeError):
            continue
        for g, w in zip(got, want):
            assert abs(g - w) <= 1e-8 * (1 + abs(w)), (g, w, point)
        done += 1
        if done >= points:
            return
    raise AssertionError("no admissible points")


def _subs_cases():
    out = []
    for p in MODELS:
        for name in read_model(p)["subs"]:
            out.append(pytest.param(p, name, id=f"{p.stem}-{name}"))
    return out


@pytest.mark.parametrize("path,name", _subs_cases())
def test_change_of_variables_matches_oracle(path, name):
    model = read_model(path)
    m = load_model_file(path)
    sub = substitution_from_spec(m.system.symbols, m.substitutions[name])
    new = change_of_vars(m.system, sub)
    xs, t, ws, f, S = system(model)
    fw = model["subs"][name]["forward"]
    # oracle coefficients in the old variables: no inverse needed
    drift, noise = ito_transform(xs, t, ws, f, S, fw, {})
    engine = list(new.drift) + [e for row in new.noise for e in row]
    oracle = drift + [e for row in noise for e in row]
    _engine_vs_oracle(engine, oracle, fw, model)


@pytest.mark.parametrize("stem,field,modified", [
    ("ex1", "X", False), ("ex2", "X", False), ("ex5", "X0", False),
    ("ex6", "X", True), ("ex7", "X", True),
])
def test_kozlov_output_matches_oracle(stem, field, modified):
    path = CORPUS_DIR / f"{stem}.sde"
    model = read_model(path)
    m = load_model_file(path)
    res = (modified_kozlov if modified else kozlov)(m.system, m.field(field))
    xs, t, ws, f, S = system(model)
    (y, psi), = res.substitution.forward
    from oracle import _sym
    from sdesym.expr import render

    fw = {y: _sym(render(psi))}
    phi = model["fields"][field]["phi"][(model["vars"][0],)]
    R = model["fields"][field]["R"].get((model["noises"][0], model["noises"][0]), 0)
    # the map itself: d psi/dx = 1/phi, or r psi/phi for the modified map
    dpsi = sp.diff(fw[y], xs[0])
    target = R * fw[y] / phi if modified else 1 / phi
    assert numerically_zero([dpsi - target])
    drift, noise = ito_transform(xs, t, ws, f, S, fw, {})
    _engine_vs_oracle(list(res.system.drift) + [res.system.noise[0][0]], drift + [noise[0][0]], fw, model)


def _field_cases():
    out = []
    for p in MODELS:
        for name in read_model(p)["fields"]:
            out.append(pytest.param(p, name, id=f"{p.stem}-{name}"))
    return out


def _oracle_verdict(model, name, ito=True):
    xs, t, ws, f, S = system(model)
    if not ito:
        f = stratonovich_drift(xs, ws, f, S)
    F = model["fields"][name]
    phi = [F["phi"].get((v,), sp.Integer(0)) for v in model["vars"]]
    if F["xi"]:
        xi = F["xi"][(model["noises"][0],)]
        res = scalar_general_residuals(xs[0], t, ws[0], f[0], S[0][0], phi[0], xi, ito)
    else:
        RR = [[F["R"].get((a, b), 0) for b in model["noises"]] for a in model["noises"]]
        Rw = [sum(RR[j][k] * ws[k] for k in range(len(ws))) for j in range(len(ws))]
        res = residuals(xs, t, ws, f, S, phi, Rw, RR, ito)
    doms = {"eta": (-1.5, 0.7), "zeta": (0.1, 3.0), "alpha": (1.2, 2.0)}
    return numerically_zero([sp.expand(r) for r in res], domains=doms)


@pytest.mark.parametrize("path,name", _field_cases())
def test_ito_verdicts_match_oracle(path, name):
    model = read_model(path)
    m = load_model_file(path)
    assert check_symmetry(m.system, m.field(name)).is_symmetry == _oracle_verdict(model, name)


@pytest.mark.parametrize("path,name", _field_cases())
def test_stratonovich_verdicts_match_oracle(path, name):
    model = read_model(path)
    m = load_model_file(path)
    got = check_symmetry(to_stratonovich(m.system), m.field(name)).is_symmetry
    assert got == _oracle_verdict(model, name, ito=False)


def _post_cases():
    out = []
    for p in MODELS:
        model = read_model(p)
        for sub in model["subs"]:
            for name in model["fields"]:
                out.append(pytest.param(p, sub, name, id=f"{p.stem}-{sub}-{name}"))
    return out


@pytest.mark.parametrize("path,subname,name", _post_cases())
def test_post_transform_verdicts_match_oracle(path, subname, name):
    from sdesym.transform import post_transform_check

    model = read_model(path)
    xs, t, ws, f, S = system(model)
    sub = model["subs"][subname]
    drift, noise = ito_transform(xs, t, ws, f, S, sub["forward"], sub["inverse"])
    ys = [sp.Symbol(k) for k in sub["forward"]]
    F = model["fields"][name]
    phi_old = [F["phi"].get((v,), sp.Integer(0)) for v in model["vars"]]
    RR = [[F["R"].get((a, b), 0) for b in model["noises"]] for a in model["noises"]]
    Rw = [sum(RR[j][k] * ws[k] for k in range(len(ws))) for j in range(len(ws))]
    back = {sp.Symbol(k): v for k, v in sub["inverse"].items()}
    # X(psi) includes the noise action on w-dependent maps
    phi_new = []
    for psi in sub["forward"].values():
        e = sum(p * sp.diff(psi, x) for p, x in zip(phi_old, xs)) + sum(r * sp.diff(psi, w) for r, w in zip(Rw, ws))
        phi_new.append(e.subs(back, simultaneous=True))
    res = residuals(ys, t, ws, drift, noise, phi_new, Rw, RR)
    doms = {"eta": (-1.5, 0.7), "zeta": (0.1, 3.0), "xi": (0.05, 1.0), "theta": (0.2, 2.0)}
    want = numerically_zero([sp.expand(r) for r in res], domains=doms)
    m = load_model_file(path)
    spec_sub = substitution_from_spec(m.system.symbols, m.substitutions[subname])
    got = post_transform_check(m.system, m.field(name), spec_sub).is_symmetry
    assert got == want
