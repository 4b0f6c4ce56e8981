"""Unit tests for deteq, convert and transform."""

import pytest

from sdesym.convert import (
    GeneralizedInputError, GroupElement, apply_group_element, convert, normalize_noise,
    persistence_condition, to_ito, to_stratonovich,
)
from sdesym.deteq import build_residuals, check_symmetry, find_symmetries_ansatz
from sdesym.expr import add, is_zero, mul, parse
from sdesym.model import VectorField, load_model, load_model_file
from sdesym.runner import CORPUS_DIR
from sdesym.transform import (
    NotIntegrable, NotSplitW, change_of_vars, characteristic_chi, invert_scalar, kozlov, make_substitution,
    modified_kozlov, post_transform_check, restrict_system,
)


def _m(name):
    return load_model_file(CORPUS_DIR / f"{name}.sde")


def _same(a, b, symbols):
    return bool(is_zero(add(a, mul(-1, b)), None, symbols))


# deteq

def test_report_shape():
    m = _m("ex5")
    rep = check_symmetry(m.system, m.field("X1"))
    assert rep.is_symmetry and rep.verdict == "symmetry"
    d = rep.to_dict()
    assert d["verdict"] == "symmetry" and d["calculus"] == "ito"
    assert len(rep.statuses) == 2


def test_non_symmetry_reports_witness():
    m = _m("ex6")
    s = to_stratonovich(m.system)
    rep = check_symmetry(s, m.field("X"))
    assert not rep.is_symmetry
    bad = rep.failing()
    assert bad and bad[0].witness is not None


def test_residual_count_matches_shape():
    m = _m("c5")
    assert len(list(build_residuals(m.system, m.field("X")).items())) == 2 * (1 + 2)


def test_ansatz_recovers_linear_symmetry():
    m = _m("ex5")
    found = find_symmetries_ansatz(m.system, [parse("x")], R=[[1]])
    assert len(found) == 1
    assert _same(found[0].phi[0], parse("x"), m.system.symbols)


# convert

def test_stratonovich_drift_of_geometric_noise():
    m = load_model("[system]\nvars = x\nnoises = w\nparam a = range(0.2, 2)\nparam b = range(0.2, 2)\n"
                   "f.x = a*x\nsigma.x.w = b*x\n")
    s = to_stratonovich(m.system)
    assert s.calculus == "stratonovich"
    assert _same(s.drift[0], parse("a*x - b^2*x/2"), s.symbols)
    assert to_ito(s).calculus == "ito"


def test_convert_is_noop_on_same_calculus():
    s = _m("ex1").system
    assert convert(s, "ito") is s


def test_persistence_condition_values():
    m = _m("ex6")
    cond = persistence_condition(m.system, m.field("X"))
    assert not is_zero(cond, None, m.system.symbols)
    m = _m("ex5")
    assert is_zero(persistence_condition(m.system, m.field("X1")), None, m.system.symbols)


def test_normalize_noise_gives_unit_noise():
    s, sub = normalize_noise(_m("ex1").system)
    assert _same(s.noise[0][0], parse("1"), s.symbols)


def test_normalize_noise_rejects_generalized():
    m = load_model("[system]\nvars = x\nnoises = w\nf.x = 0\nsigma.x.w = x*w\n")
    with pytest.raises(GeneralizedInputError):
        normalize_noise(m.system)


def test_dilation_preserves_ex12():
    m = _m("ex12")
    g = GroupElement.dilation("lambda", {"x": 2, "w": 1})
    out = apply_group_element(m.system, g, discharge=False)
    for a, b in zip(out.entries(), m.system.entries()):
        assert _same(a, b, m.system.symbols)


def test_discharged_dilation_rescales_noise():
    m = _m("ex12")
    g = GroupElement.dilation("2", {"x": 2, "w": 1})
    out = apply_group_element(m.system, g)
    # dx = a x dt + 2 b sqrt(x) dw after x -> 4x keeping w
    assert _same(out.noise[0][0], parse("2*b*sqrt(x)"), m.system.symbols)


def test_rotation_preserves_ex13():
    m = _m("ex13c")
    g = GroupElement.rotation([["cos(theta)", "-sin(theta)"], ["sin(theta)", "cos(theta)"]],
                              m.system.symbols.dynamical, m.system.symbols.noises)
    out = apply_group_element(m.system, g, discharge=False)
    for a, b in zip(out.entries(), m.system.entries()):
        assert _same(a, b, m.system.symbols)


# transform

def test_invert_scalar_exp_and_log():
    assert invert_scalar(parse("log(x)"), "x", "y") == parse("exp(y)")
    inv = invert_scalar(parse("exp(2*x)"), "x", "y")
    assert is_zero(add(inv, mul(-1, parse("log(y)/2"))))


def test_kozlov_ex1():
    m = _m("ex1")
    res = kozlov(m.system, m.field("X"), new_name="y")
    assert all(res.checks.values())
    assert _same(res.system.noise[0][0], parse("1"), res.system.symbols)


def test_modified_kozlov_needs_split_w():
    m = _m("ex1")
    with pytest.raises(NotSplitW):
        modified_kozlov(m.system, m.field("X"))


def test_kozlov_not_integrable():
    m = load_model("[system]\nvars = x\nnoises = w\nf.x = 0\nsigma.x.w = 1\n[field X]\nphi.x = exp(x^2)\n")
    with pytest.raises(NotIntegrable):
        kozlov(m.system, m.field("X"))


def test_chi_is_invariant():
    m = _m("ex5")
    X = m.field("X1")
    chi = characteristic_chi(X)
    assert is_zero(X.apply(chi), None, m.system.symbols)


def test_change_of_vars_keeps_symmetry():
    m = _m("c1")
    sp = m.substitutions["etazeta"]
    sub = make_substitution(m.system.symbols, dict(sp.forward), dict(sp.inverse))
    rep = post_transform_check(m.system, m.field("X"), sub)
    assert rep.is_symmetry


def test_restrict_drops_decoupled_variable():
    m = _m("c1")
    sp = m.substitutions["etazeta"]
    sub = make_substitution(m.system.symbols, dict(sp.forward), dict(sp.inverse))
    s = restrict_system(change_of_vars(m.system, sub), ["zeta"])
    assert s.n == 1 and s.symbols.dynamical == ("zeta",)


def test_restrict_refuses_coupled():
    m = _m("c1")
    with pytest.raises(ValueError):
        restrict_system(m.system, ["x"])


def test_field_shape_check():
    s = _m("ex1").system.symbols
    with pytest.raises(ValueError):
        VectorField(s, [parse("x"), parse("1")])
