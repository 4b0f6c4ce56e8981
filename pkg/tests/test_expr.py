import math

import pytest

from sdesym.expr import (
    Const, DivisionError, ParseError, SampleSpec, Sym, SymbolTable, UnknownIdentifierError, add,
    differentiate, evaluate, exp, expand, free_symbols, is_zero, log, mul, parse, power, render,
    simplify, substitute,
)

S = SymbolTable(("x",), "t", ("w",))


def test_constants_fold():
    assert add(1, 2) == Const(3)
    assert mul(parse("2/3"), 3) == Const(2)
    assert power(4, parse("1/2")) == Const(2)


def test_like_terms_collect():
    x = Sym("x")
    assert add(x, x) == mul(2, x)
    assert add(x, mul(-1, x)) == Const(0)
    assert mul(x, power(x, -1)) == Const(1)


def test_exp_log_rules():
    x = Sym("x")
    assert power(exp(x), 2) == exp(mul(2, x))
    assert simplify(exp(log(x))) == x


def test_precedence_and_unary_minus():
    assert evaluate(parse("-x^2"), {"x": 3.0}) == -9.0
    assert evaluate(parse("2^3^2"), {}) == 512.0
    assert evaluate(parse("1/2*x"), {"x": 4.0}) == 2.0


def test_parse_errors_carry_offsets():
    with pytest.raises(ParseError) as ei:
        parse("x + * y")
    assert ei.value.offset == 4
    with pytest.raises(ParseError):
        parse("sin(x")


def test_unknown_identifier_rejected_with_whitelist():
    with pytest.raises(UnknownIdentifierError):
        parse("x + q", ["x"])


def test_render_is_stable_text():
    e = parse("exp(-x)*mu + lambda*x")
    assert parse(render(e)) == e
    assert "lambda" in render(e)


def test_differentiate_basics():
    x = Sym("x")
    assert is_zero(add(differentiate(parse("x^3 + sin(x)"), "x"), mul(-1, parse("3*x^2 + cos(x)"))))
    assert differentiate(parse("exp(2*x)"), "x") == mul(2, exp(mul(2, x)))
    assert differentiate(parse("w*t"), "x") == Const(0)


def test_substitute_is_simultaneous():
    e = parse("x + 2*w")
    out = substitute(e, {"x": Sym("w"), "w": Sym("x")})
    assert out == parse("w + 2*x")


def test_expand_products():
    assert expand(parse("(x + 1)*(x - 1)")) == parse("x^2 - 1")


def test_free_symbols():
    assert free_symbols(parse("mu*exp(x) + t")) == {"mu", "x", "t"}


def test_evaluate_division_by_zero():
    with pytest.raises(DivisionError):
        evaluate(parse("1/x"), {"x": 0.0})


def test_evaluate_matches_math():
    v = evaluate(parse("sqrt(x)*log(x) + cos(t)"), {"x": 2.0, "t": 0.5})
    assert v == pytest.approx(math.sqrt(2) * math.log(2) + math.cos(0.5))


def test_zero_test_finds_witness():
    z = is_zero(parse("x - x^2"), None, S)
    assert not z
    assert z.residual == pytest.approx(evaluate(parse("x - x^2"), z.witness))


def test_zero_test_identity():
    assert is_zero(parse("sin(x)^2 + cos(x)^2 - 1"), None, S)
    assert is_zero(parse("exp(x)*exp(-x) - 1"), None, S)


def test_zero_test_respects_domains():
    # sqrt(x^2) = x only for positive x; the default domain is positive
    assert is_zero(parse("sqrt(x^2) - x"), None, S)
    assert not is_zero(parse("sqrt(x^2) - x"), SampleSpec(domains={"x": (-2.0, -0.5)}), S)


def test_zero_test_is_seed_deterministic():
    e = parse("x - 1.0000001")
    a = is_zero(e, SampleSpec(seed=3), S)
    b = is_zero(e, SampleSpec(seed=3), S)
    assert a.witness == b.witness
