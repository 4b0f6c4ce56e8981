"""Symbolic expression core."""  # noqa: F401

from .core import (
    Add, Const, Expr, Func, Mul, Pow, Sym, ONE, ZERO, HALF, MINUS_ONE,
    add, as_expr, const, cos, depends_on, exp, free_symbols, func, log, mul, neg,
    node_count, power, rebuild, sin, sqrt, sym,
)
from .calculus import antiderivative, antiderivative_x, differentiate, expand, simplify, substitute
from .evaluate import DivisionError, DomainError, EvaluationError, evaluate, evaluate_batch, lambdify
from .parse import ParseError, UnknownIdentifierError, parse
from .render import render
from .symbols import DEFAULT_DOMAIN, Param, SymbolTable
from .zero import SampleSpec, SamplingExhausted, ZeroTest, equal, is_zero, sample_points, valid_points
