"""Expression kernel: symbolic scalars over chart coordinates."""
from . import nodes
from .chart import (
    DEFAULT_SAMPLES,
    DEFAULT_TOL,
    Chart,
    Point,
    Sampler,
    ScalarField,
    diff,
    evaluate,
    field_equal,
    parse_expr,
    relative_residual,
)
from .nodes import Expr, to_text
from .parser import ParseError, UnknownSymbolError
from .program import DomainError, Program, available_backends, backend, set_backend

__all__ = [
    "Chart", "Point", "Sampler", "ScalarField", "Expr", "Program",
    "ParseError", "UnknownSymbolError", "DomainError",
    "parse_expr", "diff", "evaluate", "field_equal", "relative_residual", "to_text",
    "backend", "available_backends", "set_backend", "nodes",
    "DEFAULT_SAMPLES", "DEFAULT_TOL",
]
