# symexpr/__init__.py
from .expr import Expr, exprs_equal
from .parser import parse_expr
from .vector_field import VectorField, lie_bracket, vf_eval
from .point import Point, make_point
from .numeric import CompiledExprs, CompiledFrame, compile_exprs, compile_frame, flow, frame_flow


def expr_parse(text, variables) -> Expr:
    return parse_expr(text, variables)


def expr_diff(e: Expr, index: int) -> Expr:
    return e.diff(index)


def expr_to_string(e: Expr) -> str:
    return e.to_string()


def expr_substitute(e: Expr, values) -> Expr:
    return e.substitute(values)


__all__ = [
    "Expr", "exprs_equal", "parse_expr", "expr_parse", "expr_diff", "expr_to_string", "expr_substitute",
    "VectorField", "lie_bracket", "vf_eval",
    "Point", "make_point",
    "CompiledExprs", "CompiledFrame", "compile_exprs", "compile_frame", "flow", "frame_flow",
]
