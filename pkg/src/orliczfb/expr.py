"""Closed-form coefficient expressions, e.g. ``"1 + abs(x1)"``.

The grammar is deliberately small: numeric literals, the coordinates
``x1``/``x2``, the binary operators ``+ - * /``, unary minus, parentheses and
the functions ``abs``, ``max``, ``min`` and ``pow``. Parsing goes through the
standard :mod:`ast` module and only whitelisted nodes are accepted.
"""
import ast

import numpy as np

from .exceptions import ExpressionError

_FUNCTIONS = {
    "abs": (1, np.abs),
    "max": (2, np.maximum),
    "min": (2, np.minimum),
    "pow": (2, np.power),
}
_COORDS = {"x1": 0, "x2": 1}


class Expression:
    """Vectorized evaluator ``x -> f(x)`` for points of shape ``(..., d)``."""

    def __init__(self, source, tree):
        self.source = source
        self._tree = tree
        self.max_coord = _max_coord(tree)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] <= self.max_coord:
            raise ExpressionError(
                f"expression {self.source!r} uses x{self.max_coord + 1} "
                f"but points have dimension {x.shape[-1]}")
        out = _evaluate(self._tree, x, self.source)
        return np.broadcast_to(out, x.shape[:-1]).astype(float)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and other.source == self.source

    def __hash__(self):
        return hash(self.source)


def expr_parse(source):
    """Parse ``source`` into an :class:`Expression`.

    Errors carry the 1-based column of the offending token.
    """
    if isinstance(source, Expression):
        return source
    if isinstance(source, (int, float)):
        source = repr(float(source))
    if not isinstance(source, str):
        raise ExpressionError(f"expression must be a string, got {type(source).__name__}")
    try:
        tree = ast.parse(source.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error in {source!r}", position=exc.offset) from None
    _validate(tree, source)
    return Expression(source, tree)


def _validate(node, source):
    pos = getattr(node, "col_offset", 0) + 1
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}", position=pos)
    elif isinstance(node, ast.Name):
        if node.id not in _COORDS:
            raise ExpressionError(f"unknown identifier {node.id!r}", position=pos)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError("unsupported unary operator", position=pos)
        _validate(node.operand, source)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
            raise ExpressionError("unsupported binary operator", position=pos)
        _validate(node.left, source)
        _validate(node.right, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            name = getattr(node.func, "id", "?")
            raise ExpressionError(f"unknown function {name!r}", position=pos)
        arity = _FUNCTIONS[node.func.id][0]
        if node.keywords or len(node.args) != arity:
            raise ExpressionError(
                f"{node.func.id} expects {arity} argument(s), got {len(node.args)}",
                position=pos)
        for arg in node.args:
            _validate(arg, source)
    else:
        raise ExpressionError(f"unsupported syntax {type(node).__name__}", position=pos)


def _max_coord(node):
    found = [_COORDS[n.id] for n in ast.walk(node) if isinstance(n, ast.Name) and n.id in _COORDS]
    return max(found, default=-1)


def _evaluate(node, x, source):
    if isinstance(node, ast.Constant):
        return np.float64(node.value)
    if isinstance(node, ast.Name):
        return x[..., _COORDS[node.id]]
    if isinstance(node, ast.UnaryOp):
        val = _evaluate(node.operand, x, source)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp):
        left = _evaluate(node.left, x, source)
        right = _evaluate(node.right, x, source)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if np.any(np.asarray(right) == 0):
            raise ExpressionError(f"division by zero in {source!r}",
                                  position=node.col_offset + 1)
        return left / right
    fn = _FUNCTIONS[node.func.id][1]
    args = [_evaluate(a, x, source) for a in node.args]
    with np.errstate(invalid="raise", divide="raise"):
        try:
            return fn(*args)
        except FloatingPointError:
            raise ExpressionError(f"{node.func.id} undefined for the given arguments",
                                  position=node.col_offset + 1) from None
