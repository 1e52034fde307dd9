"""Tiny arithmetic expression language for sampling functions at coordinates.

Grammar: numbers, the variables ``x1 .. xD``, ``+ - * /``, ``^`` (power),
parentheses and the functions ``sin``, ``cos``, ``exp``.  Expressions are
parsed with :mod:`ast` and only the nodes listed here are accepted.
"""
from __future__ import annotations

import ast
import re

import numpy as np

from ..errors import BadExpression

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_VAR = re.compile(r"x([1-9][0-9]*)$")


def parse(text: str) -> ast.Expression:
    if not isinstance(text, str) or not text.strip():
        raise BadExpression("empty expression")
    if "**" in text:
        raise BadExpression("use '^' for powers")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as e:
        raise BadExpression(f"cannot parse {text!r}: {e.msg}") from None
    _check(tree.body)
    return tree


def _check(node):
    if isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise BadExpression(f"operator {type(node.op).__name__} not allowed")
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise BadExpression("only unary + and - are allowed")
        _check(node.operand)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise BadExpression("only sin, cos and exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise BadExpression(f"{node.func.id} takes exactly one argument")
        _check(node.args[0])
    elif isinstance(node, ast.Name):
        if not _VAR.match(node.id):
            raise BadExpression(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise BadExpression(f"bad constant {node.value!r}")
    else:
        raise BadExpression(f"{type(node).__name__} not allowed")


def _eval(node, coords):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, coords), _eval(node.right, coords))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, coords)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], coords))
    if isinstance(node, ast.Name):
        k = int(_VAR.match(node.id).group(1))
        if k > coords.shape[1]:
            raise BadExpression(f"{node.id} used on {coords.shape[1]}-dimensional points")
        return coords[:, k - 1]
    return float(node.value)


def evaluate(text: str, coords) -> np.ndarray:
    """Evaluate ``text`` at every row of ``coords`` (shape ``(n, D)``)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    tree = parse(text)
    with np.errstate(all="ignore"):
        out = np.broadcast_to(np.asarray(_eval(tree.body, coords), dtype=float), (coords.shape[0],)).copy()
    if not np.all(np.isfinite(out)):
        raise BadExpression(f"{text!r} is not finite at every point")
    return out
