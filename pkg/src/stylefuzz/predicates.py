"""Named predicates that annotation files can attach to grammar rules.

A predicate receives a parse node and looks at its *core*: the first node
reached by descending through single-child nodes. So an ``addExpr`` that is
just a wrapper around ``a * b`` is judged by the ``a * b`` node.
"""

from __future__ import annotations

import re
from typing import Callable

from .grammar import ParseNode

_NUMBER = re.compile(r"^-?(?:0[xX][0-9a-fA-F]+|[0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?)[uUlLfF]*$")
_ARITH_OPS = frozenset({"+", "-", "*", "/", "%", "+=", "-=", "*=", "/=", "%="})
_LOGIC_OPS = frozenset({"<", ">", "<=", ">=", "==", "!=", "&&", "||", "!"})
_IR_ARITH = re.compile(r"^arith\.(?:add|sub|mul|div|rem|max|min|constant)")
_IR_LOGIC = re.compile(r"^arith\.(?:cmp|and|or|xor)")


def core(node: ParseNode) -> ParseNode:
    while len(node.children) == 1:
        node = node.children[0]
    return node


def _operator_texts(node: ParseNode) -> list[str]:
    """Texts of direct leaf children, looking through single-leaf wrappers like ``assignOp``."""
    out = []
    for child in node.children:
        inner = core(child)
        if inner.token is not None and (child.token is not None or len(child.children) == 1):
            out.append(inner.token.text)
    return out


def isarith(node: ParseNode) -> bool:
    c = core(node)
    if c.token is not None:
        return bool(_NUMBER.match(c.token.text))
    for text in _operator_texts(c):
        if text in _ARITH_OPS or _IR_ARITH.match(text):
            return True
    return False


def islogical(node: ParseNode) -> bool:
    c = core(node)
    if c.token is not None:
        return c.token.text in ("true", "false")
    return any(t in _LOGIC_OPS or _IR_LOGIC.match(t) for t in _operator_texts(c))


def is_call(node: ParseNode) -> bool:
    c = core(node)
    kids = c.children
    for i in range(1, len(kids)):
        if kids[i].token is not None and kids[i].token.text == "(" and kids[i - 1].token is not None:
            return True
    return any(t == "func.call" for t in _operator_texts(c))


def is_array_access(node: ParseNode) -> bool:
    c = core(node)
    kids = c.children
    return (len(kids) >= 2 and kids[0].token is None and kids[1].token is not None
            and kids[1].token.text == "[")


def is_literal_array(node: ParseNode) -> bool:
    c = core(node)
    if not c.children:
        return False
    first = c.children[0]
    return first.token is not None and first.token.text in ("{", "dense")


def is_memref(node: ParseNode) -> bool:
    c = core(node)
    return any(t.startswith("memref.") for t in _operator_texts(c))


PREDICATES: dict[str, Callable[[ParseNode], bool]] = {
    "isarith": isarith,
    "islogical": islogical,
    "is_call": is_call,
    "is_array_access": is_array_access,
    "is_literal_array": is_literal_array,
    "is_memref": is_memref,
}


def register(name: str, fn: Callable[[ParseNode], bool]) -> None:
    """Make an extra predicate available to annotation files loaded afterwards."""
    PREDICATES[name] = fn
