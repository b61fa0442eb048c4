"""Boolean formulas over vertex names, used as Muller winning conditions.

A play wins ``Muller(phi)`` iff ``phi`` is true under the assignment that maps
a vertex variable to true exactly when the vertex is visited infinitely often.

Concrete syntax (``parse_formula``)::

    v_a & (v_b | !v_c)        # also: and/or/not, ∧/∨/¬, true/false
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Collection, Iterable, Mapping, Union

from .errors import ParseError, UnknownVariable


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "BoolFormula"


@dataclass(frozen=True)
class And:
    args: tuple["BoolFormula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["BoolFormula", ...]


@dataclass(frozen=True)
class Const:
    value: bool


BoolFormula = Union[Var, Not, And, Or, Const]

TRUE = Const(True)
FALSE = Const(False)


def conj(args: Iterable[BoolFormula]) -> BoolFormula:
    args = tuple(args)
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(args)


def disj(args: Iterable[BoolFormula]) -> BoolFormula:
    args = tuple(args)
    if not args:
        return FALSE
    return args[0] if len(args) == 1 else Or(args)


def variables(phi: BoolFormula) -> set[str]:
    if isinstance(phi, Var):
        return {phi.name}
    if isinstance(phi, Not):
        return variables(phi.arg)
    if isinstance(phi, (And, Or)):
        out: set[str] = set()
        for a in phi.args:
            out |= variables(a)
        return out
    return set()


def evaluate(phi: BoolFormula, truth: Callable[[str], bool]) -> bool:
    if isinstance(phi, Var):
        return truth(phi.name)
    if isinstance(phi, Not):
        return not evaluate(phi.arg, truth)
    if isinstance(phi, And):
        return all(evaluate(a, truth) for a in phi.args)
    if isinstance(phi, Or):
        return any(evaluate(a, truth) for a in phi.args)
    return phi.value


def muller_eval(phi: BoolFormula, inf_set: Collection[str],
                vertices: Collection[str] | None = None) -> bool:
    """Evaluate ``phi`` with ``v -> (v in inf_set)``.

    When ``vertices`` is given, a variable outside it raises ``UnknownVariable``.
    """
    if vertices is not None:
        known = set(vertices)
        for name in sorted(variables(phi)):
            if name not in known:
                raise UnknownVariable(name)
    members = set(inf_set)
    return evaluate(phi, members.__contains__)


def substitute(phi: BoolFormula, mapping: Mapping[str, BoolFormula]) -> BoolFormula:
    if isinstance(phi, Var):
        return mapping.get(phi.name, phi)
    if isinstance(phi, Not):
        return Not(substitute(phi.arg, mapping))
    if isinstance(phi, And):
        return And(tuple(substitute(a, mapping) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(substitute(a, mapping) for a in phi.args))
    return phi


def negate(phi: BoolFormula) -> BoolFormula:
    if isinstance(phi, Not):
        return phi.arg
    if isinstance(phi, Const):
        return Const(not phi.value)
    return Not(phi)


def to_text(phi: BoolFormula) -> str:
    if isinstance(phi, Var):
        return phi.name
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Not):
        return "!" + _wrap(phi.arg)
    sep = " & " if isinstance(phi, And) else " | "
    return sep.join(_wrap(a) for a in phi.args)


def _wrap(phi: BoolFormula) -> str:
    if isinstance(phi, (And, Or)):
        return "(" + to_text(phi) + ")"
    return to_text(phi)


# -- parser ------------------------------------------------------------------

NAME = r"[A-Za-z0-9_][A-Za-z0-9_.'@/\-]*"

_TOKEN = re.compile(
    rf"\s*(?:(?P<op>&&|\|\||[&|!()]|∧|∨|¬)|(?P<name>{NAME}))"
)
_KEYWORD_OPS = {"and": "&", "or": "|", "not": "!"}
_SYMBOL_OPS = {"∧": "&", "∨": "|", "¬": "!", "&&": "&", "||": "|"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r} in formula", 1, pos + 1)
        if m.group("op"):
            op = m.group("op")
            tokens.append(("op", _SYMBOL_OPS.get(op, op), m.start("op")))
        else:
            word = m.group("name")
            if word in _KEYWORD_OPS:
                tokens.append(("op", _KEYWORD_OPS[word], m.start("name")))
            elif word in ("true", "false"):
                tokens.append(("const", word, m.start("name")))
            else:
                tokens.append(("name", word, m.start("name")))
        pos = m.end()
    return tokens


def parse_formula(text: str) -> BoolFormula:
    """Parse with precedence ``!`` > ``&`` > ``|``."""
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def expect_op(op):
        nonlocal pos
        tok = peek()
        if tok is None or tok[:2] != ("op", op):
            where = tok[2] + 1 if tok else len(text) + 1
            raise ParseError(f"expected {op!r} in formula", 1, where)
        pos += 1

    def parse_or():
        nonlocal pos
        items = [parse_and()]
        while peek() is not None and peek()[:2] == ("op", "|"):
            pos += 1
            items.append(parse_and())
        return disj(items)

    def parse_and():
        nonlocal pos
        items = [parse_unary()]
        while peek() is not None and peek()[:2] == ("op", "&"):
            pos += 1
            items.append(parse_unary())
        return conj(items)

    def parse_unary():
        nonlocal pos
        tok = peek()
        if tok is None:
            raise ParseError("unexpected end of formula", 1, len(text) + 1)
        kind, val, col = tok
        if kind == "op" and val == "!":
            pos += 1
            return Not(parse_unary())
        if kind == "op" and val == "(":
            pos += 1
            inner = parse_or()
            expect_op(")")
            return inner
        if kind == "name":
            pos += 1
            return Var(val)
        if kind == "const":
            pos += 1
            return Const(val == "true")
        raise ParseError(f"unexpected {val!r} in formula", 1, col + 1)

    result = parse_or()
    if pos != len(tokens):
        raise ParseError(f"trailing input {tokens[pos][1]!r} in formula", 1, tokens[pos][2] + 1)
    return result
