"""First-order formulas over the reals and their SMT-LIB v2 rendering.

Only what the synthesis sentences need: polynomial terms with rational
constants, comparisons, propositional connectives and real quantifiers.
``to_smtlib`` and ``parse_smtlib`` are inverse to each other on formulas
built with the smart constructors (``conj``, ``disj``, ``exists``, ...).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import ParseError


# -- terms ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Add:
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Mul:
    args: tuple["Term", ...]


Term = Union[Num, Sym, Add, Mul]


def num(value) -> Num:
    return Num(Fraction(value))


def add(terms: Iterable[Term]) -> Term:
    terms = tuple(terms)
    if not terms:
        return Num(Fraction(0))
    return terms[0] if len(terms) == 1 else Add(terms)


def mul(*terms: Term) -> Term:
    return terms[0] if len(terms) == 1 else Mul(tuple(terms))


# -- formulas ------------------------------------------------------------------

@dataclass(frozen=True)
class Cmp:
    op: str  # one of >=, >, =, <=, <
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    variables: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    variables: tuple[str, ...]
    body: "Formula"


Formula = Union[Cmp, Bool, And, Or, Not, Implies, Exists, Forall]

TRUE = Bool(True)
FALSE = Bool(False)
COMPARISONS = (">=", ">", "=", "<=", "<")


def ge(a: Term, b: Term) -> Cmp:
    return Cmp(">=", a, b)


def gt(a: Term, b: Term) -> Cmp:
    return Cmp(">", a, b)


def eq(a: Term, b: Term) -> Cmp:
    return Cmp("=", a, b)


def lt(a: Term, b: Term) -> Cmp:
    return Cmp("<", a, b)


def conj(args: Iterable[Formula]) -> Formula:
    args = tuple(args)
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(args)


def disj(args: Iterable[Formula]) -> Formula:
    args = tuple(args)
    if not args:
        return FALSE
    return args[0] if len(args) == 1 else Or(args)


def exists(variables: Iterable[str], body: Formula) -> Formula:
    variables = tuple(variables)
    return Exists(variables, body) if variables else body


def forall(variables: Iterable[str], body: Formula) -> Formula:
    variables = tuple(variables)
    return Forall(variables, body) if variables else body


# -- inspection ----------------------------------------------------------------

def size(f) -> int:
    """Node count of a term or formula."""
    if isinstance(f, (Num, Sym, Bool)):
        return 1
    if isinstance(f, (Add, Mul, And, Or)):
        return 1 + sum(size(a) for a in f.args)
    if isinstance(f, Cmp):
        return 1 + size(f.lhs) + size(f.rhs)
    if isinstance(f, Not):
        return 1 + size(f.arg)
    if isinstance(f, Implies):
        return 1 + size(f.lhs) + size(f.rhs)
    return 1 + len(f.variables) + size(f.body)


def free_symbols(f) -> set[str]:
    if isinstance(f, Sym):
        return {f.name}
    if isinstance(f, (Num, Bool)):
        return set()
    if isinstance(f, (Add, Mul, And, Or)):
        return set().union(*(free_symbols(a) for a in f.args))
    if isinstance(f, Cmp):
        return free_symbols(f.lhs) | free_symbols(f.rhs)
    if isinstance(f, Not):
        return free_symbols(f.arg)
    if isinstance(f, Implies):
        return free_symbols(f.lhs) | free_symbols(f.rhs)
    return free_symbols(f.body) - set(f.variables)


def eval_term(t: Term, env: Mapping[str, Fraction]) -> Fraction:
    if isinstance(t, Num):
        return t.value
    if isinstance(t, Sym):
        return env[t.name]
    if isinstance(t, Add):
        return sum((eval_term(a, env) for a in t.args), Fraction(0))
    out = Fraction(1)
    for a in t.args:
        out *= eval_term(a, env)
    return out


def evaluate(f: Formula, env: Mapping[str, Fraction]) -> bool:
    """Truth of a quantifier-free formula under ``env``."""
    if isinstance(f, Bool):
        return f.value
    if isinstance(f, Cmp):
        a, b = eval_term(f.lhs, env), eval_term(f.rhs, env)
        return {">=": a >= b, ">": a > b, "=": a == b, "<=": a <= b, "<": a < b}[f.op]
    if isinstance(f, And):
        return all(evaluate(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, env) for a in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, env)
    if isinstance(f, Implies):
        return not evaluate(f.lhs, env) or evaluate(f.rhs, env)
    raise ValueError("cannot evaluate a quantified formula pointwise")


def conjuncts(f: Formula) -> tuple[Formula, ...]:
    return f.args if isinstance(f, And) else (f,)


# -- SMT-LIB output ------------------------------------------------------------

_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*")
_RESERVED = {"and", "or", "not", "=>", "exists", "forall", "true", "false", "let", "par",
             "assert", "_", "!", "as", "Real", "ite"}


def symbol(name: str) -> str:
    if _SIMPLE.fullmatch(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"cannot quote symbol {name!r}")
    return f"|{name}|"


def _number(value: Fraction) -> str:
    mag = abs(value)
    text = str(mag.numerator) if mag.denominator == 1 else f"(/ {mag.numerator} {mag.denominator})"
    return f"(- {text})" if value < 0 else text


def render(f) -> str:
    if isinstance(f, Num):
        return _number(f.value)
    if isinstance(f, Sym):
        return symbol(f.name)
    if isinstance(f, Add):
        return "(+ " + " ".join(render(a) for a in f.args) + ")"
    if isinstance(f, Mul):
        return "(* " + " ".join(render(a) for a in f.args) + ")"
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        return f"({f.op} {render(f.lhs)} {render(f.rhs)})"
    if isinstance(f, And):
        return "(and " + " ".join(render(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(render(a) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {render(f.arg)})"
    if isinstance(f, Implies):
        return f"(=> {render(f.lhs)} {render(f.rhs)})"
    quant = "exists" if isinstance(f, Exists) else "forall"
    binders = " ".join(f"({symbol(v)} Real)" for v in f.variables)
    return f"({quant} ({binders}) {render(f.body)})"


def _has_quantifier(f) -> bool:
    if isinstance(f, (Exists, Forall)):
        return True
    if isinstance(f, (And, Or)):
        return any(_has_quantifier(a) for a in f.args)
    if isinstance(f, Not):
        return _has_quantifier(f.arg)
    if isinstance(f, Implies):
        return _has_quantifier(f.lhs) or _has_quantifier(f.rhs)
    return False


def to_smtlib(f: Formula, comments: Iterable[str] = ()) -> str:
    """Serialise a sentence for an external solver; ``sat`` means the sentence is true.

    A top-level existential block becomes constant declarations, and each
    top-level conjunct becomes its own ``assert``.
    """
    declared: tuple[str, ...] = ()
    body = f
    if isinstance(f, Exists):
        declared, body = f.variables, f.body
    logic = "NRA" if _has_quantifier(body) else "QF_NRA"
    lines = [f"; {c}" for c in comments]
    lines.append(f"(set-logic {logic})")
    for v in declared:
        lines.append(f"(declare-fun {symbol(v)} () Real)")
    for c in conjuncts(body):
        lines.append(f"(assert {render(c)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# -- SMT-LIB input -------------------------------------------------------------

_SEXP_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|(\|[^|]*\|)|([^\s()|;]+))")


def _read_sexps(text: str) -> list:
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise ParseError(f"cannot read SMT-LIB near {text[pos:pos + 20]!r}")
            break
        pos = m.end()
        comment, lpar, rpar, quoted, atom = m.groups()
        if comment is not None:
            continue
        if lpar:
            stack.append([])
        elif rpar:
            if len(stack) == 1:
                raise ParseError("unbalanced ')' in SMT-LIB text")
            done = stack.pop()
            stack[-1].append(done)
        elif quoted is not None:
            stack[-1].append(("sym", quoted[1:-1]))
        elif atom is not None:
            stack[-1].append(atom)
    if len(stack) != 1:
        raise ParseError("unbalanced '(' in SMT-LIB text")
    return stack[0]


def _is_number(x) -> bool:
    return isinstance(x, str) and re.fullmatch(r"\d+(\.\d+)?", x) is not None


def _term(x) -> Term:
    if isinstance(x, tuple):
        return Sym(x[1])
    if isinstance(x, str):
        if _is_number(x):
            return Num(Fraction(x))
        return Sym(x)
    head, *rest = x
    if head == "/" and len(rest) == 2 and all(_is_number(r) for r in rest):
        return Num(Fraction(rest[0]) / Fraction(rest[1]))
    if head == "-" and len(rest) == 1:
        inner = _term(rest[0])
        if isinstance(inner, Num):
            return Num(-inner.value)
        return Mul((Num(Fraction(-1)), inner))
    if head == "-" and len(rest) > 1:
        first, *others = (_term(r) for r in rest)
        return Add((first,) + tuple(Mul((Num(Fraction(-1)), o)) for o in others))
    if head == "+":
        return Add(tuple(_term(r) for r in rest))
    if head == "*":
        return Mul(tuple(_term(r) for r in rest))
    if head == "/":
        raise ParseError("division by non-constants is not supported")
    raise ParseError(f"unsupported term head {head!r}")


def _formula(x) -> Formula:
    if isinstance(x, str):
        if x == "true":
            return TRUE
        if x == "false":
            return FALSE
        raise ParseError(f"unexpected atom {x!r} in formula position")
    if isinstance(x, tuple):
        raise ParseError("Boolean variables are not supported")
    head, *rest = x
    if head in COMPARISONS and len(rest) == 2:
        return Cmp(head, _term(rest[0]), _term(rest[1]))
    if head == "and":
        return And(tuple(_formula(r) for r in rest))
    if head == "or":
        return Or(tuple(_formula(r) for r in rest))
    if head == "not":
        return Not(_formula(rest[0]))
    if head == "=>":
        return Implies(_formula(rest[0]), _formula(rest[1]))
    if head in ("exists", "forall"):
        binders, body = rest
        names = tuple(b[0][1] if isinstance(b[0], tuple) else b[0] for b in binders)
        cls = Exists if head == "exists" else Forall
        return cls(names, _formula(body))
    raise ParseError(f"unsupported formula head {head!r}")


def parse_smtlib(text: str) -> Formula:
    declared: list[str] = []
    asserts: list[Formula] = []
    for cmd in _read_sexps(text):
        if not isinstance(cmd, list) or not cmd:
            raise ParseError("top-level SMT-LIB items must be commands")
        head = cmd[0]
        if head in ("declare-fun", "declare-const"):
            name = cmd[1][1] if isinstance(cmd[1], tuple) else cmd[1]
            declared.append(name)
        elif head == "assert":
            asserts.append(_formula(cmd[1]))
        elif head in ("set-logic", "set-info", "set-option", "check-sat", "get-model", "exit"):
            continue
        else:
            raise ParseError(f"unsupported command {head!r}")
    return exists(declared, conj(asserts))
