"""Line-oriented text format for games and strategy profiles.

Game documents::

    players 3
    init v_b
    vertex v_b owner 1
    vertex n owner nature
    edge v_b v_c
    edge n v_a prob 1/3          # rationals or finite decimals, kept exact
    leaf g (0,1/4,1/3)           # payoff-vector sugar, compiled to a nature gadget
    objective 0 tr {t1 t2}
    objective 1 muller "v_a & !v_b"

Profile documents::

    strategy 0 at v_a -> t110: 1/2 t101: 1/2
    strategy 1 at v_b -> v_c
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import muller
from .arena import NATURE, SMG, Arena, Muller, Reach, check_valid, stationary
from .errors import ParseError

_WORD = r"(?:[A-Za-z0-9_.'@/]|-(?!>))+"
_TOKEN = re.compile(rf'\s*(?:(?P<string>"[^"]*")|(?P<arrow>->)|(?P<punct>[{{}}(),:])|(?P<word>{_WORD}))')
_RATIONAL = re.compile(r"\d+(?:/\d+)?|\d*\.\d+")
_NAME = re.compile(r"[A-Za-z0-9_](?:[A-Za-z0-9_.'@/]|-(?!>))*")
_RESERVED = {"nature", "prob", "owner", "at", "tr", "muller", "true", "false", "and", "or", "not"}


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _strip_comment(line: str) -> str:
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    tokens = []
    pos = 0
    line = line.rstrip()
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            col = len(line) - len(line[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {line[col - 1]!r}", lineno, col)
        kind = m.lastgroup
        tokens.append(_Tok(kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    return tokens


def parse_rational(text: str, lineno: int = 0, col: int = 0) -> Fraction:
    """Exact value of ``p``, ``p/q`` or a finite decimal; anything else is rejected."""
    if not _RATIONAL.fullmatch(text):
        raise ParseError(f"not a rational literal: {text!r}", lineno, col)
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise ParseError(f"zero denominator in {text!r}", lineno, col) from None


class _Line:
    def __init__(self, tokens: list[_Tok], lineno: int, raw: str):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.raw = raw

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        if tok is None:
            tok = self.tokens[self.pos] if self.pos < len(self.tokens) else None
        col = tok.col if tok else len(self.raw.rstrip()) + 1
        return ParseError(message, self.lineno, col)

    def peek(self) -> _Tok | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind: str | None = None, text: str | None = None, what: str = "token") -> _Tok:
        tok = self.peek()
        if tok is None or (kind and tok.kind != kind) or (text and tok.text != text):
            raise self.error(f"expected {what}")
        self.pos += 1
        return tok

    def name(self) -> _Tok:
        tok = self.take("word", what="a name")
        if not _NAME.fullmatch(tok.text) or tok.text in _RESERVED:
            raise self.error(f"invalid name {tok.text!r}", tok)
        return tok

    def integer(self, what: str) -> tuple[int, _Tok]:
        tok = self.take("word", what=what)
        if not tok.text.isdigit():
            raise self.error(f"expected {what}", tok)
        return int(tok.text), tok

    def done(self):
        if self.pos != len(self.tokens):
            raise self.error(f"unexpected {self.tokens[self.pos].text!r}")


@dataclass
class _Decl:
    name: str
    lineno: int
    col: int


def parse_arena(text: str) -> SMG:
    """Parse and validate a game document; raises ``ParseError`` or ``ValidationError``."""
    players = None
    init = None
    order: list[tuple[str, object]] = []  # ("vertex", (decl, owner)) | ("leaf", (decl, vector))
    declared: dict[str, _Decl] = {}
    edges: list[tuple[_Decl, _Decl, Fraction | None]] = []
    objectives: dict[int, tuple[str, object, int]] = {}

    def declare(tok: _Tok, lineno: int) -> _Decl:
        if tok.text in declared:
            raise ParseError(f"duplicate declaration of {tok.text}", lineno, tok.col)
        decl = _Decl(tok.text, lineno, tok.col)
        declared[tok.text] = decl
        return decl

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw)
        tokens = _tokenize(body, lineno)
        if not tokens:
            continue
        ln = _Line(tokens, lineno, body)
        head = ln.take("word", what="a directive")
        if head.text == "players":
            count, tok = ln.integer("a player count")
            if count < 1:
                raise ln.error("player count must be positive", tok)
            if players is not None:
                raise ln.error("players declared twice", head)
            players = count
        elif head.text == "init":
            tok = ln.name()
            init = _Decl(tok.text, lineno, tok.col)
        elif head.text == "vertex":
            decl = declare(ln.name(), lineno)
            ln.take("word", "owner", "'owner'")
            tok = ln.take("word", what="an owner")
            if tok.text == "nature":
                owner = NATURE
            elif tok.text.isdigit():
                owner = int(tok.text)
            else:
                raise ln.error("owner must be a player index or 'nature'", tok)
            order.append(("vertex", (decl, owner)))
        elif head.text == "edge":
            src = ln.name()
            dst = ln.name()
            prob = None
            if ln.peek() is not None:
                ln.take("word", "prob", "'prob'")
                tok = ln.take("word", what="a probability")
                prob = parse_rational(tok.text, lineno, tok.col)
            edges.append((_Decl(src.text, lineno, src.col), _Decl(dst.text, lineno, dst.col), prob))
        elif head.text == "leaf":
            decl = declare(ln.name(), lineno)
            ln.take("punct", "(", "'('")
            vector = []
            while True:
                tok = ln.take("word", what="a payoff")
                vector.append(parse_rational(tok.text, lineno, tok.col))
                sep = ln.take("punct", what="',' or ')'")
                if sep.text == ")":
                    break
                if sep.text != ",":
                    raise ln.error("expected ',' or ')'", sep)
            if any(not 0 <= p <= 1 for p in vector):
                raise ParseError("leaf payoffs must lie in [0,1]", lineno, decl.col)
            order.append(("leaf", (decl, tuple(vector))))
        elif head.text == "objective":
            player, ptok = ln.integer("a player index")
            if player in objectives:
                raise ln.error(f"objective for player {player} declared twice", ptok)
            kind = ln.take("word", what="'tr' or 'muller'")
            if kind.text == "tr":
                ln.take("punct", "{", "'{'")
                names = []
                while True:
                    tok = ln.peek()
                    if tok is None:
                        raise ln.error("expected '}'")
                    if tok.kind == "punct" and tok.text == "}":
                        ln.pos += 1
                        break
                    if tok.kind == "punct" and tok.text == ",":
                        ln.pos += 1
                        continue
                    t = ln.name()
                    names.append(_Decl(t.text, lineno, t.col))
                objectives[player] = ("tr", names, lineno)
            elif kind.text == "muller":
                tok = ln.take("string", what="a quoted formula")
                try:
                    phi = muller.parse_formula(tok.text[1:-1])
                except ParseError as exc:
                    raise ParseError(f"bad formula: {exc}", lineno, tok.col + exc.column) from None
                objectives[player] = ("muller", phi, lineno)
            else:
                raise ln.error("expected 'tr' or 'muller'", kind)
        else:
            raise ln.error(f"unknown directive {head.text!r}", head)
        ln.done()

    if players is None:
        raise ParseError("missing 'players' declaration", 1, 1)
    if init is None:
        raise ParseError("missing 'init' declaration", 1, 1)
    for player, (_, _, lineno) in objectives.items():
        if player >= players:
            raise ParseError(f"objective for unknown player {player}", lineno, 1)

    names: list[str] = []
    owners: list[int] = []
    out_edges: list[list] = []
    leaf_targets: dict[int, set[str]] = {i: set() for i in range(players)}
    leaves = set()

    def add_vertex(name: str, owner: int) -> int:
        names.append(name)
        owners.append(owner)
        out_edges.append([])
        return len(names) - 1

    for kind, payload in order:
        if kind == "vertex":
            decl, owner = payload
            add_vertex(decl.name, owner)
            continue
        decl, vector = payload
        leaves.add(decl.name)
        if len(vector) != players:
            raise ParseError(f"leaf {decl.name} has {len(vector)} payoffs for {players} players",
                             decl.lineno, decl.col)
        terminals = leaf_gadget(decl.name, vector)
        if len(terminals) == 1 and terminals[0][1] == 1 and terminals[0][0] == decl.name:
            hub = None
        else:
            hub = add_vertex(decl.name, NATURE)
        for label, prob, winners in terminals:
            if hub is not None and label in declared:
                raise ParseError(f"leaf terminal {label} clashes with a declared name",
                                 decl.lineno, decl.col)
            t = add_vertex(label, 0)
            out_edges[t].append((t, None))
            if hub is not None:
                out_edges[hub].append((t, prob))
            for i in winners:
                leaf_targets[i].add(label)

    if len(set(names)) != len(names):
        raise ParseError("generated leaf terminal names collide", 1, 1)
    index = {name: i for i, name in enumerate(names)}

    def resolve(decl: _Decl) -> int:
        if decl.name not in index:
            raise ParseError(f"undeclared name {decl.name}", decl.lineno, decl.col)
        return index[decl.name]

    for src, dst, prob in edges:
        s, d = resolve(src), resolve(dst)
        if src.name in leaves:
            raise ParseError(f"leaf {src.name} cannot have declared edges", src.lineno, src.col)
        out_edges[s].append((d, prob))

    result = []
    for i in range(players):
        kind, payload, lineno = objectives.get(i, ("tr", [], 0))
        if kind == "tr":
            targets = {resolve(d) for d in payload}
            targets |= {index[name] for name in leaf_targets[i]}
            result.append(Reach(frozenset(targets)))
        else:
            if leaves:
                raise ParseError(f"leaf payoffs need a tr objective for player {i}", lineno, 1)
            result.append(Muller(payload))

    arena = Arena(
        players=players,
        names=tuple(names),
        owner=tuple(owners),
        edges=tuple(tuple(e) for e in out_edges),
        init=resolve(init),
    )
    return check_valid(SMG(arena, tuple(result)))


def leaf_gadget(name: str, vector: tuple[Fraction, ...]) -> list[tuple[str, Fraction, list[int]]]:
    """Terminals of a compiled payoff leaf as ``(name, probability, winners)``.

    An integral vector yields the single terminal ``name``.  Otherwise the
    leaf becomes a nature vertex branching with the product distribution into
    one terminal per subset of the players holding a fractional payoff, so
    each player's marginal equals her declared payoff.
    """
    sure = [i for i, p in enumerate(vector) if p == 1]
    fractional = [i for i, p in enumerate(vector) if 0 < p < 1]
    if not fractional:
        return [(name, Fraction(1), sure)]
    out = []
    for mask in range(1 << len(fractional)):
        won = [i for b, i in enumerate(fractional) if mask >> b & 1]
        prob = Fraction(1)
        for i in fractional:
            prob *= vector[i] if i in won else 1 - vector[i]
        label = f"{name}.w" + "-".join(map(str, won)) if won else f"{name}.none"
        out.append((label, prob, sorted(sure + won)))
    return out


def _format_rational(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def serialize_arena(smg: SMG) -> str:
    """Render ``smg`` in expanded form (leaf gadgets appear as plain vertices)."""
    arena = smg.arena
    lines = [f"players {arena.players}", f"init {arena.names[arena.init]}"]
    for v, name in enumerate(arena.names):
        owner = "nature" if arena.owner[v] == NATURE else str(arena.owner[v])
        lines.append(f"vertex {name} owner {owner}")
    for v, out in enumerate(arena.edges):
        for w, p in out:
            suffix = "" if p is None else f" prob {_format_rational(p)}"
            lines.append(f"edge {arena.names[v]} {arena.names[w]}{suffix}")
    for i, obj in enumerate(smg.objectives):
        if isinstance(obj, Reach):
            targets = " ".join(arena.names[t] for t in sorted(obj.targets))
            lines.append(f"objective {i} tr {{{targets}}}")
        else:
            lines.append(f'objective {i} muller "{muller.to_text(obj.formula)}"')
    return "\n".join(lines) + "\n"


def isomorphic(a: SMG, b: SMG) -> bool:
    """Name-preserving structural equality of two games."""
    if a.players != b.players or set(a.arena.names) != set(b.arena.names):
        return False
    if a.arena.names[a.arena.init] != b.arena.names[b.arena.init]:
        return False

    def view(g: SMG):
        arena = g.arena
        verts = {}
        for v, name in enumerate(arena.names):
            out = {arena.names[w]: p for w, p in arena.edges[v]}
            verts[name] = (arena.owner[v], out)
        objs = []
        for obj in g.objectives:
            if isinstance(obj, Reach):
                objs.append(("tr", frozenset(arena.names[t] for t in obj.targets)))
            else:
                objs.append(("muller", obj.formula))
        return verts, objs

    return view(a) == view(b)


# -- profiles ------------------------------------------------------------------

def parse_profile(text: str, smg: SMG) -> dict[int, dict[int, Fraction]]:
    """Parse ``strategy`` lines into a stationary profile keyed by vertex index."""
    arena = smg.arena
    profile: dict[int, dict[int, Fraction]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw)
        tokens = _tokenize(body, lineno)
        if not tokens:
            continue
        ln = _Line(tokens, lineno, body)
        ln.take("word", "strategy", "'strategy'")
        player, ptok = ln.integer("a player index")
        ln.take("word", "at", "'at'")
        vtok = ln.name()
        if vtok.text not in arena.names:
            raise ln.error(f"undeclared vertex {vtok.text}", vtok)
        v = arena.index(vtok.text)
        if arena.owner[v] != player:
            raise ln.error(f"vertex {vtok.text} is not owned by player {player}", ptok)
        if v in profile:
            raise ln.error(f"vertex {vtok.text} assigned twice", vtok)
        ln.take("arrow", what="'->'")
        dist: dict[int, Fraction] = {}
        while ln.peek() is not None:
            wtok = ln.name()
            if wtok.text not in arena.names:
                raise ln.error(f"undeclared vertex {wtok.text}", wtok)
            w = arena.index(wtok.text)
            prob = Fraction(1)
            nxt = ln.peek()
            if nxt is not None and nxt.kind == "punct" and nxt.text == ":":
                ln.pos += 1
                ptok2 = ln.take("word", what="a probability")
                prob = parse_rational(ptok2.text, lineno, ptok2.col)
            nxt = ln.peek()
            if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                ln.pos += 1
            dist[w] = dist.get(w, Fraction(0)) + prob
        if not dist:
            raise ln.error("expected at least one successor")
        if sum(dist.values()) != 1:
            raise ParseError(f"distribution at {vtok.text} sums to {sum(dist.values())}", lineno, vtok.col)
        if any(w not in arena.next(v) for w in dist):
            raise ParseError(f"distribution at {vtok.text} leaves its successors", lineno, vtok.col)
        profile[v] = dist
    return profile


def serialize_profile(profile, smg: SMG) -> str:
    arena = smg.arena
    lines = []
    for v, dist in sorted(stationary(profile).items()):
        if len(dist) == 1:
            moves = arena.names[next(iter(dist))]
        else:
            moves = " ".join(f"{arena.names[w]}: {_format_rational(p)}" for w, p in sorted(dist.items()))
        lines.append(f"strategy {arena.owner[v]} at {arena.names[v]} -> {moves}")
    return "\n".join(lines) + ("\n" if lines else "")
