"""Game arenas, objectives, supports and strategy profiles.

Vertices are addressed by their index ``0..n-1`` everywhere inside the
library; names only matter for I/O and Muller formulas.  Probabilities are
``fractions.Fraction`` throughout.

A *profile* is a plain mapping ``vertex -> choice`` over player-owned
vertices, where a choice is either a successor index (a positional move) or a
mapping ``successor -> Fraction`` (a stationary distribution).  Use
:func:`stationary` to normalise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Union

from . import muller
from .errors import ProfileError, SupportError, ValidationError

NATURE = -1

Edge = tuple[int, Optional[Fraction]]
Support = frozenset  # frozenset[tuple[int, int]] of (source, target) player edges
Distribution = Mapping[int, Fraction]
Choice = Union[int, Distribution]
Profile = Mapping[int, Choice]


@dataclass(frozen=True)
class Arena:
    players: int
    names: tuple[str, ...]
    owner: tuple[int, ...]
    edges: tuple[tuple[Edge, ...], ...]
    init: int

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no vertex named {name!r}") from None

    @cached_property
    def _next(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(w for w, p in out if p is None or p > 0) for out in self.edges
        )

    def next(self, v: int) -> tuple[int, ...]:
        """Successors reachable with positive probability (or any ⊥ edge)."""
        return self._next[v]

    def prob(self, v: int, w: int) -> Fraction:
        for target, p in self.edges[v]:
            if target == w:
                return p if p is not None else Fraction(0)
        return Fraction(0)

    def is_nature(self, v: int) -> bool:
        return self.owner[v] == NATURE

    def is_terminal(self, v: int) -> bool:
        return self._next[v] == (v,)

    @cached_property
    def terminals(self) -> frozenset[int]:
        return frozenset(v for v in range(self.n) if self.is_terminal(v))

    def vertices_of(self, player: int) -> tuple[int, ...]:
        return tuple(v for v in range(self.n) if self.owner[v] == player)

    def player_vertices(self, players: Iterable[int] | None = None) -> tuple[int, ...]:
        if players is None:
            return tuple(v for v in range(self.n) if self.owner[v] != NATURE)
        wanted = set(players)
        return tuple(v for v in range(self.n) if self.owner[v] in wanted)

    def player_edges(self, players: Iterable[int] | None = None) -> frozenset[tuple[int, int]]:
        return frozenset(
            (v, w) for v in self.player_vertices(players) for w in self.next(v)
        )

    def describe_edge(self, v: int, w: int) -> str:
        return f"{self.names[v]}->{self.names[w]}"


@dataclass(frozen=True)
class Reach:
    """Terminal reachability: win iff some vertex of ``targets`` is visited."""

    targets: frozenset[int]


@dataclass(frozen=True)
class Muller:
    formula: muller.BoolFormula


Objective = Union[Reach, Muller]


@dataclass(frozen=True)
class SMG:
    arena: Arena
    objectives: tuple[Objective, ...]

    @property
    def players(self) -> int:
        return self.arena.players

    @property
    def n(self) -> int:
        return self.arena.n

    def wins(self, player: int, inf_set: Iterable[int]) -> bool:
        """Whether a play with infinity set ``inf_set`` satisfies player's objective."""
        obj = self.objectives[player]
        inf = set(inf_set)
        if isinstance(obj, Reach):
            # targets are terminal, so reaching one means inf(play) == {target}
            return bool(inf & obj.targets)
        names = self.arena.names
        return muller.evaluate(obj.formula, {names[v] for v in inf}.__contains__)

    def with_arena(self, arena: Arena) -> "SMG":
        return replace(self, arena=arena)


def make_arena(players: int, vertices: Iterable[tuple[str, int]],
               edges: Iterable[tuple[str, str, Fraction | int | str | None]],
               init: str) -> Arena:
    """Build an arena from named vertices ``(name, owner)`` and edges ``(src, dst, prob)``.

    ``owner`` is a player index or ``NATURE``; ``prob`` is ``None`` for player edges.
    """
    vertices = list(vertices)
    names = tuple(name for name, _ in vertices)
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise ValidationError(["duplicate vertex names"])
    out: list[list[Edge]] = [[] for _ in names]
    for src, dst, p in edges:
        out[index[src]].append((index[dst], None if p is None else Fraction(p)))
    return Arena(
        players=players,
        names=names,
        owner=tuple(owner for _, owner in vertices),
        edges=tuple(tuple(e) for e in out),
        init=index[init],
    )


def validate_arena(smg: SMG) -> list[str]:
    """Return every violated well-formedness condition; empty when the game is valid."""
    arena = smg.arena
    problems: list[str] = []
    if arena.players < 1:
        problems.append("at least one player is required")
    if not 0 <= arena.init < arena.n:
        problems.append("initial vertex out of range")
    for v in range(arena.n):
        name = arena.names[v]
        owner = arena.owner[v]
        if owner != NATURE and not 0 <= owner < arena.players:
            problems.append(f"vertex {name} has unknown owner {owner}")
        targets = [w for w, _ in arena.edges[v]]
        if len(set(targets)) != len(targets):
            problems.append(f"vertex {name} has duplicate edges to the same target")
        if any(not 0 <= w < arena.n for w in targets):
            problems.append(f"vertex {name} has an edge to an unknown vertex")
            continue
        if not arena.next(v):
            problems.append(f"vertex {name} has no successor")
        if owner == NATURE:
            if any(p is None for _, p in arena.edges[v]):
                problems.append(f"nature vertex {name} has an unlabelled edge")
                continue
            for w, p in arena.edges[v]:
                if not 0 <= p <= 1:
                    problems.append(f"edge {arena.describe_edge(v, w)} has probability {p} outside [0,1]")
            total = sum((p for _, p in arena.edges[v]), Fraction(0))
            if total != 1:
                problems.append(f"nature vertex {name}: distribution sums to {total}")
        elif any(p is not None for _, p in arena.edges[v]):
            problems.append(f"player vertex {name} has a probability-labelled edge")
    if len(smg.objectives) != arena.players:
        problems.append(
            f"{len(smg.objectives)} objectives declared for {arena.players} players"
        )
    for i, obj in enumerate(smg.objectives):
        if isinstance(obj, Reach):
            for t in sorted(obj.targets):
                if not 0 <= t < arena.n:
                    problems.append(f"player {i}: target index {t} out of range")
                elif not arena.is_terminal(t):
                    problems.append(f"player {i}: target {arena.names[t]} is not terminal")
        else:
            for name in sorted(muller.variables(obj.formula) - set(arena.names)):
                problems.append(f"player {i}: formula names unknown vertex {name}")
    return problems


def check_valid(smg: SMG) -> SMG:
    problems = validate_arena(smg)
    if problems:
        raise ValidationError(problems)
    return smg


# -- supports ------------------------------------------------------------------

def _scope_players(smg: SMG, scope: str) -> list[int]:
    if scope == "system":
        return [0]
    if scope == "environment":
        return list(range(1, smg.players))
    if scope == "all":
        return list(range(smg.players))
    raise ValueError(f"unknown support scope {scope!r}")


def vertex_supports(arena: Arena, v: int) -> list[frozenset[tuple[int, int]]]:
    """Nonempty subsets of the edges at ``v`` ordered by bitmask over successor order."""
    succ = arena.next(v)
    out = []
    for mask in range(1, 1 << len(succ)):
        out.append(frozenset((v, w) for bit, w in enumerate(succ) if mask >> bit & 1))
    return out


def support_count(smg: SMG, scope: str = "all") -> int:
    count = 1
    for v in smg.arena.player_vertices(_scope_players(smg, scope)):
        count *= (1 << len(smg.arena.next(v))) - 1
    return count


def enumerate_supports(smg: SMG, scope: str = "all") -> Iterator[Support]:
    """Yield every support union for ``scope`` in {system, environment, all} exactly once."""
    owned = smg.arena.player_vertices(_scope_players(smg, scope))
    choices = [vertex_supports(smg.arena, v) for v in owned]
    for combo in itertools.product(*choices):
        yield frozenset().union(*combo)


def restrict_support(smg: SMG, support: Iterable[tuple[int, int]],
                     drop_player: int | None = None) -> SMG:
    """The subarena keeping only player edges in ``support``.

    Vertices of ``drop_player`` keep all their edges; nature edges are untouched.
    """
    arena = smg.arena
    support = frozenset(support)
    legal = arena.player_edges()
    stray = sorted(support - legal)
    if stray:
        v, w = stray[0]
        where = arena.describe_edge(v, w) if 0 <= v < arena.n and 0 <= w < arena.n else f"({v},{w})"
        raise SupportError(where, "not a player edge")
    edges = []
    for v in range(arena.n):
        owner = arena.owner[v]
        if owner == NATURE or owner == drop_player:
            edges.append(arena.edges[v])
            continue
        kept = tuple(e for e in arena.edges[v] if (v, e[0]) in support)
        if not kept:
            raise SupportError(arena.names[v])
        edges.append(kept)
    return smg.with_arena(replace(arena, edges=tuple(edges)))


def fix_positional(smg: SMG, system_support: Iterable[tuple[int, int]],
                   env: Mapping[int, int]) -> SMG:
    """Prune to the system support plus the single edge chosen at each environment vertex."""
    arena = smg.arena
    chosen = set(system_support)
    for v in arena.player_vertices(range(1, smg.players)):
        if v not in env:
            raise ProfileError(arena.names[v], "environment profile does not cover vertex")
        if env[v] not in arena.next(v):
            raise ProfileError(arena.names[v], "chosen successor is not an edge of vertex")
        chosen.add((v, env[v]))
    return restrict_support(smg, chosen)


# -- profiles ------------------------------------------------------------------

def stationary(profile: Profile) -> dict[int, dict[int, Fraction]]:
    """Normalise positional choices to point distributions."""
    out = {}
    for v, choice in profile.items():
        if isinstance(choice, int):
            out[v] = {choice: Fraction(1)}
        else:
            out[v] = {w: Fraction(p) for w, p in choice.items() if p != 0}
    return out


def uniform(successors: Iterable[int]) -> dict[int, Fraction]:
    succ = list(successors)
    return {w: Fraction(1, len(succ)) for w in succ}


def support_of(profile: Profile) -> frozenset[tuple[int, int]]:
    return frozenset(
        (v, w) for v, dist in stationary(profile).items() for w, p in dist.items() if p > 0
    )


def validate_profile(arena: Arena, profile: Profile,
                     players: Iterable[int] | None = None) -> None:
    """Raise ``ProfileError`` unless ``profile`` is a legal stationary strategy for ``players``."""
    dists = stationary(profile)
    for v in arena.player_vertices(players):
        if v not in dists:
            raise ProfileError(arena.names[v], "profile does not cover vertex")
    for v, dist in dists.items():
        if not 0 <= v < arena.n or arena.owner[v] == NATURE:
            raise ProfileError(str(v), "profile assigns a move at a non-player vertex")
        if any(p < 0 for p in dist.values()):
            raise ProfileError(arena.names[v], "negative probability")
        if sum(dist.values(), Fraction(0)) != 1:
            raise ProfileError(arena.names[v], "distribution does not sum to 1")
        bad = [w for w in dist if w not in arena.next(v)]
        if bad:
            raise ProfileError(arena.names[v], "distribution leaves next(v)")


def positional_choices(arena: Arena, players: Iterable[int]) -> tuple[tuple[int, ...], list[tuple[int, ...]]]:
    owned = arena.player_vertices(players)
    return owned, [arena.next(v) for v in owned]


def positional_profiles(arena: Arena, players: Iterable[int]) -> Iterator[dict[int, int]]:
    """All positional strategy tuples for ``players`` (successor-order product)."""
    owned, options = positional_choices(arena, players)
    for combo in itertools.product(*options):
        yield dict(zip(owned, combo))


def positional_count(arena: Arena, players: Iterable[int]) -> int:
    count = 1
    for v in arena.player_vertices(players):
        count *= len(arena.next(v))
    return count
