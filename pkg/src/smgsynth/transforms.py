"""Game-to-game reductions: bounded-memory unfolding and the cooperative-to-strict gadget."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Mapping

from . import muller
from .arena import SMG, Arena, Muller, Reach, check_valid
from .errors import BoundExceeded, SMGError, TerminationRequired
from .graph import check_almost_sure_termination
from .limits import limit
from .solvers import NCRSP, Verdict, solve_positional

State = tuple[tuple[int, ...], int]  # (history window, current vertex)


@dataclass(frozen=True)
class PureTMemory:
    """Deterministic strategy of ``player`` reading the last ``t`` vertices before the current one."""

    t: int
    player: int
    moves: dict[State, int]

    def choose(self, history: tuple[int, ...], vertex: int) -> int:
        return self.moves[(history[-self.t:] if self.t else (), vertex)]


@dataclass(frozen=True)
class Unfolding:
    game: SMG
    states: tuple[State, ...]
    t: int

    def original(self, u: int) -> int:
        return self.states[u][1]

    def index(self, state: State) -> int:
        return self._lookup[state]

    @cached_property
    def _lookup(self) -> dict[State, int]:
        return {s: k for k, s in enumerate(self.states)}

    def positional_image(self, memory: Mapping[int, PureTMemory]) -> dict[int, int]:
        """Positional profile of the unfolded game that plays like the given t-memory strategies."""
        arena = self.game.arena
        out = {}
        for u, (history, v) in enumerate(self.states):
            owner = arena.owner[u]
            if owner in memory:
                w = memory[owner].moves[(history, v)]
                out[u] = next(x for x in arena.next(u) if self.states[x][1] == w)
        return out

    def to_memory(self, profile: Mapping[int, int], player: int) -> PureTMemory:
        """Read a positional strategy of the unfolded game back as a t-memory strategy."""
        moves = {}
        for u, (history, v) in enumerate(self.states):
            if self.game.arena.owner[u] == player and u in profile:
                moves[(history, v)] = self.states[profile[u]][1]
        return PureTMemory(self.t, player, moves)


def _shift(history: tuple[int, ...], v: int, t: int) -> tuple[int, ...]:
    window = history + (v,)
    return window[len(window) - t:] if t else ()


def unfold_t_memory(smg: SMG, t: int, full: bool = False) -> Unfolding:
    """Product of the arena with a window of the last ``t`` visited vertices.

    By default only states reachable from the initial vertex are built;
    ``full`` adds every window over the vertex set (for auditing only).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    arena = smg.arena
    bound = limit("SMGSYNTH_UNFOLD_LIMIT")
    start: State = ((), arena.init)
    states: list[State] = [start]
    index = {start: 0}
    if full:
        count = sum(arena.n ** (k + 1) for k in range(t + 1))
        if count > bound:
            raise BoundExceeded("unfolded vertices", count, bound)
        for k in range(t + 1):
            for history in itertools.product(range(arena.n), repeat=k):
                for v in range(arena.n):
                    if (history, v) not in index:
                        index[(history, v)] = len(states)
                        states.append((history, v))
    edges: list[list] = []
    k = 0
    while k < len(states):
        history, v = states[k]
        out = []
        for w, p in arena.edges[v]:
            nxt = (_shift(history, v, t), w)
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
                if len(states) > bound:
                    raise BoundExceeded("unfolded vertices", len(states), bound)
            out.append((index[nxt], p))
        edges.append(tuple(out))
        k += 1

    names = tuple("/".join(arena.names[x] for x in history + (v,)) for history, v in states)
    if len(set(names)) != len(names):
        raise SMGError("vertex names containing '/' make unfolded names ambiguous")
    unfolded = Arena(
        players=arena.players,
        names=names,
        owner=tuple(arena.owner[v] for _, v in states),
        edges=tuple(edges),
        init=0,
    )
    copies: dict[int, list[int]] = {v: [] for v in range(arena.n)}
    for u, (_, v) in enumerate(states):
        copies[v].append(u)
    objectives = []
    for obj in smg.objectives:
        if isinstance(obj, Reach):
            # only terminal copies are targets; any copy of a target leads to one surely
            targets = [u for v in obj.targets for u in copies[v] if unfolded.is_terminal(u)]
            objectives.append(Reach(frozenset(targets)))
        else:
            mapping = {
                arena.names[v]: muller.disj([muller.Var(names[u]) for u in copies[v]])
                for v in range(arena.n)
            }
            objectives.append(Muller(muller.substitute(obj.formula, mapping)))
    game = check_valid(SMG(unfolded, tuple(objectives)))
    return Unfolding(game, tuple(states), t)


def solve_t_memory(smg: SMG, t: int, mu, problem: str = NCRSP) -> Verdict:
    """Decide the problem for pure t-memory strategies through the unfolded game."""
    unfolding = unfold_t_memory(smg, t)
    verdict = solve_positional(unfolding.game, mu, problem)
    if verdict.strategy is not None:
        choice = {u: next(iter(d)) for u, d in verdict.strategy.items()}
        verdict.memory = unfolding.to_memory(choice, 0)
    return verdict


def crsp_to_ncrspgt(smg: SMG) -> SMG:
    """Add a choiceless system player whose objective is the complement of player 0's.

    The new system is player 0; every original player ``i`` becomes ``i + 1``.
    Cooperative synthesis for the original game at threshold ``mu`` holds iff
    strict non-cooperative synthesis fails for the result at ``1 - mu``.
    """
    arena = smg.arena
    target = smg.objectives[0]
    if isinstance(target, Reach):
        if not check_almost_sure_termination(smg):
            raise TerminationRequired(
                "complementing a reachability objective needs almost-sure termination, "
                "but some strategy profile can stay away from the terminal vertices forever"
            )
        complement = Reach(frozenset(v for v in arena.terminals if v not in target.targets))
    else:
        complement = Muller(muller.negate(target.formula))
    shifted = replace(
        arena,
        players=arena.players + 1,
        owner=tuple(o if o < 0 else o + 1 for o in arena.owner),
    )
    return check_valid(SMG(shifted, (complement,) + tuple(smg.objectives)))

