"""Exact payoffs of stationary profiles and a seeded Monte-Carlo cross-check."""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .arena import NATURE, SMG, Profile, Reach, stationary, uniform
from .errors import NotAnEndComponent, ProfileError
from .graph import bottom_components, can_reach, is_end_component
from .linalg import solve_sparse

ValueMap = tuple  # tuple[Fraction, ...] indexed by vertex
PayoffVector = tuple  # tuple[Fraction, ...] indexed by player


@dataclass(frozen=True)
class MarkovChain:
    rows: tuple[dict[int, Fraction], ...]
    init: int

    @property
    def n(self) -> int:
        return len(self.rows)

    def succ(self, v: int) -> list[int]:
        return [w for w, p in self.rows[v].items() if p > 0]

    def bsccs(self) -> list[frozenset[int]]:
        return sorted(bottom_components(self.n, self.succ), key=lambda c: sorted(c))


def induce_chain(smg: SMG, profile: Profile) -> MarkovChain:
    """Resolve every player vertex with ``profile``; nature rows come from the arena."""
    arena = smg.arena
    dists = stationary(profile)
    rows = []
    for v in range(arena.n):
        if arena.owner[v] == NATURE:
            rows.append({w: p for w, p in arena.edges[v] if p > 0})
            continue
        if v not in dists:
            raise ProfileError(arena.names[v], "profile does not cover vertex")
        dist = dists[v]
        if sum(dist.values(), Fraction(0)) != 1 or any(w not in arena.next(v) for w in dist):
            raise ProfileError(arena.names[v], "not a distribution over next(v)")
        rows.append(dict(dist))
    return MarkovChain(tuple(rows), arena.init)


def reach_probabilities(chain: MarkovChain, target: Iterable[int]) -> ValueMap:
    """Probability of eventually visiting ``target`` from each vertex."""
    target = frozenset(target)
    reach = can_reach(chain.n, chain.succ, target)
    unknowns = [v for v in range(chain.n) if v in reach and v not in target]
    coeffs = {}
    constant = {}
    for v in unknowns:
        coeffs[v] = {w: p for w, p in chain.rows[v].items() if w in reach and w not in target}
        constant[v] = sum((p for w, p in chain.rows[v].items() if w in target), Fraction(0))
    solved = solve_sparse(unknowns, coeffs, constant)
    values = []
    for v in range(chain.n):
        if v in target:
            values.append(Fraction(1))
        elif v in reach:
            values.append(solved[v])
        else:
            values.append(Fraction(0))
    return tuple(values)


def winning_bottom(smg: SMG, chain: MarkovChain, player: int) -> frozenset[int]:
    obj = smg.objectives[player]
    if isinstance(obj, Reach):
        return frozenset(obj.targets)
    return frozenset().union(*(c for c in chain.bsccs() if smg.wins(player, c)))


def chain_values(smg: SMG, chain: MarkovChain, player: int) -> ValueMap:
    """Per-vertex winning probability of ``player`` in ``chain``.

    ``z`` is 1 on the winning bottom components, 0 where they are unreachable,
    and harmonic elsewhere.
    """
    bottom = winning_bottom(smg, chain, player)
    z = reach_probabilities(chain, bottom)
    for v in range(chain.n):
        assert 0 <= z[v] <= 1
        if v not in bottom and z[v] != 0:
            assert z[v] == sum(p * z[w] for w, p in chain.rows[v].items()), "z not harmonic"
    return z


def payoff_profile(smg: SMG, profile: Profile) -> tuple[PayoffVector, list[ValueMap]]:
    chain = induce_chain(smg, profile)
    zs = [chain_values(smg, chain, i) for i in range(smg.players)]
    return tuple(z[chain.init] for z in zs), zs


def payoffs(smg: SMG, profile: Profile) -> PayoffVector:
    return payoff_profile(smg, profile)[0]


def ec_sure_strategy(smg: SMG, player: int, component: Iterable[int]) -> dict[int, dict[int, Fraction]]:
    """Stationary strategy for ``player`` that stays in ``component`` and visits all of it.

    Inside the component the player moves uniformly over the successors that
    remain in it; elsewhere she takes her first successor.
    """
    arena = smg.arena
    members = frozenset(component)
    if not is_end_component(smg, player, members):
        names = sorted(arena.names[v] for v in members)
        raise NotAnEndComponent(f"not an end component for player {player}: {names}")
    strategy = {}
    for v in arena.vertices_of(player):
        if v in members:
            strategy[v] = uniform(w for w in arena.next(v) if w in members)
        else:
            strategy[v] = {arena.next(v)[0]: Fraction(1)}
    return strategy


def component_bsccs(smg: SMG, strategy: Mapping[int, Mapping[int, Fraction]],
                    component: Iterable[int]) -> list[frozenset[int]]:
    """Bottom SCCs of the chain on ``component`` when ``strategy`` is played inside it."""
    arena = smg.arena
    members = frozenset(component)

    def succ(v):
        if v not in members:
            return []
        if v in strategy:
            return [w for w, p in strategy[v].items() if p > 0]
        return list(arena.next(v))

    comps = bottom_components(arena.n, succ)
    return sorted((c for c in comps if c <= members), key=lambda c: sorted(c))


@dataclass
class SimulationResult:
    payoffs: tuple[float, ...]
    visits: list[int]
    runs: int
    horizon: int


def simulate(smg: SMG, profile: Profile, runs: int, horizon: int, seed: int) -> SimulationResult:
    """Empirical payoffs from ``runs`` seeded plays of length ``horizon``.

    Reachability counts a win when a target is hit; Muller objectives are
    judged on the vertices seen in the second half of the play, which only
    approximates the infinity set.
    """
    if runs < 1 or horizon < 1:
        raise ValueError("runs and horizon must be positive")
    chain = induce_chain(smg, profile)
    rng = random.Random(seed)
    table = []
    for row in chain.rows:
        targets, cumulative, acc = [], [], Fraction(0)
        for w, p in sorted(row.items()):
            if p > 0:
                acc += p
                targets.append(w)
                cumulative.append(float(acc))
        cumulative[-1] = 1.0
        table.append((targets, cumulative))
    wins = [0] * smg.players
    visits = [0] * chain.n
    half = horizon // 2
    for _ in range(runs):
        v = chain.init
        seen_all = {v}
        tail: set[int] = set()
        visits[v] += 1
        for step in range(1, horizon + 1):
            targets, cumulative = table[v]
            v = targets[0] if len(targets) == 1 else targets[bisect.bisect_right(cumulative, rng.random())]
            visits[v] += 1
            seen_all.add(v)
            if step > half:
                tail.add(v)
        for i, obj in enumerate(smg.objectives):
            if isinstance(obj, Reach):
                wins[i] += bool(seen_all & obj.targets)
            else:
                wins[i] += smg.wins(i, tail)
    return SimulationResult(tuple(w / runs for w in wins), visits, runs, horizon)
