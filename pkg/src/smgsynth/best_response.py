"""Best responses of one player against fixed stationary opponents.

The opponents are folded into nature, leaving an MDP for the deviating
player.  Her optimal payoff from a vertex is the maximal probability of
reaching the union of end components that satisfy her objective; it is
computed exactly by policy iteration, started from a policy that reaches the
target with positive probability from every vertex that can reach it at all
(so every policy evaluation is a nonsingular system and the least fixed point
is selected).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable

from .arena import NATURE, SMG, Profile, stationary
from .chain import ValueMap
from .errors import ProfileError
from .graph import can_reach, winning_end_components
from .linalg import solve_sparse


def fold(smg: SMG, others: Profile, player: int) -> SMG:
    """Turn every vertex not owned by ``player`` (nor nature) into a nature vertex."""
    arena = smg.arena
    dists = stationary(others)
    owner = list(arena.owner)
    edges = list(arena.edges)
    for v in range(arena.n):
        if owner[v] in (NATURE, player):
            continue
        if v not in dists:
            raise ProfileError(arena.names[v], "opponent profile does not cover vertex")
        dist = dists[v]
        if sum(dist.values(), Fraction(0)) != 1 or any(w not in arena.next(v) for w in dist):
            raise ProfileError(arena.names[v], "not a distribution over next(v)")
        owner[v] = NATURE
        edges[v] = tuple((w, p) for w, p in sorted(dist.items()) if p > 0)
    return smg.with_arena(replace(arena, owner=tuple(owner), edges=tuple(edges)))


def _distances(mdp: SMG, target: frozenset[int]) -> dict[int, int]:
    arena = mdp.arena
    preds: list[list[int]] = [[] for _ in range(arena.n)]
    for v in range(arena.n):
        for w in arena.next(v):
            preds[w].append(v)
    dist = {t: 0 for t in target}
    queue = deque(sorted(target))
    while queue:
        w = queue.popleft()
        for v in preds[w]:
            if v not in dist:
                dist[v] = dist[w] + 1
                queue.append(v)
    return dist


def max_reachability(mdp: SMG, player: int, target: Iterable[int]) -> tuple[ValueMap, dict[int, int]]:
    """Least fixed point of the max-reachability equations and an optimal positional policy.

    ``mdp`` must have every non-nature vertex owned by ``player`` (see :func:`fold`).
    Ties are broken towards the lowest-numbered successor.
    """
    arena = mdp.arena
    target = frozenset(target)
    reach = can_reach(arena.n, arena.next, target)
    dist = _distances(mdp, target)
    controlled = [v for v in range(arena.n) if arena.owner[v] == player]
    if any(arena.owner[v] not in (player, NATURE) for v in range(arena.n)):
        raise ValueError("max_reachability needs all other players folded into nature")
    policy = {}
    for v in controlled:
        succ = arena.next(v)
        if v in reach and v not in target:
            policy[v] = min(w for w in succ if dist.get(w, -1) == dist[v] - 1)
        else:
            policy[v] = min(succ)
    unknowns = [v for v in range(arena.n) if v in reach and v not in target]

    def evaluate(pol):
        coeffs, constant = {}, {}
        for v in unknowns:
            row = {pol[v]: Fraction(1)} if v in pol else {w: p for w, p in arena.edges[v] if p > 0}
            coeffs[v] = {w: p for w, p in row.items() if w in reach and w not in target}
            constant[v] = sum((p for w, p in row.items() if w in target), Fraction(0))
        solved = solve_sparse(unknowns, coeffs, constant)
        return tuple(
            Fraction(1) if v in target else solved.get(v, Fraction(0)) for v in range(arena.n)
        )

    values = evaluate(policy)
    while True:
        switched = False
        for v in controlled:
            if v not in reach or v in target:
                continue
            best = max(values[w] for w in arena.next(v))
            if best > values[policy[v]]:
                policy[v] = min(w for w in arena.next(v) if values[w] == best)
                switched = True
        if not switched:
            return values, policy
        improved = evaluate(policy)
        assert all(a >= b for a, b in zip(improved, values)), "policy iteration not monotone"
        values = improved


@dataclass(frozen=True)
class BestResponse:
    values: ValueMap
    strategy: dict[int, dict[int, Fraction]]
    winning_union: frozenset[int]


def best_response(smg: SMG, others: Profile, player: int) -> BestResponse:
    """Optimal values for ``player`` and a stationary strategy attaining them everywhere.

    Inside the winning union each vertex follows the first winning end
    component that contains it, moving uniformly within it; outside, the
    optimal reachability policy is played.
    """
    mdp = fold(smg, others, player)
    components = winning_end_components(mdp, player)
    union = frozenset().union(*components)
    values, policy = max_reachability(mdp, player, union)
    strategy = {}
    for v in mdp.arena.vertices_of(player):
        home = next((c for c in components if v in c), None)
        if home is None:
            strategy[v] = {policy[v]: Fraction(1)}
        else:
            inside = [w for w in mdp.arena.next(v) if w in home]
            strategy[v] = {w: Fraction(1, len(inside)) for w in inside}
    return BestResponse(values, strategy, union)


def best_response_values(smg: SMG, others: Profile, player: int) -> ValueMap:
    return best_response(smg, others, player).values
