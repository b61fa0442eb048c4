"""Graph analyses: SCCs, bottom SCCs, end components, and the B/R/E sets.

Vertex sets are ``frozenset[int]``.  End components are enumerated
exhaustively over subsets of each strongly connected component, because the
union of the components that satisfy a Muller formula is not determined by
the maximal components alone.
"""

from __future__ import annotations

from typing import Callable, Collection, Iterable

from .arena import SMG, Reach, restrict_support
from .errors import BoundExceeded
from .limits import limit

VertexSet = frozenset


def strongly_connected_components(n: int, succ: Callable[[int], Iterable[int]],
                                  within: Collection[int] | None = None) -> list[frozenset[int]]:
    """Tarjan's algorithm, iterative; optionally restricted to the vertices in ``within``."""
    nodes = range(n) if within is None else sorted(within)
    allowed = None if within is None else set(within)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[frozenset[int]] = []
    counter = 0

    def neighbours(v):
        return [w for w in succ(v) if allowed is None or w in allowed]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(neighbours(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(neighbours(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(frozenset(comp))
    return out


def bottom_components(n: int, succ: Callable[[int], Iterable[int]]) -> list[frozenset[int]]:
    comps = strongly_connected_components(n, succ)
    return [c for c in comps if all(w in c for v in c for w in succ(v))]


def bottom_sccs(smg: SMG) -> list[frozenset[int]]:
    """SCCs ``C`` of the arena graph with ``next(c) ⊆ C`` for every ``c`` in ``C``."""
    comps = bottom_components(smg.n, smg.arena.next)
    return sorted(comps, key=lambda c: sorted(c))


def can_reach(n: int, succ: Callable[[int], Iterable[int]], target: Iterable[int]) -> frozenset[int]:
    """Vertices with a (possibly empty) path into ``target``."""
    preds: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in succ(v):
            preds[w].append(v)
    seen = set(target)
    todo = list(seen)
    while todo:
        w = todo.pop()
        for v in preds[w]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return frozenset(seen)


def reachable_from(n: int, succ: Callable[[int], Iterable[int]], source: int) -> frozenset[int]:
    seen = {source}
    todo = [source]
    while todo:
        v = todo.pop()
        for w in succ(v):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen)


def _free_set(free: int | Collection[int]) -> set[int]:
    return {free} if isinstance(free, int) else set(free)


def is_end_component(smg: SMG, free: int | Collection[int], candidate: Iterable[int]) -> bool:
    """The three end-component conditions, checked directly."""
    arena = smg.arena
    members = set(candidate)
    if not members:
        return False
    controllers = _free_set(free)
    for v in members:
        succ = arena.next(v)
        if arena.owner[v] in controllers:
            if not any(w in members for w in succ):
                return False
        elif not all(w in members for w in succ):
            return False
    comps = strongly_connected_components(arena.n, arena.next, within=members)
    return len(comps) == 1


def end_components(smg: SMG, free_player: int | Collection[int],
                   bound: int | None = None) -> list[frozenset[int]]:
    """Every end component of the arena read as an MDP controlled by ``free_player``.

    Vertices of other players count as uncontrolled, so restrict them first.
    Candidates are all subsets of each SCC; an SCC larger than ``bound``
    (default ``SMGSYNTH_EC_BOUND``) is refused.
    """
    arena = smg.arena
    bound = limit("SMGSYNTH_EC_BOUND") if bound is None else bound
    controllers = _free_set(free_player)
    succ_mask = [0] * arena.n
    for v in range(arena.n):
        for w in arena.next(v):
            succ_mask[v] |= 1 << w
    found: list[frozenset[int]] = []
    for comp in strongly_connected_components(arena.n, arena.next):
        members = sorted(comp)
        if len(members) > bound:
            raise BoundExceeded("end-component candidate pool", len(members), bound)
        for sub in range(1, 1 << len(members)):
            chosen = [members[b] for b in range(len(members)) if sub >> b & 1]
            mask = 0
            for v in chosen:
                mask |= 1 << v
            if _ec_mask(arena, controllers, succ_mask, chosen, mask):
                found.append(frozenset(chosen))
    return sorted(found, key=lambda e: (len(e), sorted(e)))


def _ec_mask(arena, controllers, succ_mask, chosen, mask) -> bool:
    for v in chosen:
        if arena.owner[v] in controllers:
            if not succ_mask[v] & mask:
                return False
        elif succ_mask[v] & ~mask:
            return False
    # strongly connected inside mask: forward and backward closure from one member
    start = chosen[0]
    fwd = _closure(start, lambda v: succ_mask[v] & mask)
    if fwd != mask:
        return False
    pred_mask = {v: 0 for v in chosen}
    for v in chosen:
        for w in chosen:
            if succ_mask[v] >> w & 1:
                pred_mask[w] |= 1 << v
    return _closure(start, lambda v: pred_mask[v]) == mask


def _closure(start: int, step: Callable[[int], int]) -> int:
    seen = 1 << start
    todo = [start]
    while todo:
        v = todo.pop()
        new = step(v) & ~seen
        seen |= new
        while new:
            low = new & -new
            todo.append(low.bit_length() - 1)
            new ^= low
    return seen


def maximal_end_components(smg: SMG, free: int | Collection[int]) -> list[frozenset[int]]:
    """Polynomial maximal-EC decomposition by iterated SCC refinement."""
    arena = smg.arena
    controllers = _free_set(free)
    alive = set(range(arena.n))
    while True:
        comp_of = {}
        comps = strongly_connected_components(arena.n, arena.next, within=alive)
        for idx, c in enumerate(comps):
            for v in c:
                comp_of[v] = idx
        doomed = set()
        for v in alive:
            inside = [w for w in arena.next(v) if w in alive and comp_of[w] == comp_of[v]]
            if arena.owner[v] in controllers:
                if not inside:
                    doomed.add(v)
            elif len(inside) != len(arena.next(v)):
                doomed.add(v)
        if not doomed:
            result = []
            for c in comps:
                if len(c) > 1 or any(w == v for v in c for w in arena.next(v)):
                    result.append(c)
            return sorted(result, key=lambda e: sorted(e))
        alive -= doomed


def check_almost_sure_termination(smg: SMG) -> bool:
    """True iff every profile reaches a terminal vertex with probability one.

    Equivalently, the only end components of the arena under a single
    controller owning every player vertex are terminal singletons.
    """
    players = range(smg.players)
    for comp in maximal_end_components(smg, players):
        if len(comp) != 1 or not smg.arena.is_terminal(next(iter(comp))):
            return False
    return True


def winning_end_components(smg: SMG, player: int) -> list[frozenset[int]]:
    """End components of ``smg`` (player free) whose vertex set satisfies the player's objective."""
    obj = smg.objectives[player]
    if isinstance(obj, Reach):
        return [frozenset({t}) for t in sorted(obj.targets)]
    return [e for e in end_components(smg, player) if smg.wins(player, e)]


def winning_bottom_union(smg: SMG, player: int) -> frozenset[int]:
    obj = smg.objectives[player]
    if isinstance(obj, Reach):
        return frozenset(obj.targets)
    good = [c for c in bottom_sccs(smg) if smg.wins(player, c)]
    return frozenset().union(*good)


def compute_BRE(smg: SMG, support: Iterable[tuple[int, int]],
                player: int) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
    """The sets ``B``, ``R`` on the support-restricted arena and ``E`` with ``player`` freed.

    ``B`` is the union of bottom SCCs satisfying the player's objective, ``R``
    the vertices that can reach ``B``, ``E`` the union of the winning end
    components when every edge of ``player`` is restored.
    """
    support = frozenset(support)
    restricted = restrict_support(smg, support)
    bottom = winning_bottom_union(restricted, player)
    reach = can_reach(smg.n, restricted.arena.next, bottom)
    freed = restrict_support(smg, support, drop_player=player)
    good = winning_end_components(freed, player)
    return bottom, reach, frozenset().union(*good)
