from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from smgsynth import muller
from smgsynth.arena import NATURE, SMG, Muller, Reach, make_arena
from smgsynth.fixtures import load

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def fig1():
    return load("fig1")


@pytest.fixture
def fig3():
    return load("fig3")


@pytest.fixture
def fig4():
    return load("fig4")


def by_name(smg, mapping):
    """Profile from ``{vertex name: successor name or {name: prob}}``."""
    idx = smg.arena.index
    out = {}
    for v, choice in mapping.items():
        if isinstance(choice, str):
            out[idx(v)] = {idx(choice): Fraction(1)}
        else:
            out[idx(v)] = {idx(w): Fraction(p) for w, p in choice.items()}
    for v in smg.arena.player_vertices():
        if v not in out and len(smg.arena.next(v)) == 1:
            out[v] = {smg.arena.next(v)[0]: Fraction(1)}
    return out


def muller_formulas(names):
    leaves = st.sampled_from(names).map(muller.Var) | st.sampled_from([muller.TRUE, muller.FALSE])
    return st.recursive(
        leaves,
        lambda inner: inner.map(muller.Not)
        | st.lists(inner, min_size=2, max_size=3).map(lambda xs: muller.And(tuple(xs)))
        | st.lists(inner, min_size=2, max_size=3).map(lambda xs: muller.Or(tuple(xs))),
        max_leaves=6,
    )


@st.composite
def games(draw, max_vertices=7, max_players=3, reach_only=False):
    """Random valid games with exact nature probabilities."""
    players = draw(st.integers(1, max_players))
    n = draw(st.integers(1, max_vertices))
    names = [f"u{v}" for v in range(n)]
    owners = [draw(st.sampled_from(list(range(players)) + [NATURE])) for _ in range(n)]
    edges = []
    for v in range(n):
        k = draw(st.integers(1, min(3, n)))
        succ = sorted(draw(st.sets(st.integers(0, n - 1), min_size=k, max_size=k)))
        if owners[v] == NATURE:
            weights = [draw(st.integers(1, 4)) for _ in succ]
            total = sum(weights)
            edges += [(names[v], names[w], Fraction(x, total)) for w, x in zip(succ, weights)]
        else:
            edges += [(names[v], names[w], None) for w in succ]
    init = draw(st.integers(0, n - 1))
    arena = make_arena(players, list(zip(names, owners)), edges, names[init])
    terminals = sorted(arena.terminals)
    objectives = []
    for _ in range(players):
        if terminals and (reach_only or draw(st.booleans())):
            chosen = draw(st.sets(st.sampled_from(terminals)))
            objectives.append(Reach(frozenset(chosen)))
        elif reach_only:
            objectives.append(Reach(frozenset()))
        else:
            objectives.append(Muller(draw(muller_formulas(names))))
    return SMG(arena, tuple(objectives))


@st.composite
def stationary_profiles(draw, smg, players=None, full_support=False):
    arena = smg.arena
    out = {}
    for v in arena.player_vertices(players):
        succ = list(arena.next(v))
        if full_support:
            chosen = succ
        else:
            chosen = sorted(draw(st.sets(st.sampled_from(succ), min_size=1)))
        weights = [draw(st.integers(1, 5)) for _ in chosen]
        total = sum(weights)
        out[v] = {w: Fraction(x, total) for w, x in zip(chosen, weights)}
    return out
