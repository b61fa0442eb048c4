from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from smgsynth.arena import (NATURE, SMG, Reach, Muller, enumerate_supports, fix_positional, make_arena,
                            positional_count, positional_profiles, restrict_support, support_count,
                            validate_arena, validate_profile, vertex_supports)
from smgsynth import muller
from smgsynth.errors import ProfileError, SupportError, ValidationError
from smgsynth.arena import check_valid

from conftest import games


def single_terminal():
    arena = make_arena(1, [("v0", 0)], [("v0", "v0", None)], "v0")
    return SMG(arena, (Reach(frozenset({0})),))


def test_minimal_arena_is_valid():
    assert validate_arena(single_terminal()) == []


def test_bad_nature_distribution_reported_with_sum():
    arena = make_arena(1, [("n", NATURE), ("a", 0), ("b", 0)],
                       [("n", "a", Fraction(1, 2)), ("n", "b", Fraction(1, 3)),
                        ("a", "a", None), ("b", "b", None)], "n")
    problems = validate_arena(SMG(arena, (Reach(frozenset()),)))
    assert len(problems) == 1
    assert "distribution sums to 5/6" in problems[0]


def test_fig1_fixture_is_valid(fig1):
    assert validate_arena(fig1) == []


def test_target_must_be_terminal_and_formula_names_known():
    arena = make_arena(1, [("a", 0), ("b", 0)], [("a", "b", None), ("b", "a", None)], "a")
    assert any("not terminal" in p for p in validate_arena(SMG(arena, (Reach(frozenset({0})),))))
    bad = SMG(arena, (Muller(muller.parse_formula("a & zz")),))
    assert any("unknown vertex zz" in p for p in validate_arena(bad))
    with pytest.raises(ValidationError):
        check_valid(bad)


def test_player_edge_with_probability_and_missing_successor():
    arena = make_arena(1, [("a", 0), ("b", NATURE)], [("a", "a", Fraction(1))], "a")
    problems = validate_arena(SMG(arena, (Reach(frozenset()),)))
    assert any("probability-labelled" in p for p in problems)
    assert any("no successor" in p for p in problems)


def test_objective_count_mismatch():
    smg = single_terminal()
    assert validate_arena(SMG(smg.arena, ())) != []


@given(games())
def test_support_enumeration_matches_count_and_is_duplicate_free(smg):
    for scope in ("system", "environment", "all"):
        supports = list(enumerate_supports(smg, scope))
        assert len(supports) == support_count(smg, scope)
        assert len(set(supports)) == len(supports)


@given(games())
def test_vertex_supports_are_all_nonempty_edge_subsets(smg):
    for v in smg.arena.player_vertices():
        subs = vertex_supports(smg.arena, v)
        assert len(subs) == 2 ** len(smg.arena.next(v)) - 1
        assert all(s and all(e[0] == v for e in s) for s in subs)


@given(games(), st.data())
def test_restrict_support_keeps_exactly_support_edges(smg, data):
    supports = list(enumerate_supports(smg, "all"))
    support = data.draw(st.sampled_from(supports))
    sub = restrict_support(smg, support)
    assert validate_arena(sub) == []
    for v in range(smg.n):
        if smg.arena.owner[v] == NATURE:
            assert sub.arena.edges[v] == smg.arena.edges[v]
        else:
            assert {(v, w) for w in sub.arena.next(v)} == {e for e in support if e[0] == v}
    for i in range(smg.players):
        freed = restrict_support(smg, support, drop_player=i)
        for v in smg.arena.vertices_of(i):
            assert freed.arena.next(v) == smg.arena.next(v)


def test_restrict_support_rejects_stray_edge_and_empty_vertex(fig1):
    a = fig1.arena
    v_a, t110 = a.index("v_a"), a.index("t110")
    with pytest.raises(SupportError, match="not a player edge"):
        restrict_support(fig1, {(v_a, a.index("v_b"))})
    full = a.player_edges()
    with pytest.raises(SupportError, match="v_a"):
        restrict_support(fig1, {e for e in full if e[0] != v_a})
    kept = restrict_support(fig1, (full - {(v_a, a.index("t101"))}))
    assert kept.arena.next(v_a) == (t110,)


def test_fix_positional_prunes_environment(fig1):
    a = fig1.arena
    env = {a.index("v_b"): a.index("v_c"), a.index("v_c"): a.index("g_c")}
    pruned = fix_positional(fig1, a.player_edges([0]), env)
    assert pruned.arena.next(a.index("v_b")) == (a.index("v_c"),)
    with pytest.raises(ProfileError):
        fix_positional(fig1, a.player_edges([0]), {a.index("v_b"): a.index("v_c")})


@given(games())
def test_positional_profiles_enumerate_product(smg):
    players = range(smg.players)
    profs = list(positional_profiles(smg.arena, players))
    assert len(profs) == positional_count(smg.arena, players)
    assert len({tuple(sorted(p.items())) for p in profs}) == len(profs)


def test_validate_profile_errors(fig1):
    a = fig1.arena
    v_a = a.index("v_a")
    with pytest.raises(ProfileError, match="sum"):
        validate_profile(a, {v_a: {a.index("t110"): Fraction(1, 3)}}, [])
    with pytest.raises(ProfileError, match="leaves"):
        validate_profile(a, {v_a: {a.index("v_b"): Fraction(1)}}, [])
    with pytest.raises(ProfileError, match="does not cover"):
        validate_profile(a, {}, [0])
