import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smgsynth.arena import SMG, Reach, enumerate_supports, make_arena, positional_count, support_of
from smgsynth.best_response import best_response
from smgsynth.chain import chain_values, induce_chain, payoffs
from smgsynth.equilibrium import POSITIONAL, STATIONARY, check_equilibrium, profitable_deviation_graph
from smgsynth.errors import BoundExceeded
from smgsynth.formula import And, Cmp, Exists, Forall, evaluate, parse_smtlib
from smgsynth.graph import compute_BRE
from smgsynth.solvers import (CRSP, NCRSP, NCRSP_STRICT, Naming, build_psi_stationary, cond_sentence,
                              cond_sentences, emit_constraints, falsify_candidate, grid_search, psi_env, psi_r,
                              psi_sys, psi_z, solve_positional, solve_stationary_positional,
                              verify_stationary_candidate)

from conftest import by_name, games
from oracles import crsp_from_table, ncrsp_from_table, positional_table

UNIFORM = {"v_a": {"t110": Fraction(1, 2), "t101": Fraction(1, 2)}}


def positional_ne(smg, profile, fixed0):
    return check_equilibrium(smg, profile, fixed0, POSITIONAL) is None


# -- positional brute force ----------------------------------------------------

@pytest.mark.parametrize("name, answer", [("fig1", "no"), ("fig3", "no"), ("fig4", "yes")])
def test_positional_ncrsp_fixtures(name, answer, request):
    assert solve_positional(request.getfixturevalue(name), 1).answer == answer


@pytest.mark.parametrize("name", ["fig1", "fig3", "fig4"])
@pytest.mark.parametrize("mu", [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_positional_matches_table_oracle_on_fixtures(name, mu, request):
    smg = request.getfixturevalue(name)
    table = positional_table(smg, payoffs, positional_ne)
    assert solve_positional(smg, mu, NCRSP).answer == ncrsp_from_table(smg, table, mu)
    assert solve_positional(smg, mu, NCRSP_STRICT).answer == ncrsp_from_table(smg, table, mu, strict=True)
    assert solve_positional(smg, mu, CRSP).answer == crsp_from_table(table, mu)


@settings(max_examples=40)
@given(games(max_vertices=6), st.sampled_from([Fraction(0), Fraction(1, 2), Fraction(1)]))
def test_positional_matches_table_oracle_on_random_games(smg, mu):
    if positional_count(smg.arena, range(smg.players)) > 64:
        return
    table = positional_table(smg, payoffs, positional_ne)
    assert solve_positional(smg, mu, NCRSP).answer == ncrsp_from_table(smg, table, mu)
    assert solve_positional(smg, mu, CRSP).answer == crsp_from_table(table, mu)


def test_positional_certificates_replay(fig1, fig4):
    yes = solve_positional(fig4, 1)
    for row in yes.table:
        if row.equilibrium:
            assert row.payoff[0] >= 1
    no = solve_positional(fig1, 1)
    assert len(no.refutations) == 2
    for sigma0, row in no.refutations:
        full = dict(sigma0)
        full.update({v: {w: 1} for v, w in row.profile.items()})
        assert payoffs(fig1, full)[0] < 1
        assert check_equilibrium(fig1, full, True, POSITIONAL) is None
    crsp = solve_positional(fig4, 1, CRSP)
    assert crsp.answer == "yes"
    full = {v: {w: 1} for v, w in crsp.witness.profile.items()}
    full.update(crsp.strategy)
    assert check_equilibrium(fig4, full, False, POSITIONAL) is None


def test_positional_bound_refusal(fig1, monkeypatch):
    monkeypatch.setenv("SMGSYNTH_MAX_PROFILES", "3")
    with pytest.raises(BoundExceeded, match="8"):
        solve_positional(fig1, 1)


# -- stationary system against positional environments -------------------------

def test_verify_uniform_reproduces_table1(fig1):
    verdict = verify_stationary_candidate(fig1, by_name(fig1, UNIFORM), 1)
    assert verdict.answer == "yes"
    assert [row.payoff for row in verdict.table] == [
        (1, Fraction(1, 2), Fraction(1, 2)), (0, Fraction(1, 3), Fraction(1, 3)),
        (0, Fraction(1, 4), Fraction(1, 3)), (0, Fraction(1, 4), Fraction(1, 3))]
    assert [row.equilibrium for row in verdict.table] == [True, False, False, False]
    assert [row.deviation[0] for row in verdict.table[1:]] == [2, 1, 1]


def test_verify_fig3_is_no(fig3):
    verdict = verify_stationary_candidate(fig3, {}, 1)
    assert verdict.answer == "no"
    assert all(row.equilibrium and row.payoff[0] == 0 for row in verdict.table)


def test_verify_deterministic_fig1_names_losing_0ne(fig1):
    verdict = verify_stationary_candidate(fig1, by_name(fig1, {"v_a": "t110"}), 1)
    assert verdict.answer == "no"
    a = fig1.arena
    names = {a.names[v]: a.names[w] for v, w in verdict.witness.profile.items()}
    assert names == {"v_b": "v_c", "v_c": "g_c"}


def test_grid_search_fixtures(fig1, fig3, fig4):
    assert grid_search(fig1, 1, 1).answer == "unknown"
    yes = grid_search(fig1, 1, 2)
    a = fig1.arena
    assert yes.answer == "yes"
    assert yes.strategy[a.index("v_a")] == {a.index("t110"): Fraction(1, 2), a.index("t101"): Fraction(1, 2)}
    assert verify_stationary_candidate(fig1, yes.strategy, 1).answer == "yes"
    assert grid_search(fig4, 1).answer == "yes"
    assert solve_stationary_positional(fig3, 1, "grid").answer == "unknown"


@settings(max_examples=25)
@given(games(max_vertices=5), st.sampled_from([Fraction(1, 3), Fraction(1)]))
def test_grid_yes_is_replayed(smg, mu):
    if positional_count(smg.arena, range(1, smg.players)) > 32 or smg.n > 5:
        return
    verdict = grid_search(smg, mu, 2)
    if verdict.answer == "yes":
        assert verify_stationary_candidate(smg, verdict.strategy, mu).answer == "yes"


# -- sentence templates ----------------------------------------------------------

def z_clause_vertex(clause):
    return clause.lhs.name if isinstance(clause, Cmp) else None


def r_clause_vertex(clause):
    first = clause.args[0] if isinstance(clause, And) else clause
    return first.lhs.name


@pytest.mark.parametrize("name", ["fig1", "fig3", "fig4"])
def test_template_structure(name, request):
    smg = request.getfixturevalue(name)
    naming = Naming(smg)
    support = next(iter(enumerate_supports(smg, "all")))
    for i in range(smg.players):
        bottom, reach, ecs = compute_BRE(smg, support, i)
        zs = psi_z(smg, naming, bottom, reach, i).args
        assert sorted(z_clause_vertex(c) for c in zs) == sorted(naming.z(i, v) for v in range(smg.n))
        if i:
            rs = psi_r(smg, naming, ecs, i).args
            assert sorted(r_clause_vertex(c) for c in rs) == sorted(naming.r(i, v) for v in range(smg.n))


def test_psi_structure_audit(fig3):
    psi = build_psi_stationary(fig3, 1)
    naming = Naming(fig3)
    branches = []

    def walk(f):
        if isinstance(f, Forall):
            branches.append(f)
        for child in getattr(f, "args", ()):
            walk(child)
        if isinstance(f, Exists):
            walk(f.body)

    walk(psi)
    assert len(branches) == 3  # one per environment support
    for branch in branches:
        hyp = branch.body.lhs
        clauses = [c for part in hyp.args[1:] for c in part.args]
        z_heads = [c.lhs.name for c in clauses if isinstance(c, Cmp) and c.lhs.name.startswith("z_")]
        r_heads = [r_clause_vertex(c) for c in clauses if isinstance(c, And)]
        assert sorted(z_heads) == sorted(naming.z(i, v) for i in range(2) for v in range(3))
        assert sorted(r_heads) == sorted(naming.r(1, v) for v in range(3))


def random_profile_on(rng, smg, support):
    out = {}
    for v in smg.arena.player_vertices():
        succ = [w for w in smg.arena.next(v) if (v, w) in support]
        weights = [rng.randint(1, 5) for _ in succ]
        out[v] = {w: Fraction(k, sum(weights)) for w, k in zip(succ, weights)}
    return out


@pytest.mark.parametrize("name", ["fig1", "fig3", "fig4"])
def test_templates_agree_with_semantics(name, request):
    """psi^z and psi^r hold for the exact z and best-response r of 50 random (support, profile) pairs."""
    smg = request.getfixturevalue(name)
    naming = Naming(smg)
    rng = random.Random(name)
    supports = list(enumerate_supports(smg, "all"))
    env_players = range(1, smg.players)
    for _ in range(50):
        support = rng.choice(supports)
        profile = random_profile_on(rng, smg, support)
        env = {naming.alpha(v, w): p for v, d in profile.items() for w, p in d.items()}
        env.update({naming.alpha(v, w): Fraction(0) for v in smg.arena.player_vertices()
                    for w in smg.arena.next(v) if w not in profile[v]})
        s0 = {e for e in support if smg.arena.owner[e[0]] == 0}
        assert evaluate(psi_sys(smg, naming, s0), env)
        assert evaluate(psi_env(smg, naming, support - s0), env)
        chain = induce_chain(smg, profile)
        for i in range(smg.players):
            bottom, reach, ecs = compute_BRE(smg, support, i)
            z = chain_values(smg, chain, i)
            env.update({naming.z(i, v): z[v] for v in range(smg.n)})
            assert evaluate(psi_z(smg, naming, bottom, reach, i), env)
            if i in env_players:
                others = {v: d for v, d in profile.items() if smg.arena.owner[v] != i}
                r = best_response(smg, others, i).values
                env.update({naming.r(i, v): r[v] for v in range(smg.n)})
                assert evaluate(psi_r(smg, naming, ecs, i), env)
                assert all(zv <= rv for zv, rv in zip(z, r))


def test_cond_sentence_fig1_actual_deviations_hold_at_half(fig1):
    sigma0 = by_name(fig1, UNIFORM)
    support = support_of(sigma0)
    graph = profitable_deviation_graph(fig1, support, 1, sigma0)
    sentence = cond_sentence(fig1, support, graph.profitable(), 1)
    naming = Naming(fig1)
    assert isinstance(sentence.formula, Exists)
    env = {naming.alpha(v, w): p for v, d in sigma0.items() for w, p in d.items()}
    for k, prof in enumerate(graph.profiles):
        full = dict(sigma0)
        full.update({v: {w: 1} for v, w in prof.items()})
        chain = induce_chain(fig1, full)
        for i in range(fig1.players):
            z = chain_values(fig1, chain, i)
            env.update({naming.z(i, v, k): z[v] for v in range(fig1.n)})
    assert evaluate(sentence.formula.body, env)
    # claiming no deviation forces every profile to pay the system 1, which fails
    assert not evaluate(cond_sentence(fig1, support, [], 1).formula.body, env)


def test_cond_sentence_count(fig1, fig3):
    assert sum(1 for _ in cond_sentences(fig1, 1)) == 3 * 2 ** 8
    assert sum(1 for _ in cond_sentences(fig3, 1)) == 4


def test_cond_emission_round_trips(fig1):
    sentence = next(iter(cond_sentences(fig1, 1)))
    text = emit_constraints(sentence.formula)
    assert text.startswith("(set-logic QF_NRA)")
    assert parse_smtlib(text) == sentence.formula


# -- sampling refutation -------------------------------------------------------

def test_falsify_fig4_finds_branching_counterexample(fig4):
    found = falsify_candidate(fig4, {}, 1, samples=200, seed=0)
    assert found.found
    assert found.payoff[0] < 1
    assert check_equilibrium(fig4, found.profile, True, STATIONARY) is None
    v_d = fig4.arena.index("v_D")
    assert len(found.profile[v_d]) == 2


def test_falsify_fig3_finds_nothing(fig3):
    assert not falsify_candidate(fig3, {}, 1, samples=2000, seed=5).found


@settings(max_examples=20)
@given(games(max_vertices=5))
def test_falsify_mu_zero_never_finds(smg):
    sigma0 = {v: {smg.arena.next(v)[0]: 1} for v in smg.arena.vertices_of(0)}
    assert not falsify_candidate(smg, sigma0, 0, samples=20, seed=1).found


# -- external solver -----------------------------------------------------------

def single_terminal():
    return SMG(make_arena(1, [("v0", 0)], [("v0", "v0", None)], "v0"), (Reach(frozenset({0})),))


@pytest.mark.parametrize("mu, truth", [(Fraction(0), "yes"), (Fraction(1), "yes"), (Fraction(3, 2), "no")])
def test_single_terminal_psi(mu, truth):
    z3 = pytest.importorskip("z3")
    from smgsynth.solvers import decide_external
    assert z3 is not None
    assert decide_external(build_psi_stationary(single_terminal(), mu)) == truth


def test_z3_fig3_psi_true_and_fig4_psi_false(fig3, fig4):
    pytest.importorskip("z3")
    from smgsynth.solvers import decide_external
    assert decide_external(build_psi_stationary(fig3, 1)) == "yes"
    assert decide_external(build_psi_stationary(fig4, 1)) == "no"


def test_z3_cond_fig1(fig1):
    z3 = pytest.importorskip("z3")
    sigma0 = by_name(fig1, UNIFORM)
    support = support_of(sigma0)
    graph = profitable_deviation_graph(fig1, support, 1, sigma0)
    sentence = cond_sentence(fig1, support, graph.profitable(), 1)
    solver = z3.Solver()
    solver.from_string(emit_constraints(sentence.formula))
    naming = Naming(fig1)
    a = fig1.arena
    half = z3.Real(naming.alpha(a.index("v_a"), a.index("t110")))
    solver.add(half == z3.RealVal("1/2"))
    assert solver.check() == z3.sat
    # no sentence for fig3 is satisfiable: its Stationary-Positional answer is no
    from smgsynth.fixtures import load
    for s in cond_sentences(load("fig3"), 1):
        solver = z3.Solver()
        solver.from_string(emit_constraints(s.formula))
        assert solver.check() == z3.unsat
