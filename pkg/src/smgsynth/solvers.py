"""Decision procedures for rational synthesis and the real-arithmetic sentences behind them.

Internally decided: NCRSP/CRSP over positional strategies (brute force),
exact verification of a concrete stationary system strategy against
positional environments, a sound-yes grid search over such strategies and a
sound-no sampling refuter for stationary environments.  The full stationary
problem is handed to an external solver as an SMT-LIB sentence.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .arena import (NATURE, SMG, Profile, enumerate_supports, fix_positional, positional_count,
                    positional_profiles, stationary, support_count, support_of,
                    uniform, validate_profile)
from .chain import payoffs
from .equilibrium import STATIONARY, check_equilibrium, environment_profiles, profitable_deviation_graph
from .errors import BoundExceeded, SMGError
from .formula import (Formula, Implies, Num, Sym, Term, add, conj, disj, eq, exists, forall, ge,
                      gt, lt, mul, to_smtlib)
from .graph import can_reach, compute_BRE, winning_bottom_union
from .limits import limit

NCRSP = "ncrsp"
NCRSP_STRICT = "ncrsp>"
CRSP = "crsp"
PROBLEMS = (NCRSP, NCRSP_STRICT, CRSP)


@dataclass
class ProfileRow:
    """One environment (or full) positional profile with its exact payoffs.

    ``deviation`` names a profitable unilateral switch ``(player, row index)``
    when the profile is not an equilibrium.
    """

    profile: dict[int, int]
    payoff: tuple[Fraction, ...]
    equilibrium: bool
    deviation: Optional[tuple[int, int]] = None


@dataclass
class Verdict:
    answer: str  # yes | no | unknown
    problem: str
    mu: Fraction
    strategy: Optional[dict[int, dict[int, Fraction]]] = None
    table: list[ProfileRow] = field(default_factory=list)
    witness: Optional[ProfileRow] = None
    refutations: list[tuple[dict, ProfileRow]] = field(default_factory=list)
    note: str = ""
    memory: Optional[object] = None  # pure t-memory certificate, when solved through an unfolding

    @property
    def exit_code(self) -> int:
        return {"yes": 0, "no": 1, "unknown": 2}[self.answer]


def _meets(value: Fraction, mu: Fraction, strict: bool) -> bool:
    return value > mu if strict else value >= mu


def complete_forced(smg: SMG, profile: Profile, players: Iterable[int]) -> dict:
    """Fill in vertices of ``players`` that have a single successor and are not covered yet."""
    out = stationary(profile)
    for v in smg.arena.player_vertices(players):
        if v not in out and len(smg.arena.next(v)) == 1:
            out[v] = {smg.arena.next(v)[0]: Fraction(1)}
    return out


# -- positional brute force ----------------------------------------------------

def _check_bound(what: str, count: int) -> None:
    bound = limit("SMGSYNTH_MAX_PROFILES")
    if count > bound:
        raise BoundExceeded(what, count, bound)


def _rows_for(smg: SMG, graph, table: list[tuple[Fraction, ...]]) -> list[ProfileRow]:
    """Environment rows for one fixed system strategy given its payoff column."""
    rows = [ProfileRow(p, table[k], True) for k, p in enumerate(graph.profiles)]
    for k, i, q in graph.candidates:
        if rows[k].equilibrium and table[q][i] > table[k][i]:
            rows[k].equilibrium = False
            rows[k].deviation = (i, q)
    return rows


def solve_positional(smg: SMG, mu, problem: str = NCRSP) -> Verdict:
    """Exhaustive NCRSP / NCRSP> / CRSP over positional strategies with exact payoffs."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    mu = Fraction(mu)
    arena = smg.arena
    _check_bound("positional profiles", positional_count(arena, range(smg.players)))
    system = list(positional_profiles(arena, [0]))
    graph = profitable_deviation_graph(smg, arena.player_edges([0]), mu)
    columns = []
    for sigma0 in system:
        column = []
        for env in graph.profiles:
            full = dict(sigma0)
            full.update(env)
            column.append(payoffs(smg, full))
        columns.append(column)

    if problem == CRSP:
        for a, sigma0 in enumerate(system):
            rows = _rows_for(smg, graph, columns[a])
            for k, row in enumerate(rows):
                if not row.equilibrium or row.payoff[0] < mu:
                    continue
                if any(columns[b][k][0] > row.payoff[0] for b in range(len(system))):
                    continue
                full = dict(sigma0)
                full.update(row.profile)
                witness = ProfileRow(full, row.payoff, True)
                return Verdict("yes", problem, mu, stationary(sigma0), rows, witness)
        return Verdict("no", problem, mu, note="no positional Nash equilibrium meets the threshold")

    strict = problem == NCRSP_STRICT
    refutations = []
    for a, sigma0 in enumerate(system):
        rows = _rows_for(smg, graph, columns[a])
        bad = next((r for r in rows if r.equilibrium and not _meets(r.payoff[0], mu, strict)), None)
        if bad is None:
            return Verdict("yes", problem, mu, stationary(sigma0), rows)
        refutations.append((stationary(sigma0), bad))
    return Verdict("no", problem, mu, refutations=refutations,
                   note="every positional system strategy has a losing 0-fixed equilibrium")


def verify_stationary_candidate(smg: SMG, sigma0: Profile, mu, strict: bool = False) -> Verdict:
    """Decide exactly whether ``sigma0`` wins against every positional 0-fixed equilibrium."""
    mu = Fraction(mu)
    sigma0 = complete_forced(smg, sigma0, [0])
    validate_profile(smg.arena, sigma0, [0])
    graph = profitable_deviation_graph(smg, support_of(sigma0), mu, sigma0)
    rows = _rows_for(smg, graph, graph.payoffs)
    bad = next((r for r in rows if r.equilibrium and not _meets(r.payoff[0], mu, strict)), None)
    problem = "stationary-positional-" + (NCRSP_STRICT if strict else NCRSP)
    if bad is None:
        return Verdict("yes", problem, mu, sigma0, rows)
    return Verdict("no", problem, mu, sigma0, rows, witness=bad)


# -- grid search ---------------------------------------------------------------

def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Positive integer vectors of length ``parts`` summing to ``total`` (lexicographic)."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def grid_strategies(smg: SMG, support: Iterable[tuple[int, int]], denominator: int) -> Iterator[dict]:
    """Stationary system strategies with support ``support`` and all probabilities in (1/d)ℤ."""
    support = frozenset(support)
    per_vertex = []
    for v in smg.arena.vertices_of(0):
        succ = [w for w in smg.arena.next(v) if (v, w) in support]
        options = [
            {w: Fraction(c, denominator) for w, c in zip(succ, combo)}
            for combo in _compositions(denominator, len(succ))
        ]
        per_vertex.append((v, options))
    for combo in itertools.product(*(opts for _, opts in per_vertex)):
        yield {v: dist for (v, _), dist in zip(per_vertex, combo)}


def grid_search(smg: SMG, mu, denominator: int = 4, strict: bool = False) -> Verdict:
    """Sound-yes search: the first grid strategy that verifies, else ``unknown``."""
    mu = Fraction(mu)
    seen = set()
    tried = 0
    bound = limit("SMGSYNTH_MAX_PROFILES")
    for d in range(1, denominator + 1):
        for support in enumerate_supports(smg, "system"):
            for sigma0 in grid_strategies(smg, support, d):
                key = tuple(sorted((v, tuple(sorted(dist.items()))) for v, dist in sigma0.items()))
                if key in seen:
                    continue
                seen.add(key)
                tried += 1
                if tried > bound:
                    raise BoundExceeded("grid candidates", tried, bound)
                verdict = verify_stationary_candidate(smg, sigma0, mu, strict)
                if verdict.answer == "yes":
                    verdict.note = f"grid denominator {d}"
                    return verdict
    problem = "stationary-positional-" + (NCRSP_STRICT if strict else NCRSP)
    return Verdict("unknown", problem, mu,
                   note=f"no verified system strategy among {tried} grid points up to denominator {denominator}")


# -- variable naming -----------------------------------------------------------

class Naming:
    """Variable names ``a_<src>_<dst>``, ``z_<i>_<v>``, ``r_<i>_<v>`` (vertex indices on clashes)."""

    def __init__(self, smg: SMG):
        self.smg = smg
        self.labels = list(smg.arena.names)
        if not self._unique():
            self.labels = [f"v{v}" for v in range(smg.n)]

    def _unique(self) -> bool:
        arena = self.smg.arena
        seen = set()
        names = [self.alpha(v, w) for v in range(arena.n) for w in arena.next(v)]
        for i in range(self.smg.players):
            names += [self.z(i, v) for v in range(arena.n)] + [self.r(i, v) for v in range(arena.n)]
        for name in names:
            if name in seen:
                return False
            seen.add(name)
        return True

    def alpha(self, v: int, w: int) -> str:
        return f"a_{self.labels[v]}_{self.labels[w]}"

    def z(self, i: int, v: int, profile: Optional[int] = None) -> str:
        base = f"z_{i}_{self.labels[v]}"
        return base if profile is None else f"{base}@p{profile}"

    def r(self, i: int, v: int) -> str:
        return f"r_{i}_{self.labels[v]}"

    def alpha_term(self, v: int, w: int) -> Term:
        if self.smg.arena.owner[v] == NATURE:
            return Num(self.smg.arena.prob(v, w))
        return Sym(self.alpha(v, w))

    def alpha_vars(self, players: Iterable[int]) -> list[str]:
        arena = self.smg.arena
        return [self.alpha(v, w) for v in arena.player_vertices(players) for w in arena.next(v)]


# -- formula templates ---------------------------------------------------------

def _support_clauses(smg: SMG, naming: Naming, support: frozenset, players: Iterable[int]) -> Formula:
    arena = smg.arena
    clauses = []
    for v in arena.player_vertices(players):
        succ = arena.next(v)
        for w in succ:
            a = Sym(naming.alpha(v, w))
            clauses.append(ge(a, Num(Fraction(0))))
            clauses.append(gt(a, Num(Fraction(0))) if (v, w) in support else eq(a, Num(Fraction(0))))
        clauses.append(eq(add(Sym(naming.alpha(v, w)) for w in succ), Num(Fraction(1))))
    return conj(clauses)


def psi_sys(smg: SMG, naming: Naming, support: Iterable[tuple[int, int]]) -> Formula:
    """System probabilities consistent with the system support."""
    return _support_clauses(smg, naming, frozenset(support), [0])


def psi_env(smg: SMG, naming: Naming, support: Iterable[tuple[int, int]]) -> Formula:
    """Environment probabilities consistent with the environment support."""
    return _support_clauses(smg, naming, frozenset(support), range(1, smg.players))


def _weighted_sum(naming: Naming, v: int, value) -> Term:
    return add(mul(naming.alpha_term(v, w), value(w)) for w in naming.smg.arena.next(v))


def psi_z(smg: SMG, naming: Naming, bottom: frozenset, reach: frozenset, player: int) -> Formula:
    """One clause per vertex pinning ``z`` to the player's winning probability."""
    clauses = []
    for v in range(smg.n):
        z = Sym(naming.z(player, v))
        if v in bottom:
            clauses.append(eq(z, Num(Fraction(1))))
        elif v not in reach:
            clauses.append(eq(z, Num(Fraction(0))))
        else:
            clauses.append(eq(z, _weighted_sum(naming, v, lambda w: Sym(naming.z(player, w)))))
    return conj(clauses)


def psi_r(smg: SMG, naming: Naming, winning_ecs: frozenset, player: int) -> Formula:
    """One clause per vertex making ``r`` a pre-fixed point of the best-response equations."""
    arena = smg.arena
    zero = Num(Fraction(0))
    clauses = []
    for v in range(smg.n):
        r = Sym(naming.r(player, v))
        if v in winning_ecs:
            clauses.append(conj([ge(r, zero), eq(r, Num(Fraction(1)))]))
        elif arena.owner[v] == player:
            clauses.append(conj([ge(r, zero)] + [ge(r, Sym(naming.r(player, w))) for w in arena.next(v)]))
        else:
            total = _weighted_sum(naming, v, lambda w: Sym(naming.r(player, w)))
            clauses.append(conj([ge(r, zero), eq(r, total)]))
    return conj(clauses)


def build_psi_stationary(smg: SMG, mu, strict: bool = False) -> Formula:
    """The closed sentence that is true iff a stationary system strategy solves NCRSP at ``mu``."""
    mu = Fraction(mu)
    arena = smg.arena
    env_players = list(range(1, smg.players))
    _check_bound("support pairs", support_count(smg, "all"))
    naming = Naming(smg)
    init = arena.init
    env_alpha = naming.alpha_vars(env_players)
    z_vars = [naming.z(i, v) for i in range(smg.players) for v in range(arena.n)]
    r_vars = [naming.r(i, v) for i in env_players for v in range(arena.n)]
    goal = (gt if strict else ge)(Sym(naming.z(0, init)), Num(mu))
    stable = conj(ge(Sym(naming.z(i, init)), Sym(naming.r(i, init))) for i in env_players)
    disjuncts = []
    for s0 in enumerate_supports(smg, "system"):
        branches = []
        for s_env in enumerate_supports(smg, "environment"):
            support = s0 | s_env
            hyp = [psi_env(smg, naming, s_env)]
            zs, rs = [], []
            for i in range(smg.players):
                bottom, reach, ecs = compute_BRE(smg, support, i)
                zs.append(psi_z(smg, naming, bottom, reach, i))
                if i != 0:
                    rs.append(psi_r(smg, naming, ecs, i))
            body = Implies(conj(hyp + zs + rs), Implies(stable, goal))
            branches.append(forall(env_alpha + z_vars + r_vars, body))
        disjuncts.append(exists(naming.alpha_vars([0]), conj([psi_sys(smg, naming, s0)] + branches)))
    return disj(disjuncts)


# -- existential sentences for positional environments -------------------------

@dataclass
class CondSentence:
    support: frozenset
    deviations: tuple[tuple[int, int, int], ...]
    formula: Formula


def _pay_term(naming: Naming, pruned: SMG, player: int, profile: int, init: int,
              equations: dict, z_vars: list) -> Term:
    """Payoff of ``player`` at ``init`` as a z-variable, adding its defining equations once."""
    key = (player, profile)
    if key not in equations:
        bottom = winning_bottom_union(pruned, player)
        reach = can_reach(pruned.n, pruned.arena.next, bottom)

        def value(w):
            if w in bottom:
                return Num(Fraction(1))
            if w not in reach:
                return Num(Fraction(0))
            return Sym(naming.z(player, w, profile))

        clauses = []
        for v in sorted(reach - bottom):
            z_vars.append(naming.z(player, v, profile))
            owner = pruned.arena.owner[v]
            terms = []
            for w in pruned.arena.next(v):
                if owner == NATURE:
                    terms.append(mul(Num(pruned.arena.prob(v, w)), value(w)))
                elif owner == 0:
                    terms.append(mul(Sym(naming.alpha(v, w)), value(w)))
                else:
                    terms.append(value(w))  # pruned to the single chosen edge
            clauses.append(eq(Sym(naming.z(player, v, profile)), add(terms)))
        equations[key] = (clauses, value(init))
    return equations[key][1]


def cond_sentence(smg: SMG, support: Iterable[tuple[int, int]], deviations: Iterable[tuple[int, int, int]],
                  mu, profiles: Optional[list[dict[int, int]]] = None, strict: bool = False) -> CondSentence:
    """Existential sentence: some system strategy on ``support`` makes exactly the listed switches profitable
    (at least) and wins every profile that is not listed as deviating."""
    mu = Fraction(mu)
    support = frozenset(support)
    deviations = tuple(deviations)
    if profiles is None:
        profiles = environment_profiles(smg)
    naming = Naming(smg)
    init = smg.arena.init
    pruned = {}
    equations: dict = {}
    z_vars: list[str] = []

    def pay(k: int, i: int) -> Term:
        if k not in pruned:
            pruned[k] = fix_positional(smg, support, profiles[k])
        return _pay_term(naming, pruned[k], i, k, init, equations, z_vars)

    atoms = []
    for k, i, q in deviations:
        atoms.append(lt(pay(k, i), pay(q, i)))
    sources = {k for k, _, _ in deviations}
    for k in range(len(profiles)):
        if k not in sources:
            atoms.append((gt if strict else ge)(pay(k, 0), Num(mu)))
    defining = [c for clauses, _ in equations.values() for c in clauses]
    body = conj([psi_sys(smg, naming, support)] + defining + atoms)
    return CondSentence(support, deviations, exists(naming.alpha_vars([0]) + z_vars, body))


def cond_sentences(smg: SMG, mu, strict: bool = False) -> Iterator[CondSentence]:
    """Every (system support, deviation subset) sentence; the problem is yes iff one is satisfiable."""
    mu = Fraction(mu)
    bound = limit("SMGSYNTH_MAX_SENTENCES")
    profiles = environment_profiles(smg)
    emitted = 0
    for support in enumerate_supports(smg, "system"):
        graph = profitable_deviation_graph(smg, support, mu)
        total = 1 << len(graph.candidates)
        if emitted + total > bound:
            raise BoundExceeded("existential sentences", emitted + total, bound)
        for mask in range(total):
            chosen = [c for bit, c in enumerate(graph.candidates) if mask >> bit & 1]
            emitted += 1
            yield cond_sentence(smg, support, chosen, mu, profiles, strict)


def solve_stationary_positional(smg: SMG, mu, mode: str = "grid", denominator: int = 4,
                                strict: bool = False):
    """``grid``: a :class:`Verdict` (yes or unknown).  ``emit``: an iterator of :class:`CondSentence`."""
    if mode == "grid":
        return grid_search(smg, mu, denominator, strict)
    if mode == "emit":
        return cond_sentences(smg, mu, strict)
    raise ValueError(f"unknown mode {mode!r}")


def emit_constraints(f: Formula, comments: Iterable[str] = ()) -> str:
    return to_smtlib(f, comments)


# -- sampling refutation -------------------------------------------------------

@dataclass
class FalsifyResult:
    found: bool
    profile: Optional[dict[int, dict[int, Fraction]]] = None
    payoff: Optional[tuple[Fraction, ...]] = None
    samples: int = 0
    distinct: int = 0


def _sample_distribution(rng: random.Random, succ: list[int], max_weight: int) -> dict[int, Fraction]:
    weights = [rng.randint(1, max_weight) for _ in succ]
    total = sum(weights)
    return {w: Fraction(x, total) for w, x in zip(succ, weights)}


def falsify_candidate(smg: SMG, sigma0: Profile, mu, samples: int = 1000, seed: int = 0,
                      max_weight: int = 8) -> FalsifyResult:
    """Look for a stationary environment profile that is a 0-fixed equilibrium losing for ``sigma0``.

    Supports are cycled in enumeration order; the first pass uses uniform
    distributions, later passes random integer weights.  A hit is checked
    exactly and is a genuine counterexample; a miss proves nothing.
    """
    mu = Fraction(mu)
    sigma0 = complete_forced(smg, sigma0, [0])
    validate_profile(smg.arena, sigma0, [0])
    supports = list(enumerate_supports(smg, "environment"))
    rng = random.Random(seed)
    cache: dict = {}
    for s in range(samples):
        support = supports[s % len(supports)]
        env = {}
        for v in smg.arena.player_vertices(range(1, smg.players)):
            succ = [w for w in smg.arena.next(v) if (v, w) in support]
            env[v] = uniform(succ) if s < len(supports) else _sample_distribution(rng, succ, max_weight)
        key = tuple(sorted((v, tuple(sorted(d.items()))) for v, d in env.items()))
        if key in cache:
            continue
        profile = dict(sigma0)
        profile.update(env)
        pay = payoffs(smg, profile)
        hit = pay[0] < mu and check_equilibrium(smg, profile, True, STATIONARY) is None
        cache[key] = hit
        if hit:
            return FalsifyResult(True, profile, pay, s + 1, len(cache))
    return FalsifyResult(False, samples=samples, distinct=len(cache))


def decide_external(f: Formula, timeout_ms: int = 60000) -> str:
    """Decide a closed sentence with z3 when it is installed: ``yes``, ``no`` or ``unknown``."""
    try:
        import z3
    except ImportError as exc:
        raise SMGError("deciding sentences needs the optional z3-solver package") from exc
    solver = z3.Solver()
    solver.set("timeout", timeout_ms)
    solver.from_string(to_smtlib(f))
    result = solver.check()
    if result == z3.sat:
        return "yes"
    if result == z3.unsat:
        return "no"
    return "unknown"
