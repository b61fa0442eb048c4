"""Nash and 0-fixed Nash equilibrium checks with profitable-deviation witnesses."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .arena import SMG, Profile, positional_count, positional_profiles, restrict_support, stationary
from .best_response import best_response
from .chain import chain_values, induce_chain, payoffs
from .errors import BoundExceeded
from .limits import limit

STATIONARY = "stationary"
POSITIONAL = "positional"


@dataclass(frozen=True)
class DeviationWitness:
    player: int
    deviation: dict[int, dict[int, Fraction]]
    old_payoff: Fraction
    new_payoff: Fraction

    def __post_init__(self):
        assert self.new_payoff > self.old_payoff


def player_payoff(smg: SMG, profile: Profile, player: int) -> Fraction:
    chain = induce_chain(smg, profile)
    return chain_values(smg, chain, player)[chain.init]


def best_positional_deviation(smg: SMG, profile: Profile, player: int) -> tuple[Fraction, dict[int, int]]:
    """Highest payoff ``player`` reaches by switching to a positional strategy (first maximiser)."""
    base = stationary(profile)
    best_value, best_choice = None, None
    for choice in positional_profiles(smg.arena, [player]):
        trial = dict(base)
        trial.update({v: {w: Fraction(1)} for v, w in choice.items()})
        value = player_payoff(smg, trial, player)
        if best_value is None or value > best_value:
            best_value, best_choice = value, choice
    return best_value, best_choice


def candidate_deviators(smg: SMG, fixed0: bool) -> range:
    return range(1 if fixed0 else 0, smg.players)


def check_equilibrium(smg: SMG, profile: Profile, fixed0: bool = True,
                      deviation_class: str = STATIONARY) -> Optional[DeviationWitness]:
    """Return ``None`` when ``profile`` is a (0-fixed) equilibrium, else a profitable deviation.

    Payoffs are compared at the initial vertex only.  With the stationary
    class a deviator may play any strategy (stationary ones suffice); with the
    positional class only positional deviations are considered.
    """
    if deviation_class not in (STATIONARY, POSITIONAL):
        raise ValueError(f"unknown deviation class {deviation_class!r}")
    current = payoffs(smg, profile)
    init = smg.arena.init
    for i in candidate_deviators(smg, fixed0):
        if deviation_class == STATIONARY:
            br = best_response(smg, profile, i)
            if br.values[init] > current[i]:
                return DeviationWitness(i, br.strategy, current[i], br.values[init])
        else:
            value, choice = best_positional_deviation(smg, profile, i)
            if value > current[i]:
                deviation = {v: {w: Fraction(1)} for v, w in choice.items()}
                return DeviationWitness(i, deviation, current[i], value)
    return None


def is_equilibrium(smg: SMG, profile: Profile, fixed0: bool = True,
                   deviation_class: str = STATIONARY) -> bool:
    return check_equilibrium(smg, profile, fixed0, deviation_class) is None


def substitute(profile: Profile, deviation: Mapping[int, Mapping[int, Fraction]]) -> dict:
    out = stationary(profile)
    out.update({v: dict(d) for v, d in deviation.items()})
    return out


@dataclass
class DeviationGraph:
    """Environment positional profiles and the unilateral switches between them.

    ``candidates`` holds ``(profile index, player, alternative profile index)``.
    ``payoffs`` is filled only when a concrete system strategy was supplied.
    """

    system_support: frozenset
    profiles: list[dict[int, int]]
    candidates: list[tuple[int, int, int]]
    mu: Fraction
    payoffs: list[tuple[Fraction, ...]] = field(default_factory=list)

    def profitable(self) -> list[tuple[int, int, int]]:
        if not self.payoffs:
            raise ValueError("payoffs are only known for a concrete system strategy")
        return [(p, i, q) for p, i, q in self.candidates if self.payoffs[q][i] > self.payoffs[p][i]]

    def equilibria(self) -> list[int]:
        """Profiles with no profitable positional switch (needs payoffs)."""
        deviating = {p for p, _, _ in self.profitable()}
        return [p for p in range(len(self.profiles)) if p not in deviating]


def environment_profiles(smg: SMG) -> list[dict[int, int]]:
    env = range(1, smg.players)
    count = positional_count(smg.arena, env)
    bound = limit("SMGSYNTH_MAX_PROFILES")
    if count > bound:
        raise BoundExceeded("environment positional profiles", count, bound)
    return list(positional_profiles(smg.arena, env))


def profitable_deviation_graph(smg: SMG, system_support: Iterable[tuple[int, int]], mu,
                               sigma0: Profile | None = None) -> DeviationGraph:
    """Enumerate every triple (profile, player, profile') differing only in ``player``'s choice."""
    system_support = frozenset(system_support)
    restrict_support(smg, system_support | smg.arena.player_edges(range(1, smg.players)))
    profiles = environment_profiles(smg)
    owned = {i: smg.arena.vertices_of(i) for i in range(1, smg.players)}
    bound = limit("SMGSYNTH_MAX_PROFILES")
    index = {tuple(sorted(p.items())): k for k, p in enumerate(profiles)}
    candidates = []
    for k, prof in enumerate(profiles):
        for i in range(1, smg.players):
            for alt in positional_profiles(smg.arena, [i]):
                if all(prof[v] == alt[v] for v in owned[i]):
                    continue
                other = dict(prof)
                other.update(alt)
                candidates.append((k, i, index[tuple(sorted(other.items()))]))
                if len(candidates) > bound:
                    raise BoundExceeded("profitable-deviation candidates", len(candidates), bound)
    graph = DeviationGraph(system_support, profiles, candidates, Fraction(mu))
    if sigma0 is not None:
        base = stationary(sigma0)
        for prof in profiles:
            full = dict(base)
            full.update(stationary(prof))
            graph.payoffs.append(payoffs(smg, full))
    return graph
