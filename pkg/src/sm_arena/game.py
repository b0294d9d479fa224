"""Empirical normal-form games over mining strategy choices.

A strategic miner picks honest or selfish mining, whichever pays more; honest
miners are locked to honest play. For one power allocation we simulate every
strategy profile (2^k for k strategic miners), read payoffs off the simulated
reward vectors, and enumerate pure-strategy epsilon-equilibria by exhaustive
unilateral-deviation checks.

Profiles are encoded as bit masks over the strategic miners in index order
(bit j set = strategic miner j plays selfish).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import PowerAllocation, SimConfig, collapse_hm, run_replicated
from .rng import derive_seed, hash_key
from .strategies import StrategyKind


class MinerType(Enum):
    HM = "hm"
    STRM = "strm"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


def allowed_strategies(t: MinerType) -> tuple[StrategyKind, ...]:
    if t is MinerType.STRM:
        return (StrategyKind.HM, StrategyKind.SM)
    return (StrategyKind.HM,)


@dataclass
class ProfilePayoff:
    mean: np.ndarray
    sem: np.ndarray


@dataclass
class GameTable:
    powers: tuple[float, ...]
    types: tuple[MinerType, ...]
    payoffs: dict[int, ProfilePayoff]  # profile bits -> per-miner payoff

    @property
    def strm_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.types) if t is MinerType.STRM]

    def profile_strategies(self, bits: int) -> list[StrategyKind]:
        strm = self.strm_indices
        out = [StrategyKind.HM] * len(self.types)
        for j, i in enumerate(strm):
            if bits >> j & 1:
                out[i] = StrategyKind.SM
        return out


@dataclass
class EquilibriumSet:
    equilibria: list[int]  # profile bits, ascending
    epsilon: float
    hm_preferred: bool


def simulate_profile(
    powers: tuple[float, ...],
    types: list[MinerType],
    bits: int,
    config: SimConfig,
    key: str = "game",
) -> dict:
    """Simulate one strategy profile of one allocation.

    Honest-playing miners (honest-typed plus strategic miners currently
    choosing honest) are collapsed into one collective for the run and the
    collective's payoff is re-expanded in proportion to power. The profile
    seed derives from (config.seed, key, profile bits), so a sweep worker and
    an in-process game build produce identical numbers.
    """
    strm = [i for i, t in enumerate(types) if t is MinerType.STRM]
    strategies = [StrategyKind.HM] * len(types)
    for j, i in enumerate(strm):
        if bits >> j & 1:
            strategies[i] = StrategyKind.SM
    alloc = PowerAllocation(tuple(powers))
    reduced_alloc, reduced_strats, groups = collapse_hm(alloc, strategies)
    cfg = config.with_overrides(seed=derive_seed(config.seed, hash_key(key), bits))
    res = run_replicated(reduced_alloc, reduced_strats, cfg)
    mean = np.zeros(len(types))
    sem = np.zeros(len(types))
    for r, group in enumerate(groups):
        group_power = sum(powers[i] for i in group)
        for i in group:
            share = powers[i] / group_power if group_power > 0 else 0.0
            mean[i] = res.mean_rewards[r] * share
            sem[i] = res.sem[r] * share
    return {
        "mean": mean.tolist(),
        "sem": sem.tolist(),
        "converged_fraction": res.converged_fraction,
        "mean_steps": float(res.steps_used.mean()),
    }


def build_game(
    powers: tuple[float, ...],
    types: list[MinerType],
    config: SimConfig,
    key: str = "game",
) -> GameTable:
    """Simulate every strategy profile of one allocation (2^k for k strategic
    miners) and assemble the payoff table."""
    if len(powers) != len(types):
        raise ValueError("powers and types length mismatch")
    strm = [i for i, t in enumerate(types) if t is MinerType.STRM]
    payoffs: dict[int, ProfilePayoff] = {}
    for bits in range(1 << len(strm)):
        data = simulate_profile(powers, types, bits, config, key)
        payoffs[bits] = ProfilePayoff(np.asarray(data["mean"]), np.asarray(data["sem"]))
    return GameTable(tuple(powers), tuple(types), payoffs)


def epsilon_pe(game: GameTable, epsilon: float) -> EquilibriumSet:
    """All profiles where no single miner can gain more than epsilon by
    switching its own strategy. Exhaustive over unilateral deviations."""
    strm = game.strm_indices
    eqs = []
    for bits, payoff in sorted(game.payoffs.items()):
        ok = True
        for j, i in enumerate(strm):
            other = game.payoffs[bits ^ (1 << j)]
            if payoff.mean[i] < other.mean[i] - epsilon:
                ok = False
                break
        if ok:
            eqs.append(bits)
    return EquilibriumSet(eqs, epsilon, hm_preferred=False)


def hm_preference_filter(eqs: EquilibriumSet, game: GameTable) -> EquilibriumSet:
    """Resolve one-coordinate indifference toward honest play: an equilibrium
    dies when flipping one of its selfish choices to honest lands on another
    equilibrium. One pass against the equilibrium set is already a fixpoint
    (survivors have no in-set partners), the result is order-independent, and
    profiles minimal in their selfish choices always survive, so a nonempty
    set never empties."""
    original = set(eqs.equilibria)
    k = len(game.strm_indices)
    alive = [
        bits for bits in sorted(original)
        if not any(bits >> j & 1 and (bits ^ (1 << j)) in original for j in range(k))
    ]
    return EquilibriumSet(alive, eqs.epsilon, hm_preferred=True)


def equilibrium_rewards(
    game: GameTable, eqs: EquilibriumSet, aggregate: str = "max"
) -> np.ndarray:
    """Per-miner reward across the surviving equilibria. With several
    equilibria the `aggregate` switch picks max (default), min, or mean."""
    if not eqs.equilibria:
        raise ValueError("no equilibria to aggregate")
    stack = np.stack([game.payoffs[b].mean for b in eqs.equilibria])
    if aggregate == "max":
        return stack.max(axis=0)
    if aggregate == "min":
        return stack.min(axis=0)
    if aggregate == "mean":
        return stack.mean(axis=0)
    raise ValueError(f"unknown aggregate {aggregate!r}")


def multi_sm_ranges(
    profitable: dict[int, list[tuple[int, bool]]],
) -> list[tuple[int, int, int]]:
    """Longest contiguous run of equal-power grid points where k >= 2 selfish
    miners are simultaneously profitable.

    profitable maps k -> [(power grid units, all k rewards exceed power)],
    one entry per sampled grid point. Returns (k, lo_units, hi_units) per k
    with a nonempty run; ties go to the lowest interval.
    """
    out = []
    for k, flags in sorted(profitable.items()):
        if k < 2:
            continue
        best: tuple[int, int] | None = None
        run_start = None
        prev_u = None
        ordered = sorted(flags)
        for u, ok in ordered + [(None, False)]:
            if ok and run_start is None:
                run_start = u
            elif not ok and run_start is not None:
                lo, hi = run_start, prev_u
                if best is None or hi - lo > best[1] - best[0]:
                    best = (lo, hi)
                run_start = None
            prev_u = u if u is not None else prev_u
        if best is not None:
            out.append((k, best[0], best[1]))
    return out
