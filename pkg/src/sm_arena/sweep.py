"""Power-allocation grids, reward curves, power thresholds and safety levels.

Grid powers are integer multiples of the step, kept as integers everywhere so
grouping keys never suffer float drift. An allocation is a sorted tuple of
malicious powers plus one honest collective holding the remainder.

The threshold of a result set is the least sampled grid power p such that at
every sampled power q >= p the malicious miners holding q earn more than q,
uniformly over allocations; the safety level is the least honest-collective
power beyond which no malicious miner earns above its power. Profitability at
one (allocation, power) is judged on the mean reward of the miners sharing
that power in that allocation: miners at equal power are exchangeable, and in
allocations whose withheld branches outrace the public chain for the whole
run the per-miner split is a leader-coin-flip artifact while their mean is
stable. The threshold search skips allocations with a powerless honest
collective (nothing is ever published there, so no power can clear the bar
at full power and no threshold could exist); the safety search keeps them,
since zero honest power is a legitimate candidate level. NOT_FOUND is
reported as None.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_STEPS = {1: 0.01, 2: 0.01, 3: 0.01, 4: 0.02, 5: 0.04, 6: 0.04, 7: 0.04, 8: 0.05, 9: 0.05}

FIXED = "fixed"
DYNAMIC = "dynamic"


def default_step(n_malicious: int) -> float:
    return DEFAULT_STEPS.get(n_malicious, 0.05)


def step_units(step: float) -> int:
    """Grid resolution as units per total power; step must divide 1."""
    if step <= 0 or step > 1:
        raise ValueError(f"invalid step {step}")
    units = round(1.0 / step)
    if abs(units * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1")
    return units


@dataclass(frozen=True)
class GridSpec:
    n_malicious: int
    step: float
    model: str = FIXED
    family: str = "equal"  # "equal": all malicious share one power; "full": all sorted splits

    def __post_init__(self):
        if self.n_malicious < 1:
            raise ValueError("need at least one malicious miner")
        if self.model not in (FIXED, DYNAMIC):
            raise ValueError(f"unknown model {self.model!r}")
        if self.family not in ("equal", "full"):
            raise ValueError(f"unknown family {self.family!r}")
        step_units(self.step)

    @property
    def units(self) -> int:
        return step_units(self.step)


@dataclass(frozen=True, order=True)
class Allocation:
    """Sorted malicious grid powers plus the honest remainder, in step units."""

    malicious: tuple[int, ...]
    hm: int
    units: int

    def __post_init__(self):
        if any(m < 0 for m in self.malicious) or self.hm < 0:
            raise ValueError("negative power")
        if sum(self.malicious) + self.hm != self.units:
            raise ValueError("allocation does not sum to total power")
        if tuple(sorted(self.malicious)) != self.malicious:
            raise ValueError("malicious powers must be sorted ascending")

    @property
    def key(self) -> str:
        return "m" + "-".join(str(u) for u in self.malicious) + f"_h{self.hm}"

    @property
    def n_malicious(self) -> int:
        return len(self.malicious)

    def powers(self) -> tuple[float, ...]:
        """Per-miner fractions, malicious first, honest collective last."""
        return tuple(u / self.units for u in self.malicious) + (self.hm / self.units,)

    @property
    def is_equal_power(self) -> bool:
        return len(set(self.malicious)) == 1


def enumerate_allocations(spec: GridSpec) -> list[Allocation]:
    """Every canonical grid allocation of the spec's family, deduplicated and
    sorted. The honest remainder may be zero."""
    total = spec.units
    n = spec.n_malicious
    out = []
    if spec.family == "equal":
        for q in range(total // n + 1):
            out.append(Allocation((q,) * n, total - n * q, total))
        return out

    def rec(prefix: tuple[int, ...], lo: int, remaining: int, slots: int):
        if slots == 0:
            out.append(Allocation(prefix, remaining, total))
            return
        for u in range(lo, remaining // slots + 1):
            rec(prefix + (u,), u, remaining - u, slots - 1)

    # ascending tuples keep every split canonical (sorted) and unique
    for first in range(total + 1):
        if first * n <= total:
            rec((first,), first, total - first, n - 1)
    return sorted(set(out))


@dataclass
class AllocOutcome:
    """Per-allocation rewards used by the threshold, safety and curve
    aggregations: one reward per malicious miner (allocation order) plus the
    honest collective's."""

    alloc: Allocation
    malicious_rewards: tuple[float, ...]
    hm_reward: float
    extra: dict = field(default_factory=dict)

    def buckets(self) -> list[tuple[int, float]]:
        """(power units, mean reward of the miners at that power)."""
        groups: dict[int, list[float]] = {}
        for u, r in zip(self.alloc.malicious, self.malicious_rewards):
            groups.setdefault(u, []).append(r)
        return [(u, float(np.mean(v))) for u, v in sorted(groups.items())]


# Guard for reward-vs-power comparisons: an honest equilibrium pays exactly
# the miner's power, and float dust must not turn that into ">" (0.34 * 100
# is 34.000000000000004). Simulated rewards differ from power by far more
# than this whenever they genuinely differ.
_EQ_GUARD = 1e-9


def _over_rewarded(reward: float, power_units: int, total_units: int) -> bool:
    return reward * total_units > power_units + _EQ_GUARD


class IncompleteSweepError(ValueError):
    def __init__(self, missing: list[str]):
        super().__init__(f"results missing for {len(missing)} allocation(s): "
                         + ", ".join(missing[:10]) + ("..." if len(missing) > 10 else ""))
        self.missing = missing


def _check_complete(results: list[AllocOutcome], required: list[Allocation] | None):
    if required is None:
        return
    have = {r.alloc for r in results}
    missing = [a.key for a in sorted(required) if a not in have]
    if missing:
        raise IncompleteSweepError(missing)


def power_threshold(
    results: list[AllocOutcome], required: list[Allocation] | None = None
) -> tuple[int | None, dict[int, bool]]:
    """Least sampled grid power that is profitable at itself and every
    sampled power above it; None when no suffix qualifies.

    Returns (threshold units or None, per-power verdicts) so callers can keep
    the grid evidence.
    """
    _check_complete(results, required)
    ok: dict[int, bool] = {}
    for r in results:
        if r.alloc.hm == 0:
            continue  # no honest power: withheld branches never resolve
        for u, reward in r.buckets():
            ok[u] = ok.get(u, True) and _over_rewarded(reward, u, r.alloc.units)
    threshold: int | None = None
    for u in sorted(ok, reverse=True):
        if not ok[u]:
            break
        threshold = u
    # self-audit: re-check the defining clause against the raw inputs
    if threshold is not None:
        for r in results:
            if r.alloc.hm == 0:
                continue
            for u, reward in r.buckets():
                assert u < threshold or _over_rewarded(reward, u, r.alloc.units), (
                    f"threshold audit failed at {r.alloc.key} power {u}"
                )
    return threshold, ok


def safety_level(
    results: list[AllocOutcome], required: list[Allocation] | None = None
) -> tuple[int | None, dict[int, bool]]:
    """Least sampled honest-collective power at and beyond which no malicious
    power bucket earns above its power; None when even full honest power
    fails. Returns (level units or None, per-hm-power verdicts)."""
    _check_complete(results, required)
    safe: dict[int, bool] = {}
    for r in results:
        row_safe = not any(_over_rewarded(reward, u, r.alloc.units) for u, reward in r.buckets())
        safe[r.alloc.hm] = safe.get(r.alloc.hm, True) and row_safe
    level: int | None = None
    for h in sorted(safe, reverse=True):
        if not safe[h]:
            break
        level = h
    if level is not None:
        for r in results:
            if r.alloc.hm < level:
                continue
            for u, reward in r.buckets():
                assert not _over_rewarded(reward, u, r.alloc.units), (
                    f"safety audit failed at {r.alloc.key} power {u}"
                )
    return level, safe


@dataclass
class CurvePoint:
    role: str  # "sm" or "hm"
    power_units: int
    mean_reward: float
    sem: float
    n_samples: int


def reward_curves(samples: list[tuple[str, int, float]]) -> list[CurvePoint]:
    """Mean and standard error of reward per (role, power) across everything
    sharing that power: per-miner samples for the malicious side, collective
    samples for the honest side."""
    groups: dict[tuple[str, int], list[float]] = {}
    for role, units, value in samples:
        groups.setdefault((role, units), []).append(value)
    out = []
    for (role, units), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        sem = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
        out.append(CurvePoint(role, units, float(arr.mean()), sem, len(arr)))
    return out
