"""Simulation runner.

One timestep: a single miner is sampled in proportion to mining power and
mines on its current target; the resulting broadcasts are delivered to every
other miner, with simultaneous messages processed in uniformly random order.
Reactions (a selfish miner answering a delivery with a publication) join the
same timestep's queue. A message is only ever created by its sender, so a
reaction can never overtake the block that triggered it.

Utility is the per-miner share of blocks on the deepest chain of the whole
block tree, withheld branches included; it is sampled only at timesteps where
that deepest chain is unique. A run stops once every miner's sampled utility
moved by at most `alpha` across the trailing `window` samples, or at the step
cap. If the cap lands on a height tie, the tie goes to the block that reached
the top height first in that timestep's (randomly ordered) processing.

The module-level functions here are the readable reference implementation;
`run_replicated` dispatches to the compiled kernel by default and the two are
held bit-identical by tests (they consume the same random stream).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .chain import BlockTree, RewardVector
from .rng import Stream, derive_seed
from .strategies import (
    HonestView,
    SelfishView,
    StrategyKind,
    hm_on_event,
    sm_on_external_block,
    sm_on_self_mined,
)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-miner fractions of total hash rate; must sum to 1."""

    powers: tuple[float, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.powers):
            raise ValueError("negative mining power")
        if abs(sum(self.powers) - 1.0) > 1e-9:
            raise ValueError(f"powers sum to {sum(self.powers)!r}, expected 1")

    def __len__(self) -> int:
        return len(self.powers)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.powers, dtype=np.float64)


@dataclass(frozen=True)
class SimConfig:
    alpha: float = 1e-4
    step_cap: int = 200_000
    repetitions: int = 100
    seed: int = 0
    window: int = 10_000

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (self.step_cap >= self.window > 0):
            raise ValueError("need step_cap >= window > 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def with_overrides(self, **kw) -> "SimConfig":
        data = {
            "alpha": self.alpha,
            "step_cap": self.step_cap,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "window": self.window,
        }
        data.update({k: v for k, v in kw.items() if v is not None})
        return SimConfig(**data)


@dataclass
class RunResult:
    """Outcome of a single repetition."""

    rewards: np.ndarray
    steps: int
    converged: bool


@dataclass
class SimResult:
    """Aggregate over repetitions of one (allocation, strategies) instance."""

    powers: tuple[float, ...]
    strategies: tuple[StrategyKind, ...]
    mean_rewards: np.ndarray
    sem: np.ndarray
    converged_fraction: float
    steps_used: np.ndarray
    rep_rewards: np.ndarray

    @property
    def n_miners(self) -> int:
        return len(self.powers)


class _WindowTracker:
    """Sliding max-min of the last `window` samples, one pair of monotonic
    deques per miner."""

    def __init__(self, n: int, window: int):
        self.window = window
        self.count = 0
        self.maxq = [deque() for _ in range(n)]  # decreasing values
        self.minq = [deque() for _ in range(n)]  # increasing values

    def push(self, values) -> None:
        m = self.count
        for i, v in enumerate(values):
            mq = self.maxq[i]
            while mq and mq[-1][1] <= v:
                mq.pop()
            mq.append((m, v))
            while mq[0][0] <= m - self.window:
                mq.popleft()
            nq = self.minq[i]
            while nq and nq[-1][1] >= v:
                nq.pop()
            nq.append((m, v))
            while nq[0][0] <= m - self.window:
                nq.popleft()
        self.count += 1

    def settled(self, alpha: float) -> bool:
        if self.count < self.window:
            return False
        return all(
            self.maxq[i][0][1] - self.minq[i][0][1] <= alpha
            for i in range(len(self.maxq))
        )


@dataclass
class SimState:
    """Mutable state of one run (reference implementation)."""

    powers: np.ndarray
    views: list
    tree: BlockTree
    rng: Stream
    alpha: float
    window: int
    t: int = 0
    counts: np.ndarray = None  # owner counts along the reference chain
    ref_tip: int = 0
    max_h: int = 0
    top_tip: int = 0  # first block to reach max_h
    tie_count: int = 1
    tracker: _WindowTracker = None
    converged: bool = False

    def __post_init__(self):
        n = len(self.powers)
        if self.counts is None:
            self.counts = np.zeros(n, dtype=np.int64)
        if self.tracker is None:
            self.tracker = _WindowTracker(n, self.window)


def make_state(
    allocation: PowerAllocation,
    strategies: list[StrategyKind],
    config: SimConfig,
    seed: int | None = None,
) -> SimState:
    if len(allocation) != len(strategies):
        raise ValueError("allocation and strategies length mismatch")
    views = [
        SelfishView() if s is StrategyKind.SM else HonestView() for s in strategies
    ]
    return SimState(
        powers=allocation.as_array(),
        views=views,
        tree=BlockTree(),
        rng=Stream(config.seed if seed is None else seed),
        alpha=config.alpha,
        window=config.window,
    )


def _pick_miner(powers: np.ndarray, r: float) -> int:
    acc = 0.0
    for i, p in enumerate(powers):
        acc += p
        if r < acc:
            return i
    return len(powers) - 1


def _move_counts(tree: BlockTree, counts: np.ndarray, old_tip: int, new_tip: int) -> None:
    a, b = old_tip, new_tip
    while tree.height[a] > tree.height[b]:
        counts[tree.owner[a]] -= 1
        a = tree.parent[a]
    while tree.height[b] > tree.height[a]:
        counts[tree.owner[b]] += 1
        b = tree.parent[b]
    while a != b:
        counts[tree.owner[a]] -= 1
        counts[tree.owner[b]] += 1
        a, b = tree.parent[a], tree.parent[b]


def step(state: SimState) -> SimState:
    """Advance one timestep: mine one block, drain the broadcast queue, then
    take the utility sample if the deepest chain is unique."""
    tree, views, rng = state.tree, state.views, state.rng
    state.t += 1

    i = _pick_miner(state.powers, rng.next_double())
    view = views[i]
    if isinstance(view, SelfishView):
        block = tree.extend(view.private_head, i)
        action = sm_on_self_mined(view, tree, block)
    else:
        block = tree.extend(view.head, i)
        action = hm_on_event(view, tree, block, mined=True)

    h = tree.height[block]
    if h > state.max_h:
        state.max_h, state.top_tip, state.tie_count = h, block, 1
    elif h == state.max_h:
        state.tie_count += 1

    queue: list[tuple[int, list[int]]] = []
    if action.blocks_to_broadcast:
        queue.append((i, action.blocks_to_broadcast))
    while queue:
        k = rng.below(len(queue))
        sender, blocks = queue[k]
        queue[k] = queue[-1]
        queue.pop()
        for j in range(len(views)):
            if j == sender:
                continue
            vj = views[j]
            if isinstance(vj, SelfishView):
                out: list[int] = []
                for blk in blocks:
                    out.extend(sm_on_external_block(vj, tree, blk).blocks_to_broadcast)
                if out:
                    queue.append((j, out))
            else:
                for blk in blocks:
                    hm_on_event(vj, tree, blk, mined=False)

    if state.tie_count == 1:
        if state.top_tip != state.ref_tip:
            _move_counts(tree, state.counts, state.ref_tip, state.top_tip)
            state.ref_tip = state.top_tip
        state.tracker.push(state.counts / state.max_h)
        if state.tracker.settled(state.alpha):
            state.converged = True
    return state


def finish(state: SimState) -> RunResult:
    """Final reward vector; a terminal height tie goes to the first block that
    reached the top height."""
    if state.top_tip != state.ref_tip:
        _move_counts(state.tree, state.counts, state.ref_tip, state.top_tip)
        state.ref_tip = state.top_tip
    rv = RewardVector.from_counts(state.counts)
    return RunResult(rv.rewards, state.t, state.converged)


def run_once(
    allocation: PowerAllocation,
    strategies: list[StrategyKind],
    config: SimConfig,
    seed: int | None = None,
    engine: str = "fast",
) -> RunResult:
    """One repetition, deterministic in `seed`."""
    if engine == "fast":
        from . import kernel

        rewards, steps, conv = kernel.run_rep(
            allocation.as_array(),
            np.array([s is StrategyKind.SM for s in strategies], dtype=np.bool_),
            config.step_cap,
            config.alpha,
            config.window,
            np.uint64(config.seed if seed is None else seed),
        )
        return RunResult(rewards, int(steps), bool(conv))
    state = make_state(allocation, strategies, config, seed)
    while state.t < config.step_cap and not state.converged:
        step(state)
    return finish(state)


def run_replicated(
    allocation: PowerAllocation,
    strategies: list[StrategyKind],
    config: SimConfig,
    engine: str = "fast",
) -> SimResult:
    """`config.repetitions` independent runs; repetition streams are derived
    from (seed, repetition index) so results never depend on scheduling."""
    reps = config.repetitions
    n = len(allocation)
    rep_rewards = np.zeros((reps, n), dtype=np.float64)
    steps_used = np.zeros(reps, dtype=np.int64)
    converged = 0
    for r in range(reps):
        out = run_once(allocation, strategies, config, derive_seed(config.seed, r), engine)
        rep_rewards[r] = out.rewards
        steps_used[r] = out.steps
        converged += int(out.converged)
    mean = rep_rewards.mean(axis=0)
    sem = (
        rep_rewards.std(axis=0, ddof=1) / np.sqrt(reps)
        if reps > 1
        else np.zeros(n, dtype=np.float64)
    )
    return SimResult(
        powers=tuple(allocation.powers),
        strategies=tuple(strategies),
        mean_rewards=mean,
        sem=sem,
        converged_fraction=converged / reps,
        steps_used=steps_used,
        rep_rewards=rep_rewards,
    )


def collapse_hm(
    allocation: PowerAllocation, strategies: list[StrategyKind]
) -> tuple[PowerAllocation, list[StrategyKind], list[list[int]]]:
    """Merge all honest miners into one collective holding their summed power.

    Returns the reduced instance plus an expansion map: reduced index ->
    original indices (the collective keeps the position of the first honest
    miner). With no honest miner the instance is returned unchanged.
    """
    hm_idx = [i for i, s in enumerate(strategies) if s is StrategyKind.HM]
    if len(hm_idx) <= 1:
        return allocation, list(strategies), [[i] for i in range(len(strategies))]
    first = hm_idx[0]
    powers: list[float] = []
    strats: list[StrategyKind] = []
    groups: list[list[int]] = []
    for i, (p, s) in enumerate(zip(allocation.powers, strategies)):
        if s is StrategyKind.HM:
            if i != first:
                continue
            powers.append(sum(allocation.powers[j] for j in hm_idx))
            strats.append(StrategyKind.HM)
            groups.append(list(hm_idx))
        else:
            powers.append(p)
            strats.append(s)
            groups.append([i])
    return PowerAllocation(tuple(powers)), strats, groups


def permute_payoffs(result: SimResult, perm: list[int]) -> SimResult:
    """Reorder a simulated result onto a permuted instance without
    re-simulating: position i of the output takes miner perm[i]'s values."""
    n = result.n_miners
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {perm}")
    idx = np.asarray(perm, dtype=np.int64)
    return SimResult(
        powers=tuple(result.powers[j] for j in perm),
        strategies=tuple(result.strategies[j] for j in perm),
        mean_rewards=result.mean_rewards[idx],
        sem=result.sem[idx],
        converged_fraction=result.converged_fraction,
        steps_used=result.steps_used,
        rep_rewards=result.rep_rewards[:, idx],
    )


def match_instance(
    result: SimResult,
    powers: tuple[float, ...],
    strategies: list[StrategyKind],
) -> SimResult:
    """Reuse a canonical result for a requested instance that is a permutation
    of it; rejected when the (power, strategy) multisets differ."""
    available = list(range(result.n_miners))
    perm: list[int] = []
    for p, s in zip(powers, strategies):
        hit = next(
            (
                j
                for j in available
                if result.strategies[j] is s and abs(result.powers[j] - p) <= 1e-12
            ),
            None,
        )
        if hit is None:
            raise ValueError(
                "requested instance is not a permutation of the simulated one"
            )
        available.remove(hit)
        perm.append(hit)
    return permute_payoffs(result, perm)
