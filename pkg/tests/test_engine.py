import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sm_arena import kernel
from sm_arena.engine import (
    PowerAllocation,
    SimConfig,
    StrategyKind,
    collapse_hm,
    make_state,
    match_instance,
    permute_payoffs,
    run_once,
    run_replicated,
    step,
)
from sm_arena.rng import Stream

from conftest import small_config

HM, SM = StrategyKind.HM, StrategyKind.SM


def test_rng_parity_with_kernel():
    s = Stream(987654321)
    py = np.array([s.next_double() for _ in range(512)])
    jit = kernel._rng_probe(987654321, 512)
    assert np.array_equal(py, jit)


@pytest.mark.parametrize("powers,strategies", [
    ((0.45, 0.55), (SM, HM)),
    ((0.3, 0.3, 0.4), (SM, SM, HM)),
    ((0.2, 0.2, 0.2, 0.4), (SM, SM, HM, HM)),
    ((0.5, 0.5), (HM, HM)),
    ((1.0, 0.0), (SM, HM)),
])
@pytest.mark.parametrize("seed", [3, 12345])
def test_reference_and_kernel_bit_identical(powers, strategies, seed):
    cfg = small_config()
    a = run_once(PowerAllocation(powers), list(strategies), cfg, seed, engine="reference")
    b = run_once(PowerAllocation(powers), list(strategies), cfg, seed, engine="fast")
    assert np.array_equal(a.rewards, b.rewards)
    assert a.steps == b.steps and a.converged == b.converged


def test_single_miner_mines_every_step():
    cfg = small_config(step_cap=800, window=200)
    state = make_state(PowerAllocation((1.0,)), [HM], cfg, seed=5)
    for _ in range(100):
        step(state)
    assert state.tree.height[max(state.tree.tips)] == state.t == 100
    assert len(state.tree) == state.t + 1  # one block per timestep


def test_all_hm_single_chain_no_forks():
    cfg = small_config(step_cap=2000, window=400)
    state = make_state(PowerAllocation((0.3, 0.7)), [HM, HM], cfg, seed=11)
    while state.t < cfg.step_cap:
        step(state)
        assert len(state.tree.tips) == 1
    assert state.tree.height[next(iter(state.tree.tips))] == state.t


def test_all_hm_block_fractions_match_powers():
    cfg = SimConfig(step_cap=30_000, repetitions=12, seed=21, window=6000)
    res = run_replicated(PowerAllocation((0.3, 0.7)), [HM, HM], cfg)
    for i, p in enumerate((0.3, 0.7)):
        assert abs(res.mean_rewards[i] - p) <= 3 * res.sem[i] + 1e-9


def test_sm_above_power_at_045():
    cfg = SimConfig(step_cap=30_000, repetitions=10, seed=31, window=6000)
    res = run_replicated(PowerAllocation((0.45, 0.55)), [SM, HM], cfg)
    assert res.mean_rewards[0] > 0.45


def test_sm_wasted_below_threshold():
    cfg = SimConfig(step_cap=30_000, repetitions=10, seed=31, window=6000)
    res = run_replicated(PowerAllocation((0.1, 0.9)), [SM, HM], cfg)
    assert res.mean_rewards[0] < 0.1


def test_zero_power_miner_earns_nothing():
    res = run_replicated(PowerAllocation((0.0, 0.6, 0.4)), [SM, HM, HM],
                         small_config(repetitions=2))
    assert res.mean_rewards[0] == 0.0


def test_rewards_sum_to_one_per_repetition():
    cfg = small_config(repetitions=4)
    res = run_replicated(PowerAllocation((0.25, 0.35, 0.4)), [SM, SM, HM], cfg)
    sums = res.rep_rewards.sum(axis=1)
    assert np.allclose(sums, 1.0, atol=1e-9)
    assert abs(res.mean_rewards.sum() - 1.0) < 1e-6


def test_replication_determinism_and_sem():
    cfg = small_config(repetitions=3)
    alloc = PowerAllocation((0.4, 0.6))
    a = run_replicated(alloc, [SM, HM], cfg)
    b = run_replicated(alloc, [SM, HM], cfg)
    assert np.array_equal(a.rep_rewards, b.rep_rewards)
    assert np.array_equal(a.steps_used, b.steps_used)
    single = run_replicated(alloc, [SM, HM], small_config(repetitions=1))
    assert np.array_equal(single.sem, np.zeros(2))
    assert np.array_equal(single.mean_rewards, single.rep_rewards[0])


def test_convergence_stops_constant_utility():
    # one miner: utility is constant 1.0, so the run settles right at the window
    cfg = SimConfig(step_cap=5000, repetitions=1, seed=3, window=300)
    out = run_once(PowerAllocation((1.0,)), [HM], cfg)
    assert out.converged and out.steps == 300


def test_collapse_hm_examples():
    alloc = PowerAllocation((0.2, 0.3, 0.5))
    red_alloc, red_strats, groups = collapse_hm(alloc, [HM, HM, SM])
    assert red_alloc.powers == (0.5, 0.5)
    assert red_strats == [HM, SM]
    assert groups == [[0, 1], [2]]

    alloc2 = PowerAllocation((0.6, 0.4))
    a2, s2, g2 = collapse_hm(alloc2, [HM, SM])
    assert a2.powers == (0.6, 0.4) and s2 == [HM, SM] and g2 == [[0], [1]]

    a3, s3, g3 = collapse_hm(alloc2, [SM, SM])
    assert a3.powers == (0.6, 0.4) and s3 == [SM, SM] and g3 == [[0], [1]]


def test_collapse_equivalence_within_noise():
    cfg = SimConfig(step_cap=30_000, repetitions=12, seed=17, window=6000)
    split = run_replicated(PowerAllocation((0.3, 0.4, 0.3)), [SM, HM, HM], cfg)
    merged = run_replicated(PowerAllocation((0.3, 0.7)), [SM, HM], cfg)
    sem = np.hypot(split.sem[0], merged.sem[0])
    assert abs(split.mean_rewards[0] - merged.mean_rewards[0]) <= 3 * sem + 1e-9


def test_permute_payoffs_swap():
    cfg = small_config(repetitions=2)
    res = run_replicated(PowerAllocation((0.4, 0.6)), [HM, SM], cfg)
    swapped = permute_payoffs(res, [1, 0])
    assert swapped.powers == (0.6, 0.4)
    assert swapped.strategies == (SM, HM)
    assert np.array_equal(swapped.mean_rewards, res.mean_rewards[[1, 0]])
    # identity leaves everything in place
    same = permute_payoffs(res, [0, 1])
    assert np.array_equal(same.mean_rewards, res.mean_rewards)


def test_match_instance_and_rejection():
    cfg = small_config(repetitions=2)
    res = run_replicated(PowerAllocation((0.4, 0.6)), [HM, SM], cfg)
    m = match_instance(res, (0.6, 0.4), [SM, HM])
    assert m.powers == (0.6, 0.4) and m.strategies == (SM, HM)
    with pytest.raises(ValueError):
        match_instance(res, (0.5, 0.5), [SM, HM])
    with pytest.raises(ValueError):
        match_instance(res, (0.4, 0.6), [SM, HM])
    with pytest.raises(ValueError):
        permute_payoffs(res, [0, 0])


def test_swapping_equal_miners_is_noop_up_to_labels():
    cfg = small_config(repetitions=2)
    res = run_replicated(PowerAllocation((0.5, 0.5)), [HM, HM], cfg)
    swapped = match_instance(res, (0.5, 0.5), [HM, HM])
    assert swapped.powers == res.powers and swapped.strategies == res.strategies


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_determinism_property(n, seed):
    powers = tuple(1.0 / n for _ in range(n))
    strategies = [SM if i == 0 else HM for i in range(n)]
    cfg = SimConfig(step_cap=400, repetitions=1, seed=seed, window=100)
    a = run_once(PowerAllocation(powers), strategies, cfg)
    b = run_once(PowerAllocation(powers), strategies, cfg)
    assert np.array_equal(a.rewards, b.rewards) and a.steps == b.steps


def test_reference_and_kernel_randomized_stress():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(1, 7))
        w = rng.integers(0, 12, size=n).astype(float)
        if w.sum() == 0:
            w[rng.integers(0, n)] = 1.0
        powers = tuple(float(x) for x in (w / w.sum()))
        powers = powers[:-1] + (1.0 - sum(powers[:-1]),)
        strategies = [SM if rng.random() < 0.5 else HM for _ in range(n)]
        cap = int(rng.integers(50, 3000))
        cfg = SimConfig(step_cap=cap, repetitions=1, seed=1,
                        window=int(rng.integers(10, cap + 1)))
        seed = int(rng.integers(0, 2**63))
        a = run_once(PowerAllocation(powers), strategies, cfg, seed, engine="reference")
        b = run_once(PowerAllocation(powers), strategies, cfg, seed, engine="fast")
        assert np.array_equal(a.rewards, b.rewards), (powers, strategies, cap, seed)
        assert a.steps == b.steps and a.converged == b.converged


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(alpha=0.0)
    with pytest.raises(ValueError):
        SimConfig(step_cap=100, window=200)
    with pytest.raises(ValueError):
        SimConfig(repetitions=0)
    with pytest.raises(ValueError):
        PowerAllocation((0.5, 0.6))
    with pytest.raises(ValueError):
        PowerAllocation((-0.1, 1.1))
