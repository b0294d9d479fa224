import pytest
from hypothesis import given, settings, strategies as st

from sm_arena.sweep import (
    AllocOutcome,
    Allocation,
    GridSpec,
    IncompleteSweepError,
    default_step,
    enumerate_allocations,
    power_threshold,
    reward_curves,
    safety_level,
    step_units,
)


def outcome(mal, hm, units, rewards, hm_reward=None):
    mal = tuple(sorted(mal))
    if hm_reward is None:
        hm_reward = max(0.0, 1.0 - sum(rewards))
    return AllocOutcome(Allocation(mal, hm, units), tuple(rewards), hm_reward)


def test_default_steps_mapping():
    assert [default_step(n) for n in range(1, 10)] == [
        0.01, 0.01, 0.01, 0.02, 0.04, 0.04, 0.04, 0.05, 0.05]


def test_step_validation():
    assert step_units(0.01) == 100
    assert step_units(0.05) == 20
    with pytest.raises(ValueError):
        step_units(0.03)  # does not divide 1
    with pytest.raises(ValueError):
        step_units(0.0)
    with pytest.raises(ValueError):
        GridSpec(1, 0.07)


def test_enumerate_n1_coarse():
    allocs = enumerate_allocations(GridSpec(1, 0.5, family="full"))
    assert [(a.malicious, a.hm) for a in allocs] == [((0,), 2), ((1,), 1), ((2,), 0)]


def test_enumerate_n2_coarse_exact_set():
    allocs = enumerate_allocations(GridSpec(2, 0.5, family="full"))
    assert {(a.malicious, a.hm) for a in allocs} == {
        ((0, 0), 2), ((0, 1), 1), ((0, 2), 0), ((1, 1), 0)}


def test_enumerate_n1_fine_count():
    assert len(enumerate_allocations(GridSpec(1, 0.01, family="full"))) == 101


def test_enumerate_equal_family():
    allocs = enumerate_allocations(GridSpec(2, 0.05))
    assert all(a.is_equal_power for a in allocs)
    assert [a.malicious[0] for a in allocs] == list(range(11))


def test_allocation_validation_and_key():
    a = Allocation((1, 2), 1, 4)
    assert a.key == "m1-2_h1"
    assert a.powers() == (0.25, 0.5, 0.25)
    with pytest.raises(ValueError):
        Allocation((2, 1), 1, 4)  # not sorted
    with pytest.raises(ValueError):
        Allocation((1, 1), 1, 4)  # does not sum


def _n1_grid(units, reward_of):
    """Single-malicious grid over every power, reward via callback."""
    rows = []
    for u in range(units + 1):
        rows.append(outcome([u], units - u, units, [reward_of(u)]))
    return rows


def test_threshold_exact_boundary():
    rows = _n1_grid(100, lambda u: (u + 5) / 100 if u >= 35 else u / 200)
    beta, verdicts = power_threshold(rows)
    assert beta == 35
    assert verdicts[34] is False and verdicts[35] is True


def test_threshold_least_above_all_violations():
    # profitable everywhere except a dip at power 0.90
    rows = _n1_grid(100, lambda u: u / 100 * 1.2 if u not in (0, 90) else 0.0)
    beta, _ = power_threshold(rows)
    assert beta == 91


def test_threshold_not_found_when_top_fails():
    rows = _n1_grid(100, lambda u: 0.0)
    beta, _ = power_threshold(rows)
    assert beta is None


def test_threshold_skips_powerless_honest_rows():
    # the full-power row would never pass; it must not block the search
    rows = _n1_grid(10, lambda u: min(1.0, u / 10 + 0.2) if u >= 3 else 0.0)
    beta, _ = power_threshold(rows)
    assert beta == 3


def test_threshold_exact_power_reward_is_not_profit():
    # an honest equilibrium pays exactly the power; float dust must not flip it
    rows = _n1_grid(100, lambda u: u / 100)
    beta, _ = power_threshold(rows)
    assert beta is None


def test_incomplete_results_rejected_with_ids():
    spec = GridSpec(1, 0.5, family="full")
    rows = [outcome([0], 2, 2, [0.0])]
    with pytest.raises(IncompleteSweepError) as e:
        power_threshold(rows, required=enumerate_allocations(spec))
    assert "m1_h1" in str(e.value) and "m2_h0" in str(e.value)


def test_safety_level_basic():
    # malicious profitable exactly when its power exceeds a third
    rows = _n1_grid(100, lambda u: u / 100 * 1.1 if u >= 34 else u / 100 * 0.9)
    gamma, verdicts = safety_level(rows)
    assert gamma == 67
    assert verdicts[66] is False and verdicts[67] is True


def test_safety_vacuous_all_malicious_rows():
    safe_rows = [outcome([4, 6], 0, 10, [0.3, 0.5])]
    gamma, _ = safety_level(safe_rows)
    assert gamma == 0
    unsafe_rows = [outcome([4, 6], 0, 10, [0.5, 0.5])]
    gamma, _ = safety_level(unsafe_rows)
    assert gamma is None


def test_bucket_mean_judges_equal_power_pairs():
    # winner/loser split around a stable mean: the pair counts as one bucket
    rows = [outcome([4, 4], 2, 10, [0.55, 0.45])]
    beta, verdicts = power_threshold(rows)
    assert verdicts[4] is True  # mean 0.5 > 0.4
    rows = [outcome([4, 4], 2, 10, [0.45, 0.3])]
    _, verdicts = power_threshold(rows)
    assert verdicts[4] is False  # mean 0.375 < 0.4


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10), st.floats(0, 1)), min_size=1, max_size=11,
                unique_by=lambda t: t[0]))
def test_threshold_monotone_under_violation_removal(entries):
    units = 10
    rows = [outcome([u], units - u, units, [r]) for u, r in entries]
    beta, verdicts = power_threshold(rows)
    violating = [r for r in rows
                 if not verdicts.get(r.alloc.malicious[0], True)]
    if not violating:
        return
    reduced = [r for r in rows if r is not violating[-1]]
    beta2, _ = power_threshold(reduced) if reduced else (None, {})
    if beta is not None:
        assert beta2 is not None and beta2 <= beta


def test_reward_curves_grouping():
    pts = reward_curves([("sm", 10, 0.5), ("sm", 10, 0.7), ("hm", 90, 0.4)])
    by_key = {(p.role, p.power_units): p for p in pts}
    assert by_key[("sm", 10)].mean_reward == pytest.approx(0.6)
    assert by_key[("sm", 10)].n_samples == 2
    assert by_key[("sm", 10)].sem > 0
    assert by_key[("hm", 90)].sem == 0.0 and by_key[("hm", 90)].n_samples == 1


def test_reward_curves_identity_line_all_honest():
    samples = [("hm", u, u / 10) for u in range(11)]
    pts = reward_curves(samples)
    for p in pts:
        assert p.mean_reward == pytest.approx(p.power_units / 10)
