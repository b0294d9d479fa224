import numpy as np
import pytest

from sm_arena.engine import PowerAllocation, SimConfig, StrategyKind, run_once


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    # first call compiles the jitted kernel (cached on disk afterwards)
    run_once(
        PowerAllocation((0.5, 0.5)),
        [StrategyKind.SM, StrategyKind.HM],
        SimConfig(step_cap=200, repetitions=1, seed=1, window=50),
        seed=1,
    )


def small_config(**kw) -> SimConfig:
    base = dict(alpha=1e-4, step_cap=3000, repetitions=2, seed=7, window=500)
    base.update(kw)
    return SimConfig(**base)


def rewards_of(powers, strategies, **kw) -> np.ndarray:
    out = run_once(PowerAllocation(tuple(powers)), list(strategies), small_config(**kw))
    return out.rewards
