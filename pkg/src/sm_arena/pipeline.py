"""Sweep orchestration: task scheduling, resumption, and CSV artifacts.

A sweep is a set of independent tasks (one per allocation in the fixed model,
one per allocation x strategy profile in the dynamic model). Each task's
random stream derives from the master seed and the task's identity, so the
artifacts are identical for any worker count and any completion order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from .engine import PowerAllocation, SimConfig, StrategyKind, run_replicated
from .game import (
    EquilibriumSet,
    GameTable,
    MinerType,
    ProfilePayoff,
    epsilon_pe,
    equilibrium_rewards,
    hm_preference_filter,
    multi_sm_ranges,
    simulate_profile,
)
from .rng import derive_seed, hash_key
from .runio import RunDir, config_hash, write_csv
from .sweep import (
    FIXED,
    AllocOutcome,
    Allocation,
    GridSpec,
    power_threshold,
    reward_curves,
    safety_level,
)

NOT_FOUND = "NOT_FOUND"


@dataclass(frozen=True)
class SweepParams:
    spec: GridSpec
    sim: SimConfig
    epsilon: float = 1e-4
    eq_aggregate: str = "max"

    def snapshot(self) -> dict:
        return {
            "model": self.spec.model,
            "n_malicious": self.spec.n_malicious,
            "step": self.spec.step,
            "family": self.spec.family,
            "alpha": self.sim.alpha,
            "cap": self.sim.step_cap,
            "reps": self.sim.repetitions,
            "window": self.sim.window,
            "seed": self.sim.seed,
            "epsilon": self.epsilon,
            "eq_aggregate": self.eq_aggregate,
        }


def _fixed_task_id(alloc: Allocation) -> str:
    return f"sim:{alloc.key}"


def _game_task_id(alloc: Allocation, bits: int) -> str:
    return f"game:{alloc.key}:p{bits}"


def sweep_tasks(params: SweepParams) -> list[tuple[str, Allocation, int | None]]:
    """(task id, allocation, profile bits or None) for the whole sweep."""
    from .sweep import enumerate_allocations

    allocs = enumerate_allocations(params.spec)
    tasks: list[tuple[str, Allocation, int | None]] = []
    for alloc in allocs:
        if params.spec.model == FIXED:
            tasks.append((_fixed_task_id(alloc), alloc, None))
        else:
            for bits in range(1 << alloc.n_malicious):
                tasks.append((_game_task_id(alloc, bits), alloc, bits))
    return tasks


def run_task(params: SweepParams, alloc: Allocation, bits: int | None) -> dict:
    if bits is None:
        strategies = [StrategyKind.SM] * alloc.n_malicious + [StrategyKind.HM]
        cfg = params.sim.with_overrides(
            seed=derive_seed(params.sim.seed, hash_key(_fixed_task_id(alloc)))
        )
        res = run_replicated(PowerAllocation(alloc.powers()), strategies, cfg)
        return {
            "mean": res.mean_rewards.tolist(),
            "sem": res.sem.tolist(),
            "converged_fraction": res.converged_fraction,
            "mean_steps": float(res.steps_used.mean()),
        }
    types = [MinerType.STRM] * alloc.n_malicious + [MinerType.HM]
    return simulate_profile(alloc.powers(), types, bits, params.sim, key=alloc.key)


def run_sweep(
    rundir: RunDir,
    params: SweepParams,
    jobs: int = 1,
    sort_rows: bool = True,
    progress=None,
) -> dict:
    """Run all pending tasks, then rebuild the CSV artifacts. Returns summary
    counts. Raises ValueError when the directory holds a different sweep."""
    snapshot = params.snapshot()
    chash = config_hash(snapshot)
    manifest = {
        "kind": "sweep",
        "params": snapshot,
        "config_hash": chash,
        "tasks": [t for t, _, _ in sweep_tasks(params)],
    }
    try:
        existing = rundir.read_manifest()
    except FileNotFoundError:
        existing = None
    if existing is not None and existing.get("config_hash") != chash:
        raise ValueError(
            "output directory already holds a sweep with different parameters; "
            "use a fresh --out or matching flags"
        )
    rundir.write_manifest(manifest)

    done = rundir.load_journal()
    tasks = sweep_tasks(params)
    pending = [(t, a, b) for (t, a, b) in tasks if t not in done]

    def _one(entry):
        task_id, alloc, bits = entry
        data = run_task(params, alloc, bits)
        rundir.append_journal(task_id, data)
        return task_id

    if jobs <= 1:
        for entry in pending:
            _one(entry)
            if progress:
                progress(entry[0])
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_one, e) for e in pending]
            for fut in as_completed(futures):
                tid = fut.result()
                if progress:
                    progress(tid)

    write_artifacts(rundir, params, sort_rows=sort_rows)
    return {"tasks": len(tasks), "ran": len(pending), "skipped": len(tasks) - len(pending)}


def load_results(rundir: RunDir, params: SweepParams, require_complete: bool = True):
    """Journal -> per-allocation data. Fixed model: SimResult-like dicts.
    Dynamic model: GameTable per allocation."""
    done = rundir.load_journal()
    tasks = sweep_tasks(params)
    missing = [t for t, _, _ in tasks if t not in done]
    if missing and require_complete:
        from .sweep import IncompleteSweepError

        raise IncompleteSweepError(missing)

    from .sweep import enumerate_allocations

    allocs = enumerate_allocations(params.spec)
    if params.spec.model == FIXED:
        out = {}
        for alloc in allocs:
            rec = done.get(_fixed_task_id(alloc))
            if rec is not None:
                out[alloc] = rec
        return out
    games: dict[Allocation, GameTable] = {}
    for alloc in allocs:
        n = alloc.n_malicious
        payoffs = {}
        for bits in range(1 << n):
            rec = done.get(_game_task_id(alloc, bits))
            if rec is None:
                payoffs = None
                break
            payoffs[bits] = ProfilePayoff(np.asarray(rec["mean"]), np.asarray(rec["sem"]))
        if payoffs is not None:
            types = (MinerType.STRM,) * n + (MinerType.HM,)
            games[alloc] = GameTable(alloc.powers(), types, payoffs)
    return games


def analyze_dynamic(
    game: GameTable, epsilon: float, eq_aggregate: str
) -> tuple[EquilibriumSet, EquilibriumSet, np.ndarray]:
    """(all equilibria, surviving equilibria, aggregated per-miner rewards)."""
    eqs = epsilon_pe(game, epsilon)
    surviving = hm_preference_filter(eqs, game)
    rewards = equilibrium_rewards(game, surviving, eq_aggregate)
    return eqs, surviving, rewards


def write_artifacts(rundir: RunDir, params: SweepParams, sort_rows: bool = True) -> None:
    spec = params.spec
    meta = {
        "seed": params.sim.seed,
        "config_hash": config_hash(params.snapshot()),
        "model": spec.model,
        "n": spec.n_malicious,
        "step": spec.step,
    }
    results = load_results(rundir, params, require_complete=True)
    units = spec.units

    alloc_rows = []
    for alloc in results:
        alloc_rows.append(
            (
                alloc.key,
                spec.n_malicious,
                spec.model,
                units,
                "-".join(str(u) for u in alloc.malicious),
                alloc.hm,
            )
        )
    _emit(rundir, "allocations.csv", meta,
          ["alloc_id", "n_malicious", "model", "units_per_1", "malicious_units", "hm_units"],
          alloc_rows, sort_rows)

    curve_samples: list[tuple[str, int, float]] = []
    outcomes: list[AllocOutcome] = []
    equal_profit: dict[int, list[tuple[int, bool]]] = {}

    if spec.model == FIXED:
        result_rows = []
        for alloc, rec in results.items():
            mean = rec["mean"]
            for i, u in enumerate(alloc.malicious):
                result_rows.append(
                    (alloc.key, i, "sm", u / units, mean[i], rec["sem"][i])
                )
                curve_samples.append(("sm", u, mean[i]))
            result_rows.append(
                (alloc.key, alloc.n_malicious, "hm", alloc.hm / units,
                 mean[alloc.n_malicious], rec["sem"][alloc.n_malicious])
            )
            curve_samples.append(("hm", alloc.hm, mean[alloc.n_malicious]))
            outcomes.append(
                AllocOutcome(alloc, tuple(mean[: alloc.n_malicious]), mean[alloc.n_malicious])
            )
            if alloc.is_equal_power and alloc.n_malicious >= 2 and alloc.hm > 0:
                q = alloc.malicious[0]
                ok = all(r * units > q + 1e-9 for r in mean[: alloc.n_malicious])
                equal_profit.setdefault(alloc.n_malicious, []).append((q, ok))
        _emit(rundir, "results.csv", meta,
              ["alloc_id", "miner", "role", "power", "mean_reward", "sem"],
              result_rows, sort_rows)
    else:
        game_rows = []
        eq_rows = []
        for alloc, game in results.items():
            eqs, surviving, rewards = analyze_dynamic(game, params.epsilon, params.eq_aggregate)
            for bits, payoff in sorted(game.payoffs.items()):
                for i in range(len(game.powers)):
                    game_rows.append(
                        (alloc.key, bits, i, game.powers[i], payoff.mean[i], payoff.sem[i])
                    )
            for bits in eqs.equilibria:
                eq_rows.append((alloc.key, bits, int(bits in surviving.equilibria)))
            n = alloc.n_malicious
            for bits in surviving.equilibria:
                payoff = game.payoffs[bits]
                for i, u in enumerate(alloc.malicious):
                    curve_samples.append(("sm", u, payoff.mean[i]))
                curve_samples.append(("hm", alloc.hm, payoff.mean[n]))
            outcomes.append(AllocOutcome(alloc, tuple(rewards[:n]), rewards[n]))
            if alloc.is_equal_power and n >= 2 and alloc.hm > 0:
                q = alloc.malicious[0]
                all_sm = (1 << n) - 1
                ok = all_sm in surviving.equilibria and all(
                    game.payoffs[all_sm].mean[i] * units > q + 1e-9 for i in range(n)
                )
                equal_profit.setdefault(n, []).append((q, ok))
        _emit(rundir, "games.csv", meta,
              ["alloc_id", "profile_bits", "miner", "power", "payoff", "sem"],
              game_rows, sort_rows)
        _emit(rundir, "equilibria.csv", meta,
              ["alloc_id", "profile_bits", "hm_preferred"], eq_rows, sort_rows)

    curve_rows = [
        (spec.n_malicious, spec.model, p.role, p.power_units / units,
         p.mean_reward, p.sem, p.n_samples)
        for p in reward_curves(curve_samples)
    ]
    _emit(rundir, "curves.csv", meta,
          ["n_malicious", "model", "role", "power", "mean_reward", "sem", "n_samples"],
          curve_rows, sort_rows)

    beta, _ = power_threshold(outcomes)
    gamma, _ = safety_level(outcomes)
    _emit(rundir, "thresholds.csv", meta,
          ["n_malicious", "model", "power_threshold", "safety_level", "step"],
          [(
              spec.n_malicious,
              spec.model,
              NOT_FOUND if beta is None else beta / units,
              NOT_FOUND if gamma is None else gamma / units,
              spec.step,
          )], sort_rows)

    range_rows = [
        (spec.n_malicious, spec.model, k, lo / units, hi / units)
        for k, lo, hi in multi_sm_ranges(equal_profit)
    ]
    _emit(rundir, "ranges.csv", meta,
          ["n_malicious", "model", "k", "power_lo", "power_hi"], range_rows, sort_rows)


def _emit(rundir, name, meta, columns, rows, sort_rows):
    if sort_rows:
        rows = sorted(rows, key=lambda r: tuple(str(c) for c in r))
    write_csv(rundir.file(name), meta, columns, rows)
