"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 incomplete-sweep error,
4 I/O error. All randomness flows from --seed; without the flag an entropy
seed is drawn and recorded in the run's summary and manifest.
"""

from __future__ import annotations

import json
import os
import secrets
import sys

import click

from . import __version__
from .engine import PowerAllocation, SimConfig, StrategyKind, run_replicated
from .game import MinerType, build_game, epsilon_pe, hm_preference_filter
from .pipeline import SweepParams, run_sweep, write_artifacts
from .runio import RunDir, config_hash, read_csv, write_csv
from .sweep import DYNAMIC, FIXED, GridSpec, IncompleteSweepError, default_step

EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3
EXIT_IO = 4

TABLE_DEFAULTS = {
    "alpha": 1e-4,
    "epsilon": 1e-4,
    "reps": 100,
    "cap": 200_000,
    "window": 10_000,
}
DESK_SCALE = {"reps": 20, "cap": 50_000}


def _fail(code: int, message: str):
    click.echo(f"sm-arena: error: {message}", err=True)
    sys.exit(code)


def _rundir(path: str) -> RunDir:
    try:
        return RunDir(path)
    except OSError as e:
        _fail(EXIT_IO, f"cannot open run directory {path}: {e}")


def load_config_file(path: str) -> dict:
    """Flat KEY=VALUE file; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        with open(path) as f:
            for lineno, raw in enumerate(f, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    _fail(EXIT_CONFIG, f"{path}:{lineno}: expected KEY=VALUE, got {raw.strip()!r}")
                key, value = line.split("=", 1)
                values[key.strip().lower()] = value.strip()
    except OSError as e:
        _fail(EXIT_IO, f"cannot read config {path}: {e}")
    return values


def resolve_settings(config_path: str | None, flags: dict) -> dict:
    """Precedence: explicit flag > config file > desk-scale preset > defaults."""
    settings = dict(TABLE_DEFAULTS)
    filevals = load_config_file(config_path) if config_path else {}
    desk = flags.get("desk_scale") or filevals.get("desk_scale", "").lower() in ("1", "true", "yes")
    if desk:
        settings.update(DESK_SCALE)
    casts = {
        "alpha": float, "epsilon": float, "reps": int, "cap": int, "window": int,
        "seed": int, "step": float, "n_malicious": int, "jobs": int,
        "model": str, "family": str, "eq_aggregate": str, "powers": str,
        "strategies": str, "types": str, "out": str,
    }
    for key, raw in filevals.items():
        if key == "desk_scale":
            continue
        if key not in casts:
            _fail(EXIT_CONFIG, f"unknown config key {key!r}")
        try:
            settings[key] = casts[key](raw)
        except ValueError:
            _fail(EXIT_CONFIG, f"config key {key!r}: cannot parse {raw!r}")
    for key, val in flags.items():
        if key != "desk_scale" and val is not None:
            settings[key] = val
    if "seed" not in settings or settings["seed"] is None:
        settings["seed"] = secrets.randbits(63)
    return settings


def _parse_powers(text: str) -> tuple[float, ...]:
    try:
        powers = tuple(float(x) for x in text.split(","))
    except ValueError:
        _fail(EXIT_CONFIG, f"cannot parse powers {text!r}")
    if abs(sum(powers) - 1.0) > 1e-9:
        _fail(EXIT_CONFIG, f"powers sum to {sum(powers)}, expected 1")
    if any(p < 0 for p in powers):
        _fail(EXIT_CONFIG, "negative power")
    return powers


def _parse_strategies(text: str, n: int) -> list[StrategyKind]:
    names = [s.strip().lower() for s in text.split(",")]
    if len(names) != n:
        _fail(EXIT_CONFIG, f"{n} miners but {len(names)} strategies")
    out = []
    for s in names:
        if s not in ("hm", "sm"):
            _fail(EXIT_CONFIG, f"unknown strategy {s!r} (use hm or sm)")
        out.append(StrategyKind.HM if s == "hm" else StrategyKind.SM)
    return out


def _parse_types(text: str, n: int) -> list[MinerType]:
    names = [s.strip().lower() for s in text.split(",")]
    if len(names) != n:
        _fail(EXIT_CONFIG, f"{n} miners but {len(names)} types")
    out = []
    for s in names:
        if s not in ("hm", "strm"):
            _fail(EXIT_CONFIG, f"unknown miner type {s!r} (use hm or strm)")
        out.append(MinerType.HM if s == "hm" else MinerType.STRM)
    return out


def _sim_config(settings: dict) -> SimConfig:
    try:
        return SimConfig(
            alpha=settings["alpha"],
            step_cap=settings["cap"],
            repetitions=settings["reps"],
            seed=settings["seed"],
            window=min(settings["window"], settings["cap"]),
        )
    except ValueError as e:
        _fail(EXIT_CONFIG, str(e))


common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="flat KEY=VALUE config file"),
    click.option("--seed", type=int, default=None, help="master seed (64-bit)"),
    click.option("--reps", type=int, default=None, help="repetitions per instance"),
    click.option("--cap", type=int, default=None, help="timestep cap per run"),
    click.option("--alpha", type=float, default=None, help="convergence tolerance"),
    click.option("--window", type=int, default=None, help="convergence window (measured steps)"),
    click.option("--desk-scale", is_flag=True, default=False,
                 help="small preset: reps=20 cap=50000"),
    click.option("--jobs", type=int, default=None, help="parallel workers"),
    click.option("--out", type=click.Path(), default=None, help="output directory"),
]


def with_options(opts):
    def wrap(f):
        for opt in reversed(opts):
            f = opt(f)
        return f
    return wrap


@click.group()
@click.version_option(__version__)
def main():
    """Mining arena: selfish-mining simulation, empirical games, thresholds."""


@main.command()
@with_options(common_options)
@click.option("--powers", default=None, help="comma-separated miner powers, must sum to 1")
@click.option("--strategies", default=None, help="comma-separated hm/sm per miner")
def simulate(config_path, seed, reps, cap, alpha, window, desk_scale, jobs, out,
             powers, strategies):
    """Simulate one instance and write per-miner rewards."""
    settings = resolve_settings(config_path, {
        "seed": seed, "reps": reps, "cap": cap, "alpha": alpha, "window": window,
        "desk_scale": desk_scale, "jobs": jobs, "out": out,
        "powers": powers, "strategies": strategies,
    })
    if "powers" not in settings or settings.get("powers") is None:
        _fail(EXIT_CONFIG, "missing powers (flag --powers or config powers=)")
    if "strategies" not in settings or settings.get("strategies") is None:
        _fail(EXIT_CONFIG, "missing strategies (flag --strategies or config strategies=)")
    pw = _parse_powers(settings["powers"])
    strats = _parse_strategies(settings["strategies"], len(pw))
    cfg = _sim_config(settings)
    res = run_replicated(PowerAllocation(pw), strats, cfg)

    outdir = settings.get("out") or "sm-arena-out"
    snapshot = {
        "command": "simulate", "powers": list(pw),
        "strategies": [str(s) for s in strats],
        "alpha": cfg.alpha, "cap": cfg.step_cap, "reps": cfg.repetitions,
        "window": cfg.window, "seed": cfg.seed,
    }
    try:
        os.makedirs(outdir, exist_ok=True)
        meta = {"seed": cfg.seed, "config_hash": config_hash(snapshot)}
        rows = [
            (i, str(strats[i]), pw[i], res.mean_rewards[i], res.sem[i])
            for i in range(len(pw))
        ]
        write_csv(os.path.join(outdir, "rewards.csv"), meta,
                  ["miner", "strategy", "power", "mean_reward", "sem"], rows)
        summary = dict(
            snapshot,
            version=__version__,
            config_hash=meta["config_hash"],
            converged_fraction=res.converged_fraction,
            mean_steps=float(res.steps_used.mean()),
            mean_rewards=res.mean_rewards.tolist(),
            sem=res.sem.tolist(),
        )
        with open(os.path.join(outdir, "summary.json"), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
    except OSError as e:
        _fail(EXIT_IO, f"cannot write outputs: {e}")
    click.echo(f"seed={cfg.seed} rewards=" +
               ",".join(format(x, ".6f") for x in res.mean_rewards))


def _sweep_params(settings: dict) -> SweepParams:
    n = settings.get("n_malicious")
    if not n:
        _fail(EXIT_CONFIG, "missing --n-malicious")
    model = settings.get("model") or FIXED
    if model not in (FIXED, DYNAMIC):
        _fail(EXIT_CONFIG, f"unknown model {model!r} (use fixed or dynamic)")
    step = settings.get("step") or default_step(n)
    family = settings.get("family") or "equal"
    try:
        spec = GridSpec(n_malicious=n, step=step, model=model, family=family)
    except ValueError as e:
        _fail(EXIT_CONFIG, str(e))
    return SweepParams(
        spec=spec,
        sim=_sim_config(settings),
        epsilon=settings["epsilon"],
        eq_aggregate=settings.get("eq_aggregate", "max"),
    )


sweep_options = [
    click.option("--model", type=click.Choice([FIXED, DYNAMIC]), default=None),
    click.option("--n-malicious", type=int, default=None),
    click.option("--step", type=float, default=None, help="grid step (default per n)"),
    click.option("--family", type=click.Choice(["equal", "full"]), default=None,
                 help="allocation family: equal-power malicious or all sorted splits"),
    click.option("--epsilon", type=float, default=None, help="equilibrium tolerance"),
    click.option("--eq-aggregate", type=click.Choice(["max", "min", "mean"]), default=None,
                 help="aggregation across surviving equilibria"),
    click.option("--sort/--no-sort", "sort_rows", default=True,
                 help="canonical row order in CSVs (byte-identical artifacts)"),
]


@main.command()
@with_options(common_options)
@with_options(sweep_options)
@click.option("--resume", is_flag=True, default=False,
              help="continue a sweep: only pending tasks are run")
def sweep(config_path, seed, reps, cap, alpha, window, desk_scale, jobs, out,
          model, n_malicious, step, family, epsilon, eq_aggregate, sort_rows, resume):
    """Simulate a power-allocation grid and write curve / threshold artifacts."""
    settings = resolve_settings(config_path, {
        "seed": seed, "reps": reps, "cap": cap, "alpha": alpha, "window": window,
        "desk_scale": desk_scale, "jobs": jobs, "out": out, "model": model,
        "n_malicious": n_malicious, "step": step, "family": family,
        "epsilon": epsilon, "eq_aggregate": eq_aggregate,
    })
    outdir = settings.get("out")
    if not outdir:
        _fail(EXIT_CONFIG, "missing --out directory")
    rundir = _rundir(outdir)
    if resume:
        try:
            manifest = rundir.read_manifest()
        except FileNotFoundError:
            _fail(EXIT_CONFIG, f"--resume: no manifest in {outdir}")
        except OSError as e:
            _fail(EXIT_IO, str(e))
        saved = manifest["params"]
        settings.update({k: saved[k] for k in saved})
        settings["n_malicious"] = saved["n_malicious"]
    params = _sweep_params(settings)
    try:
        stats = run_sweep(rundir, params, jobs=settings.get("jobs") or 1,
                          sort_rows=sort_rows)
    except ValueError as e:
        _fail(EXIT_CONFIG, str(e))
    except OSError as e:
        _fail(EXIT_IO, str(e))
    click.echo(
        f"sweep {params.spec.model} n={params.spec.n_malicious} step={params.spec.step}: "
        f"{stats['ran']} task(s) run, {stats['skipped']} reused, seed={params.sim.seed}"
    )


@main.command()
@with_options(common_options)
@click.option("--powers", default=None, help="comma-separated miner powers")
@click.option("--types", "types_", default=None, help="comma-separated hm/strm per miner")
@click.option("--epsilon", type=float, default=None)
@click.option("--eq-aggregate", type=click.Choice(["max", "min", "mean"]), default=None)
def game(config_path, seed, reps, cap, alpha, window, desk_scale, jobs, out,
         powers, types_, epsilon, eq_aggregate):
    """Build the strategy game of one allocation and enumerate equilibria."""
    settings = resolve_settings(config_path, {
        "seed": seed, "reps": reps, "cap": cap, "alpha": alpha, "window": window,
        "desk_scale": desk_scale, "jobs": jobs, "out": out,
        "powers": powers, "types": types_, "epsilon": epsilon,
        "eq_aggregate": eq_aggregate,
    })
    if settings.get("powers") is None:
        _fail(EXIT_CONFIG, "missing powers")
    if settings.get("types") is None:
        _fail(EXIT_CONFIG, "missing types")
    pw = _parse_powers(settings["powers"])
    types = _parse_types(settings["types"], len(pw))
    cfg = _sim_config(settings)
    table = build_game(pw, types, cfg)
    eqs = epsilon_pe(table, settings["epsilon"])
    surviving = hm_preference_filter(eqs, table)

    outdir = settings.get("out") or "sm-arena-out"
    try:
        os.makedirs(outdir, exist_ok=True)
        meta = {"seed": cfg.seed, "epsilon": settings["epsilon"]}
        game_rows = [
            ("game", bits, i, pw[i], payoff.mean[i], payoff.sem[i])
            for bits, payoff in sorted(table.payoffs.items())
            for i in range(len(pw))
        ]
        write_csv(os.path.join(outdir, "games.csv"), meta,
                  ["alloc_id", "profile_bits", "miner", "power", "payoff", "sem"],
                  game_rows)
        eq_rows = [("game", b, int(b in surviving.equilibria)) for b in eqs.equilibria]
        write_csv(os.path.join(outdir, "equilibria.csv"), meta,
                  ["alloc_id", "profile_bits", "hm_preferred"], eq_rows)
    except OSError as e:
        _fail(EXIT_IO, f"cannot write outputs: {e}")
    click.echo(f"profiles={len(table.payoffs)} equilibria={eqs.equilibria} "
               f"surviving={surviving.equilibria} seed={cfg.seed}")


@main.command()
@click.option("--in", "indir", type=click.Path(), required=True,
              help="sweep directory to analyze")
@click.option("--sort/--no-sort", "sort_rows", default=True)
def thresholds(indir, sort_rows):
    """Recompute thresholds/curves/ranges from a finished sweep."""
    rundir = _rundir(indir)
    try:
        manifest = rundir.read_manifest()
    except FileNotFoundError:
        _fail(EXIT_CONFIG, f"no manifest in {indir}")
    except OSError as e:
        _fail(EXIT_IO, str(e))
    saved = dict(manifest["params"])
    params = SweepParams(
        spec=GridSpec(n_malicious=saved["n_malicious"], step=saved["step"],
                      model=saved["model"], family=saved["family"]),
        sim=SimConfig(alpha=saved["alpha"], step_cap=saved["cap"],
                      repetitions=saved["reps"], seed=saved["seed"],
                      window=saved["window"]),
        epsilon=saved["epsilon"],
        eq_aggregate=saved["eq_aggregate"],
    )
    try:
        write_artifacts(rundir, params, sort_rows=sort_rows)
    except IncompleteSweepError as e:
        _fail(EXIT_INCOMPLETE, str(e))
    except OSError as e:
        _fail(EXIT_IO, str(e))
    cols, rows = read_csv(rundir.file("thresholds.csv"))
    for row in rows:
        click.echo(" ".join(f"{c}={v}" for c, v in zip(cols, row)))


@main.command()
@click.option("--in", "indir", type=click.Path(), required=True)
def report(indir):
    """Human-readable summary of a sweep directory."""
    rundir = _rundir(indir)
    for name in ("thresholds.csv", "ranges.csv"):
        path = rundir.file(name)
        if not os.path.exists(path):
            continue
        cols, rows = read_csv(path)
        click.echo(f"-- {name}")
        for row in rows:
            click.echo("   " + "  ".join(f"{c}={v}" for c, v in zip(cols, row)))
    path = rundir.file("curves.csv")
    if os.path.exists(path):
        cols, rows = read_csv(path)
        idx = {c: i for i, c in enumerate(cols)}
        sm = [(float(r[idx["power"]]), float(r[idx["mean_reward"]]))
              for r in rows if r[idx["role"]] == "sm"]
        if sm:
            above = [p for p, m in sm if m > p + 1e-9]
            click.echo(f"-- curves.csv: {len(sm)} sm points, "
                       f"{len(above)} above the fair line"
                       + (f", first at power {min(above)}" if above else ""))


if __name__ == "__main__":
    main()
