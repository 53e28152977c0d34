"""Command-line front end.

    renewalopt run <config> [--out DIR] [--check] [--slots N] [--seed S]
    renewalopt lp <config> [--out DIR]
    renewalopt validate <config> [--samples N]

`run` executes the configured (V, seed) grid and writes summary.csv, lp.csv,
and optional trajectory_<V>_<seed>.csv files.  `lp` writes only the benchmark
solution.  `validate` samples every action of the instance's model and prints
a declaration-vs-empirical report.

Exit codes: 0 success, 1 config error, 2 runtime error, 3 invariant violation
under --check.  Identical config and seed produce byte-identical CSVs; all
floats are written with 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .benchmark import (
    LPSolution,
    extract_reference_point,
    solve_lp,
    stationary_policy_weights,
)
from .config import ConfigError, ExperimentConfig, parse_config
from .controller import TradeoffParameter
from .core import RESIDUAL_MIN_FRAMES, validate_model
from .scheduling import build_instance
from .simulation import (
    CheckViolation,
    DppRatioPolicy,
    RandomizedStationaryPolicy,
    run,
)

__all__ = ["main", "run_experiment"]


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _write_lp_csv(path: Path, sol: LPSolution) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record", "system", "index", "value"])
        writer.writerow(["status", "", "", sol.status])
        if sol.status != "optimal":
            return
        writer.writerow(["objective", "", "", _fmt(sol.objective)])
        for n, w in enumerate(sol.weights):
            for a, value in enumerate(w):
                writer.writerow(["weight", n, a, _fmt(value)])
        for l, value in enumerate(sol.achieved):
            writer.writerow(["achieved", "", l, _fmt(value)])
        if sol.duals is not None:
            for l, value in enumerate(sol.duals):
                writer.writerow(["dual", "", l, _fmt(value)])
        reference = extract_reference_point(sol)
        for n, point in enumerate(reference):
            writer.writerow(["reference_f", n, "", _fmt(point.f_hat)])
            for l, value in enumerate(point.g_hat):
                writer.writerow(["reference_g", n, l, _fmt(value)])
        for n, p in enumerate(stationary_policy_weights(sol)):
            for a, value in enumerate(p):
                writer.writerow(["policy_weight", n, a, _fmt(value)])


def _write_trajectory(path: Path, trajectory) -> None:
    n_metrics = trajectory.queues.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"q_{l + 1}" for l in range(n_metrics)])
        for t, row in zip(trajectory.times, trajectory.queues):
            writer.writerow([int(t)] + [_fmt(x) for x in row])


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> int:
    """Execute the configured grid and write CSVs; returns the exit code."""
    models, external, lp = build_instance(cfg.instance)
    lp_sol = solve_lp(lp)
    n_metrics = external.n_metrics

    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_lp_csv(out / "lp.csv", lp_sol)

    if cfg.policy == "stationary":
        if cfg.weights == "lp":
            if lp_sol.status != "optimal":
                raise RuntimeError(
                    f"stationary weights need an optimal benchmark, got {lp_sol.status}"
                )
            weights = stationary_policy_weights(lp_sol)
        else:
            per_class = np.asarray(cfg.weights, dtype=float)
            weights = tuple(per_class for _ in models)
        grid = [(None, seed) for seed in cfg.seeds]
    else:
        grid = [(v, seed) for v in cfg.v_list for seed in cfg.seeds]

    header = (
        ["policy", "v", "seed", "slots", "avg_penalty"]
        + [f"avg_metric_{l + 1}" for l in range(n_metrics)]
        + [f"avg_queue_{l + 1}" for l in range(n_metrics)]
        + [f"final_queue_{l + 1}" for l in range(n_metrics)]
        + ["frames_total", "lp_objective", "gap"]
    )
    rows = []
    for v, seed in grid:
        if v is None:
            policy = RandomizedStationaryPolicy(weights)
        else:
            policy = DppRatioPolicy(v=TradeoffParameter(v), solver=cfg.solver)
        metrics = run(
            models,
            external,
            policy,
            cfg.slots,
            seed,
            check=cfg.check,
            record_trajectory=cfg.trajectories,
        )
        row = [
            cfg.policy,
            "" if v is None else _fmt(v),
            seed,
            metrics.slots,
            _fmt(metrics.avg_penalty),
        ]
        row += [_fmt(x) for x in metrics.avg_metrics]
        row += [_fmt(x) for x in metrics.avg_queues]
        row += [_fmt(x) for x in metrics.final_queues]
        row.append(int(metrics.frames_per_system.sum()))
        if lp_sol.status == "optimal":
            row.append(_fmt(lp_sol.objective))
            row.append(_fmt(metrics.avg_penalty - lp_sol.objective))
        else:
            row += ["", ""]
        rows.append(row)
        if cfg.trajectories:
            tag = "stationary" if v is None else format(v, "g")
            _write_trajectory(out / f"trajectory_{tag}_{seed}.csv", metrics.queue_trajectory)

    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return 0


def _cmd_run(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    if args.slots is not None:
        if args.slots < 1:
            raise ConfigError([(0, "slots", "must be >= 1")])
        cfg = _replace(cfg, slots=args.slots)
    if args.seed is not None:
        cfg = _replace(cfg, seeds=(args.seed,))
    if args.check:
        cfg = _replace(cfg, check=True)
    return run_experiment(cfg, out_dir=args.out)


def _replace(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    from dataclasses import replace

    return replace(cfg, **kwargs)


def _cmd_lp(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    _, _, lp = build_instance(cfg.instance)
    sol = solve_lp(lp)
    out = Path(args.out if args.out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_lp_csv(out / "lp.csv", sol)
    if sol.status == "optimal":
        print(f"status: optimal  objective: {_fmt(sol.objective)}")
    else:
        print(f"status: {sol.status}")
    return 0


def _cmd_validate(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    models, _, _ = build_instance(cfg.instance)
    seen: set[int] = set()
    exit_code = 0
    for n, model in enumerate(models):
        if id(model) in seen:
            continue
        seen.add(id(model))
        label = "all servers" if len(set(map(id, models))) == 1 else f"system {n}"
        report = validate_model(model, args.samples)
        print(f"model ({label}): {'ok' if report.ok else 'FLAGGED'}")
        for av in report.actions:
            # show the largest residual estimate the check actually assessed
            assessed = av.residual_estimates[av.residual_counts >= RESIDUAL_MIN_FRAMES]
            max_residual = assessed.max() if assessed.size else av.residual_estimates[0]
            print(
                f"  action {av.action_index}: samples={av.samples} "
                f"bound_violations={av.bound_violations} "
                f"y_hat={_fmt(av.y_mean)} (declared {_fmt(av.declared.y_hat)}) "
                f"t_hat={_fmt(av.t_mean)} (declared {_fmt(av.declared.t_hat)}) "
                f"max_residual={_fmt(max_residual)} "
                f"(bound {_fmt(model.residual_bound)})"
            )
        for flag in report.flags:
            print(f"  flag: {flag}")
        if not report.ok:
            exit_code = 2
    return exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="renewalopt",
        description="Simulate drift-plus-penalty control of coupled renewal systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment grid")
    p_run.add_argument("config", help="path to the experiment config")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.add_argument("--check", action="store_true", help="assert runtime invariants")
    p_run.add_argument("--slots", type=int, default=None, help="override slot count")
    p_run.add_argument("--seed", type=int, default=None, help="run a single seed")
    p_run.set_defaults(func=_cmd_run)

    p_lp = sub.add_parser("lp", help="solve and write only the benchmark LP")
    p_lp.add_argument("config", help="path to the experiment config")
    p_lp.add_argument("--out", default=None, help="output directory (overrides config)")
    p_lp.set_defaults(func=_cmd_lp)

    p_val = sub.add_parser("validate", help="check model declarations by sampling")
    p_val.add_argument("config", help="path to the experiment config")
    p_val.add_argument("--samples", type=int, default=20000, help="samples per action")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 1
    except CheckViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
