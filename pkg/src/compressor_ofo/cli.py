"""Command-line scenario runner.

    python -m compressor_ofo run --mode all --out runs
    python -m compressor_ofo run --sweep mismatch --jobs 4
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import MODES, SWEEPS, ConfigError, RunConfig, parse_config
from .output import run_complete, write_run
from .simulation import PROBE_FLOWS, Mode, excess, run_scenario, sweep_scenarios

MODE_ORDER = (Mode.NLP, Mode.PERFECT, Mode.NO_ADAPT, Mode.ADAPT)


def _timed_run(args):
    scenario, profile, station = args
    t0 = time.perf_counter()
    try:
        return scenario, run_scenario(scenario, profile, station), None, time.perf_counter() - t0
    except Exception as exc:  # reported per scenario by the caller
        return scenario, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0


def execute(scenarios, cfg: RunConfig):
    """Run scenarios, possibly in parallel; returns (scenario, result, error, seconds)."""
    profile = cfg.demand.profile(cfg.scenario)
    args = [(s, profile, cfg.station) for s in scenarios]
    if cfg.jobs <= 1 or len(args) <= 1:
        return [_timed_run(a) for a in args]
    with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(args))) as pool:
        return list(pool.map(_timed_run, args))


def requested_scenarios(cfg: RunConfig):
    if cfg.sweep == "mismatch":
        return sweep_scenarios(cfg.scenario)
    modes = MODE_ORDER if cfg.mode == "all" else (Mode(cfg.mode),)
    return [replace(cfg.scenario, mode=m) for m in modes]


def summary_rows(results):
    """Integrated power per mode and excess over the NLP run, when present."""
    ref = next((r for _, r, _, _ in results if r is not None and r.scenario.mode is Mode.NLP), None)
    rows = []
    for s, r, err, secs in results:
        if r is None:
            rows.append({"scenario": s.label, "error": err})
            continue
        m = r.metrics
        row = {"scenario": s.label, "energy_MWh": m.integrated_power / 3.6e9,
               "mae_demand": m.mae_demand, "seconds": secs}
        if ref is not None:
            row["excess_pct"] = 100 * excess(m.integrated_power, ref.metrics.integrated_power)
            row["steady_excess_pct"] = 100 * excess(m.steady_power, ref.metrics.steady_power)
        rows.append(row)
    return rows


def _fmt(v, spec):
    return format(v, spec) if v is not None else "n/a"


def print_summary(rows, out=None):
    out = out or sys.stdout
    print(f"{'scenario':<40} {'energy MWh':>12} {'excess %':>9} {'steady %':>9} "
          f"{'MAE demand':>11} {'time s':>8}", file=out)
    for row in rows:
        if "error" in row:
            print(f"{row['scenario']:<40} FAILED {row['error']}", file=out)
            continue
        print(f"{row['scenario']:<40} {row['energy_MWh']:>12.2f} "
              f"{_fmt(row.get('excess_pct'), '>9.3f')} {_fmt(row.get('steady_excess_pct'), '>9.3f')} "
              f"{row['mae_demand']:>11.4f} {row['seconds']:>8.1f}", file=out)


def sweep_rows(results):
    """One row per sweep case, shaped like the learning-accuracy tables."""
    rows = []
    for s, r, err, _ in results:
        row = {"truth": s.truth_map_kind.value, "noise": s.truth_noise,
               "belief": s.belief_order.value}
        if r is None:
            row["error"] = err
            rows.append(row)
            continue
        m = r.metrics
        for i in range(3):
            for j, f in enumerate(PROBE_FLOWS):
                tag = f"c{i + 1}_m{int(f)}"
                row[f"mae_{tag}"] = float(m.mae_gp[i, j])
                row[f"dinit_{tag}"] = float(m.delta_init[i, j])
                row[f"dfin_{tag}"] = float(m.delta_fin[i, j])
                row[f"visited_{tag}"] = bool(m.visited[i, j])
        row["mae_demand"] = m.mae_demand
        row["mae_demand_pct"] = 100 * m.mae_demand / m.mean_demand
        row["max_mae"] = float(m.mae_gp.max())
        row["max_dfin_visited"] = float(np.abs(m.delta_fin[m.visited]).max(initial=0.0))
        rows.append(row)
    return rows


def print_sweep(rows, out=None):
    out = out or sys.stdout
    print(f"{'truth':<11} {'noise':>6} {'belief':<10} {'max MAE':>8} {'max|dfin| vis':>14} "
          f"{'MAE demand':>11} {'% mean':>7}", file=out)
    for row in rows:
        head = f"{row['truth']:<11} {row['noise']:>6.3f} {row['belief']:<10}"
        if "error" in row:
            print(f"{head} FAILED {row['error']}", file=out)
            continue
        print(f"{head} {row['max_mae']:>8.4f} {row['max_dfin_visited']:>14.2e} "
              f"{row['mae_demand']:>11.4f} {row['mae_demand_pct']:>7.3f}", file=out)


def write_table(rows, path: Path):
    keys = []
    for row in rows:
        keys += [k for k in row if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


def run(cfg: RunConfig, out=None) -> int:
    """Execute the configured runs; 0 iff every run wrote its trace and metrics."""
    out_dir = Path(cfg.out_dir)
    try:
        profile = cfg.demand.profile(cfg.scenario)
        profile.validate(cfg.station.m_min, cfg.station.m_max)
    except ValueError as exc:
        print(f"error: demand profile: {exc}", file=sys.stderr)
        return 2
    results = execute(requested_scenarios(cfg), cfg)
    status = 0
    for s, r, err, _ in results:
        if r is None:
            print(f"error: scenario {s.label} (seed {s.seed}) failed: {err}", file=sys.stderr)
            status = 1
            continue
        try:
            d = write_run(r, out_dir, cfg.dump_gp)
        except OSError as exc:
            print(f"error: scenario {s.label}: cannot write output: {exc}", file=sys.stderr)
            status = 1
            continue
        if not run_complete(d):
            print(f"error: scenario {s.label}: output incomplete in {d}", file=sys.stderr)
            status = 1
    if cfg.sweep == "mismatch":
        rows = sweep_rows(results)
        print_sweep(rows, out)
        table = out_dir / f"sweep_mismatch_seed{cfg.seed}.csv"
    else:
        rows = summary_rows(results)
        print_summary(rows, out)
        table = out_dir / f"summary_{cfg.mode}_seed{cfg.seed}.csv"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_table(rows, table)
    except OSError as exc:
        print(f"error: cannot write {table}: {exc}", file=sys.stderr)
        status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="compressor-ofo",
                                description="Compressor station load-sharing simulations")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run scenarios or the mismatch sweep")
    r.add_argument("--config", type=Path, help="YAML configuration file")
    r.add_argument("--mode", choices=MODES, help="which scenario(s) to run")
    r.add_argument("--sweep", choices=SWEEPS, help="run the 12-case adaptation sweep")
    r.add_argument("--seed", type=int, help="noise and demand seed")
    r.add_argument("--jobs", type=int, help="parallel worker processes")
    r.add_argument("--out", type=Path, help="output directory")
    sub.add_parser("default-config", help="print the commented default configuration")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "default-config":
        from .config import default_config_text
        sys.stdout.write(default_config_text())
        return 0
    try:
        cfg = parse_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(mode=args.mode, sweep=args.sweep, seed=args.seed,
                                 jobs=args.jobs, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
