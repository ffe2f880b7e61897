"""Per-run output files.

Each run gets its own directory ``<label>_seed<N>`` containing

* ``trace.csv``: columns ``time_h, demand, u1..u3, mc1..mc3, W1..W3, W_total``
  (hours, kg/s, W), one row per controller step;
* ``metrics.json``: the run metrics and the scenario that produced them;
* ``gp_history.csv`` (adaptive runs only): GP predictions of the efficiency
  error at the probe flows after each adaptation instant;
* ``gp/c<i>_r<j>.csv`` (optional): training set of compressor ``i`` at its
  ``j``-th refit, with the fitted hyperparameters on the header line.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .simulation import PROBE_FLOWS, Mode, RunResult

TRACE_FILE = "trace.csv"
METRICS_FILE = "metrics.json"
GP_HISTORY_FILE = "gp_history.csv"


def run_dir_name(result: RunResult) -> str:
    return f"{result.scenario.label}_seed{result.scenario.seed}"


def scenario_dict(result: RunResult) -> dict:
    s = result.scenario
    return {
        "label": s.label, "mode": s.mode.value, "truth_map_kind": s.truth_map_kind.value,
        "truth_noise": s.truth_noise, "belief_order": s.belief_order.value,
        "horizon": s.horizon, "demand_period": s.demand_period,
        "controller_step": s.controller_step, "adapt_period": s.adapt_period,
        "seed": s.seed, "tau_f": s.tau_f,
    }


def write_gp_history(result: RunResult, path: Path):
    cols = ["time_h", "k1", "k2", "k3"] + [f"c{i + 1}_m{int(f)}" for i in range(3)
                                          for f in PROBE_FLOWS]
    rows = [[snap.time, *snap.k, *snap.predictions.reshape(-1)] for snap in result.gp_history]
    np.savetxt(path, np.array(rows, float).reshape(-1, len(cols)), delimiter=",",
               fmt="%.12g", header=",".join(cols), comments="")


def write_gp_dumps(result: RunResult, directory: Path):
    """One file per (compressor, refit). A refit happens whenever k grows past 1."""
    directory.mkdir(parents=True, exist_ok=True)
    for i, model in enumerate(result.gp_models):
        X, D = model.data.X, model.data.D
        last_k, j = 0, 0
        for snap in result.gp_history:
            k = snap.k[i]
            if k > last_k and k >= 2:
                j += 1
                h = snap.hyper[i]
                header = (f"beta={h.beta!r},theta_f2={h.theta_f2!r},theta_l={h.theta_l!r},"
                          f"sigma_n2={h.sigma_n2!r}\nm,pi,delta")
                np.savetxt(directory / f"c{i + 1}_r{j}.csv",
                           np.column_stack([X[:k], D[:k]]), delimiter=",", fmt="%.17g",
                           header=header, comments="")
            last_k = k


def write_run(result: RunResult, out_dir, dump_gp: bool = False) -> Path:
    d = Path(out_dir) / run_dir_name(result)
    d.mkdir(parents=True, exist_ok=True)
    result.trace.to_csv(d / TRACE_FILE)
    payload = {"scenario": scenario_dict(result), "metrics": result.metrics.to_dict()}
    (d / METRICS_FILE).write_text(json.dumps(payload, indent=2) + "\n")
    if result.scenario.mode is Mode.ADAPT:
        write_gp_history(result, d / GP_HISTORY_FILE)
        if dump_gp:
            write_gp_dumps(result, d / "gp")
    return d


def run_complete(directory: Path) -> bool:
    return (directory / TRACE_FILE).is_file() and (directory / METRICS_FILE).is_file()
