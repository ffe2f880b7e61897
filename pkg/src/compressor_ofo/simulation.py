"""Closed-loop station simulation and the evaluation metrics.

One controller step per ``controller_step`` hours:

    demand -> measure plant -> (adapt GP) -> sensitivities -> OFO update

Row ``k`` of the trace holds the set-points applied during step ``k`` and
what the plant delivered with them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from . import controller as ofo
from .compressor import (DEFAULT_POLY, DEFAULT_RHO, DEFAULT_SIN, MISMATCH_RULE, GasProperties,
                         ModelOrder, apply_mismatch, power,
                         reduced_model, station_models, true_efficiency)
from .gp import ErrorObservation, GpErrorModel, adapt
from .nlp import LoadSharingProblem, solve_nlp

PROBE_FLOWS = (70.0, 95.0, 120.0)
# a probe flow counts as visited when a training input lies this close
VISIT_TOL = 2.5
TRANSIENT_FRACTION = 0.2


class Mode(str, Enum):
    NLP = "nlp"
    PERFECT = "ofo-perfect"
    NO_ADAPT = "ofo-mismatch"
    ADAPT = "ofo-adapt"


class MapKind(str, Enum):
    POLYNOMIAL = "polynomial"
    SINUSOIDAL = "sinusoidal"


@dataclass(frozen=True)
class StationConfig:
    """Physical and controller constants shared by every scenario."""

    true_poly: tuple = DEFAULT_POLY
    true_sin: tuple = DEFAULT_SIN
    mismatch_rule: tuple = MISMATCH_RULE
    rho: tuple = DEFAULT_RHO
    gas: GasProperties = field(default_factory=GasProperties)
    m_min: tuple = (60.0, 60.0, 60.0)
    m_max: tuple = (125.0, 125.0, 125.0)
    nu: float = 1e-3
    delta_fd: float = 1e-8

    @property
    def ofo(self) -> ofo.OfoConfig:
        return ofo.OfoConfig(self.nu, self.delta_fd, self.m_min, self.m_max)


@dataclass(frozen=True)
class Scenario:
    mode: Mode = Mode.ADAPT
    truth_map_kind: MapKind = MapKind.POLYNOMIAL
    truth_noise: float = 0.0
    belief_order: ModelOrder = ModelOrder.QUADRATIC
    horizon: float = 5000.0
    demand_period: float = 25.0
    controller_step: float = 1.0
    adapt_period: float = 25.0
    seed: int = 0
    tau_f: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "truth_map_kind", MapKind(self.truth_map_kind))
        object.__setattr__(self, "belief_order", ModelOrder(self.belief_order))
        for name in ("horizon", "demand_period", "controller_step", "adapt_period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not _is_multiple(self.adapt_period, self.controller_step):
            raise ValueError("adapt_period must be a multiple of controller_step")
        if not (_is_multiple(self.demand_period, self.adapt_period)
                or math.isclose(self.demand_period, self.adapt_period)):
            raise ValueError("demand_period must be a multiple of adapt_period")
        if self.truth_noise < 0 or self.tau_f < 0:
            raise ValueError("truth_noise and tau_f must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.controller_step))

    @property
    def label(self) -> str:
        if self.mode is Mode.NLP:
            return f"{self.mode.value}-{self.truth_map_kind.value}"
        noise = "-noise" if self.truth_noise > 0 else ""
        return (f"{self.mode.value}-{self.truth_map_kind.value}{noise}"
                f"-{self.belief_order.value}")


def _is_multiple(a: float, b: float) -> bool:
    r = a / b
    return abs(r - round(r)) < 1e-9 and round(r) >= 1


@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant demand as ``(start_hour, M)`` segments."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((float(t), float(M)) for t, M in self.segments)
        if not segs or segs[0][0] != 0.0:
            raise ValueError("first demand segment must start at hour 0")
        if any(b[0] <= a[0] for a, b in zip(segs, segs[1:])):
            raise ValueError("segment start times must be strictly increasing")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def generate(cls, seed: int = 0, horizon: float = 5000.0, period: float = 25.0,
                 low: float = 220.0, high: float = 340.0, max_step: float = 40.0) -> "DemandProfile":
        """Seeded random walk: a new level every ``period`` hours, bounded jumps."""
        rng = np.random.default_rng(seed)
        n = int(math.ceil(horizon / period))
        levels = [rng.uniform(low, high)]
        for _ in range(n - 1):
            prev = levels[-1]
            levels.append(rng.uniform(max(low, prev - max_step), min(high, prev + max_step)))
        return cls(tuple((j * period, M) for j, M in enumerate(levels)))

    def starts(self) -> np.ndarray:
        return np.array([t for t, _ in self.segments])

    def at(self, t):
        starts = self.starts()
        levels = np.array([M for _, M in self.segments])
        idx = np.searchsorted(starts, t, side="right") - 1
        return levels[idx]

    def validate(self, m_min, m_max):
        lo, hi = float(np.sum(m_min)), float(np.sum(m_max))
        for t, M in self.segments:
            if not lo <= M <= hi:
                raise ofo.InfeasibleDemand(f"demand {M} at t={t} h outside [{lo}, {hi}]")


def plant_respond(plant, u, step: int, m_prev=None, dt: float = 1.0,
                  tau_f: float = 0.0) -> ofo.PlantMeasurement:
    """Delivered flows and true powers for set-points ``u``.

    With ``tau_f == 0`` the flow controllers are in steady state and the
    delivered flow equals the set-point. Otherwise the delivered flow
    relaxes towards ``u`` with time constant ``tau_f``.
    """
    u = np.asarray(u, float)
    if tau_f > 0 and m_prev is not None:
        m_c = m_prev + (1.0 - math.exp(-dt / tau_f)) * (u - m_prev)
    else:
        m_c = u.copy()
    W = np.empty(3)
    for i, c in enumerate(plant):
        pi = c.rho1 * m_c[i] + c.rho2
        eta = true_efficiency(c.efficiency, m_c[i], pi, step, compressor=i)
        W[i] = power(c.gas, m_c[i], pi, eta)
    return ofo.PlantMeasurement(m_c, W)


@dataclass
class SimulationTrace:
    time: np.ndarray
    demand: np.ndarray
    u: np.ndarray
    m_c: np.ndarray
    W: np.ndarray
    gp_probe: np.ndarray  # (steps, compressor, probe) predicted error

    @property
    def W_total(self) -> np.ndarray:
        return self.W.sum(axis=1)

    COLUMNS = ("time_h", "demand", "u1", "u2", "u3", "mc1", "mc2", "mc3",
               "W1", "W2", "W3", "W_total")

    def table(self) -> np.ndarray:
        return np.column_stack([self.time, self.demand, self.u, self.m_c, self.W, self.W_total])

    def to_csv(self, path):
        np.savetxt(path, self.table(), delimiter=",", fmt="%.12g",
                   header=",".join(self.COLUMNS), comments="")


@dataclass
class GpSnapshot:
    """State of the three error models right after one adaptation instant."""

    time: float
    predictions: np.ndarray  # (compressor, probe)
    k: tuple
    hyper: tuple


@dataclass
class RunMetrics:
    integrated_power: float
    steady_power: float
    mae_demand: float
    mean_demand: float
    mae_gp: np.ndarray
    delta_init: np.ndarray
    delta_fin: np.ndarray
    actual_error: np.ndarray
    visited: np.ndarray
    n_refits: tuple

    def to_dict(self) -> dict:
        return {
            "integrated_power_J": self.integrated_power,
            "steady_power_J": self.steady_power,
            "mae_demand": self.mae_demand,
            "mean_demand": self.mean_demand,
            "probe_flows": list(PROBE_FLOWS),
            "mae_gp": self.mae_gp.tolist(),
            "delta_init": self.delta_init.tolist(),
            "delta_fin": self.delta_fin.tolist(),
            "actual_error": self.actual_error.tolist(),
            "visited": self.visited.tolist(),
            "n_refits": list(self.n_refits),
        }


@dataclass
class RunResult:
    scenario: Scenario
    trace: SimulationTrace
    metrics: RunMetrics
    gp_history: list
    gp_models: tuple
    nlp_points: list = field(default_factory=list)


def true_maps(scenario: Scenario, station: StationConfig):
    if scenario.truth_map_kind is MapKind.POLYNOMIAL:
        return tuple(station.true_poly)
    return tuple(station.true_sin)


def belief_maps(scenario: Scenario, station: StationConfig):
    """Efficiency model the controller starts from in each mode."""
    if scenario.mode in (Mode.PERFECT, Mode.NLP):
        return true_maps(scenario, station)
    mism = apply_mismatch(station.true_poly, station.mismatch_rule)
    return tuple(reduced_model(c, scenario.belief_order) for c in mism)


def build_plant(scenario: Scenario, station: StationConfig):
    return station_models(true_maps(scenario, station), scenario.truth_noise, scenario.seed,
                          rho=station.rho, m_min=station.m_min, m_max=station.m_max,
                          gas=station.gas)


def _probe_points(station: StationConfig) -> np.ndarray:
    p = np.asarray(PROBE_FLOWS)
    return np.column_stack([p, station.rho[0] * p + station.rho[1]])


def run_scenario(scenario: Scenario, profile: DemandProfile,
                 station: StationConfig | None = None) -> RunResult:
    station = station or StationConfig()
    cfg = station.ofo
    profile.validate(cfg.m_min, cfg.m_max)
    plant = build_plant(scenario, station)
    bases = belief_maps(scenario, station)
    models = [GpErrorModel() for _ in range(3)]
    probes = _probe_points(station)

    n, dt = scenario.n_steps, scenario.controller_step
    time = np.arange(n) * dt
    demand = profile.at(time)
    adapt_every = int(round(scenario.adapt_period / dt))
    lo, hi = np.array(cfg.m_min), np.array(cfg.m_max)

    u_hist = np.empty((n, 3))
    mc_hist = np.empty((n, 3))
    W_hist = np.empty((n, 3))
    gp_probe = np.zeros((n, 3, 3))
    history: list[GpSnapshot] = []
    nlp_points = []

    state = ofo.OfoState(np.clip(np.full(3, demand[0] / 3.0), lo, hi))
    m_prev = None
    last_M = None
    for k in range(n):
        M = float(demand[k])
        if scenario.mode is Mode.NLP and M != last_M:
            try:
                res = solve_nlp(LoadSharingProblem(plant, M))
            except ofo.InfeasibleDemand as exc:
                raise ofo.InfeasibleDemand(f"t={time[k]} h: {exc}") from exc
            nlp_points.append((float(time[k]), M, res.flows.copy()))
            state = ofo.OfoState(res.flows)
        last_M = M

        y = plant_respond(plant, state.u, k, m_prev, dt, scenario.tau_f)
        m_prev = y.m_c
        u_hist[k], mc_hist[k], W_hist[k] = state.u, y.m_c, y.W

        if k % adapt_every == 0:
            if scenario.mode is Mode.ADAPT:
                for i, c in enumerate(plant):
                    pi = c.rho1 * y.m_c[i] + c.rho2
                    eta = true_efficiency(c.efficiency, y.m_c[i], pi, k, compressor=i)
                    obs = ErrorObservation(float(y.m_c[i]), float(pi), float(eta),
                                           float(bases[i](y.m_c[i], pi)))
                    models[i] = adapt(models[i], obs)
            history.append(GpSnapshot(
                time=float(time[k]),
                predictions=np.array([models[i].predict_mean(probes) for i in range(3)]),
                k=tuple(m.k for m in models),
                hyper=tuple(m.hyper for m in models)))
        gp_probe[k] = history[-1].predictions

        if scenario.mode is Mode.NLP:
            continue
        belief = [ofo.Belief(bases[i], models[i]) for i in range(3)]
        s = ofo.sensitivities(belief, station.gas, station.rho, y.m_c, cfg)
        try:
            state = ofo.step(state, y, s, cfg, M)
        except ofo.InfeasibleDemand as exc:
            raise ofo.InfeasibleDemand(f"t={time[k]} h: {exc}") from exc

    trace = SimulationTrace(time, demand, u_hist, mc_hist, W_hist, gp_probe)
    metrics = compute_metrics(trace, history, plant, bases, models, profile, station)
    return RunResult(scenario, trace, metrics, history, tuple(models), nlp_points)


def actual_errors(plant, bases, station: StationConfig) -> np.ndarray:
    """Noise-free efficiency error at each probe flow, shape (compressor, probe)."""
    pts = _probe_points(station)
    out = np.empty((3, len(PROBE_FLOWS)))
    for i, c in enumerate(plant):
        out[i] = c.efficiency.noise_free(pts[:, 0], pts[:, 1]) - bases[i](pts[:, 0], pts[:, 1])
    return out


def steady_mask(time: np.ndarray, profile: DemandProfile,
                fraction: float = TRANSIENT_FRACTION) -> np.ndarray:
    """True for steps outside the first ``fraction`` of their demand segment."""
    starts = profile.starts()
    ends = np.append(starts[1:], max(time[-1] + (time[1] - time[0] if len(time) > 1 else 1.0),
                                     starts[-1]))
    idx = np.searchsorted(starts, time, side="right") - 1
    return time >= starts[idx] + fraction * (ends[idx] - starts[idx]) - 1e-9


def compute_metrics(trace: SimulationTrace, gp_history, plant, bases, models,
                    profile: DemandProfile, station: StationConfig) -> RunMetrics:
    if len(trace.time) == 0:
        raise ValueError("empty trace")
    dt = float(trace.time[1] - trace.time[0]) if len(trace.time) > 1 else 1.0
    seconds = trace.time * 3600.0
    W_tot = trace.W_total
    integrated = float(trapezoid(W_tot, seconds)) if len(seconds) > 1 else 0.0
    mask = steady_mask(trace.time, profile)
    steady = float(W_tot[mask].sum() * dt * 3600.0)
    mae_demand = float(np.mean(np.abs(trace.m_c.sum(axis=1) - trace.demand)))

    eps = actual_errors(plant, bases, station)
    preds = np.array([snap.predictions for snap in gp_history])  # (N, compressor, probe)
    mae_gp = np.mean(np.abs(preds - eps[None]), axis=0)
    delta_init = preds[0] - eps
    delta_fin = preds[-1] - eps
    visited = np.zeros((3, len(PROBE_FLOWS)), dtype=bool)
    for i, m in enumerate(models):
        if m.data.k:
            d = np.abs(m.data.X[:, 0][:, None] - np.asarray(PROBE_FLOWS)[None, :])
            visited[i] = (d <= VISIT_TOL).any(axis=0)
    return RunMetrics(integrated, steady, mae_demand, float(np.mean(trace.demand)),
                      mae_gp, delta_init, delta_fin, eps, visited,
                      tuple(m.n_fits for m in models))


def sweep_scenarios(base: Scenario, noise: float = 0.001) -> list[Scenario]:
    """The 12 adaptation cases: truth map x noise x belief order."""
    out = []
    for kind in MapKind:
        for amp in (0.0, noise):
            for order in ModelOrder:
                out.append(replace(base, mode=Mode.ADAPT, truth_map_kind=kind,
                                   truth_noise=amp, belief_order=order))
    return out


def _run_packed(args):
    return run_scenario(*args)


def run_many(scenarios, profile: DemandProfile, station: StationConfig | None = None,
             jobs: int = 1) -> list[RunResult]:
    station = station or StationConfig()
    args = [(s, profile, station) for s in scenarios]
    if jobs <= 1 or len(args) <= 1:
        return [run_scenario(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_packed, args))


def mismatch_sweep(base: Scenario, profile: DemandProfile, station: StationConfig | None = None,
                   jobs: int = 1) -> list[RunResult]:
    return run_many(sweep_scenarios(base), profile, station, jobs)


def excess(power: float, reference: float) -> float:
    """Relative excess of ``power`` over ``reference``."""
    return power / reference - 1.0
