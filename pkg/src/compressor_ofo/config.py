"""Run configuration: YAML parsing with strict validation, and the canonical emitter."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .compressor import GasProperties, PolyCoeffs, SinCoeffs
from .simulation import DemandProfile, Scenario, StationConfig

MODES = ("nlp", "ofo-perfect", "ofo-mismatch", "ofo-adapt", "all")
SWEEPS = ("mismatch",)


class ConfigError(ValueError):
    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        where = field
        if line is not None:
            where = f"{field} (line {line})" if field else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class DemandSpec:
    """Either explicit segments or the seeded random-walk generator."""

    segments: Optional[tuple] = None
    seed: int = 0
    low: float = 220.0
    high: float = 340.0
    max_step: float = 40.0

    def profile(self, scenario: Scenario) -> DemandProfile:
        if self.segments is not None:
            return DemandProfile(self.segments)
        return DemandProfile.generate(self.seed, scenario.horizon, scenario.demand_period,
                                      self.low, self.high, self.max_step)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "all"
    sweep: Optional[str] = None
    seed: int = 0
    jobs: int = 1
    scenario: Scenario = field(default_factory=Scenario)
    station: StationConfig = field(default_factory=StationConfig)
    demand: DemandSpec = field(default_factory=DemandSpec)
    out_dir: str = "runs"
    dump_gp: bool = False

    def with_overrides(self, mode=None, sweep=None, seed=None, jobs=None, out_dir=None) -> "RunConfig":
        cfg = self
        if mode is not None:
            _check_choice(mode, MODES, "mode")
            cfg = replace(cfg, mode=mode)
        if sweep is not None:
            _check_choice(sweep, SWEEPS, "sweep")
            cfg = replace(cfg, sweep=sweep)
        if seed is not None:
            cfg = replace(cfg, seed=int(seed), scenario=replace(cfg.scenario, seed=int(seed)),
                          demand=replace(cfg.demand, seed=int(seed)))
        if jobs is not None:
            if int(jobs) < 1:
                raise ConfigError("must be >= 1", "jobs")
            cfg = replace(cfg, jobs=int(jobs))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        return cfg


def default_config_text() -> str:
    return resources.files("compressor_ofo").joinpath("default_config.yaml").read_text()


# ---------------------------------------------------------------- parsing

_SCHEMA = {
    "mode": None, "sweep": None, "seed": None, "jobs": None,
    "scenario": {"truth_map_kind": None, "truth_noise": None, "belief_order": None,
                 "horizon": None, "demand_period": None, "controller_step": None,
                 "adapt_period": None, "tau_f": None},
    "plant": {"true_poly": None, "true_sin": None, "mismatch": None, "rho": None,
              "m_min": None, "m_max": None},
    "gas": {"Z": None, "R": None, "T1": None, "M_W": None, "n": None},
    "controller": {"nu": None, "delta_fd": None},
    "demand": {"segments": None, "generator": {"seed": None, "low": None, "high": None,
                                                "max_step": None}},
    "output": {"dir": None, "dump_gp": None},
}


def _key_lines(text: str) -> dict:
    """Map dotted key paths to 1-based source lines."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    root = yaml.compose(text)
    if root is not None:
        walk(root, "")
    return lines


def _check_keys(data, schema, prefix, lines):
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", prefix, lines.get(prefix))
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in schema:
            raise ConfigError("unknown key", path, lines.get(path))
        if isinstance(schema[key], dict) and value is not None:
            _check_keys(value, schema[key], path, lines)


def _check_choice(value, choices, name, line=None):
    if value not in choices:
        raise ConfigError(f"must be one of {', '.join(choices)}, got {value!r}", name, line)


class _Reader:
    def __init__(self, data, lines):
        self.data = data
        self.lines = lines

    def get(self, path, default=None):
        node = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node or node[part] is None:
                return default
            node = node[part]
        return node

    def fail(self, path, msg):
        raise ConfigError(msg, path, self.lines.get(path))

    def num(self, path, default):
        v = self.get(path, default)
        try:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        except (TypeError, ValueError):
            self.fail(path, f"expected a number, got {v!r}")

    def int(self, path, default):
        v = self.num(path, default)
        if v != int(v):
            self.fail(path, f"expected an integer, got {v}")
        return int(v)

    def vec(self, path, default, n):
        v = self.get(path, default)
        if not isinstance(v, (list, tuple)):
            v = [v] * n
        if len(v) != n:
            self.fail(path, f"expected {n} values, got {len(v)}")
        try:
            return tuple(float(x) for x in v)
        except (TypeError, ValueError):
            self.fail(path, f"expected numbers, got {v!r}")

    def rows(self, path, default, width):
        v = self.get(path, default)
        if not isinstance(v, (list, tuple)) or len(v) != 3:
            self.fail(path, "expected three rows, one per compressor")
        out = []
        for row in v:
            if not isinstance(row, (list, tuple)) or len(row) != width:
                self.fail(path, f"each row needs {width} numbers")
            try:
                out.append(tuple(float(x) for x in row))
            except (TypeError, ValueError):
                self.fail(path, f"expected numbers, got {row!r}")
        return out


def parse_config_text(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from exc
    data = data or {}
    _check_keys(data, _SCHEMA, "", lines)
    r = _Reader(data, lines)
    d = RunConfig()
    ds, dst = d.scenario, d.station

    mode = r.get("mode", d.mode)
    _check_choice(mode, MODES, "mode", lines.get("mode"))
    sweep = r.get("sweep", None)
    if sweep is not None:
        _check_choice(sweep, SWEEPS, "sweep", lines.get("sweep"))
    seed = r.int("seed", d.seed)
    jobs = r.int("jobs", d.jobs)
    if jobs < 1:
        r.fail("jobs", "must be >= 1")

    fields = dict(
        truth_map_kind=r.get("scenario.truth_map_kind", ds.truth_map_kind.value),
        truth_noise=r.num("scenario.truth_noise", ds.truth_noise),
        belief_order=r.get("scenario.belief_order", ds.belief_order.value),
        horizon=r.num("scenario.horizon", ds.horizon),
        demand_period=r.num("scenario.demand_period", ds.demand_period),
        controller_step=r.num("scenario.controller_step", ds.controller_step),
        adapt_period=r.num("scenario.adapt_period", ds.adapt_period),
        seed=seed,
        tau_f=r.num("scenario.tau_f", ds.tau_f),
    )
    try:
        scenario = Scenario(**fields)
    except ValueError as exc:
        raise ConfigError(str(exc), "scenario", lines.get("scenario")) from exc

    mism = r.rows("plant.mismatch", [[s, i + 1] for s, i in dst.mismatch_rule], 2)
    rule = []
    for scale, donor in mism:
        if donor not in (1.0, 2.0, 3.0):
            r.fail("plant.mismatch", f"donor compressor must be 1, 2 or 3, got {donor}")
        rule.append((scale, int(donor) - 1))
    if scenario.truth_noise > 0.01:
        r.fail("scenario.truth_noise", "noise amplitude must not exceed 0.01")
    try:
        gas = GasProperties(**{k: r.num(f"gas.{k}", getattr(dst.gas, k))
                               for k in ("Z", "R", "T1", "M_W", "n")})
    except ValueError as exc:
        raise ConfigError(str(exc), "gas", lines.get("gas")) from exc
    rho = r.vec("plant.rho", dst.rho, 2)
    m_min = r.vec("plant.m_min", dst.m_min, 3)
    m_max = r.vec("plant.m_max", dst.m_max, 3)
    if rho[0] <= 0:
        r.fail("plant.rho", "rho1 must be positive")
    for lo, hi in zip(m_min, m_max):
        if not 0 < lo < hi:
            r.fail("plant.m_max", f"need 0 < m_min < m_max, got {lo}, {hi}")
        if rho[0] * lo + rho[1] <= 1.0:
            r.fail("plant.rho", "pressure ratio must exceed 1 on the flow range")
    nu = r.num("controller.nu", dst.nu)
    delta_fd = r.num("controller.delta_fd", dst.delta_fd)
    if nu <= 0:
        r.fail("controller.nu", f"step size must be positive, got {nu}")
    if delta_fd <= 0:
        r.fail("controller.delta_fd", f"must be positive, got {delta_fd}")
    station = StationConfig(
        true_poly=tuple(PolyCoeffs(*row) for row in
                        r.rows("plant.true_poly", [c.as_array().tolist() for c in dst.true_poly], 6)),
        true_sin=tuple(SinCoeffs(*row) for row in
                       r.rows("plant.true_sin", [c.as_array().tolist() for c in dst.true_sin], 3)),
        mismatch_rule=tuple(rule), rho=rho, gas=gas, m_min=m_min, m_max=m_max,
        nu=nu, delta_fd=delta_fd)

    segs = r.get("demand.segments", None)
    if segs is not None:
        try:
            segs = tuple((float(t), float(M)) for t, M in segs)
            DemandProfile(segs).validate(m_min, m_max)
        except (TypeError, ValueError) as exc:
            r.fail("demand.segments", str(exc))
    dd = d.demand
    demand = DemandSpec(
        segments=segs,
        seed=r.int("demand.generator.seed", seed),
        low=r.num("demand.generator.low", dd.low),
        high=r.num("demand.generator.high", dd.high),
        max_step=r.num("demand.generator.max_step", dd.max_step))
    if not sum(m_min) <= demand.low <= demand.high <= sum(m_max):
        r.fail("demand.generator", "demand range must lie within the station limits")

    dump = r.get("output.dump_gp", d.dump_gp)
    if not isinstance(dump, bool):
        r.fail("output.dump_gp", "expected true or false")
    return RunConfig(mode=mode, sweep=sweep, seed=seed, jobs=jobs, scenario=scenario,
                     station=station, demand=demand,
                     out_dir=str(r.get("output.dir", d.out_dir)), dump_gp=dump)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    return parse_config_text(text)


def emit_config(cfg: RunConfig) -> str:
    """Canonical YAML text; ``parse_config_text(emit_config(c)) == c``."""
    s, st = cfg.scenario, cfg.station
    data = {
        "mode": cfg.mode,
        "sweep": cfg.sweep,
        "seed": cfg.seed,
        "jobs": cfg.jobs,
        "scenario": {
            "truth_map_kind": s.truth_map_kind.value, "truth_noise": s.truth_noise,
            "belief_order": s.belief_order.value, "horizon": s.horizon,
            "demand_period": s.demand_period, "controller_step": s.controller_step,
            "adapt_period": s.adapt_period, "tau_f": s.tau_f,
        },
        "plant": {
            "true_poly": [c.as_array().tolist() for c in st.true_poly],
            "true_sin": [c.as_array().tolist() for c in st.true_sin],
            "mismatch": [[float(sc), d + 1] for sc, d in st.mismatch_rule],
            "rho": list(st.rho), "m_min": list(st.m_min), "m_max": list(st.m_max),
        },
        "gas": {k: getattr(st.gas, k) for k in ("Z", "R", "T1", "M_W", "n")},
        "controller": {"nu": st.nu, "delta_fd": st.delta_fd},
        "demand": {
            "segments": None if cfg.demand.segments is None else [list(x) for x in cfg.demand.segments],
            "generator": {"seed": cfg.demand.seed, "low": cfg.demand.low,
                          "high": cfg.demand.high, "max_step": cfg.demand.max_step},
        },
        "output": {"dir": cfg.out_dir, "dump_gp": cfg.dump_gp},
    }
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)
