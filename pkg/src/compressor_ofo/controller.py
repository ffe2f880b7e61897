"""Online Feedback Optimization law for the three-compressor station.

The controller is a discrete integral law ``u+ = u + nu * w`` where ``w``
solves a projected-gradient QP built from measured outputs and model-based
power sensitivities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qp
from .compressor import GasProperties, NonPositiveEfficiency, head
from .gp import GpErrorModel, estimated_efficiency

N_COMPRESSORS = 3


class InfeasibleDemand(ValueError):
    """The demand cannot be met within the compressor flow bounds."""


@dataclass(frozen=True)
class OfoConfig:
    nu: float = 1e-3
    delta_fd: float = 1e-8
    m_min: tuple = (60.0, 60.0, 60.0)
    m_max: tuple = (125.0, 125.0, 125.0)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"step size nu must be positive, got {self.nu}")
        if not self.delta_fd > 0:
            raise ValueError(f"delta_fd must be positive, got {self.delta_fd}")
        m_min = tuple(float(v) for v in self.m_min)
        m_max = tuple(float(v) for v in self.m_max)
        if len(m_min) != N_COMPRESSORS or len(m_max) != N_COMPRESSORS:
            raise ValueError("need one flow bound per compressor")
        if any(lo >= hi for lo, hi in zip(m_min, m_max)):
            raise ValueError(f"m_min must be below m_max, got {m_min}, {m_max}")
        object.__setattr__(self, "m_min", m_min)
        object.__setattr__(self, "m_max", m_max)


@dataclass(frozen=True)
class OfoState:
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, float).reshape(N_COMPRESSORS))


@dataclass(frozen=True)
class PlantMeasurement:
    m_c: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m_c", np.asarray(self.m_c, float).reshape(N_COMPRESSORS))
        object.__setattr__(self, "W", np.asarray(self.W, float).reshape(N_COMPRESSORS))

    @property
    def y(self) -> np.ndarray:
        """Output vector ordered flows first, then powers."""
        return np.concatenate([self.m_c, self.W])


@dataclass(frozen=True)
class SensitivityBundle:
    dW_dm: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dW_dm, float).reshape(N_COMPRESSORS)
        if not np.all(np.isfinite(d)):
            raise ValueError(f"non-finite sensitivity {d}")
        object.__setattr__(self, "dW_dm", d)


@dataclass(frozen=True)
class Belief:
    """What the controller assumes about one compressor.

    ``base`` is any callable efficiency map ``(m, pi) -> eta``; ``gp`` the
    current error model on top of it.
    """

    base: object
    gp: GpErrorModel = field(default_factory=GpErrorModel)


def estimate_power(belief: Sequence[Belief], gas: GasProperties, resistance, m: float,
                   compressor: int) -> float:
    """Model-based power of one compressor at flow ``m``."""
    rho1, rho2 = resistance
    pi = rho1 * m + rho2
    b = belief[compressor]
    eta = estimated_efficiency(b.base, b.gp, m, pi)
    if eta <= 0:
        raise NonPositiveEfficiency(
            f"estimated efficiency {eta} of compressor {compressor + 1} at m={m}")
    return float(head(gas, pi) * m / eta)


def forward_difference(f, m: float, delta: float) -> float:
    return (f(m + delta) - f(m)) / delta


def sensitivity(belief, gas, resistance, m: float, cfg: OfoConfig, compressor: int) -> float:
    """Forward-difference estimate of dW/dm for one compressor."""
    return forward_difference(
        lambda x: estimate_power(belief, gas, resistance, x, compressor), m, cfg.delta_fd)


def sensitivities(belief, gas, resistance, m_c, cfg: OfoConfig) -> SensitivityBundle:
    return SensitivityBundle([sensitivity(belief, gas, resistance, float(m_c[i]), cfg, i)
                              for i in range(N_COMPRESSORS)])


def input_constraints(cfg: OfoConfig):
    """``A u <= b`` encoding the per-compressor flow bounds."""
    A = np.zeros((2 * N_COMPRESSORS, N_COMPRESSORS))
    b = np.zeros(2 * N_COMPRESSORS)
    for i in range(N_COMPRESSORS):
        A[2 * i, i], b[2 * i] = 1.0, cfg.m_max[i]
        A[2 * i + 1, i], b[2 * i + 1] = -1.0, -cfg.m_min[i]
    return A, b


def output_constraints(demand: float):
    """``C y <= d``: the demand equality written as two opposing inequalities."""
    C = np.zeros((2, 2 * N_COMPRESSORS))
    C[0, :N_COMPRESSORS] = -1.0
    C[1, :N_COMPRESSORS] = 1.0
    d = np.array([-demand, demand])
    return C, d


def h_matrix(s: SensitivityBundle) -> np.ndarray:
    """H = [I, I, diag(dW/dm)], mapping the full gradient onto the inputs."""
    eye = np.eye(N_COMPRESSORS)
    return np.hstack([eye, eye, np.diag(s.dW_dm)])


def output_sensitivity(s: SensitivityBundle) -> np.ndarray:
    """grad h = [I; diag(dW/dm)], outputs (flows, powers) w.r.t. set-points."""
    return np.vstack([np.eye(N_COMPRESSORS), np.diag(s.dW_dm)])


# cost is the sum of the three measured powers
GRAD_PHI = np.concatenate([np.zeros(2 * N_COMPRESSORS), np.ones(N_COMPRESSORS)])


def build_qp(state: OfoState, y: PlantMeasurement, s: SensitivityBundle, cfg: OfoConfig,
             demand: float) -> qp.QpProblem:
    if not demand > 0:
        raise ValueError(f"demand must be positive, got {demand}")
    g = h_matrix(s) @ GRAD_PHI
    A, b = input_constraints(cfg)
    C, d = output_constraints(demand)
    G = np.vstack([cfg.nu * A, cfg.nu * C @ output_sensitivity(s)])
    h = np.concatenate([b - A @ state.u, d - C @ y.y])
    return qp.QpProblem(g, G, h)


def step(state: OfoState, y: PlantMeasurement, s: SensitivityBundle, cfg: OfoConfig,
         demand: float) -> OfoState:
    """One integral update of the set-points."""
    try:
        sol = qp.solve(build_qp(state, y, s, cfg, demand))
    except qp.Infeasible as exc:
        raise InfeasibleDemand(f"demand {demand} infeasible: {exc}") from exc
    u = state.u + cfg.nu * sol.w
    # remove round-off excursions past the bounds
    u = np.clip(u, cfg.m_min, cfg.m_max)
    return OfoState(u)
