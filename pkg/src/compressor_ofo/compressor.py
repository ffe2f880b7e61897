"""Static compressor physics: efficiency maps, resistance curve, head and power."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

import numpy as np


class NonPositiveEfficiency(ValueError):
    """An efficiency map evaluated to a value <= 0, so power is undefined."""


@dataclass(frozen=True)
class GasProperties:
    """Thermodynamic constants entering the polytropic head.

    Defaults describe a natural-gas-like mixture; only relative power matters
    for load sharing, so the absolute scale is not critical.
    """

    Z: float = 0.9
    R: float = 8.314
    T1: float = 293.0
    M_W: float = 0.01604
    n: float = 1.27

    def __post_init__(self):
        for name in ("Z", "R", "T1", "M_W"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.n > 1:
            raise ValueError(f"polytropic coefficient n must exceed 1, got {self.n}")

    @property
    def phi(self) -> float:
        return (self.n - 1.0) / self.n


@dataclass(frozen=True)
class PolyCoeffs:
    """Quadratic efficiency surface over (m, pi).

    Coefficient order is ``(1, m, pi, m*pi, m**2, pi**2)``.
    """

    a0: float
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 0.0

    @classmethod
    def from_sequence(cls, values) -> "PolyCoeffs":
        values = [float(v) for v in values]
        if len(values) != 6:
            raise ValueError(f"expected 6 polynomial coefficients, got {len(values)}")
        return cls(*values)

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2, self.a3, self.a4, self.a5])

    def scaled(self, factor: float) -> "PolyCoeffs":
        return PolyCoeffs.from_sequence(factor * self.as_array())

    def __call__(self, m, pi):
        return efficiency_poly(self, m, pi)


@dataclass(frozen=True)
class SinCoeffs:
    """Sinusoidal efficiency surface ``s2 * sin(0.02 * (m + s3*pi + s1))``."""

    s1: float
    s2: float
    s3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])

    def __call__(self, m, pi):
        return efficiency_sin(self, m, pi)


MapCoeffs = Union[PolyCoeffs, SinCoeffs]


# Table values of the reference station (compressor order 1, 2, 3).
DEFAULT_POLY = (
    PolyCoeffs(0.5919, -0.0021, 0.2934, 0.0030, 0.0, -0.1179),
    PolyCoeffs(0.6383, -0.0020, 0.3220, 0.0034, 0.0, -0.1260),
    PolyCoeffs(0.6291, -0.0023, 0.3104, 0.0032, 0.0, -0.1306),
)
DEFAULT_SIN = (
    SinCoeffs(-7.294, 0.8559, -9.222),
    SinCoeffs(-11.15, 0.966, -7.511),
    SinCoeffs(-3.595, 0.8584, -10.47),
)
DEFAULT_RHO = (0.017, 0.78)
# (scale, donor compressor index) for each believed compressor
MISMATCH_RULE = ((0.95, 2), (0.8, 0), (0.8, 0))


def efficiency_poly(c: PolyCoeffs, m, pi):
    return (c.a0 + c.a1 * m + c.a2 * pi + c.a3 * m * pi
            + c.a4 * m * m + c.a5 * pi * pi)


def efficiency_sin(c: SinCoeffs, m, pi):
    return c.s2 * np.sin(0.02 * (m + c.s3 * pi + c.s1))


def noise_draw(seed: int, compressor: int, step: int, amplitude: float) -> float:
    """Uniform draw on [-amplitude, amplitude] keyed on (seed, compressor, step).

    Uses a counter-based Philox generator so the value depends only on the
    key, never on how many draws happened before.
    """
    if amplitude == 0.0:
        return 0.0
    key = np.random.SeedSequence([seed, compressor, step]).generate_state(2, np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return float(gen.uniform(-amplitude, amplitude))


@dataclass(frozen=True)
class EfficiencyMap:
    coeffs: MapCoeffs
    noise_amplitude: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.noise_amplitude == 0.0 or 0.0 < self.noise_amplitude <= 0.01):
            raise ValueError(
                f"noise_amplitude must be 0 or in (0, 0.01], got {self.noise_amplitude}")

    @property
    def kind(self) -> str:
        return "polynomial" if isinstance(self.coeffs, PolyCoeffs) else "sinusoidal"

    def noise_free(self, m, pi):
        return self.coeffs(m, pi)


def true_efficiency(emap: EfficiencyMap, m, pi, step: int, compressor: int = 0):
    """Plant efficiency at ``(m, pi)`` including keyed measurement noise."""
    eta = emap.coeffs(m, pi)
    if emap.noise_amplitude > 0.0:
        eta = eta + noise_draw(emap.rng_seed, compressor, step, emap.noise_amplitude)
    return eta


@dataclass(frozen=True)
class CompressorModel:
    efficiency: EfficiencyMap
    rho1: float = DEFAULT_RHO[0]
    rho2: float = DEFAULT_RHO[1]
    m_min: float = 60.0
    m_max: float = 125.0
    gas: GasProperties = field(default_factory=GasProperties)

    def __post_init__(self):
        if not 0 < self.m_min < self.m_max:
            raise ValueError(f"need 0 < m_min < m_max, got {self.m_min}, {self.m_max}")
        if not self.rho1 > 0:
            raise ValueError("rho1 must be positive (increasing resistance curve)")
        if self.rho1 * self.m_min + self.rho2 <= 1.0:
            raise ValueError("resistance curve must give pressure ratio > 1 on the flow range")

    def pressure_ratio(self, m):
        return resistance_pi(self, m)


def resistance_pi(model: CompressorModel, m):
    return model.rho1 * m + model.rho2


def head(gas: GasProperties, pi):
    """Polytropic head in J/kg."""
    phi = gas.phi
    return gas.Z * gas.R * gas.T1 / (gas.M_W * phi) * (np.power(pi, phi) - 1.0)


def power(gas: GasProperties, m, pi, eta):
    """Shaft power ``head * m / eta`` in W."""
    if np.any(np.asarray(eta) <= 0):
        raise NonPositiveEfficiency(f"efficiency must be positive, got {eta}")
    return head(gas, pi) * m / eta


def apply_mismatch(defaults, rule=MISMATCH_RULE) -> tuple[PolyCoeffs, ...]:
    """Believed coefficients built by scaling donor rows of the true ones."""
    defaults = tuple(defaults)
    return tuple(defaults[donor].scaled(scale) for scale, donor in rule)


class ModelOrder(str, Enum):
    QUADRATIC = "quadratic"
    LINEAR = "linear"
    CONSTANT = "constant"


def reduced_model(c: PolyCoeffs, order) -> PolyCoeffs:
    order = ModelOrder(order)
    if order is ModelOrder.QUADRATIC:
        return c
    if order is ModelOrder.LINEAR:
        return replace(c, a3=0.0, a4=0.0, a5=0.0)
    return PolyCoeffs(c.a0)


def station_models(coeffs, noise_amplitude: float = 0.0, seed: int = 0, *,
                   rho=DEFAULT_RHO, m_min=(60.0,) * 3, m_max=(125.0,) * 3,
                   gas: GasProperties | None = None) -> tuple[CompressorModel, ...]:
    """Three compressor models sharing the resistance curve and gas."""
    gas = gas if gas is not None else GasProperties()
    return tuple(
        CompressorModel(EfficiencyMap(c, noise_amplitude, seed), rho[0], rho[1],
                        float(m_min[i]), float(m_max[i]), gas)
        for i, c in enumerate(coeffs)
    )


def plant_power(model: CompressorModel, m, step: int = 0, compressor: int = 0,
                noisy: bool = True) -> float:
    pi = resistance_pi(model, m)
    if noisy:
        eta = true_efficiency(model.efficiency, m, pi, step, compressor)
    else:
        eta = model.efficiency.noise_free(m, pi)
    return power(model.gas, m, pi, eta)

