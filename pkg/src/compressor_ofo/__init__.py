"""Compressor station load sharing with Online Feedback Optimization and GP-adapted efficiency models."""

from .compressor import (DEFAULT_POLY, DEFAULT_SIN, CompressorModel, EfficiencyMap, GasProperties,
                         ModelOrder, PolyCoeffs, SinCoeffs, apply_mismatch, head, plant_power, power,
                         reduced_model, station_models)
from .controller import Belief, OfoConfig, OfoState, PlantMeasurement, sensitivities
from .controller import step as ofo_step
from .gp import ErrorObservation, GpErrorModel, GpHyperParams, adapt, estimated_efficiency
from .nlp import LoadSharingProblem, NlpResult, solve_nlp
from .qp import QpProblem, QpSolution
from .qp import solve as solve_qp
from .simulation import (DemandProfile, MapKind, Mode, RunResult, Scenario, StationConfig,
                         excess, mismatch_sweep, run_scenario, sweep_scenarios)

__all__ = [
    "DEFAULT_POLY", "DEFAULT_SIN", "CompressorModel", "EfficiencyMap", "GasProperties", "ModelOrder",
    "PolyCoeffs", "SinCoeffs", "apply_mismatch", "head", "plant_power", "power", "reduced_model",
    "station_models", "Belief", "OfoConfig", "OfoState", "PlantMeasurement", "sensitivities",
    "ofo_step", "ErrorObservation", "GpErrorModel", "GpHyperParams", "adapt", "estimated_efficiency",
    "LoadSharingProblem", "NlpResult", "solve_nlp", "QpProblem", "QpSolution", "solve_qp",
    "DemandProfile", "MapKind", "Mode", "RunResult", "Scenario", "StationConfig", "excess",
    "mismatch_sweep", "run_scenario", "sweep_scenarios",
]
