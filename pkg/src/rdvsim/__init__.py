"""Risk-aware air-ground rendezvous planning and simulation."""

__version__ = "0.1.0"

from .behavior import (
    BehaviorDataset,
    BehaviorPosterior,
    BehaviorPrior,
    DriverBehaviorModel,
    PositionPrediction,
    append,
    predict_position,
    regress,
)
from .config import ScenarioConfig, load_scenario
from .energy import EnergyParams, UasState, min_energy_to_reach, segment_energy, step
from .errors import (
    ConfigurationError,
    DataError,
    DomainError,
    InputError,
    RdvsimError,
)
from .mission import (
    MissionContext,
    MissionState,
    Phase,
    execute_committed,
    persistent_safety_audit,
    tick,
)
from .ocp import MissionPlan, OcpInputs, OcpResult, solve
from .path import BasisIntegralTable, BasisSpec, PathModel, diagonal_path
from .risk import Decision, RiskReport, commit_check, downside_potential, evaluate_risk, rendezvous_variance
from .runner import run_batch, run_scenario
from .sim import DriverTruth, TelemetrySample, World

__all__ = [
    "BasisIntegralTable",
    "BasisSpec",
    "BehaviorDataset",
    "BehaviorPosterior",
    "BehaviorPrior",
    "ConfigurationError",
    "DataError",
    "Decision",
    "DomainError",
    "DriverBehaviorModel",
    "DriverTruth",
    "EnergyParams",
    "InputError",
    "MissionContext",
    "MissionPlan",
    "MissionState",
    "OcpInputs",
    "OcpResult",
    "PathModel",
    "Phase",
    "PositionPrediction",
    "RdvsimError",
    "RiskReport",
    "ScenarioConfig",
    "TelemetrySample",
    "UasState",
    "World",
    "append",
    "commit_check",
    "diagonal_path",
    "downside_potential",
    "evaluate_risk",
    "execute_committed",
    "load_scenario",
    "min_energy_to_reach",
    "persistent_safety_audit",
    "predict_position",
    "regress",
    "rendezvous_variance",
    "run_batch",
    "run_scenario",
    "segment_energy",
    "solve",
    "step",
    "tick",
]
