"""Scenario configuration: schema, strict parsing, validation, builders.

A scenario is a YAML file with one section per subsystem.  Parsing is
strict: unknown keys are rejected with their full path, and every field is
range-checked with a diagnostic naming the field and the violated rule.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .energy import EnergyParams
from .errors import ConfigurationError
from .path import BasisIntegralTable, BasisSpec, PathModel, diagonal_path, profile_end_time

BUILTIN_SCENARIOS = ("low_risk", "high_risk", "exact_model", "adversarial_switch")


@dataclass
class PathConfig:
    kind: str = "diagonal"  # "diagonal" | "polynomial"
    mode: str = "arc-length"  # for the diagonal built-in
    length: float = 1000.0
    x_coeffs: list[float] | None = None  # for kind="polynomial"
    y_coeffs: list[float] | None = None
    theta_min: float = 0.0
    theta_max: float | None = None


@dataclass
class ProfileConfig:
    coeffs: list[float] = field(default_factory=lambda: [10.0, -0.05])
    t_end: float | None = None  # default: first root of the profile


@dataclass
class SensorConfig:
    velocity_sigma: float = 3.0
    position_sigma: float | None = None  # default: velocity_sigma / 10


@dataclass
class LearnerConfig:
    basis_degree: int = 1
    prior_scale: float = 1.0
    noise_sigma: float | None = None  # default: sensors.velocity_sigma


@dataclass
class DriverConfig:
    gain: float = 1.1
    theta0: float = 0.0
    # optional piecewise-constant gain schedule: list of [t_from, gain]
    schedule: list[list[float]] | None = None


@dataclass
class EnergyConfig:
    mass: float = 4.0
    hover_rate: float = 5.0
    v_max: float = 20.0
    initial_energy: float = 60000.0


@dataclass
class MissionConfig:
    start: list[float] = field(default_factory=lambda: [500.0, 0.0])
    landing: list[float] = field(default_factory=lambda: [500.0, 0.0])
    abort: list[float] = field(default_factory=lambda: [500.0, 0.0])
    t_max: float = 65.0
    t_c: float = 5.0
    speed_fraction: float = 0.7
    no_plan_patience: float = 20.0
    epsilon: float = 5.0
    t_s: float = 1.0
    capture_radius: float = 5.0
    reaim: bool = True


@dataclass
class RiskConfig:
    gamma_max: float = 2.0
    e_risk_max: float = 200.0
    e_risk_mode: str = "constant"  # "constant" | "fraction"
    e_risk_fraction: float = 0.1  # used in fraction mode: budget = frac * E_r
    variance_weight: float = 0.5
    approach_weight: float = 1.0
    abort_trigger_enabled: bool = False
    abort_trigger_threshold: float | None = None


@dataclass
class SolverConfig:
    tol: float = 1.0e-8
    max_iter: int = 200
    multistart: int = 3
    verbose: bool = False


@dataclass
class RunConfig:
    seed: int = 0
    max_duration: float = 150.0


@dataclass
class ScenarioConfig:
    path: PathConfig = field(default_factory=PathConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    driver: DriverConfig = field(default_factory=DriverConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    mission: MissionConfig = field(default_factory=MissionConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    run: RunConfig = field(default_factory=RunConfig)

    # -- derived values -----------------------------------------------------

    @property
    def position_sigma(self) -> float:
        if self.sensors.position_sigma is not None:
            return self.sensors.position_sigma
        return self.sensors.velocity_sigma / 10.0

    @property
    def regression_noise_var(self) -> float:
        sigma = (
            self.learner.noise_sigma
            if self.learner.noise_sigma is not None
            else self.sensors.velocity_sigma
        )
        return max(sigma, 1e-6) ** 2

    def risk_budget(self, e_r: float) -> float:
        if self.risk.e_risk_mode == "fraction":
            return self.risk.e_risk_fraction * e_r
        return self.risk.e_risk_max

    # -- object builders -----------------------------------------------------

    def build_path(self) -> PathModel:
        p, prof = self.path, self.profile
        t_end = prof.t_end if prof.t_end is not None else profile_end_time(prof.coeffs)
        if p.kind == "diagonal":
            return diagonal_path(
                mode=p.mode,
                length=p.length,
                profile_coeffs=tuple(prof.coeffs),
                t_max_profile=t_end,
            )
        if p.kind == "polynomial":
            if p.x_coeffs is None or p.y_coeffs is None or p.theta_max is None:
                raise ConfigurationError(
                    "path.kind=polynomial requires x_coeffs, y_coeffs, theta_max"
                )
            return PathModel(
                x_coeffs=tuple(p.x_coeffs),
                y_coeffs=tuple(p.y_coeffs),
                theta_min=p.theta_min,
                theta_max=p.theta_max,
                profile_coeffs=tuple(prof.coeffs),
                t_min=0.0,
                t_max_profile=t_end,
            )
        raise ConfigurationError(f"path.kind: unknown value {p.kind!r}")

    def build_basis(self) -> BasisSpec:
        return BasisSpec(self.learner.basis_degree)

    def build_table(self, path: PathModel | None = None) -> BasisIntegralTable:
        return BasisIntegralTable(path or self.build_path(), self.build_basis())

    def build_energy_params(self) -> EnergyParams:
        e = self.energy
        return EnergyParams(mass=e.mass, hover_rate=e.hover_rate, v_max=e.v_max)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTION_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce_section(cls, data: dict, prefix: str, errors: list[str]):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            errors.append(f"{prefix}.{key}: unknown field")
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        errors.append(f"{prefix}: {exc}")
        return cls()


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig; raises with all errors listed."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigurationError("scenario file must contain a mapping")
    sections = {}
    section_cls = {
        "path": PathConfig,
        "profile": ProfileConfig,
        "sensors": SensorConfig,
        "learner": LearnerConfig,
        "driver": DriverConfig,
        "energy": EnergyConfig,
        "mission": MissionConfig,
        "risk": RiskConfig,
        "solver": SolverConfig,
        "run": RunConfig,
    }
    for key, value in data.items():
        if key not in section_cls:
            errors.append(f"{key}: unknown section")
            continue
        if not isinstance(value, dict):
            errors.append(f"{key}: must be a mapping")
            continue
        sections[key] = _coerce_section(section_cls[key], value, key, errors)
    cfg = ScenarioConfig(**sections)
    errors.extend(validate(cfg))
    if errors:
        raise ConfigurationError("; ".join(errors))
    return cfg


def validate(cfg: ScenarioConfig) -> list[str]:
    """Range checks; returns 'field.path: rule' strings, empty when valid."""
    errs: list[str] = []

    def require(cond: bool, msg: str) -> None:
        if not cond:
            errs.append(msg)

    require(cfg.path.kind in ("diagonal", "polynomial"), "path.kind: must be diagonal or polynomial")
    require(cfg.path.mode in ("per-axis", "arc-length"), "path.mode: must be per-axis or arc-length")
    require(cfg.path.length > 0, "path.length: must be > 0")
    require(len(cfg.profile.coeffs) >= 1, "profile.coeffs: must be non-empty")
    require(cfg.profile.t_end is None or cfg.profile.t_end > 0, "profile.t_end: must be > 0")
    require(cfg.sensors.velocity_sigma >= 0, "sensors.velocity_sigma: must be >= 0")
    require(
        cfg.sensors.position_sigma is None or cfg.sensors.position_sigma >= 0,
        "sensors.position_sigma: must be >= 0",
    )
    require(cfg.learner.basis_degree >= 0, "learner.basis_degree: must be >= 0")
    require(cfg.learner.prior_scale > 0, "learner.prior_scale: must be > 0")
    require(
        cfg.learner.noise_sigma is None or cfg.learner.noise_sigma > 0,
        "learner.noise_sigma: must be > 0",
    )
    require(cfg.driver.gain >= 0, "driver.gain: must be >= 0")
    if cfg.driver.schedule is not None:
        ok = all(
            isinstance(row, (list, tuple)) and len(row) == 2 and row[1] >= 0
            for row in cfg.driver.schedule
        )
        require(ok, "driver.schedule: rows must be [t_from, gain>=0]")
    require(cfg.energy.mass > 0, "energy.mass: must be > 0")
    require(cfg.energy.hover_rate > 0, "energy.hover_rate: must be > 0")
    require(cfg.energy.v_max > 0, "energy.v_max: must be > 0")
    require(cfg.energy.initial_energy > 0, "energy.initial_energy: must be > 0")
    for name in ("start", "landing", "abort"):
        vec = getattr(cfg.mission, name)
        require(
            isinstance(vec, (list, tuple)) and len(vec) == 2 and np.all(np.isfinite(vec)),
            f"mission.{name}: must be a finite 2-vector",
        )
    require(cfg.mission.t_c > 0, "mission.t_c: must be > 0")
    require(cfg.mission.t_max > 2 * cfg.mission.t_c, "mission.t_max: must be > 2 * t_c")
    require(cfg.mission.epsilon > 0, "mission.epsilon: must be > 0")
    require(cfg.mission.t_s > 0, "mission.t_s: must be > 0")
    require(cfg.mission.capture_radius > 0, "mission.capture_radius: must be > 0")
    require(cfg.risk.gamma_max > 0, "risk.gamma_max: must be > 0")
    require(cfg.risk.e_risk_max >= 0, "risk.e_risk_max: must be >= 0")
    require(cfg.risk.e_risk_mode in ("constant", "fraction"), "risk.e_risk_mode: must be constant or fraction")
    require(0 < cfg.risk.e_risk_fraction <= 1 or cfg.risk.e_risk_mode == "constant", "risk.e_risk_fraction: must be in (0, 1]")
    require(cfg.risk.variance_weight >= 0, "risk.variance_weight: must be >= 0")
    require(cfg.risk.approach_weight >= 0, "risk.approach_weight: must be >= 0")
    require(
        0.0 < cfg.mission.speed_fraction <= 1.0,
        "mission.speed_fraction: must be in (0, 1]",
    )
    if cfg.risk.abort_trigger_enabled:
        require(
            cfg.risk.abort_trigger_threshold is not None
            and cfg.risk.abort_trigger_threshold > 0,
            "risk.abort_trigger_threshold: required and > 0 when trigger enabled",
        )
    require(cfg.solver.tol > 0, "solver.tol: must be > 0")
    require(cfg.solver.max_iter > 0, "solver.max_iter: must be > 0")
    require(cfg.solver.multistart >= 1, "solver.multistart: must be >= 1")
    require(cfg.run.max_duration > 0, "run.max_duration: must be > 0")
    return errs


def load_scenario(name_or_path: str | Path) -> ScenarioConfig:
    """Load a bundled scenario by name or any YAML file by path."""
    text = _scenario_text(name_or_path)
    data = yaml.safe_load(text) or {}
    return config_from_dict(data)


def _scenario_text(name_or_path: str | Path) -> str:
    candidate = Path(name_or_path)
    if candidate.suffix in (".yml", ".yaml") or candidate.exists():
        if not candidate.exists():
            raise ConfigurationError(f"scenario file not found: {candidate}")
        return candidate.read_text()
    name = str(name_or_path)
    if name in BUILTIN_SCENARIOS:
        ref = resources.files("rdvsim.scenarios").joinpath(f"{name}.yaml")
        return ref.read_text()
    raise ConfigurationError(
        f"unknown scenario {name!r}; built-ins are {', '.join(BUILTIN_SCENARIOS)}"
    )
