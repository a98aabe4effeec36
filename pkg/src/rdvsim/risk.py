"""Risk measures gating the commit decision.

Two measures: the variance of the predicted driver progress at the planned
rendezvous time, and the downside energy potential -- the extra energy the
vehicle would need if the driver turned up at the worst end of the
confidence interval, with segment times held fixed (the vehicle compensates
with speed, not schedule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .behavior import PositionPrediction
from .energy import EnergyParams, min_energy_to_reach
from .errors import InputError
from .ocp import MissionPlan
from .path import PathModel

INFEASIBLE = math.inf


class Decision(Enum):
    PROCEED = "proceed"
    ABORT = "abort"


@dataclass(frozen=True)
class EndpointEval:
    theta: float
    replanned_energy: float
    extra_energy: float


@dataclass(frozen=True)
class RiskReport:
    rho_r: float  # rendezvous-progress variance
    rho_downside: float  # extra J at the worst confidence endpoint, or inf
    endpoints: tuple[EndpointEval, EndpointEval]
    threshold_check: bool
    e_risk_max: float


def rendezvous_variance(prediction: PositionPrediction) -> float:
    """Single owner of the variance-at-rendezvous measure."""
    return prediction.variance


def downside_potential(
    plan: MissionPlan,
    prediction: PositionPrediction,
    path: PathModel,
    params: EnergyParams,
    gamma_max: float,
) -> float:
    """Worst-endpoint extra energy, floored at zero; inf when unreachable."""
    report = evaluate_risk(plan, prediction, path, params, gamma_max, math.inf)
    return report.rho_downside


def evaluate_risk(
    plan: MissionPlan,
    prediction: PositionPrediction,
    path: PathModel,
    params: EnergyParams,
    gamma_max: float,
    e_risk_max: float,
) -> RiskReport:
    t2, t3 = float(plan.durations[1]), float(plan.durations[2])
    if t2 <= 0 or t3 <= 0:
        raise InputError("plan segment times t2 and t3 must be positive")
    half_width = gamma_max * math.sqrt(max(prediction.variance, 0.0))
    nominal = plan.rendezvous_energy
    e1 = float(plan.energies[0])
    x1 = plan.waypoints[0]
    s_l = plan.waypoints[2]
    evals = []
    for theta in (prediction.mean - half_width, prediction.mean + half_width):
        # the driver cannot leave the road; endpoints saturate at its ends
        theta = path.clip_theta(theta)
        point = path.point_unchecked(theta)
        leg_in = min_energy_to_reach(x1, point, t2, params)
        leg_out = min_energy_to_reach(point, s_l, t3, params)
        replanned = e1 + leg_in + leg_out
        extra = (
            INFEASIBLE
            if math.isinf(replanned)
            else max(0.0, replanned - nominal)
        )
        evals.append(EndpointEval(theta, replanned, extra))
    rho = max(e.extra_energy for e in evals)
    return RiskReport(
        rho_r=rendezvous_variance(prediction),
        rho_downside=rho,
        endpoints=(evals[0], evals[1]),
        threshold_check=rho <= e_risk_max,
        e_risk_max=e_risk_max,
    )


def commit_check(report: RiskReport, e_risk_max: float) -> Decision:
    """PROCEED iff the downside potential is within budget (inclusive)."""
    if math.isinf(report.rho_downside):
        return Decision.ABORT
    return Decision.PROCEED if report.rho_downside <= e_risk_max else Decision.ABORT
