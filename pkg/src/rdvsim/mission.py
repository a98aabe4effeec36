"""Mission controller: gather data, re-plan, commit, execute.

Each tick appends the newest sample, refits the behavior posterior,
re-solves the waypoint problem (warm-started), and flies the first-segment
velocity.  Once the decision window shrinks to the floor the downside
energy check picks between the rendezvous and abort branches.  An abort
branch within the remaining energy and time budget is carried in every
plan, which is what makes the loop persistently safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .behavior import (
    BehaviorDataset,
    BehaviorPosterior,
    BehaviorPrior,
    append,
    predict_position,
    regress,
)
from .config import ScenarioConfig
from .energy import EnergyParams, UasState, step
from .ocp import MissionPlan, OcpInputs, OcpResult, solve
from .path import BasisIntegralTable, BasisSpec, PathModel
from .risk import Decision, RiskReport, commit_check, evaluate_risk
from .sim import TelemetrySample, World


class Phase(Enum):
    GATHERING = "GATHERING"
    COMMITTED_RENDEZVOUS = "COMMITTED_RENDEZVOUS"
    COMMITTED_ABORT = "COMMITTED_ABORT"
    COMPLETED_SUCCESS = "COMPLETED_SUCCESS"
    COMPLETED_ABORTED = "COMPLETED_ABORTED"
    COMPLETED_MISS = "COMPLETED_MISS"
    FAILED_ENERGY = "FAILED_ENERGY"


TERMINAL_PHASES = {
    Phase.COMPLETED_SUCCESS,
    Phase.COMPLETED_ABORTED,
    Phase.COMPLETED_MISS,
    Phase.FAILED_ENERGY,
}


@dataclass(frozen=True)
class MissionContext:
    """Immutable per-run wiring shared by every tick."""

    path: PathModel
    table: BasisIntegralTable
    basis: BasisSpec
    prior: BehaviorPrior
    energy: EnergyParams
    config: ScenarioConfig

    @staticmethod
    def from_config(config: ScenarioConfig) -> "MissionContext":
        path = config.build_path()
        basis = config.build_basis()
        return MissionContext(
            path=path,
            table=BasisIntegralTable(path, basis),
            basis=basis,
            prior=BehaviorPrior.isotropic(
                basis.size, config.learner.prior_scale, config.regression_noise_var
            ),
            energy=config.build_energy_params(),
            config=config,
        )


@dataclass(frozen=True)
class MissionState:
    phase: Phase
    uas: UasState
    dataset: BehaviorDataset
    posterior: BehaviorPosterior | None = None
    plan: MissionPlan | None = None
    plan_t1_remaining: float = math.nan  # countdown when flying a stale plan
    risk: RiskReport | None = None
    decision_time: float = math.nan
    decision: Decision | None = None
    capture_error: float = math.nan
    no_plan_seconds: float = 0.0  # how long the solver has produced nothing

    @staticmethod
    def initial(config: ScenarioConfig) -> "MissionState":
        return MissionState(
            phase=Phase.GATHERING,
            uas=UasState(
                position=np.asarray(config.mission.start, float),
                energy=config.energy.initial_energy,
                t=0.0,
            ),
            dataset=BehaviorDataset.empty(),
        )


@dataclass(frozen=True)
class TickRecord:
    """What one tick produced, for trace logging and audits."""

    t: float
    phase: Phase
    uas: UasState
    plan: MissionPlan | None
    risk: RiskReport | None
    solver_status: str
    solve_seconds: float
    sample: TelemetrySample | None = None


def _ocp_inputs(state: MissionState, sample: TelemetrySample, ctx: MissionContext,
                posterior: BehaviorPosterior) -> OcpInputs:
    cfg = ctx.config
    return OcpInputs(
        x0=state.uas.position,
        e_r=state.uas.energy,
        t_now=state.uas.t,
        posterior=posterior,
        table=ctx.table,
        path=ctx.path,
        anchor=(sample.t, sample.theta_meas),
        s_l=np.asarray(cfg.mission.landing, float),
        s_a=np.asarray(cfg.mission.abort, float),
        t_max=cfg.mission.t_max,
        t_c=cfg.mission.t_c,
        speed_fraction=cfg.mission.speed_fraction,
        energy=ctx.energy,
        variance_weight=cfg.risk.variance_weight,
        approach_weight=cfg.risk.approach_weight,
        tol=cfg.solver.tol,
        max_iter=cfg.solver.max_iter,
        multistart=cfg.solver.multistart,
    )


def tick(
    state: MissionState, sample: TelemetrySample, ctx: MissionContext
) -> tuple[MissionState, TickRecord]:
    """One sense-learn-plan-act cycle during the gathering phase."""
    if state.phase is not Phase.GATHERING:
        raise ValueError(f"tick called in phase {state.phase}")
    cfg = ctx.config

    dataset = append(state.dataset, (sample.vel_meas, sample.vel_hist))
    posterior = regress(ctx.prior, dataset, ctx.basis)
    result = solve(_ocp_inputs(state, sample, ctx, posterior), warm_start=state.plan)

    if result.status == "optimal":
        plan = result.plan
        t1_remaining = plan.t1
    else:
        # keep the previous plan as the safety fallback; its decision window
        # keeps counting down on the wall clock
        plan = state.plan
        t1_remaining = (
            state.plan_t1_remaining - cfg.mission.t_s
            if plan is not None
            else math.nan
        )

    risk = None
    if plan is not None:
        prediction = predict_position(
            posterior, ctx.table, (sample.t, sample.theta_meas), plan.t_rendezvous
        )
        risk = evaluate_risk(
            plan,
            prediction,
            ctx.path,
            ctx.energy,
            cfg.risk.gamma_max,
            cfg.risk_budget(state.uas.energy),
        )

    # act: fly toward the PNR (the only segment active before the decision)
    if plan is not None:
        v = plan.velocities[0]
    else:
        v = np.zeros(2)  # no feasible plan yet: hover and keep gathering
    uas, depleted = step(state.uas, v, ctx.energy, cfg.mission.t_s)

    no_plan_seconds = 0.0 if plan is not None else (
        state.no_plan_seconds + cfg.mission.t_s
    )

    phase = Phase.GATHERING
    decision = state.decision
    decision_time = state.decision_time
    if depleted:
        phase = Phase.FAILED_ENERGY
    elif plan is None and no_plan_seconds >= cfg.mission.no_plan_patience:
        # no admissible rendezvous has existed for the whole patience window,
        # so take the branch that is feasible by construction and abort
        decision = Decision.ABORT
        phase = Phase.COMMITTED_ABORT
        decision_time = state.uas.t
    elif plan is not None and risk is not None:
        trigger = t1_remaining <= cfg.mission.epsilon
        if cfg.risk.abort_trigger_enabled and not trigger:
            # optional early-abort trigger on the downside potential
            trigger = (
                not math.isinf(risk.rho_downside)
                and risk.rho_downside > cfg.risk.abort_trigger_threshold
            ) or math.isinf(risk.rho_downside)
        if trigger:
            decision = commit_check(risk, cfg.risk_budget(state.uas.energy))
            phase = (
                Phase.COMMITTED_RENDEZVOUS
                if decision is Decision.PROCEED
                else Phase.COMMITTED_ABORT
            )
            decision_time = state.uas.t

    new_state = replace(
        state,
        phase=phase,
        uas=uas,
        dataset=dataset,
        posterior=posterior,
        plan=plan,
        plan_t1_remaining=t1_remaining,
        risk=risk,
        decision=decision,
        decision_time=decision_time,
        no_plan_seconds=no_plan_seconds,
    )
    record = TickRecord(
        t=state.uas.t,
        phase=phase,
        uas=state.uas,
        plan=plan,
        risk=risk,
        solver_status=result.status,
        solve_seconds=result.solve_seconds,
        sample=sample,
    )
    return new_state, record


def _fly_segment(
    uas: UasState,
    v: np.ndarray,
    duration: float,
    ctx: MissionContext,
    world: World,
    records: list[TickRecord],
    phase: Phase,
    aim=None,
) -> tuple[UasState, bool]:
    """Fly one segment in T_s steps (last step partial); optional re-aiming.

    ``aim`` is a callback (uas, remaining) -> velocity refreshed once per
    step; used for terminal guidance toward the moving rendezvous point.
    """
    cfg = ctx.config
    remaining = duration
    depleted = False
    while remaining > 1e-9 and not depleted:
        dt = min(cfg.mission.t_s, remaining)
        if aim is not None:
            v = aim(uas, remaining)
        speed = float(np.linalg.norm(v))
        if speed > ctx.energy.v_max:
            v = v * (ctx.energy.v_max / speed)
        uas, depleted = step(uas, v, ctx.energy, dt)
        world.advance(dt)
        remaining -= dt
        records.append(
            TickRecord(
                t=uas.t,
                phase=phase,
                uas=uas,
                plan=None,
                risk=None,
                solver_status="",
                solve_seconds=0.0,
            )
        )
    return uas, depleted


def execute_committed(
    state: MissionState, world: World, ctx: MissionContext
) -> tuple[MissionState, list[TickRecord]]:
    """Fly the committed branch to a terminal phase."""
    if state.phase not in (Phase.COMMITTED_RENDEZVOUS, Phase.COMMITTED_ABORT):
        raise ValueError(f"execute_committed called in phase {state.phase}")
    cfg = ctx.config
    plan = state.plan
    records: list[TickRecord] = []
    uas = state.uas
    phase = state.phase

    if plan is None:
        # abort committed without a plan ever existing: fly straight home
        s_a = np.asarray(cfg.mission.abort, float)
        dist = float(np.linalg.norm(s_a - uas.position))
        if dist > cfg.mission.capture_radius:
            v_plan = cfg.mission.speed_fraction * ctx.energy.v_max
            t4 = max(cfg.mission.t_c, dist / v_plan)
            v4 = (s_a - uas.position) / t4
            uas, depleted = _fly_segment(uas, v4, t4, ctx, world, records, phase)
            if depleted:
                return replace(state, phase=Phase.FAILED_ENERGY, uas=uas), records
        reached = (
            float(np.linalg.norm(uas.position - s_a)) <= cfg.mission.capture_radius
        )
        final = (
            Phase.COMPLETED_ABORTED
            if reached and uas.energy >= 0
            else Phase.FAILED_ENERGY
        )
        return replace(state, phase=final, uas=uas), records

    # remaining first leg: the gathering loop already flew part of it
    t1_left = max(0.0, plan.t_origin + plan.t1 - uas.t)
    if t1_left > 1e-9:
        v1 = (plan.waypoints[0] - uas.position) / t1_left
        uas, depleted = _fly_segment(uas, v1, t1_left, ctx, world, records, phase)
        if depleted:
            return replace(state, phase=Phase.FAILED_ENERGY, uas=uas), records

    if phase is Phase.COMMITTED_ABORT:
        t4 = plan.durations[3]
        v4 = (plan.waypoints[3] - uas.position) / t4
        uas, depleted = _fly_segment(uas, v4, t4, ctx, world, records, phase)
        if depleted:
            return replace(state, phase=Phase.FAILED_ENERGY, uas=uas), records
        reached = (
            float(np.linalg.norm(uas.position - plan.waypoints[3]))
            <= cfg.mission.capture_radius
        )
        final = Phase.COMPLETED_ABORTED if reached and uas.energy >= 0 else Phase.FAILED_ENERGY
        return replace(state, phase=final, uas=uas), records

    # rendezvous branch
    t2 = float(plan.durations[1])
    target = plan.waypoints[1]
    aim = None
    if cfg.mission.reaim:
        posterior = state.posterior

        def aim(u: UasState, remaining: float):
            # refresh the intercept point from the newest position fix
            theta_fix = world.measure_position()
            pred = predict_position(
                posterior, ctx.table, (u.t, theta_fix), min(plan.t_rendezvous, ctx.path.t_max_profile)
            )
            point = ctx.path.point_unchecked(ctx.path.clip_theta(pred.mean))
            return (point - u.position) / max(remaining, 1e-9)

    v2 = (target - uas.position) / t2
    uas, depleted = _fly_segment(uas, v2, t2, ctx, world, records, phase, aim=aim)
    if depleted:
        return replace(state, phase=Phase.FAILED_ENERGY, uas=uas), records

    capture_error = float(np.linalg.norm(uas.position - world.true_position()))
    captured = capture_error <= cfg.mission.capture_radius

    t3 = float(plan.durations[2])
    v3 = (plan.waypoints[2] - uas.position) / t3
    uas, depleted = _fly_segment(uas, v3, t3, ctx, world, records, phase)
    if depleted:
        return replace(state, phase=Phase.FAILED_ENERGY, uas=uas, capture_error=capture_error), records
    reached_landing = (
        float(np.linalg.norm(uas.position - plan.waypoints[2]))
        <= cfg.mission.capture_radius
    )
    if captured and reached_landing and uas.energy >= 0:
        final = Phase.COMPLETED_SUCCESS
    elif reached_landing and uas.energy >= 0:
        final = Phase.COMPLETED_MISS  # missed the car, still came home safely
    else:
        final = Phase.FAILED_ENERGY
    return replace(state, phase=final, uas=uas, capture_error=capture_error), records


def persistent_safety_audit(
    records: Sequence, t_max: float
) -> tuple[bool, int | None]:
    """Check every gathering step kept an executable abort branch.

    Accepts TickRecords or decoded trace-row dicts.  Returns (ok, index of
    the first violating record).
    """
    for i, rec in enumerate(records):
        if isinstance(rec, dict):
            phase = rec["phase"]
            if phase != Phase.GATHERING.value:
                continue
            e1, e4 = rec["e1"], rec["e4"]
            t1, t4 = rec["t1"], rec["t4"]
            e_r = rec["e_r"]
            if math.isnan(e1):
                continue  # no plan yet
        else:
            if rec.phase is not Phase.GATHERING or rec.plan is None:
                continue
            e1, e4 = rec.plan.energies[0], rec.plan.energies[3]
            t1, t4 = rec.plan.durations[0], rec.plan.durations[3]
            e_r = rec.uas.energy
        if e1 + e4 > e_r + 1e-6:
            return False, i
        if t1 + t4 > t_max + 1e-6:
            return False, i
    return True, None
