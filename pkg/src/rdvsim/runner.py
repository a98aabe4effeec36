"""End-to-end scenario execution: world + controller + trace assembly."""

from __future__ import annotations

import math
import statistics
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .mission import (
    Phase,
    MissionContext,
    MissionState,
    TickRecord,
    execute_committed,
    persistent_safety_audit,
    tick,
)
from .risk import Decision
from .sim import World, world_from_config
from .trace import RunTrace, TelemetryRow


def _row_from_record(rec: TickRecord, world_truth: float, path) -> TelemetryRow:
    plan = rec.plan
    risk = rec.risk
    driver_point = path.point_unchecked(path.clip_theta(world_truth))
    dist = float(np.linalg.norm(rec.uas.position - driver_point))
    row = TelemetryRow(
        t=rec.t,
        phase=rec.phase.value,
        uas_x=float(rec.uas.position[0]),
        uas_y=float(rec.uas.position[1]),
        e_r=rec.uas.energy,
        theta_true=world_truth,
        dist_uas_driver=dist,
        solver_status=rec.solver_status,
    )
    if rec.sample is not None:
        row.theta_meas = rec.sample.theta_meas
        row.vel_meas = rec.sample.vel_meas
        row.vel_hist = rec.sample.vel_hist
    if plan is not None:
        row.t1, row.t2, row.t3, row.t4 = (float(v) for v in plan.durations)
        row.e1, row.e2, row.e3, row.e4 = (float(v) for v in plan.energies)
        row.t_rdv = plan.t_rendezvous
    if risk is not None:
        row.rho = risk.rho_downside
        row.rho_r = risk.rho_r
    return row


def run_scenario(config: ScenarioConfig, seed: int | None = None) -> RunTrace:
    """Run one mission to a terminal phase; deterministic per (config, seed)."""
    used_seed = config.run.seed if seed is None else seed
    ctx = MissionContext.from_config(config)
    world = world_from_config(config, seed=used_seed)
    state = MissionState.initial(config)

    header = {
        "seed": used_seed,
        "version": __version__,
        "config": config.to_dict(),
    }
    trace = RunTrace(header=header)
    records: list[TickRecord] = []
    solve_times: list[float] = []

    while state.phase is Phase.GATHERING:
        if (
            state.uas.t >= config.run.max_duration
            or world.clock > world.path.t_max_profile - config.mission.t_s
        ):
            state = _forced_decision(state, config)
            break
        sample = world.measure()
        theta_truth = world.driver.theta
        state, rec = tick(state, sample, ctx)
        world.advance(config.mission.t_s)
        records.append(rec)
        solve_times.append(rec.solve_seconds)
        trace.rows.append(_row_from_record(rec, theta_truth, world.path))

    if state.phase in (Phase.COMMITTED_RENDEZVOUS, Phase.COMMITTED_ABORT):
        committed_phase = state.phase
        state, exec_records = execute_committed(state, world, ctx)
        for rec in exec_records:
            records.append(rec)
            trace.rows.append(_row_from_record(rec, world.driver.theta, world.path))
    else:
        committed_phase = state.phase

    ok, violation = persistent_safety_audit(records, config.mission.t_max)
    trace.summary = {
        "phase": state.phase.value,
        "committed_phase": committed_phase.value,
        "decision_time": _round_or_none(state.decision_time, 3),
        "decision": state.decision.value if state.decision else None,
        "final_energy": round(state.uas.energy, 3),
        "final_t": round(state.uas.t, 3),
        "capture_error": _round_or_none(state.capture_error, 3),
        "rho_at_decision": _round_or_none(
            state.risk.rho_downside if state.risk else math.nan, 3
        ),
        "persistently_safe": ok,
        "safety_violation_index": violation,
        "ticks": len(trace.rows),
    }
    # wall-clock timings stay out of the deterministic trace/summary payloads
    trace.timings = {
        "solve_seconds": solve_times,
        "median_solve_ms": (
            round(1e3 * statistics.median(solve_times), 3) if solve_times else None
        ),
    }
    return trace


def _round_or_none(value: float, places: int):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return round(value, places)


def _forced_decision(state: MissionState, config: ScenarioConfig) -> MissionState:
    """Clock or profile ran out before the window closed: commit now.

    With a stored plan the normal risk check applies; with no plan ever
    found the only safe move is the abort branch flown directly.
    """
    from .risk import commit_check

    if state.plan is not None and state.risk is not None:
        decision = commit_check(state.risk, config.risk_budget(state.uas.energy))
        phase = (
            Phase.COMMITTED_RENDEZVOUS
            if decision is Decision.PROCEED
            else Phase.COMMITTED_ABORT
        )
        return replace(
            state,
            phase=phase,
            decision=decision,
            decision_time=state.uas.t,
        )
    # no feasible plan was ever found: the vehicle has been hovering at its
    # start; count it as aborted only if it already sits at the abort site
    at_abort = (
        float(np.linalg.norm(state.uas.position - np.asarray(config.mission.abort, float)))
        <= config.mission.capture_radius
    )
    phase = Phase.COMPLETED_ABORTED if at_abort else Phase.FAILED_ENERGY
    return replace(state, phase=phase, decision_time=state.uas.t)


def run_batch(
    config: ScenarioConfig, seeds: list[int]
) -> dict[int, RunTrace]:
    """Independent runs across seeds; order-independent results."""
    return {seed: run_scenario(config, seed=seed) for seed in seeds}
