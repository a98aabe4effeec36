"""Mission controller loop, abort policies, and the safety audit."""

import math

import numpy as np
import pytest

from rdvsim.config import ScenarioConfig, config_from_dict
from rdvsim.mission import (
    MissionContext,
    MissionState,
    Phase,
    execute_committed,
    persistent_safety_audit,
    tick,
)
from rdvsim.risk import Decision
from rdvsim.runner import run_scenario
from rdvsim.sim import world_from_config


def _run_gathering(config, max_ticks=200):
    ctx = MissionContext.from_config(config)
    world = world_from_config(config)
    state = MissionState.initial(config)
    records = []
    for _ in range(max_ticks):
        if state.phase is not Phase.GATHERING:
            break
        sample = world.measure()
        state, rec = tick(state, sample, ctx)
        world.advance(config.mission.t_s)
        records.append(rec)
    return state, records, ctx, world


class TestTick:
    def test_rejects_non_gathering_state(self, default_config):
        ctx = MissionContext.from_config(default_config)
        world = world_from_config(default_config)
        state = MissionState.initial(default_config)
        sample = world.measure()
        state, _ = tick(state, sample, ctx)
        bad = type(state)(
            phase=Phase.COMPLETED_SUCCESS,
            uas=state.uas,
            dataset=state.dataset,
        )
        with pytest.raises(ValueError):
            tick(bad, sample, ctx)

    def test_dataset_and_posterior_grow(self, default_config):
        state, records, _, _ = _run_gathering(default_config, max_ticks=3)
        assert state.dataset.n == 3
        assert state.posterior is not None

    def test_commit_happens_inside_decision_window(self, default_config):
        state, records, _, _ = _run_gathering(default_config)
        assert state.phase in (Phase.COMMITTED_RENDEZVOUS, Phase.COMMITTED_ABORT)
        assert state.plan is not None
        # the trigger fires when the remaining first leg hits the floor
        assert state.plan_t1_remaining <= default_config.mission.epsilon + 1e-9
        assert state.decision is not None
        assert state.decision_time == pytest.approx(
            state.uas.t - default_config.mission.t_s
        )

    def test_hovers_until_a_plan_exists(self):
        # park the vehicle far away: every solve screens out as infeasible,
        # the vehicle holds position and eventually commits to the abort leg
        config = config_from_dict(
            {
                "mission": {
                    "start": [100000.0, 0.0],
                    "abort": [100000.0, 0.0],
                },
                "energy": {"initial_energy": 500000.0},
            }
        )
        state, records, ctx, world = _run_gathering(config, max_ticks=60)
        assert state.phase is Phase.COMMITTED_ABORT
        assert state.plan is None
        assert state.decision is Decision.ABORT
        np.testing.assert_allclose(
            state.uas.position, [100000.0, 0.0], atol=1e-9
        )
        # patience window: fixed number of plan-less seconds before giving up
        assert state.decision_time == pytest.approx(
            config.mission.no_plan_patience - config.mission.t_s
        )
        # a plan-less abort at the abort site completes immediately
        final, _ = execute_committed(state, world, ctx)
        assert final.phase is Phase.COMPLETED_ABORTED


class TestExecuteCommitted:
    def test_rejects_wrong_phase(self, default_config):
        ctx = MissionContext.from_config(default_config)
        world = world_from_config(default_config)
        state = MissionState.initial(default_config)
        with pytest.raises(ValueError):
            execute_committed(state, world, ctx)

    def test_rendezvous_branch_runs_to_terminal_phase(self, default_config):
        state, _, ctx, world = _run_gathering(default_config)
        assert state.phase is Phase.COMMITTED_RENDEZVOUS
        final, records = execute_committed(state, world, ctx)
        assert final.phase in (
            Phase.COMPLETED_SUCCESS,
            Phase.COMPLETED_MISS,
            Phase.FAILED_ENERGY,
        )
        assert math.isfinite(final.capture_error)
        assert records, "committed flight must produce step records"
        # timestamps advance monotonically during committed flight
        times = [r.t for r in records]
        assert all(b > a for a, b in zip(times, times[1:]))


class TestSafetyAudit:
    def _row(self, e1=10.0, e4=10.0, t1=10.0, t4=10.0, e_r=100.0, phase="GATHERING"):
        return {
            "phase": phase,
            "e1": e1,
            "e4": e4,
            "t1": t1,
            "t4": t4,
            "e_r": e_r,
        }

    def test_passes_when_abort_always_covered(self):
        ok, idx = persistent_safety_audit([self._row() for _ in range(5)], t_max=65.0)
        assert ok and idx is None

    def test_flags_energy_violation(self):
        rows = [self._row(), self._row(e1=80.0, e4=40.0, e_r=100.0), self._row()]
        ok, idx = persistent_safety_audit(rows, t_max=65.0)
        assert not ok and idx == 1

    def test_flags_time_violation(self):
        rows = [self._row(t1=40.0, t4=40.0)]
        ok, idx = persistent_safety_audit(rows, t_max=65.0)
        assert not ok and idx == 0

    def test_skips_planless_and_committed_rows(self):
        rows = [
            self._row(e1=math.nan),
            self._row(e1=1e9, phase="COMMITTED_RENDEZVOUS"),
        ]
        ok, _ = persistent_safety_audit(rows, t_max=65.0)
        assert ok


class TestEndToEnd:
    def test_low_risk_seed0_succeeds(self):
        from rdvsim.config import load_scenario

        trace = run_scenario(load_scenario("low_risk"), seed=0)
        s = trace.summary
        assert s["phase"] == "COMPLETED_SUCCESS"
        assert 10.0 <= s["decision_time"] <= 40.0
        assert s["persistently_safe"] is True
        assert s["final_energy"] > 0
        assert s["capture_error"] <= 5.0

    def test_high_risk_seed0_aborts(self):
        from rdvsim.config import load_scenario

        trace = run_scenario(load_scenario("high_risk"), seed=0)
        s = trace.summary
        assert s["phase"] == "COMPLETED_ABORTED"
        assert s["decision"] == "abort"
        assert s["persistently_safe"] is True

    def test_exact_model_is_clean(self):
        from rdvsim.config import load_scenario

        trace = run_scenario(load_scenario("exact_model"))
        s = trace.summary
        assert s["phase"] == "COMPLETED_SUCCESS"
        assert s["capture_error"] < 1.0
        assert s["persistently_safe"] is True
