"""Commit-gate risk measures: downside energy potential and variance."""

import math

import numpy as np
import pytest

from rdvsim.behavior import PositionPrediction
from rdvsim.energy import EnergyParams, min_energy_to_reach
from rdvsim.errors import InputError
from rdvsim.ocp import MissionPlan, velocities_from_waypoints
from rdvsim.path import diagonal_path
from rdvsim.risk import (
    Decision,
    commit_check,
    downside_potential,
    evaluate_risk,
    rendezvous_variance,
)

PARAMS = EnergyParams(mass=4.0, hover_rate=5.0, v_max=20.0)
PATH = diagonal_path(mode="arc-length")


def make_plan(theta_r: float, durations=(10.0, 15.0, 20.0, 10.0)) -> MissionPlan:
    """Plan whose rendezvous waypoint sits on the road at ``theta_r``.

    Leg energies use the same minimum-energy expression the risk measure
    replans with, so a zero-width confidence interval replans to exactly
    the nominal cost.
    """
    origin = np.array([500.0, 0.0])
    s_l = np.array([500.0, 0.0])
    r = PATH.point_unchecked(theta_r)
    x1 = origin + 0.4 * (r - origin)
    waypoints = np.vstack([x1, r, s_l, s_l])
    durations = np.asarray(durations, float)
    velocities = velocities_from_waypoints(origin, waypoints, durations)
    prev = np.vstack([origin, x1, r, x1])
    energies = np.array(
        [
            min_energy_to_reach(prev[i], waypoints[i], durations[i], PARAMS)
            for i in range(4)
        ]
    )
    return MissionPlan(
        origin=origin,
        t_origin=0.0,
        waypoints=waypoints,
        velocities=velocities,
        durations=durations,
        energies=energies,
        t_rendezvous=durations[0] + durations[1],
        predicted_theta=theta_r,
    )


def prediction(mean: float, variance: float, t_f: float = 25.0) -> PositionPrediction:
    return PositionPrediction(
        mean=mean, variance=variance, anchor_time=0.0, anchor_position=0.0, t_f=t_f
    )


class TestDownsidePotential:
    def test_zero_variance_has_zero_downside(self):
        plan = make_plan(300.0)
        rho = downside_potential(plan, prediction(300.0, 0.0), PATH, PARAMS, 2.0)
        assert rho == pytest.approx(0.0, abs=1e-9)

    def test_monotone_in_variance(self):
        plan = make_plan(300.0)
        rhos = [
            downside_potential(plan, prediction(300.0, var), PATH, PARAMS, 2.0)
            for var in (10.0, 40.0, 160.0)
        ]
        assert all(math.isfinite(r) for r in rhos)
        assert rhos[0] <= rhos[1] <= rhos[2]

    def test_infinite_when_endpoint_unreachable(self):
        # a one-second approach leg cannot absorb a 60 m confidence shift
        plan = make_plan(300.0, durations=(10.0, 1.0, 20.0, 10.0))
        rho = downside_potential(plan, prediction(300.0, 900.0), PATH, PARAMS, 2.0)
        assert math.isinf(rho)

    def test_endpoints_clip_to_road(self):
        plan = make_plan(PATH.theta_max - 1.0, durations=(10.0, 30.0, 60.0, 10.0))
        report = evaluate_risk(
            plan,
            prediction(PATH.theta_max - 1.0, 1.0e6),
            PATH,
            PARAMS,
            2.0,
            math.inf,
        )
        for ev in report.endpoints:
            assert PATH.theta_min <= ev.theta <= PATH.theta_max

    def test_worst_endpoint_is_reported(self):
        plan = make_plan(300.0)
        report = evaluate_risk(plan, prediction(300.0, 100.0), PATH, PARAMS, 2.0, 500.0)
        assert report.rho_downside == pytest.approx(
            max(ev.extra_energy for ev in report.endpoints)
        )

    def test_extra_energy_floored_at_zero(self):
        plan = make_plan(300.0)
        report = evaluate_risk(plan, prediction(300.0, 25.0), PATH, PARAMS, 2.0, 1e9)
        assert all(ev.extra_energy >= 0.0 for ev in report.endpoints)

    def test_rejects_degenerate_segment_times(self):
        plan = make_plan(300.0)
        bad = MissionPlan(
            origin=plan.origin,
            t_origin=0.0,
            waypoints=plan.waypoints,
            velocities=plan.velocities,
            durations=np.array([10.0, 0.0, 20.0, 10.0]),
            energies=plan.energies,
            t_rendezvous=plan.t_rendezvous,
        )
        with pytest.raises(InputError):
            evaluate_risk(bad, prediction(300.0, 1.0), PATH, PARAMS, 2.0, 100.0)


class TestCommitCheck:
    def _report(self, rho: float):
        plan = make_plan(300.0)
        report = evaluate_risk(plan, prediction(300.0, 0.0), PATH, PARAMS, 2.0, 100.0)
        # rebuild with a forced downside value to test the gate in isolation
        return type(report)(
            rho_r=report.rho_r,
            rho_downside=rho,
            endpoints=report.endpoints,
            threshold_check=rho <= 100.0,
            e_risk_max=100.0,
        )

    def test_within_budget_proceeds(self):
        assert commit_check(self._report(99.0), 100.0) is Decision.PROCEED

    def test_threshold_is_inclusive(self):
        assert commit_check(self._report(100.0), 100.0) is Decision.PROCEED

    def test_over_budget_aborts(self):
        assert commit_check(self._report(100.0 + 1e-9), 100.0) is Decision.ABORT

    def test_infeasible_downside_aborts(self):
        assert commit_check(self._report(math.inf), 100.0) is Decision.ABORT

    def test_report_threshold_matches_gate(self):
        plan = make_plan(300.0)
        for var in (0.0, 50.0, 500.0):
            report = evaluate_risk(
                plan, prediction(300.0, var), PATH, PARAMS, 2.0, 200.0
            )
            gate = commit_check(report, 200.0)
            assert report.threshold_check == (gate is Decision.PROCEED)


class TestVarianceMeasure:
    def test_passthrough(self):
        assert rendezvous_variance(prediction(10.0, 7.25)) == 7.25
