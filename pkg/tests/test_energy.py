"""Energy law and exact single-step kinematics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdvsim.energy import (
    EnergyParams,
    UasState,
    drain_rate,
    min_energy_to_reach,
    segment_energy,
    step,
)
from rdvsim.errors import InputError


PARAMS = EnergyParams(mass=4.0, hover_rate=5.0, v_max=20.0)


@pytest.fixture
def params():
    return PARAMS


class TestDrainRate:
    def test_hover_only(self, params):
        assert drain_rate(0.0, params) == pytest.approx(20.0)

    def test_kinetic_term(self, params):
        # 4 * 10^2 / 2 + 5 * 4 = 220
        assert drain_rate(10.0, params) == pytest.approx(220.0)

    def test_rejects_bad_params(self):
        with pytest.raises(InputError):
            EnergyParams(mass=0.0, hover_rate=5.0, v_max=20.0)


class TestStep:
    def test_exact_update(self, params):
        s0 = UasState(position=[1.0, 2.0], energy=1000.0, t=3.0)
        s1, depleted = step(s0, np.array([3.0, 4.0]), params, t_s=2.0)
        np.testing.assert_allclose(s1.position, [7.0, 10.0])
        assert s1.t == pytest.approx(5.0)
        # speed 5: drain 4*25/2 + 20 = 70 J/s for 2 s
        assert s1.energy == pytest.approx(1000.0 - 140.0)
        assert not depleted

    def test_depletion_clamps_to_zero(self, params):
        s0 = UasState(position=[0.0, 0.0], energy=10.0, t=0.0)
        s1, depleted = step(s0, np.array([0.0, 0.0]), params, t_s=1.0)
        assert depleted
        assert s1.energy == 0.0

    def test_overspeed_rejected(self, params):
        s0 = UasState(position=[0.0, 0.0], energy=1000.0, t=0.0)
        with pytest.raises(InputError):
            step(s0, np.array([20.0, 20.0]), params, t_s=1.0)

    def test_nonpositive_interval_rejected(self, params):
        s0 = UasState(position=[0.0, 0.0], energy=1000.0, t=0.0)
        with pytest.raises(InputError):
            step(s0, np.zeros(2), params, t_s=0.0)

    @settings(max_examples=50, deadline=None)
    @given(
        vx=st.floats(-10.0, 10.0),
        vy=st.floats(-10.0, 10.0),
        n=st.integers(1, 10),
    )
    def test_many_steps_match_one_segment(self, vx, vy, n):
        v = np.array([vx, vy])
        s = UasState(position=[0.0, 0.0], energy=1e6, t=0.0)
        for _ in range(n):
            s, _ = step(s, v, PARAMS, t_s=0.5)
        spent = 1e6 - s.energy
        assert spent == pytest.approx(segment_energy(v, 0.5 * n, PARAMS), rel=1e-10)
        np.testing.assert_allclose(s.position, v * 0.5 * n, atol=1e-9)


class TestSegmentEnergy:
    def test_zero_duration(self, params):
        assert segment_energy(np.array([3.0, 4.0]), 0.0, params) == 0.0

    def test_negative_duration_rejected(self, params):
        with pytest.raises(InputError):
            segment_energy(np.zeros(2), -1.0, params)


class TestMinEnergyToReach:
    def test_straight_line_value(self, params):
        # 30 m in 10 s: speed 3, drain 4*9/2 + 20 = 38 J/s
        e = min_energy_to_reach([0.0, 0.0], [30.0, 0.0], 10.0, params)
        assert e == pytest.approx(380.0)

    def test_unreachable_is_inf(self, params):
        assert math.isinf(
            min_energy_to_reach([0.0, 0.0], [300.0, 0.0], 10.0, params)
        )

    def test_nonpositive_time_rejected(self, params):
        with pytest.raises(InputError):
            min_energy_to_reach([0.0, 0.0], [1.0, 0.0], 0.0, params)

    @settings(max_examples=50, deadline=None)
    @given(
        dist=st.floats(1.0, 100.0),
        t=st.floats(1.0, 30.0),
        frac=st.floats(0.1, 0.9),
    )
    def test_constant_speed_beats_any_split(self, dist, t, frac):
        # flying the two halves at different speeds never costs less
        # (the drain is convex in speed)
        direct = min_energy_to_reach([0.0, 0.0], [dist, 0.0], t, PARAMS)
        mid = [frac * dist, 0.0]
        split = min_energy_to_reach([0.0, 0.0], mid, t / 2, PARAMS) + min_energy_to_reach(
            mid, [dist, 0.0], t / 2, PARAMS
        )
        if math.isinf(direct):
            return
        assert direct <= split + 1e-9
