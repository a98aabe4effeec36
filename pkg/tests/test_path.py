"""Path model, historical profile, and basis-integral table."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdvsim.errors import ConfigurationError, DomainError
from rdvsim.path import (
    BasisIntegralTable,
    BasisSpec,
    PathModel,
    diagonal_path,
    profile_end_time,
)


PATH = diagonal_path(mode="per-axis")
TABLE = BasisIntegralTable(PATH, BasisSpec(degree=1))


@pytest.fixture
def path():
    return PATH


@pytest.fixture
def table():
    return TABLE


class TestProfile:
    def test_default_profile_values(self, path):
        # speed 10(1 - t/200): 10 at t=0, 5 at t=100, 0 at t=200
        assert path.profile_unchecked(0.0) == pytest.approx(10.0)
        assert path.profile_unchecked(100.0) == pytest.approx(5.0)
        assert path.profile_unchecked(200.0) == pytest.approx(0.0)

    def test_profile_domain_end_is_first_root(self):
        assert profile_end_time((10.0, -0.05)) == pytest.approx(200.0)

    def test_negative_profile_rejected(self):
        with pytest.raises(ConfigurationError):
            PathModel(
                x_coeffs=(0.0, 1.0),
                y_coeffs=(0.0, 1.0),
                theta_min=0.0,
                theta_max=100.0,
                profile_coeffs=(-1.0,),
                t_min=0.0,
                t_max_profile=10.0,
            )


class TestGeometry:
    def test_per_axis_point(self, path):
        np.testing.assert_allclose(path.position_at(250.0), [250.0, 250.0])

    def test_arc_length_point(self):
        p = diagonal_path(mode="arc-length")
        r = p.position_at(100.0)
        # unit-speed: |r| equals the progress coordinate
        assert np.linalg.norm(r) == pytest.approx(100.0)

    def test_out_of_domain_position_rejected(self, path):
        with pytest.raises(DomainError):
            path.position_at(path.theta_max + 1.0)

    def test_clip_theta(self, path):
        assert path.clip_theta(-5.0) == path.theta_min
        assert path.clip_theta(path.theta_max + 5.0) == path.theta_max

    def test_tangent_matches_finite_difference(self, path):
        h = 1e-6
        fd = (path.point_unchecked(300.0 + h) - path.point_unchecked(300.0 - h)) / (
            2 * h
        )
        np.testing.assert_allclose(path.tangent(300.0), fd, rtol=1e-6)


class TestBasisIntegrals:
    def test_linear_basis_over_default_profile(self, table):
        # integral of [1, speed] over [0, 20]: [20, 10*20 - 20^2/40] = [20, 190]
        np.testing.assert_allclose(table.psi(0.0, 20.0), [20.0, 190.0], atol=1e-9)

    def test_zero_interval(self, table):
        np.testing.assert_allclose(table.psi(15.0, 15.0), [0.0, 0.0], atol=1e-12)

    def test_closed_form_matches_quadrature(self, path):
        basis = BasisSpec(degree=3)
        exact = BasisIntegralTable(path, basis)
        quad = BasisIntegralTable(path, basis, method="quadrature")
        for t0, tf in [(0.0, 20.0), (5.0, 80.0), (100.0, 150.0)]:
            np.testing.assert_allclose(
                exact.psi(t0, tf), quad.psi(t0, tf), rtol=1e-8, atol=1e-8
            )

    def test_dpsi_is_basis_at_endpoint(self, path, table):
        h = 1e-6
        tf = 40.0
        fd = (table.psi(0.0, tf + h) - table.psi(0.0, tf - h)) / (2 * h)
        np.testing.assert_allclose(table.dpsi_dtf(tf), fd, rtol=1e-6)

    def test_psi_many_matches_scalar(self, table):
        ends = np.array([10.0, 25.0, 60.0])
        many = table.psi_many(0.0, ends)
        for j, tf in enumerate(ends):
            np.testing.assert_allclose(many[:, j], table.psi(0.0, tf), atol=1e-10)

    def test_reversed_interval_rejected(self, table):
        with pytest.raises(DomainError):
            table.psi(20.0, 10.0)

    @settings(max_examples=50, deadline=None)
    @given(
        t0=st.floats(0.0, 180.0),
        d1=st.floats(0.0, 10.0),
        d2=st.floats(0.0, 10.0),
    )
    def test_interval_additivity(self, t0, d1, d2):
        mid, end = t0 + d1, t0 + d1 + d2
        if end > 200.0:
            return
        whole = TABLE.psi(t0, end)
        split = TABLE.psi(t0, mid) + TABLE.psi(mid, end)
        np.testing.assert_allclose(whole, split, atol=1e-8)


class TestBasisSpec:
    def test_feature_shape_scalar(self):
        np.testing.assert_allclose(BasisSpec(degree=2).features(3.0), [1.0, 3.0, 9.0])

    def test_feature_shape_vector(self):
        out = BasisSpec(degree=1).features(np.array([1.0, 2.0, 4.0]))
        assert out.shape == (2, 3)
        np.testing.assert_allclose(out[1], [1.0, 2.0, 4.0])
