"""Shared fixtures: a feasible planning snapshot built from the defaults."""

import numpy as np
import pytest

from rdvsim.behavior import BehaviorPosterior
from rdvsim.config import ScenarioConfig
from rdvsim.ocp import OcpInputs
from rdvsim.path import BasisIntegralTable


@pytest.fixture
def default_config():
    return ScenarioConfig()


@pytest.fixture
def context(default_config):
    path = default_config.build_path()
    basis = default_config.build_basis()
    return default_config, path, basis, BasisIntegralTable(path, basis)


@pytest.fixture
def tight_posterior():
    """Near-certain belief that the driver tracks 1.1x the historical speed."""
    cov = 1e-6 * np.eye(2)
    return BehaviorPosterior(
        mu_w=np.array([0.0, 1.1]), cov_w=cov, precision=np.linalg.inv(cov)
    )


@pytest.fixture
def feasible_inputs(context, tight_posterior):
    config, path, _, table = context
    return OcpInputs(
        x0=np.array([500.0, 0.0]),
        e_r=config.energy.initial_energy,
        t_now=0.0,
        posterior=tight_posterior,
        table=table,
        path=path,
        anchor=(0.0, 0.0),
        s_l=np.array([500.0, 0.0]),
        s_a=np.array([500.0, 0.0]),
        t_max=config.mission.t_max,
        t_c=config.mission.t_c,
        energy=config.build_energy_params(),
        variance_weight=config.risk.variance_weight,
        approach_weight=config.risk.approach_weight,
        speed_fraction=config.mission.speed_fraction,
    )
