"""Acceptance matrix: each criterion must hold on a clean checkout.

These call the same criterion functions as ``rdvsim accept``; heavy
scenario batches are cached inside the acceptance module, so the
end-to-end criteria share their runs.
"""

from rdvsim import acceptance


def _check(result):
    assert result.passed, f"{result.name}: {result.detail}"


def test_scenario_reproduction():
    _check(acceptance.criterion_scenarios())


def test_solver_speed():
    _check(acceptance.criterion_solver_speed())


def test_posterior_exactness():
    _check(acceptance.criterion_posterior_exactness())


def test_prediction_exactness():
    _check(acceptance.criterion_prediction_exactness())


def test_gradient_check():
    _check(acceptance.criterion_gradients())


def test_oracle_dominance():
    _check(acceptance.criterion_oracle_dominance())


def test_persistent_safety():
    _check(acceptance.criterion_persistent_safety())


def test_risk_properties():
    _check(acceptance.criterion_risk_properties())


def test_determinism():
    _check(acceptance.criterion_determinism())
