"""Online Bayesian regression of driver behavior.

The driver's measured speed is modeled as a linear combination of basis
functions of the historical speed, with Gaussian weight prior and Gaussian
measurement noise.  The conjugate posterior is available in closed form and
its mean/covariance propagate analytically to a distribution over the
driver's future progress along the road, via the precomputed basis
integrals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array

from .errors import ConfigurationError, DataError, DomainError
from .path import BasisIntegralTable, BasisSpec


@dataclass(frozen=True)
class BehaviorDataset:
    """Paired driver / historical speed measurements."""

    driver: np.ndarray
    historical: np.ndarray

    def __post_init__(self) -> None:
        d = np.atleast_1d(np.asarray(self.driver, dtype=float))
        h = np.atleast_1d(np.asarray(self.historical, dtype=float))
        if d.shape != h.shape or d.ndim != 1:
            raise DataError("driver and historical series must be equal-length vectors")
        for name, arr in (("driver", d), ("historical", h)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise DataError(f"non-finite {name} value at index {bad[0]}")
        object.__setattr__(self, "driver", d)
        object.__setattr__(self, "historical", h)

    @property
    def n(self) -> int:
        return int(self.driver.size)

    @staticmethod
    def empty() -> "BehaviorDataset":
        return BehaviorDataset(np.empty(0), np.empty(0))


def append(data: BehaviorDataset, sample: tuple[float, float]) -> BehaviorDataset:
    """New dataset with one (driver speed, historical speed) pair added."""
    d, h = sample
    if not (np.isfinite(d) and np.isfinite(h)):
        raise DataError(f"non-finite sample {sample!r}")
    return BehaviorDataset(
        np.append(data.driver, float(d)), np.append(data.historical, float(h))
    )


@dataclass(frozen=True)
class BehaviorPrior:
    """Zero-mean Gaussian prior on the basis weights plus noise variance."""

    weight_cov: np.ndarray
    noise_var: float

    def __post_init__(self) -> None:
        cov = np.asarray(self.weight_cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ConfigurationError("prior covariance must be square")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ConfigurationError("prior covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError("prior covariance is not positive definite") from exc
        if not self.noise_var > 0:
            raise ConfigurationError("noise variance must be positive")
        object.__setattr__(self, "weight_cov", cov)

    @staticmethod
    def isotropic(m: int, scale: float, noise_var: float) -> "BehaviorPrior":
        return BehaviorPrior(scale * np.eye(m), noise_var)


@dataclass(frozen=True)
class BehaviorPosterior:
    """Gaussian posterior over weights; precision kept for variance formulas."""

    mu_w: np.ndarray
    cov_w: np.ndarray
    precision: np.ndarray

    @property
    def m(self) -> int:
        return int(self.mu_w.size)


@dataclass(frozen=True)
class PositionPrediction:
    """Mean/variance of the driver's road progress at a future time."""

    mean: float
    variance: float
    anchor_time: float
    anchor_position: float
    t_f: float


def regress(
    prior: BehaviorPrior, data: BehaviorDataset, basis: BasisSpec
) -> BehaviorPosterior:
    """Exact conjugate posterior of the weights given the dataset.

    Solved by Cholesky factorization of the precision matrix rather than
    explicit inversion.  With no data the posterior equals the prior.
    """
    m = basis.size
    if prior.weight_cov.shape[0] != m:
        raise ConfigurationError(
            f"prior covariance is {prior.weight_cov.shape[0]}x"
            f"{prior.weight_cov.shape[0]} but basis has {m} functions"
        )
    prior_precision = np.linalg.inv(prior.weight_cov)
    if data.n == 0:
        return BehaviorPosterior(
            mu_w=np.zeros(m),
            cov_w=prior.weight_cov.copy(),
            precision=prior_precision,
        )
    phi = basis.features(data.historical)  # (m, N)
    precision = phi @ phi.T / prior.noise_var + prior_precision
    precision = 0.5 * (precision + precision.T)
    factor = cho_factor(precision)
    mu_w = cho_solve(factor, phi @ data.driver) / prior.noise_var
    cov_w = cho_solve(factor, np.eye(m))
    cov_w = 0.5 * (cov_w + cov_w.T)
    return BehaviorPosterior(mu_w=mu_w, cov_w=cov_w, precision=precision)


def predict_position(
    post: BehaviorPosterior,
    table: BasisIntegralTable,
    anchor: tuple[float, float],
    t_f: float,
) -> PositionPrediction:
    """Distribution of road progress at ``t_f`` given an anchored position.

    The mean integrates the posterior-mean speed map along the historical
    profile from the anchor time; the variance is the quadratic form of the
    same integral vector in the posterior covariance.
    """
    t_0, theta_0 = anchor
    if t_f < t_0:
        raise DomainError(f"t_f={t_f} precedes anchor time {t_0}")
    psi = table.psi(t_0, t_f)
    mean = theta_0 + float(post.mu_w @ psi)
    variance = float(psi @ post.cov_w @ psi)
    return PositionPrediction(
        mean=mean,
        variance=max(variance, 0.0),
        anchor_time=t_0,
        anchor_position=theta_0,
        t_f=t_f,
    )


class DriverBehaviorModel(BaseEstimator, RegressorMixin):
    """Estimator wrapper around the conjugate regression.

    Follows the fit/predict convention: ``fit(H, D)`` consumes historical
    speeds as the feature column and driver speeds as the target, after
    which ``predict`` maps historical speeds to expected driver speeds.
    """

    def __init__(
        self,
        basis_degree: int = 1,
        prior_scale: float = 1.0,
        noise_var: float = 1.0,
    ) -> None:
        self.basis_degree = basis_degree
        self.prior_scale = prior_scale
        self.noise_var = noise_var

    def fit(self, X, y):
        X = check_array(X, ensure_2d=True)
        y = np.asarray(y, dtype=float)
        if X.shape[1] != 1:
            raise DataError("expected a single historical-speed feature column")
        basis = BasisSpec(self.basis_degree)
        prior = BehaviorPrior.isotropic(basis.size, self.prior_scale, self.noise_var)
        data = BehaviorDataset(y, X[:, 0])
        post = regress(prior, data, basis)
        self.basis_ = basis
        self.posterior_ = post
        self.mu_w_ = post.mu_w
        self.cov_w_ = post.cov_w
        return self

    def predict(self, X, return_std: bool = False):
        X = check_array(X, ensure_2d=True)
        phi = self.basis_.features(X[:, 0])  # (m, N)
        mean = phi.T @ self.mu_w_
        if not return_std:
            return mean
        var = np.einsum("mn,mk,kn->n", phi, self.cov_w_, phi)
        return mean, np.sqrt(np.maximum(var, 0.0))

    def predict_position(
        self, table: BasisIntegralTable, anchor: tuple[float, float], t_f: float
    ) -> PositionPrediction:
        return predict_position(self.posterior_, table, anchor, t_f)
