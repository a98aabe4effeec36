"""Road geometry, historical velocity profile, and basis integrals.

The ground vehicle moves along a known planar path parameterized by a scalar
progress variable ``theta``.  Traffic history provides a prototypical speed
profile over mission time.  Position prediction needs time integrals of the
velocity basis functions evaluated along that profile; for polynomial bases
composed with polynomial profiles these integrals have exact closed forms,
which are precomputed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from .errors import ConfigurationError, DomainError

_SQRT2 = float(np.sqrt(2.0))


def _as_poly(coeffs: Sequence[float]) -> Polynomial:
    return Polynomial(np.asarray(coeffs, dtype=float))


@dataclass(frozen=True)
class PathModel:
    """Planar road with polynomial coordinates and a speed-history profile.

    ``x_coeffs``/``y_coeffs`` give each Euclidean coordinate as a polynomial
    in the progress variable theta.  ``profile_coeffs`` gives the historical
    speed as a polynomial in mission time.  Both are immutable after
    construction and safe to share between threads.
    """

    x_coeffs: tuple[float, ...]
    y_coeffs: tuple[float, ...]
    theta_min: float
    theta_max: float
    profile_coeffs: tuple[float, ...]
    t_min: float
    t_max_profile: float
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.theta_max > self.theta_min:
            raise ConfigurationError("path theta domain is empty")
        if not self.t_max_profile > self.t_min:
            raise ConfigurationError("profile time domain is empty")
        grid = np.linspace(self.t_min, self.t_max_profile, 1001)
        if np.min(self._profile_poly()(grid)) < -1e-9:
            raise ConfigurationError(
                "historical velocity profile is negative inside its domain"
            )

    def _x_poly(self) -> Polynomial:
        return _as_poly(self.x_coeffs)

    def _y_poly(self) -> Polynomial:
        return _as_poly(self.y_coeffs)

    def _profile_poly(self) -> Polynomial:
        return _as_poly(self.profile_coeffs)

    # -- positions ---------------------------------------------------------

    def position_at(self, theta: float) -> np.ndarray:
        """Euclidean point of the road at progress ``theta`` (domain checked)."""
        if not self.theta_min - 1e-9 <= theta <= self.theta_max + 1e-9:
            raise DomainError(
                f"theta={theta} outside path domain "
                f"[{self.theta_min}, {self.theta_max}]"
            )
        return self.point_unchecked(theta)

    def point_unchecked(self, theta):
        """Polynomial evaluation without the domain check.

        Solvers may probe slightly outside the domain during line searches;
        the domain is enforced by an explicit constraint instead.
        """
        return np.stack(
            [self._x_poly()(theta), self._y_poly()(theta)], axis=-1
        )

    def tangent(self, theta):
        """d(point)/d(theta), used for analytic constraint gradients."""
        return np.stack(
            [self._x_poly().deriv()(theta), self._y_poly().deriv()(theta)],
            axis=-1,
        )

    def clip_theta(self, theta: float) -> float:
        return float(min(max(theta, self.theta_min), self.theta_max))

    # -- historical velocity -----------------------------------------------

    def historical_velocity_at(self, t: float) -> float:
        """Prototypical road speed at mission time ``t`` (domain checked)."""
        if not self.t_min - 1e-9 <= t <= self.t_max_profile + 1e-9:
            raise DomainError(
                f"t={t} outside profile domain "
                f"[{self.t_min}, {self.t_max_profile}]"
            )
        return float(self._profile_poly()(t))

    def profile_unchecked(self, t):
        return self._profile_poly()(t)


def diagonal_path(
    mode: str = "per-axis",
    length: float = 1000.0,
    profile_coeffs: Sequence[float] = (10.0, -0.05),
    t_max_profile: float | None = None,
) -> PathModel:
    """Straight diagonal road from the origin.

    ``per-axis`` keeps theta as the per-coordinate offset, so the road
    runs from (0,0) to (length,length) and theta is NOT arc length.
    ``arc-length`` rescales so theta measures meters traveled along the road.
    """
    if mode == "per-axis":
        slope = 1.0
        theta_max = length
    elif mode == "arc-length":
        slope = 1.0 / _SQRT2
        theta_max = length * _SQRT2
    else:
        raise ConfigurationError(f"unknown diagonal path mode {mode!r}")
    t_end = (
        profile_end_time(profile_coeffs) if t_max_profile is None else t_max_profile
    )
    return PathModel(
        x_coeffs=(0.0, slope),
        y_coeffs=(0.0, slope),
        theta_min=0.0,
        theta_max=theta_max,
        profile_coeffs=tuple(float(c) for c in profile_coeffs),
        t_min=0.0,
        t_max_profile=t_end,
        name=f"diagonal/{mode}",
    )


def profile_end_time(profile_coeffs: Sequence[float]) -> float:
    """First positive root of the profile polynomial.

    The profile domain ends where history says traffic stops; queries past
    that point are treated as errors rather than clamped.
    """
    poly = _as_poly(profile_coeffs)
    roots = poly.roots()
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 1e-9]
    if not real:
        raise ConfigurationError(
            "profile never reaches zero; pass an explicit t_max_profile"
        )
    return float(min(real))


@dataclass(frozen=True)
class BasisSpec:
    """Monomial velocity basis [1, v, v^2, ..., v^degree]."""

    degree: int = 1

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ConfigurationError("basis degree must be >= 0")

    @property
    def size(self) -> int:
        return self.degree + 1

    def features(self, v):
        """Feature vector(s) for velocity ``v``; shape (m,) or (m, K)."""
        v = np.asarray(v, dtype=float)
        return np.stack([v**k for k in range(self.size)], axis=0)


class BasisIntegralTable:
    """Closed-form integrals of basis features along the historical profile.

    Entry k of ``psi(t0, tf)`` is the integral over [t0, tf] of the k-th
    basis function evaluated at the profile speed.  For the polynomial
    profile case the antiderivatives are computed once at construction;
    an adaptive quadrature fallback covers arbitrary callable profiles.
    """

    def __init__(
        self,
        path: PathModel,
        basis: BasisSpec,
        profile_fn: Callable[[float], float] | None = None,
        method: str = "closed-form",
    ) -> None:
        self.path = path
        self.basis = basis
        self.method = method
        self._profile_fn = profile_fn
        if method == "closed-form":
            if profile_fn is not None:
                raise ConfigurationError(
                    "closed-form integration requires a polynomial profile; "
                    "use method='quadrature' for callable profiles"
                )
            prof = _as_poly(path.profile_coeffs)
            self._antiderivs = [
                (prof**k).integ() for k in range(basis.size)
            ]
        elif method == "quadrature":
            self._antiderivs = None
        else:
            raise ConfigurationError(f"unknown integration method {method!r}")

    def _check_domain(self, t0: float, tf: float) -> None:
        lo, hi = self.path.t_min, self.path.t_max_profile
        if tf < t0:
            raise DomainError(f"t0={t0} must not exceed tf={tf}")
        if t0 < lo - 1e-9 or tf > hi + 1e-9:
            raise DomainError(
                f"interval [{t0}, {tf}] outside profile domain [{lo}, {hi}]"
            )

    def psi(self, t0: float, tf: float) -> np.ndarray:
        """Integral of each basis feature over [t0, tf]."""
        self._check_domain(t0, tf)
        if self._antiderivs is not None:
            return np.array([q(tf) - q(t0) for q in self._antiderivs])
        fn = self._profile_fn or self.path.profile_unchecked
        out = np.empty(self.basis.size)
        for k in range(self.basis.size):
            val, _ = quad(lambda tau: fn(tau) ** k, t0, tf, epsabs=1e-10)
            out[k] = val
        return out

    def psi_many(self, t0: float, tf) -> np.ndarray:
        """Vectorized ``psi`` over an array of end times; shape (m, K)."""
        tf = np.asarray(tf, dtype=float)
        if self._antiderivs is None:
            return np.stack(
                [self.psi(t0, float(t)) for t in tf.ravel()], axis=-1
            ).reshape(self.basis.size, *tf.shape)
        return np.stack([q(tf) - q(t0) for q in self._antiderivs], axis=0)

    def dpsi_dtf(self, tf):
        """Derivative of psi with respect to the end time.

        Equals the basis features of the profile speed at ``tf``, by the
        fundamental theorem of calculus.
        """
        return self.basis.features(self.path.profile_unchecked(tf))
