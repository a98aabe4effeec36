"""Ground-truth world: true driver motion, noisy sensors, seeded RNG.

Both agents advance by left-endpoint Euler steps.  The bit-stream contract:
all noise comes from a single ``numpy.random.Generator`` backed by PCG64
seeded with the run seed, drawing exactly two standard normals per
telemetry sample (velocity first, then position) and one per position-only
fix during committed flight.  Identical seeds therefore reproduce traces
bit for bit on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import ScenarioConfig
from .errors import DomainError
from .path import PathModel


@dataclass
class DriverTruth:
    """True driver behavior: gain on the historical profile, optionally scheduled."""

    gain: float
    theta: float = 0.0
    schedule: tuple[tuple[float, float], ...] | None = None  # (t_from, gain)

    def gain_at(self, t: float) -> float:
        if not self.schedule:
            return self.gain
        g = self.gain
        for t_from, gain in self.schedule:
            if t >= t_from:
                g = gain
        return g


@dataclass(frozen=True)
class TelemetrySample:
    t: float
    theta_meas: float
    vel_meas: float
    vel_hist: float


class EndOfScenario(Exception):
    """The mission clock ran past the historical profile's domain."""


class World:
    """One simulated run; owns the clock, the driver truth, and the RNG."""

    def __init__(
        self,
        path: PathModel,
        driver: DriverTruth,
        seed: int,
        velocity_sigma: float,
        position_sigma: float,
        t_s: float = 1.0,
    ) -> None:
        self.path = path
        self.driver = driver
        self.rng = np.random.default_rng(np.random.PCG64(seed))
        self.velocity_sigma = velocity_sigma
        self.position_sigma = position_sigma
        self.t_s = t_s
        self.clock = 0.0

    # profile speed seen by the world: parked once history runs out
    def _hist_vel(self, t: float) -> float:
        if t > self.path.t_max_profile:
            return 0.0
        return max(0.0, float(self.path.profile_unchecked(t)))

    def true_velocity(self) -> float:
        return self.driver.gain_at(self.clock) * self._hist_vel(self.clock)

    def true_position(self) -> np.ndarray:
        return self.path.point_unchecked(self.path.clip_theta(self.driver.theta))

    def measure(self) -> TelemetrySample:
        """Noisy velocity+position fix at the current clock."""
        vel_noise = self.rng.standard_normal() * self.velocity_sigma
        pos_noise = self.rng.standard_normal() * self.position_sigma
        return TelemetrySample(
            t=self.clock,
            theta_meas=self.driver.theta + pos_noise,
            vel_meas=self.true_velocity() + vel_noise,
            vel_hist=self._hist_vel(self.clock),
        )

    def measure_position(self) -> float:
        """Position-only fix used for terminal guidance after commit."""
        return self.driver.theta + self.rng.standard_normal() * self.position_sigma

    def advance(self, dt: float | None = None) -> None:
        """Left-endpoint Euler step of the driver truth."""
        dt = self.t_s if dt is None else dt
        self.driver.theta += self.true_velocity() * dt
        self.driver.theta = min(self.driver.theta, self.path.theta_max)
        self.clock += dt

    def check_profile_domain(self) -> None:
        if self.clock > self.path.t_max_profile + 1e-9:
            raise EndOfScenario(
                f"clock {self.clock} past profile end {self.path.t_max_profile}"
            )


def world_from_config(config: ScenarioConfig, seed: int | None = None) -> World:
    path = config.build_path()
    schedule = None
    if config.driver.schedule is not None:
        schedule = tuple((float(a), float(b)) for a, b in config.driver.schedule)
    driver = DriverTruth(
        gain=config.driver.gain, theta=config.driver.theta0, schedule=schedule
    )
    return World(
        path=path,
        driver=driver,
        seed=config.run.seed if seed is None else seed,
        velocity_sigma=config.sensors.velocity_sigma,
        position_sigma=config.position_sigma,
        t_s=config.mission.t_s,
    )
