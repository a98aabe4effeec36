"""Single-integrator vehicle kinematics and the quadratic-plus-hover energy law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class EnergyParams:
    mass: float
    hover_rate: float  # J per kg per second spent airborne
    v_max: float

    def __post_init__(self) -> None:
        if min(self.mass, self.hover_rate, self.v_max) <= 0:
            raise InputError("mass, hover_rate and v_max must all be positive")


@dataclass(frozen=True)
class UasState:
    position: np.ndarray
    energy: float
    t: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=float).reshape(2)
        )


def drain_rate(speed: float, params: EnergyParams) -> float:
    """Joules per second at the given speed: kinetic term plus hover floor."""
    return params.mass * speed**2 / 2.0 + params.hover_rate * params.mass


def step(
    state: UasState, v: np.ndarray, params: EnergyParams, t_s: float
) -> tuple[UasState, bool]:
    """Advance one interval at constant velocity.

    Exact (no integration error).  Returns the new state and a depletion
    flag; on depletion the energy is clamped at zero rather than silently
    continuing negative.
    """
    if t_s <= 0:
        raise InputError("t_s must be positive")
    v = np.asarray(v, dtype=float).reshape(2)
    speed = float(np.linalg.norm(v))
    if speed > params.v_max + 1e-9:
        raise InputError(f"commanded speed {speed} exceeds v_max {params.v_max}")
    energy = state.energy - drain_rate(speed, params) * t_s
    depleted = energy < 0
    return (
        UasState(state.position + v * t_s, max(energy, 0.0), state.t + t_s),
        depleted,
    )


def segment_energy(v, t: float, params: EnergyParams) -> float:
    """Energy to fly at constant velocity ``v`` for ``t`` seconds."""
    if t < 0:
        raise InputError("segment duration must be nonnegative")
    speed = float(np.linalg.norm(np.asarray(v, dtype=float)))
    return drain_rate(speed, params) * t


def min_energy_to_reach(frm, to, t: float, params: EnergyParams) -> float:
    """Cheapest energy to cover a displacement in exactly ``t`` seconds.

    Straight flight at constant speed is optimal (the drain is convex in
    velocity).  Returns ``math.inf`` when the required speed exceeds the
    limit.
    """
    if t <= 0:
        raise InputError("travel time must be positive")
    dist = float(np.linalg.norm(np.asarray(to, dtype=float) - np.asarray(frm, dtype=float)))
    speed = dist / t
    if speed > params.v_max + 1e-9:
        return math.inf
    return drain_rate(speed, params) * t
