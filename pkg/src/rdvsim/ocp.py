"""Condensed waypoint optimal control problem.

The mission is compressed to four waypoints (point-of-no-return, rendezvous,
landing, abort) joined by constant-velocity segments with free durations.
Velocities are eliminated through the segment dynamics, leaving a
six-dimensional decision vector: the PNR coordinates and the four segment
durations.  The rendezvous waypoint is pinned to the road at the predicted
mean driver progress, which makes the problem a smooth nonlinear program
with analytic gradients throughout.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .behavior import BehaviorPosterior
from .energy import EnergyParams, segment_energy
from .errors import InputError
from .path import BasisIntegralTable, PathModel

# Tightening applied to the speed bound inside the solver so returned plans
# satisfy the strict |v_i| <= v_max invariant despite solver tolerance.
_SPEED_MARGIN = 1e-7


@dataclass(frozen=True)
class MissionPlan:
    """Four waypoints, segment velocities, durations, and derived energies.

    Waypoints in order: PNR, rendezvous, landing, abort.  Segment 4 branches
    from the PNR (the abort leg).  ``t_rendezvous`` is on the mission clock.
    """

    origin: np.ndarray
    t_origin: float
    waypoints: np.ndarray  # (4, 2)
    velocities: np.ndarray  # (4, 2)
    durations: np.ndarray  # (4,)
    energies: np.ndarray  # (4,)
    t_rendezvous: float
    cost: float = float("nan")
    predicted_theta: float = float("nan")
    predicted_variance: float = float("nan")

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", np.asarray(self.origin, float).reshape(2))
        object.__setattr__(self, "waypoints", np.asarray(self.waypoints, float).reshape(4, 2))
        object.__setattr__(self, "velocities", np.asarray(self.velocities, float).reshape(4, 2))
        object.__setattr__(self, "durations", np.asarray(self.durations, float).reshape(4))
        object.__setattr__(self, "energies", np.asarray(self.energies, float).reshape(4))

    @property
    def t1(self) -> float:
        return float(self.durations[0])

    @property
    def rendezvous_energy(self) -> float:
        return float(self.energies[0] + self.energies[1] + self.energies[2])

    @property
    def abort_energy(self) -> float:
        return float(self.energies[0] + self.energies[3])

    def violations(
        self, e_r: float, v_max: float, t_c: float, t_max: float
    ) -> list[str]:
        """Human-readable list of invariant violations (empty when valid)."""
        out = []
        x_prev = self.origin
        for i in range(3):
            x_pred = x_prev + self.velocities[i] * self.durations[i]
            if np.linalg.norm(x_pred - self.waypoints[i]) > 1e-6:
                out.append(f"segment {i + 1} dynamics mismatch")
            x_prev = self.waypoints[i]
        x4 = self.waypoints[0] + self.velocities[3] * self.durations[3]
        if np.linalg.norm(x4 - self.waypoints[3]) > 1e-6:
            out.append("abort segment dynamics mismatch")
        for i in range(4):
            if np.linalg.norm(self.velocities[i]) > v_max + 1e-9:
                out.append(f"segment {i + 1} exceeds speed limit")
            if self.durations[i] < t_c - 1e-9:
                out.append(f"segment {i + 1} shorter than dwell time")
        if self.durations[:3].sum() > t_max + 1e-6:
            out.append("rendezvous branch exceeds time horizon")
        if self.durations[0] + self.durations[3] > t_max + 1e-6:
            out.append("abort branch exceeds time horizon")
        if self.rendezvous_energy > e_r + 1e-6:
            out.append("rendezvous branch exceeds energy budget")
        if self.abort_energy > e_r + 1e-6:
            out.append("abort branch exceeds energy budget")
        return out


@dataclass(frozen=True)
class OcpInputs:
    """Everything a single solve needs, captured as an immutable snapshot."""

    x0: np.ndarray
    e_r: float
    t_now: float
    posterior: BehaviorPosterior
    table: BasisIntegralTable
    path: PathModel
    anchor: tuple[float, float]  # (t_0, theta_d0)
    s_l: np.ndarray
    s_a: np.ndarray
    t_max: float
    t_c: float
    energy: EnergyParams
    variance_weight: float = 0.01
    approach_weight: float = 1.0
    speed_fraction: float = 0.7
    tol: float = 1e-8
    max_iter: int = 200
    multistart: int = 3

    def __post_init__(self) -> None:
        object.__setattr__(self, "x0", np.asarray(self.x0, float).reshape(2))
        object.__setattr__(self, "s_l", np.asarray(self.s_l, float).reshape(2))
        object.__setattr__(self, "s_a", np.asarray(self.s_a, float).reshape(2))
        if not self.t_c > 0:
            raise InputError("dwell time t_c must be positive")
        if not self.t_max > 2 * self.t_c:
            raise InputError("t_max must exceed twice the dwell time")
        if not (np.all(np.isfinite(self.s_l)) and np.all(np.isfinite(self.s_a))):
            raise InputError("landing/abort destinations must be finite")

    @property
    def v_max(self) -> float:
        return self.energy.v_max

    @property
    def v_plan(self) -> float:
        """Planning speed cap: a fraction of the hard limit is held back as
        control margin so committed plans can absorb prediction error."""
        return self.speed_fraction * self.energy.v_max


@dataclass(frozen=True)
class OcpResult:
    status: str  # "optimal" | "infeasible" | "error"
    plan: MissionPlan | None
    cost: float
    iterations: int
    solve_seconds: float
    message: str = ""


def velocities_from_waypoints(origin, waypoints, durations, t_c: float = 0.0):
    """Recover segment velocities from waypoints and durations."""
    waypoints = np.asarray(waypoints, float).reshape(4, 2)
    durations = np.asarray(durations, float).reshape(4)
    if np.any(durations < t_c) or np.any(durations <= 0):
        raise InputError("all durations must be at least the dwell time")
    origin = np.asarray(origin, float).reshape(2)
    prev = np.vstack([origin, waypoints[0], waypoints[1], waypoints[0]])
    return (waypoints - prev) / durations[:, None]


def waypoints_from_velocities(origin, velocities, durations):
    """Integrate segment velocities back into waypoints."""
    velocities = np.asarray(velocities, float).reshape(4, 2)
    durations = np.asarray(durations, float).reshape(4)
    origin = np.asarray(origin, float).reshape(2)
    x1 = origin + velocities[0] * durations[0]
    x2 = x1 + velocities[1] * durations[1]
    x3 = x2 + velocities[2] * durations[2]
    x4 = x1 + velocities[3] * durations[3]
    return np.vstack([x1, x2, x3, x4])


class OcpProblem:
    """Smooth NLP over z = (x1_x, x1_y, t1, t2, t3, t4).

    Exposes cost, constraints, and their analytic gradients; the acceptance
    suite verifies every gradient against central finite differences.
    Constraints are written as g(z) >= 0 in this order:

    0-3   speed bounds per segment
    4     rendezvous-branch time horizon
    5     abort-branch time horizon
    6-9   dwell-time floors per segment
    10    rendezvous-branch energy budget
    11    abort-branch energy budget
    12    rendezvous time inside the historical-profile domain
    13    predicted rendezvous progress inside the path domain
    """

    n_constraints = 14

    def __init__(self, inputs: OcpInputs) -> None:
        self.inputs = inputs
        self._t0, self._theta0 = inputs.anchor
        self._mu = inputs.posterior.mu_w
        self._cov = inputs.posterior.cov_w
        self._v_eff = inputs.v_plan - _SPEED_MARGIN

    # -- prediction pieces ---------------------------------------------------

    def mean_theta(self, u: float) -> float:
        psi = self.inputs.table.psi(self._t0, u)
        return self._theta0 + float(self._mu @ psi)

    def prediction(self, u: float) -> tuple[float, float, float, float]:
        """mean, var and their derivatives with respect to the end time."""
        table = self.inputs.table
        psi = table.psi(self._t0, u)
        dpsi = table.dpsi_dtf(u)
        mean = self._theta0 + float(self._mu @ psi)
        var = float(psi @ self._cov @ psi)
        dmean = float(self._mu @ dpsi)
        dvar = 2.0 * float(dpsi @ self._cov @ psi)
        return mean, var, dmean, dvar

    def _geometry(self, z):
        """Waypoint displacements and rendezvous-point sensitivities at z."""
        inp = self.inputs
        x1 = z[:2]
        t1, t2, t3, t4 = z[2:]
        u = inp.t_now + t1 + t2
        mean, var, dmean, dvar = self.prediction(u)
        r = inp.path.point_unchecked(mean)
        dr_du = inp.path.tangent(mean) * dmean  # (2,)
        d = np.vstack(
            [x1 - inp.x0, r - x1, inp.s_l - r, inp.s_a - x1]
        )  # (4, 2)
        return x1, np.array([t1, t2, t3, t4]), u, mean, var, dmean, dvar, r, dr_du, d

    # -- cost ------------------------------------------------------------------

    def cost(self, z) -> float:
        inp = self.inputs
        _, t, u, _, var, _, _, _, _, d = self._geometry(z)
        # The base objective is flat in the pre-commit waypoint, which lets
        # the solver park it a full max-speed hop from the rendezvous point
        # and leaves no speed slack on the approach leg.  A small penalty on
        # the approach speed breaks that degeneracy.
        approach = float(d[1] @ d[1]) / t[1] ** 2
        return (
            inp.variance_weight * var
            + inp.approach_weight * approach
            + z[3]
            + z[4]
            - z[2]
        )

    def cost_grad(self, z) -> np.ndarray:
        inp = self.inputs
        _, t, u, _, _, _, dvar, _, dr_du, d = self._geometry(z)
        w = inp.approach_weight
        g = np.zeros(6)
        g[0:2] = -2.0 * w * d[1] / t[1] ** 2
        cross = 2.0 * w * float(d[1] @ dr_du) / t[1] ** 2
        g[2] = inp.variance_weight * dvar - 1.0 + cross
        g[3] = (
            inp.variance_weight * dvar
            + 1.0
            + cross
            - 2.0 * w * float(d[1] @ d[1]) / t[1] ** 3
        )
        g[4] = 1.0
        return g

    # -- constraints -------------------------------------------------------------

    def constraints(self, z) -> np.ndarray:
        inp = self.inputs
        _, t, u, mean, _, _, _, _, _, d = self._geometry(z)
        m, alpha = inp.energy.mass, inp.energy.hover_rate
        norms2 = np.einsum("ij,ij->i", d, d)
        energies = m * norms2 / (2.0 * t) + alpha * m * t
        g = np.empty(self.n_constraints)
        g[0:4] = self._v_eff**2 * t**2 - norms2
        g[4] = inp.t_max - (t[0] + t[1] + t[2])
        g[5] = inp.t_max - (t[0] + t[3])
        g[6:10] = t - inp.t_c
        g[10] = inp.e_r - (energies[0] + energies[1] + energies[2])
        g[11] = inp.e_r - (energies[0] + energies[3])
        g[12] = inp.path.t_max_profile - u
        g[13] = inp.path.theta_max - mean
        return g

    def constraints_jac(self, z) -> np.ndarray:
        inp = self.inputs
        _, t, u, _, _, dmean, _, _, dr_du, d = self._geometry(z)
        m, alpha = inp.energy.mass, inp.energy.hover_rate
        norms2 = np.einsum("ij,ij->i", d, d)

        # d(d_i)/dz as (4, 2, 6): segments vs coordinates vs variables
        dd = np.zeros((4, 2, 6))
        dd[0, :, 0:2] = np.eye(2)
        dd[1, :, 0:2] = -np.eye(2)
        dd[1, :, 2] = dr_du
        dd[1, :, 3] = dr_du
        dd[2, :, 2] = -dr_du
        dd[2, :, 3] = -dr_du
        dd[3, :, 0:2] = -np.eye(2)

        dnorms2 = 2.0 * np.einsum("ij,ijk->ik", d, dd)  # (4, 6)

        jac = np.zeros((self.n_constraints, 6))
        for i in range(4):
            jac[i] = -dnorms2[i]
            jac[i, 2 + i] += 2.0 * self._v_eff**2 * t[i]
        jac[4, 2:5] = -1.0
        jac[5, 2] = -1.0
        jac[5, 5] = -1.0
        for i in range(4):
            jac[6 + i, 2 + i] = 1.0

        denergy = np.zeros((4, 6))
        for i in range(4):
            denergy[i] = m * dnorms2[i] / (2.0 * t[i])
            denergy[i, 2 + i] += -m * norms2[i] / (2.0 * t[i] ** 2) + alpha * m
        jac[10] = -(denergy[0] + denergy[1] + denergy[2])
        jac[11] = -(denergy[0] + denergy[3])
        jac[12, 2] = -1.0
        jac[12, 3] = -1.0
        jac[13, 2] = -dmean
        jac[13, 3] = -dmean
        return jac

    # -- plan assembly --------------------------------------------------------

    def plan_from_z(self, z) -> MissionPlan:
        inp = self.inputs
        x1, t, u, mean, var, _, _, r, _, d = self._geometry(z)
        waypoints = np.vstack([x1, r, inp.s_l, inp.s_a])
        velocities = d / t[:, None]
        energies = np.array(
            [segment_energy(velocities[i], t[i], inp.energy) for i in range(4)]
        )
        return MissionPlan(
            origin=inp.x0,
            t_origin=inp.t_now,
            waypoints=waypoints,
            velocities=velocities,
            durations=t,
            energies=energies,
            t_rendezvous=u,
            cost=self.cost(z),
            predicted_theta=mean,
            predicted_variance=var,
        )

    def z_from_plan(self, plan: MissionPlan) -> np.ndarray:
        return np.concatenate([plan.waypoints[0], plan.durations])

    def max_violation(self, z) -> float:
        return float(max(0.0, -np.min(self.constraints(z))))


def _intercept_scan(problem: OcpProblem, speed: float) -> float | None:
    """Earliest rendezvous time reachable at the given cruise speed."""
    inp = problem.inputs
    lo = inp.t_now + 2 * inp.t_c
    hi = min(inp.path.t_max_profile, inp.t_now + inp.t_max)
    if hi <= lo:
        return None
    for u in np.arange(lo, hi + 1e-9, 1.0):
        mean = problem.mean_theta(float(u))
        if not inp.path.theta_min <= mean <= inp.path.theta_max:
            continue
        r = inp.path.point_unchecked(mean)
        if np.linalg.norm(r - inp.x0) <= speed * (u - inp.t_now - inp.t_c):
            return float(u)
    return None


def _clearly_infeasible(problem: OcpProblem) -> bool:
    """Necessary-condition screen: no rendezvous time is even reachable."""
    inp = problem.inputs
    lo = inp.t_now + 2 * inp.t_c
    hi = min(inp.path.t_max_profile, inp.t_now + inp.t_max)
    if hi <= lo:
        return True
    for u in np.arange(lo, hi + 1e-9, 0.5):
        mean = problem.mean_theta(float(u))
        if not inp.path.theta_min <= mean <= inp.path.theta_max:
            continue
        r = inp.path.point_unchecked(mean)
        if np.linalg.norm(r - inp.x0) > inp.v_plan * (u - inp.t_now - inp.t_c):
            continue
        t_land = max(inp.t_c, np.linalg.norm(inp.s_l - r) / inp.v_plan)
        if (u - inp.t_now) + t_land <= inp.t_max:
            return False
    return True


def _cold_starts(problem: OcpProblem) -> list[np.ndarray]:
    inp = problem.inputs
    u0 = _intercept_scan(problem, inp.v_plan / 2.0)
    if u0 is None:
        u0 = _intercept_scan(problem, inp.v_plan * 0.95)
    if u0 is None:
        u0 = inp.t_now + min(inp.t_max / 2.0, (inp.path.t_max_profile - inp.t_now) / 2.0)
    horizon = u0 - inp.t_now
    t1 = min(max(inp.t_c, inp.t_max / 4.0), horizon - inp.t_c)
    t1 = max(t1, inp.t_c)
    t2 = max(inp.t_c, horizon - t1)
    mean_now = problem.mean_theta(min(u0, inp.path.t_max_profile))
    r0 = inp.path.point_unchecked(inp.path.clip_theta(mean_now))
    theta_now = inp.path.clip_theta(problem.inputs.anchor[1])
    driver_now = inp.path.point_unchecked(theta_now)
    x1 = 0.5 * (inp.x0 + driver_now)
    t3 = max(inp.t_c, float(np.linalg.norm(inp.s_l - r0)) / (inp.v_plan / 2.0))
    t3 = min(t3, max(inp.t_c, inp.t_max - t1 - t2))
    t4 = max(inp.t_c, float(np.linalg.norm(inp.s_a - x1)) / (inp.v_plan / 2.0))
    t4 = min(t4, max(inp.t_c, inp.t_max - t1))
    base = np.array([x1[0], x1[1], t1, t2, t3, t4])
    rng = np.random.default_rng(0)  # fixed: solves must be deterministic
    starts = [base]
    for _ in range(max(0, problem.inputs.multistart - 1)):
        scale = 1.0 + rng.uniform(-0.2, 0.2, size=6)
        z = base * scale
        z[2:] = np.clip(z[2:], inp.t_c, inp.t_max)
        starts.append(z)
    return starts


def _project_bounds(problem: OcpProblem, z: np.ndarray) -> np.ndarray:
    inp = problem.inputs
    z = np.array(z, dtype=float)
    z[2:] = np.clip(z[2:], inp.t_c, inp.t_max)
    # keep the rendezvous time inside the profile domain
    slack = inp.path.t_max_profile - inp.t_now - inp.t_c
    if z[2] + z[3] > slack:
        excess = z[2] + z[3] - max(slack, 2 * inp.t_c)
        z[2] = max(inp.t_c, z[2] - excess)
        if z[2] + z[3] > slack:
            z[3] = max(inp.t_c, slack - z[2])
    return z


def solve(inputs: OcpInputs, warm_start: MissionPlan | None = None) -> OcpResult:
    """Solve the waypoint OCP; infeasibility is an outcome, not an exception."""
    started = time.perf_counter()
    problem = OcpProblem(inputs)
    if _clearly_infeasible(problem):
        return OcpResult(
            status="infeasible",
            plan=None,
            cost=float("inf"),
            iterations=0,
            solve_seconds=time.perf_counter() - started,
            message="no reachable rendezvous time inside the horizon",
        )

    starts: list[np.ndarray] = []
    if warm_start is not None:
        z_warm = problem.z_from_plan(warm_start)
        # re-anchor durations: time already elapsed comes off the first leg
        elapsed = inputs.t_now - warm_start.t_origin
        z_warm[2] = max(inputs.t_c, z_warm[2] - elapsed)
        starts.append(_project_bounds(problem, z_warm))
    starts.extend(_project_bounds(problem, z) for z in _cold_starts(problem))

    bounds = [(None, None), (None, None)] + [(inputs.t_c, inputs.t_max)] * 4
    cons = [
        {
            "type": "ineq",
            "fun": problem.constraints,
            "jac": problem.constraints_jac,
        }
    ]

    best_z = None
    best_cost = np.inf
    total_iters = 0
    messages = []
    for idx, z0 in enumerate(starts):
        res = minimize(
            problem.cost,
            z0,
            jac=problem.cost_grad,
            bounds=bounds,
            constraints=cons,
            method="SLSQP",
            options={"maxiter": inputs.max_iter, "ftol": inputs.tol},
        )
        total_iters += int(res.nit)
        messages.append(f"start {idx}: {res.message} (nit={res.nit})")
        if problem.max_violation(res.x) <= 1e-7:
            c = problem.cost(res.x)
            if c < best_cost:
                best_cost, best_z = c, res.x.copy()
            if warm_start is not None and idx == 0 and res.success:
                break  # warm start converged; skip the cold multistart

    if best_z is None:
        return OcpResult(
            status="error",
            plan=None,
            cost=float("inf"),
            iterations=total_iters,
            solve_seconds=time.perf_counter() - started,
            message="no feasible point found: " + "; ".join(messages),
        )

    plan = problem.plan_from_z(best_z)
    return OcpResult(
        status="optimal",
        plan=plan,
        cost=best_cost,
        iterations=total_iters,
        solve_seconds=time.perf_counter() - started,
        message=messages[-1],
    )
