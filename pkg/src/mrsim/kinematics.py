"""Discrete Ackermann vehicle motion, a bounded wander policy for the
localization workspace, and oriented-box collision tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    t = math.fmod(theta + math.pi, 2.0 * math.pi)
    if t <= 0.0:
        t += 2.0 * math.pi
    return t - math.pi


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class ControlInput:
    v: float
    delta: float


def ackermann_step(state: VehicleState, u: ControlInput, dt: float,
                   wheelbase: float) -> VehicleState:
    """One forward-Euler step of the kinematic bicycle:
    x += dt*v*cos(theta), y += dt*v*sin(theta),
    theta += dt*v*tan(delta)/wheelbase."""
    if wheelbase <= 0.0:
        raise ValueError(f"wheelbase must be positive, got {wheelbase}")
    if not abs(u.delta) < math.pi / 2.0:
        raise ValueError(f"steering angle must satisfy |delta| < pi/2: {u.delta}")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return VehicleState(
        state.x + dt * u.v * math.cos(state.theta),
        state.y + dt * u.v * math.sin(state.theta),
        wrap_angle(state.theta + dt * u.v * math.tan(u.delta) / wheelbase),
    )


class WanderPolicy:
    """Piecewise-constant random controls with reactive overrides.

    Acceleration and steering are resampled every `resample_period` slots;
    steering is zeroed every `reset_period` slots (reset wins when both fire).
    Two deterministic overrides keep robots apart and inside the workspace:
    steer away from a neighbor closer than `avoid_dist` and approaching, and
    steer toward the workspace center within `wall_margin` of a boundary.
    Speed integrates acceleration with saturation at [0, v_max].
    """

    def __init__(self, index: int, dt: float, workspace: float,
                 rng: np.random.Generator,
                 resample_period: int = 8, reset_period: int = 3,
                 v_max: float = 10.0, accel_max: float = 1.0,
                 steer_max_deg: float = 20.0, avoid_dist: float = 8.0,
                 wall_margin: float = 5.0):
        self.index = index
        self.dt = dt
        self.workspace = workspace
        self.rng = rng
        self.resample_period = resample_period
        self.reset_period = reset_period
        self.v_max = v_max
        self.accel_max = accel_max
        self.steer_max = math.radians(steer_max_deg)
        self.avoid_dist = avoid_dist
        self.wall_margin = wall_margin
        self.v = float(rng.uniform(1.0, 5.0))
        self.accel = 0.0
        self.delta = 0.0
        self._prev_dists: dict[int, float] = {}

    def control_for_slot(self, slot: int, own: VehicleState,
                         neighbors: dict[int, VehicleState]) -> ControlInput:
        if slot % self.resample_period == 0:
            self.accel = float(self.rng.uniform(-self.accel_max, self.accel_max))
            self.delta = float(self.rng.uniform(-self.steer_max, self.steer_max))
        if slot % self.reset_period == 0:
            self.delta = 0.0

        delta = self.delta
        closest, closest_d = None, math.inf
        for j, st in neighbors.items():
            d = math.hypot(st.x - own.x, st.y - own.y)
            prev = self._prev_dists.get(j)
            if d < self.avoid_dist and prev is not None and d < prev \
                    and d < closest_d:
                closest, closest_d = st, d
            self._prev_dists[j] = d
        if closest is not None:
            bearing = wrap_angle(
                math.atan2(closest.y - own.y, closest.x - own.x) - own.theta)
            delta = -self.steer_max if bearing >= 0.0 else self.steer_max

        m = self.wall_margin
        w = self.workspace
        if own.x < m or own.x > w - m or own.y < m or own.y > w - m:
            bearing = wrap_angle(
                math.atan2(w / 2.0 - own.y, w / 2.0 - own.x) - own.theta)
            delta = self.steer_max if bearing >= 0.0 else -self.steer_max

        self.v = min(max(self.v + self.accel * self.dt, 0.0), self.v_max)
        return ControlInput(self.v, delta)


def initial_states(n: int, workspace: float, rng: np.random.Generator,
                   min_separation: float = 10.0,
                   max_tries: int = 10000) -> list[VehicleState]:
    """Uniform placements with a minimum pairwise separation, uniform
    headings."""
    placed: list[VehicleState] = []
    tries = 0
    while len(placed) < n:
        if tries > max_tries:
            raise ValueError(
                f"cannot place {n} robots {min_separation} m apart "
                f"in a {workspace} m workspace")
        tries += 1
        x = float(rng.uniform(0.0, workspace))
        y = float(rng.uniform(0.0, workspace))
        theta = float(rng.uniform(-math.pi, math.pi))
        if all(math.hypot(p.x - x, p.y - y) >= min_separation for p in placed):
            placed.append(VehicleState(x, y, wrap_angle(theta)))
    return placed


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle centered at (cx, cy), long axis along `heading`."""

    cx: float
    cy: float
    heading: float
    length: float
    width: float

    def corners(self) -> np.ndarray:
        c, s = math.cos(self.heading), math.sin(self.heading)
        hl, hw = self.length / 2.0, self.width / 2.0
        out = np.empty((4, 2))
        k = 0
        for dl, dw in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)):
            out[k, 0] = self.cx + dl * c - dw * s
            out[k, 1] = self.cy + dl * s + dw * c
            k += 1
        return out


def obb_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Separating-axis test over both boxes' edge normals; boxes are closed
    sets, so touching counts as overlap."""
    ca, cb = a.corners(), b.corners()
    for heading in (a.heading, b.heading):
        c, s = math.cos(heading), math.sin(heading)
        for ax, ay in ((c, s), (-s, c)):
            pa = ca[:, 0] * ax + ca[:, 1] * ay
            pb = cb[:, 0] * ax + cb[:, 1] * ay
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True
