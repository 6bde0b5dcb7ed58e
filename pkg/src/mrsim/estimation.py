"""Planar EKF over (x, y, heading) with two front-ends for late
measurements.

The `naive` front-end applies a delayed measurement at the slot it arrives,
as if it were current, and drops anything older than the buffer depth. The
`iree` front-end keeps a rolling buffer of per-slot checkpoints (state
before that slot's prediction), controls, and measurements; a late arrival
is inserted at its generation slot and the filter re-runs forward from
there, so the final state equals what chronological processing would have
produced.

The 3x3 algebra is written out in scalar form: these steps run millions of
times per sweep and small-matrix numpy dispatch would dominate the cost.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .sensing import RemoteMeasurement


@dataclass
class EkfState:
    mean: list[float]                 # [x, y, theta]
    cov: list[list[float]]            # 3x3, row major

    def clone(self) -> "EkfState":
        return EkfState(self.mean[:], [row[:] for row in self.cov])

    def cov_matrix(self) -> np.ndarray:
        return np.array(self.cov)

    @property
    def position(self) -> tuple[float, float]:
        return self.mean[0], self.mean[1]


def _wrap(t: float) -> float:
    t = math.fmod(t + math.pi, 2.0 * math.pi)
    if t <= 0.0:
        t += 2.0 * math.pi
    return t - math.pi


def predict(state: EkfState, v: float, delta: float, dt: float,
            wheelbase: float, q_pos: float, q_theta: float) -> EkfState:
    """Propagate mean through the bicycle model and covariance through its
    Jacobian F = [[1,0,-dt*v*sin th],[0,1,dt*v*cos th],[0,0,1]], adding
    Q = diag(q_pos, q_pos, q_theta)."""
    x, y, th = state.mean
    if not (math.isfinite(v) and math.isfinite(delta) and math.isfinite(th)):
        raise ValueError("non-finite prediction input")
    c, s = math.cos(th), math.sin(th)
    a = -dt * v * s
    b = dt * v * c
    nx = x + dt * v * c
    ny = y + dt * v * s
    nth = _wrap(th + dt * v * math.tan(delta) / wheelbase)

    p0, p1, p2 = state.cov
    p22 = p2[2]
    p02 = p0[2] + a * p22
    p12 = p1[2] + b * p22
    n00 = p0[0] + a * p2[0] + p02 * a + q_pos
    n01 = p0[1] + a * p2[1] + p02 * b
    n11 = p1[1] + b * p2[1] + p12 * b + q_pos
    n22 = p22 + q_theta
    # symmetrize off-diagonals that pick up both products
    n10 = p1[0] + b * p2[0] + p12 * a
    n01 = 0.5 * (n01 + n10)
    n20 = p2[0] + p22 * a
    n02 = 0.5 * (p02 + n20)
    n21 = p2[1] + p22 * b
    n12 = 0.5 * (p12 + n21)
    return EkfState([nx, ny, nth],
                    [[n00, n01, n02], [n01, n11, n12], [n02, n12, n22]])


def update_position(state: EkfState, zx: float, zy: float,
                    r_var: float) -> EkfState:
    """Fuse a position-only observation with isotropic variance r_var."""
    if r_var <= 0.0:
        raise ValueError(f"measurement variance must be positive: {r_var}")
    x, y, th = state.mean
    p0, p1, p2 = state.cov
    p00, p01, p02 = p0
    p10, p11, p12 = p1
    p20, p21, p22 = p2
    s00 = p00 + r_var
    s01 = p01
    s11 = p11 + r_var
    det = s00 * s11 - s01 * s01
    if det <= 0.0 or not math.isfinite(det):
        raise ValueError("singular innovation covariance")
    i00 = s11 / det
    i01 = -s01 / det
    i11 = s00 / det

    k00 = p00 * i00 + p01 * i01
    k01 = p00 * i01 + p01 * i11
    k10 = p10 * i00 + p11 * i01
    k11 = p10 * i01 + p11 * i11
    k20 = p20 * i00 + p21 * i01
    k21 = p20 * i01 + p21 * i11
    rx = zx - x
    ry = zy - y
    mean = [x + k00 * rx + k01 * ry,
            y + k10 * rx + k11 * ry,
            _wrap(th + k20 * rx + k21 * ry)]
    c00 = p00 - (k00 * p00 + k01 * p10)
    c01 = p01 - (k00 * p01 + k01 * p11)
    c02 = p02 - (k00 * p02 + k01 * p12)
    c10 = p10 - (k10 * p00 + k11 * p10)
    c11 = p11 - (k10 * p01 + k11 * p11)
    c12 = p12 - (k10 * p02 + k11 * p12)
    c20 = p20 - (k20 * p00 + k21 * p10)
    c21 = p21 - (k20 * p01 + k21 * p11)
    c22 = p22 - (k20 * p02 + k21 * p12)
    m01 = 0.5 * (c01 + c10)
    m02 = 0.5 * (c02 + c20)
    m12 = 0.5 * (c12 + c21)
    return EkfState(mean, [[c00, m01, m02], [m01, c11, m12], [m02, m12, c22]])


@dataclass(frozen=True)
class NoiseParams:
    sigma_gps: float = 3.0
    sigma_process: float = 1.0
    sigma_theta_deg: float = 1.0
    workspace: float = 200.0
    heading_prior_deg: float = 10.0

    @property
    def r_gps(self) -> float:
        return self.sigma_gps ** 2

    @property
    def q_pos(self) -> float:
        return self.sigma_process ** 2

    @property
    def q_theta(self) -> float:
        return math.radians(self.sigma_theta_deg) ** 2

    def r_remote(self, d_hat: float) -> float:
        return (self.sigma_process
                + d_hat / (math.sqrt(2.0) * self.workspace)) ** 2


@dataclass
class _SlotEntry:
    slot: int
    checkpoint: EkfState | None       # state before this slot's prediction
    control: tuple[float, float] | None
    gps: tuple[float, float] | None = None
    remotes: list[RemoteMeasurement] = field(default_factory=list)


class RobotFilter:
    """One robot's EKF plus its late-measurement front-end.

    Drive it once per slot: `begin_slot` (checkpoint + predict), then
    `ingest_gps`, then `ingest_remotes` with whatever peer measurements the
    transport released this slot. The first GPS fix initializes the mean
    (heading zero) instead of updating.
    """

    def __init__(self, robot_id: int, mode: str, noise: NoiseParams,
                 dt: float, wheelbase: float, replay_depth: int):
        if mode not in ("naive", "iree"):
            raise ValueError(f"unknown estimator mode {mode!r}")
        if replay_depth < 0:
            raise ValueError("replay_depth must be >= 0")
        self.robot_id = robot_id
        self.mode = mode
        self.noise = noise
        self.dt = dt
        self.wheelbase = wheelbase
        self.replay_depth = replay_depth
        self.state: EkfState | None = None
        self.dropped = 0
        self.now = -1
        self._buffer: deque[_SlotEntry] = deque(maxlen=replay_depth + 1)

    # ---- per-slot drive

    def begin_slot(self, slot: int, control: tuple[float, float] | None) -> None:
        self.now = slot
        if self.mode == "iree":
            chk = self.state.clone() if self.state is not None else None
            self._buffer.append(_SlotEntry(slot, chk, control))
        if self.state is not None and control is not None:
            v, delta = control
            self.state = predict(self.state, v, delta, self.dt, self.wheelbase,
                                 self.noise.q_pos, self.noise.q_theta)

    def ingest_gps(self, slot: int, zx: float, zy: float) -> None:
        if self.mode == "iree":
            self._buffer[-1].gps = (zx, zy)
        self.state = self._apply_gps(self.state, zx, zy)

    def _apply_gps(self, state: EkfState | None, zx: float,
                   zy: float) -> EkfState:
        if state is None:
            r = self.noise.r_gps
            pth = math.radians(self.noise.heading_prior_deg) ** 2
            return EkfState([zx, zy, 0.0],
                            [[r, 0.0, 0.0], [0.0, r, 0.0], [0.0, 0.0, pth]])
        return update_position(state, zx, zy, self.noise.r_gps)

    def ingest_remotes(self, slot: int,
                       measurements: list[RemoteMeasurement]) -> None:
        if not measurements:
            return
        if self.mode == "naive":
            for m in sorted(measurements, key=lambda m: m.sort_key):
                if slot - m.slot > self.replay_depth:
                    self.dropped += 1
                    continue
                if self.state is not None:
                    self.state = update_position(
                        self.state, m.zx, m.zy, self.noise.r_remote(m.d_hat))
            return
        # replay mode: file each measurement at its generation slot, then
        # re-run the filter from the earliest slot that changed
        oldest = self._buffer[0].slot if self._buffer else slot
        earliest = None
        for m in measurements:
            if m.slot < oldest or slot - m.slot > self.replay_depth:
                self.dropped += 1
                continue
            self._buffer[m.slot - oldest].remotes.append(m)
            if earliest is None or m.slot < earliest:
                earliest = m.slot
        if earliest is not None:
            self._replay_from(earliest)

    def _replay_from(self, start_slot: int) -> None:
        oldest = self._buffer[0].slot
        state = self._buffer[start_slot - oldest].checkpoint
        state = state.clone() if state is not None else None
        for entry in list(self._buffer)[start_slot - oldest:]:
            entry.checkpoint = state.clone() if state is not None else None
            if state is not None and entry.control is not None:
                v, delta = entry.control
                state = predict(state, v, delta, self.dt, self.wheelbase,
                                self.noise.q_pos, self.noise.q_theta)
            if entry.gps is not None:
                state = self._apply_gps(state, *entry.gps)
            for m in sorted(entry.remotes, key=lambda m: m.sort_key):
                if state is not None:
                    state = update_position(
                        state, m.zx, m.zy, self.noise.r_remote(m.d_hat))
        self.state = state

    def estimate(self) -> tuple[float, float, float] | None:
        if self.state is None:
            return None
        x, y, th = self.state.mean
        return x, y, th
