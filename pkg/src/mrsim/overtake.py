"""Safety-critical overtaking abort: an ego car in the oncoming lane
commits to aborting once enough in-order status packets from the oncoming
car have been released by the transport, and must tuck back in behind the
truck before the closing gap runs out.

Straight two-lane road along x: inner lane centered at y = 0 (truck T,
heading +x), outer lane centered at y = lane_width (ego A heading +x,
oncoming B heading -x). Absent the abort every vehicle holds its lane and
speed, so trajectories are identical across runs; packet erasures are the
only randomness and decide when (and whether) the abort fires.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .channel import ErasureProfile, SlottedChannel
from .harness import ConfigError, SeedStreams
from .kinematics import (ControlInput, OrientedBox, VehicleState,
                         ackermann_step, obb_overlap)
from .transport import ProtocolParams, TransportSession

MC_PROTOCOLS = ("sr_arq", "ac_rlnc")
PAYLOAD = struct.Struct("<I28x")   # slot stamp + padding, 32-byte body


@dataclass(frozen=True)
class OvertakeConfig:
    dt: float = 0.05
    horizon: int = 160
    lane_width: float = 3.5
    v_ego: float = 28.0
    v_truck: float = 22.0
    v_oncoming: float = 28.0
    brake_decel: float = 10.0
    abort_steer_deg: float = 10.0
    steer_ramp_time: float = 0.5
    speed_floor_margin: float = 2.0     # abort floor = v_truck - margin
    car_length: float = 4.5
    car_width: float = 1.9
    truck_length: float = 12.0
    truck_width: float = 2.6
    wheelbase_frac: float = 0.6
    gap_ego_truck: float = 70.0         # ego front bumper to truck rear
    gap_ego_oncoming: float = 338.0     # front bumper to front bumper
    rtt: int = 8
    beta: int = 1
    msg_req: int = 25
    deadline_slot: int = 110
    eps_init: float = 0.5
    window_factor_sr: float = 2.0
    window_factor_ac: float = 1.5
    profile_kind: str = "success_ramp"  # success_ramp | epsilon_ramp | constant
    success_lo: float = 0.1
    success_hi: float = 0.9
    intervals: int = 10
    epsilon: float = 0.0                # constant profile only
    rollout_cap_time: float = 4.0
    complete_y_tol: float = 0.3
    complete_theta_deg: float = 2.0
    seed: int = 0
    runs: int = 1000
    protocol: str = "both"              # sr_arq | ac_rlnc | both

    def validate(self) -> None:
        if self.horizon < 1:
            raise ConfigError("scenario.horizon: must be positive")
        if self.dt <= 0.0:
            raise ConfigError("scenario.dt: must be positive")
        if self.rtt <= 0 or self.rtt % 2 != 0:
            raise ConfigError("channel.rtt: must be positive and even")
        if self.beta < 1:
            raise ConfigError("transport.beta: must be >= 1")
        if self.msg_req < 1:
            raise ConfigError("scenario.msg_req: must be >= 1")
        if not 0 <= self.deadline_slot < self.horizon:
            raise ConfigError(
                "scenario.deadline_slot: must be within [0, horizon)")
        if self.profile_kind not in ("success_ramp", "epsilon_ramp",
                                     "constant"):
            raise ConfigError(
                f"channel.profile: unknown value {self.profile_kind!r}")
        if self.profile_kind != "constant":
            if self.intervals < 1:
                raise ConfigError("channel.intervals: must be >= 1")
            if self.horizon % self.intervals != 0:
                raise ConfigError(
                    "channel.intervals: must tile scenario.horizon exactly")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("channel.epsilon: must be within [0, 1]")
        if not 0.0 <= self.success_lo <= 1.0 \
                or not 0.0 <= self.success_hi <= 1.0:
            raise ConfigError("channel.success_lo/hi: must be within [0, 1]")
        if self.protocol not in MC_PROTOCOLS + ("both",):
            raise ConfigError(
                f"transport.protocol: unknown value {self.protocol!r}")
        if self.runs < 1:
            raise ConfigError("scenario.runs: must be >= 1")

    # geometry ---------------------------------------------------------

    @property
    def wheelbase_car(self) -> float:
        return self.wheelbase_frac * self.car_length

    def initial_states(self) -> tuple[VehicleState, VehicleState, VehicleState]:
        a = VehicleState(0.0, self.lane_width, 0.0)
        t = VehicleState(self.car_length / 2.0 + self.gap_ego_truck
                         + self.truck_length / 2.0, 0.0, 0.0)
        b = VehicleState(self.car_length / 2.0 + self.gap_ego_oncoming
                         + self.car_length / 2.0, self.lane_width, math.pi)
        return a, t, b

    def box(self, state: VehicleState, truck: bool = False) -> OrientedBox:
        if truck:
            return OrientedBox(state.x, state.y, state.theta,
                               self.truck_length, self.truck_width)
        return OrientedBox(state.x, state.y, state.theta,
                           self.car_length, self.car_width)

    def erasure_profile(self) -> ErasureProfile:
        if self.profile_kind == "constant":
            return ErasureProfile.constant(self.epsilon, self.horizon)
        interval_len = self.horizon // self.intervals
        if self.profile_kind == "success_ramp":
            return ErasureProfile.success_ramp(
                self.success_lo, self.success_hi, self.intervals, interval_len)
        return ErasureProfile.epsilon_ramp(
            1.0 - self.success_lo, 1.0 - self.success_hi, self.intervals,
            interval_len)

    def transport_params(self) -> ProtocolParams:
        return ProtocolParams(rtt=self.rtt, beta=self.beta,
                              window_factor_sr=self.window_factor_sr,
                              window_factor_ac=self.window_factor_ac,
                              eps_init=self.eps_init)


class AbortManeuver:
    """Brake-and-tuck-in maneuver.

    Steering ramps to the abort angle, holds until the remaining drop to
    the inner lane center matches the kinematic cost of straightening back
    out (theta^2 L / (2 tan delta), speed-independent), mirrors until
    level, then trims onto the center with a proportional law. Speed brakes
    down to a floor just under the truck's.
    """

    RAMP, HOLD, STRAIGHTEN, TRIM, DONE = range(5)

    def __init__(self, cfg: OvertakeConfig, v0: float):
        self.cfg = cfg
        self.v = v0
        self.phase = self.RAMP
        self.k = 0
        self.steer_max = math.radians(cfg.abort_steer_deg)
        self.floor = cfg.v_truck - cfg.speed_floor_margin
        self.target_y = 0.0

    def _straighten_drop(self, theta: float) -> float:
        return theta * theta * self.cfg.wheelbase_car \
            / (2.0 * math.tan(self.steer_max))

    def control(self, state: VehicleState) -> ControlInput:
        self.v = max(self.v - self.cfg.brake_decel * self.cfg.dt, self.floor)
        self.k += 1
        dy = state.y - self.target_y
        if self.phase in (self.RAMP, self.HOLD) \
                and dy <= self._straighten_drop(state.theta):
            self.phase = self.STRAIGHTEN
        if self.phase == self.RAMP:
            frac = min(1.0, self.k * self.cfg.dt / self.cfg.steer_ramp_time)
            if frac >= 1.0:
                self.phase = self.HOLD
            return ControlInput(self.v, -self.steer_max * frac)
        if self.phase == self.HOLD:
            return ControlInput(self.v, -self.steer_max)
        if self.phase == self.STRAIGHTEN:
            if state.theta >= 0.0:
                self.phase = self.TRIM
            else:
                return ControlInput(self.v, self.steer_max)
        # proportional trim keeps the discrete-time maneuver inside the
        # completion tolerance instead of limit-cycling around it
        delta = -0.4 * state.theta - 0.05 * dy
        delta = min(max(delta, -self.steer_max), self.steer_max)
        if abs(dy) < 0.05 and abs(state.theta) < math.radians(0.25):
            self.phase = self.DONE
            delta = 0.0
        return ControlInput(self.v, delta)

    def complete(self, state: VehicleState) -> bool:
        return abs(state.y - self.target_y) <= self.cfg.complete_y_tol \
            and abs(state.theta) <= math.radians(self.cfg.complete_theta_deg)


def _advance(state: VehicleState, v: float, dt: float) -> VehicleState:
    # straight-line motion through the same integrator the ego uses
    return ackermann_step(state, ControlInput(v, 0.0), dt, 1.0)


def nominal_trajectories(cfg: OvertakeConfig, slots: int):
    """Per-slot states for straight-driving A, T, B out to index `slots`."""
    a, t, b = cfg.initial_states()
    traj_a, traj_t, traj_b = [a], [t], [b]
    for _ in range(slots):
        a = _advance(a, cfg.v_ego, cfg.dt)
        t = _advance(t, cfg.v_truck, cfg.dt)
        b = _advance(b, cfg.v_oncoming, cfg.dt)
        traj_a.append(a)
        traj_t.append(t)
        traj_b.append(b)
    return traj_a, traj_t, traj_b


def _half_diag(length: float, width: float) -> float:
    return 0.5 * math.hypot(length, width)


def _collides(cfg: OvertakeConfig, a: VehicleState, t: VehicleState,
              b: VehicleState) -> bool:
    # bounding-circle reject keeps the exact test off the hot path
    r_car = _half_diag(cfg.car_length, cfg.car_width)
    r_truck = _half_diag(cfg.truck_length, cfg.truck_width)
    hit = False
    if math.hypot(a.x - t.x, a.y - t.y) <= r_car + r_truck:
        hit = obb_overlap(cfg.box(a), cfg.box(t, truck=True))
    if not hit and math.hypot(a.x - b.x, a.y - b.y) <= 2.0 * r_car:
        hit = obb_overlap(cfg.box(a), cfg.box(b))
    return hit


def rollout_abort(cfg: OvertakeConfig, start_slot: int,
                  start_state: VehicleState, traj_t, traj_b,
                  v0: float | None = None) -> tuple[bool, int]:
    """Simulate the abort from `start_slot`; returns (safe, end_slot).

    Safe means no box overlap with T or B from the start slot until the
    ego is settled in the inner lane; failing to settle within the rollout
    cap is unsafe.
    """
    cap = int(round(cfg.rollout_cap_time / cfg.dt))
    man = AbortManeuver(cfg, cfg.v_ego if v0 is None else v0)
    state = start_state
    slot = start_slot
    if _collides(cfg, state, traj_t[slot], traj_b[slot]):
        return False, slot
    for _ in range(cap):
        u = man.control(state)
        state = ackermann_step(state, u, cfg.dt, cfg.wheelbase_car)
        slot += 1
        if _collides(cfg, state, traj_t[slot], traj_b[slot]):
            return False, slot
        if man.phase >= AbortManeuver.STRAIGHTEN and man.complete(state):
            return True, slot
    return False, slot


def candidate_safety(cfg: OvertakeConfig) -> list[bool]:
    """Per-candidate-slot abort safety.

    A candidate covers the whole run it would occur in: nominal driving
    through the candidate slot, then the abort rollout. Candidates after
    the first nominal collision are therefore unsafe, aborted or not.
    """
    cap = int(round(cfg.rollout_cap_time / cfg.dt))
    traj_a, traj_t, traj_b = nominal_trajectories(cfg, cfg.horizon + cap)
    safe = []
    prefix_ok = True
    for s in range(cfg.horizon):
        if prefix_ok and _collides(cfg, traj_a[s], traj_t[s], traj_b[s]):
            prefix_ok = False
        safe.append(prefix_ok
                    and rollout_abort(cfg, s, traj_a[s], traj_t, traj_b)[0])
    return safe


def compute_deadline(cfg: OvertakeConfig) -> int:
    """Latest slot from which initiating the abort still avoids every
    collision; -1 when no candidate slot is safe."""
    cfg.validate()
    deadline = -1
    for s, ok in enumerate(candidate_safety(cfg)):
        if ok:
            deadline = s
    return deadline


@dataclass(frozen=True)
class RunOutcome:
    run_id: int
    protocol: str
    t25_slot: int | None
    abort_slot: int | None
    outcome: str            # aborted_safe | collision | passed_unsafe


def run_once(cfg: OvertakeConfig, protocol: str, run_id: int,
             nominal=None) -> RunOutcome:
    """One Monte-Carlo run: the oncoming car streams one status packet per
    slot to the ego; the abort begins the slot after the in-order count
    reaches msg_req. Outcome is classified by overlap checks through the
    horizon."""
    if protocol not in MC_PROTOCOLS:
        raise ValueError(f"unknown overtake protocol {protocol!r}")
    if nominal is None:
        nominal = nominal_trajectories(cfg, cfg.horizon)
    traj_a, traj_t, traj_b = nominal
    streams = SeedStreams(cfg.seed)
    chan = SlottedChannel(cfg.erasure_profile(), cfg.rtt, cfg.beta,
                          rng=streams.stream(f"mc:{run_id}:chan"))
    coeff = streams.stream(f"mc:{run_id}:rlnc") \
        if protocol == "ac_rlnc" else None
    session = TransportSession(protocol, cfg.transport_params(), chan,
                               PAYLOAD.size, coeff_rng=coeff)

    state_a = traj_a[0]
    man: AbortManeuver | None = None
    t25: int | None = None
    abort_slot: int | None = None
    collided = False
    n_inorder = 0

    for t in range(cfg.horizon):
        if t > 0:
            if man is not None and t > abort_slot:
                state_a = ackermann_step(state_a, man.control(state_a),
                                         cfg.dt, cfg.wheelbase_car)
            else:
                state_a = traj_a[t]
        if _collides(cfg, state_a, traj_t[t], traj_b[t]):
            collided = True
            break
        session.submit(PAYLOAD.pack(t), t)
        n_inorder += len(session.advance(t))
        if t25 is None and n_inorder >= cfg.msg_req:
            t25 = t
            abort_slot = t + 1
            man = AbortManeuver(cfg, cfg.v_ego)

    outcome = "collision" if collided else (
        "aborted_safe" if abort_slot is not None else "passed_unsafe")
    return RunOutcome(run_id, protocol, t25, abort_slot, outcome)


def run_batch(cfg: OvertakeConfig, protocol: str,
              run_ids: list[int]) -> list[RunOutcome]:
    """Serial worker unit for Monte-Carlo parallelism."""
    nominal = nominal_trajectories(cfg, cfg.horizon)
    return [run_once(cfg, protocol, rid, nominal) for rid in run_ids]


def reliability_cdf(outcomes: list[RunOutcome], horizon: int,
                    protocol: str) -> list[float]:
    """Empirical Pr[T25 <= t] per slot; runs that never hit the threshold
    hold the curve below one."""
    runs = [o for o in outcomes if o.protocol == protocol]
    counts = [0] * horizon
    for o in runs:
        if o.t25_slot is not None:
            counts[o.t25_slot] += 1
    cdf, acc = [], 0
    total = max(len(runs), 1)
    for c in counts:
        acc += c
        cdf.append(acc / total)
    return cdf
