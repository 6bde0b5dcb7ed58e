"""Cooperative localization: n wandering robots exchange noisy peer
observations over per-pair lossy links and fuse them with delay-aware
EKFs. One run produces the per-slot mean trailing position error and the
transport delivery metrics for a single (protocol, epsilon, delay_mode,
estimator) cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ErasureProfile, SlottedChannel
from .estimation import NoiseParams, RobotFilter
from .harness import ConfigError, SeedStreams
from .kinematics import WanderPolicy, ackermann_step, initial_states
from .sensing import (WIRE_SIZE, lidar_measure, gps_measure, pack_measurement,
                      unpack_measurement)
from .transport import (ProtocolParams, TransportMetrics, TransportSession,
                        collect_metrics, compute_beta)

PROTOCOL_CHOICES = ("udp", "sr_arq", "ac_rlnc", "none")
DELAY_MODES = ("one_way", "none")
ESTIMATORS = ("naive", "iree")


@dataclass(frozen=True)
class CoopLocConfig:
    n: int = 10
    workspace: float = 200.0
    dt: float = 0.1
    horizon: int = 2000
    resample_period: int = 8
    reset_period: int = 3
    wheelbase: float = 2.5
    v_max: float = 10.0
    sigma_gps: float = 3.0
    sigma_lidar_internal: float = 2.0
    sigma_process: float = 1.0
    sigma_theta_deg: float = 1.0
    sigma_v: float = 3.0
    sigma_delta_deg: float = 2.0
    rtt: int = 4
    replay_depth: int = 10
    alpha: float = 0.11
    lam: float = 0.15
    window_factor_sr: float = 2.0
    window_factor_ac: float = 1.5
    epsilon: float = 0.0
    protocol: str = "udp"
    delay_mode: str = "one_way"
    estimator: str = "iree"
    seed: int = 0
    tail_window: int = 500
    err_window: int = 200

    def validate(self) -> None:
        if self.n < 2:
            raise ConfigError("scenario.n: need at least 2 robots")
        if self.horizon < 1:
            raise ConfigError("scenario.horizon: must be positive")
        if self.dt <= 0.0:
            raise ConfigError("scenario.dt: must be positive")
        if self.workspace <= 0.0:
            raise ConfigError("scenario.workspace: must be positive")
        if self.wheelbase <= 0.0:
            raise ConfigError("scenario.wheelbase: must be positive")
        if self.rtt <= 0 or self.rtt % 2 != 0:
            raise ConfigError("channel.rtt: must be positive and even")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("channel.epsilon: must be within [0, 1]")
        if self.lam <= 0.0:
            raise ConfigError("transport.lam: must be positive")
        if self.protocol not in PROTOCOL_CHOICES:
            raise ConfigError(
                f"transport.protocol: unknown value {self.protocol!r}")
        if self.delay_mode not in DELAY_MODES:
            raise ConfigError(
                f"channel.delay_mode: unknown value {self.delay_mode!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(
                f"scenario.estimator: unknown value {self.estimator!r}")
        if self.replay_depth < 0:
            raise ConfigError("scenario.replay_depth: must be >= 0")
        if self.tail_window < 1 or self.tail_window > self.horizon:
            raise ConfigError(
                "scenario.tail_window: must be within [1, horizon]")


@dataclass
class CoopLocResult:
    config: CoopLocConfig
    err_series: np.ndarray
    tail_mean_err: float
    metrics: TransportMetrics
    dropped_measurements: int


def trailing_mean_series(per_robot_err: np.ndarray, window: int) -> np.ndarray:
    """Mean over robots of the trailing-window mean error,
    window k(t) = min(window, t + 1)."""
    n, horizon = per_robot_err.shape
    cs = np.concatenate(
        [np.zeros((n, 1)), np.cumsum(per_robot_err, axis=1)], axis=1)
    idx = np.arange(horizon)
    k = np.minimum(window, idx + 1)
    win_sum = cs[:, idx + 1] - cs[:, idx + 1 - k]
    return (win_sum / k).mean(axis=0)


def run_cooploc(cfg: CoopLocConfig) -> CoopLocResult:
    cfg.validate()
    streams = SeedStreams(cfg.seed)
    motion_rng = streams.stream("motion")
    states = initial_states(cfg.n, cfg.workspace, motion_rng)
    policies = [
        WanderPolicy(i, cfg.dt, cfg.workspace, motion_rng,
                     resample_period=cfg.resample_period,
                     reset_period=cfg.reset_period, v_max=cfg.v_max)
        for i in range(cfg.n)
    ]
    ctrl_rng = [streams.stream(f"ctrl:{i}") for i in range(cfg.n)]
    gps_rng = [streams.stream(f"gps:{i}") for i in range(cfg.n)]
    pairs = [(i, j) for i in range(cfg.n) for j in range(cfg.n) if i != j]
    lidar_rng = {p: streams.stream(f"lidar:{p[0]}:{p[1]}") for p in pairs}

    use_transport = cfg.delay_mode == "one_way" and cfg.protocol != "none"
    sessions: dict[tuple[int, int], TransportSession] = {}
    if use_transport:
        beta = compute_beta(cfg.epsilon, cfg.alpha, cfg.lam)
        params = ProtocolParams(
            rtt=cfg.rtt, beta=beta,
            window_factor_sr=cfg.window_factor_sr,
            window_factor_ac=cfg.window_factor_ac,
            eps_init=cfg.epsilon,
            # measurements are perishable: the estimator discards anything
            # older than its replay depth, so shed at the sender instead of
            # queueing behind a stalled window
            drop_unadmitted=True)
        profile = ErasureProfile.constant(cfg.epsilon, cfg.horizon)
        for i, j in pairs:
            chan = SlottedChannel(profile, cfg.rtt, beta,
                                  rng=streams.stream(f"chan:{i}:{j}"))
            coeff = streams.stream(f"rlnc:{i}:{j}") \
                if cfg.protocol == "ac_rlnc" else None
            sessions[(i, j)] = TransportSession(
                cfg.protocol, params, chan, WIRE_SIZE, coeff_rng=coeff)

    noise = NoiseParams(cfg.sigma_gps, cfg.sigma_process, cfg.sigma_theta_deg,
                        cfg.workspace)
    filters = [RobotFilter(i, cfg.estimator, noise, cfg.dt, cfg.wheelbase,
                           cfg.replay_depth) for i in range(cfg.n)]

    sigma_delta = math.radians(cfg.sigma_delta_deg)
    per_robot_err = np.zeros((cfg.n, cfg.horizon))

    for t in range(cfg.horizon):
        controls_bar: list[tuple[float, float] | None] = [None] * cfg.n
        if t > 0:
            controls = []
            for i in range(cfg.n):
                neighbors = {j: states[j] for j in range(cfg.n) if j != i}
                controls.append(
                    policies[i].control_for_slot(t, states[i], neighbors))
            for i in range(cfg.n):
                states[i] = ackermann_step(states[i], controls[i], cfg.dt,
                                           cfg.wheelbase)
                controls_bar[i] = (
                    controls[i].v + float(ctrl_rng[i].normal(0.0, cfg.sigma_v)),
                    controls[i].delta
                    + float(ctrl_rng[i].normal(0.0, sigma_delta)),
                )

        for i in range(cfg.n):
            filters[i].begin_slot(t, controls_bar[i])
            zx, zy = gps_measure(states[i], cfg.sigma_gps, gps_rng[i])
            filters[i].ingest_gps(t, zx, zy)

        incoming: list[list] = [[] for _ in range(cfg.n)]
        for i, j in pairs:
            m = lidar_measure(i, j, t, states[i], states[j],
                              cfg.sigma_lidar_internal, cfg.workspace,
                              lidar_rng[(i, j)])
            if cfg.delay_mode == "none":
                incoming[j].append(m)
            elif use_transport:
                sessions[(i, j)].submit(pack_measurement(m), t)
        if use_transport:
            for p in pairs:
                for rec in sessions[p].advance(t):
                    incoming[p[1]].append(unpack_measurement(rec.body))

        for i in range(cfg.n):
            filters[i].ingest_remotes(t, incoming[i])
            est = filters[i].estimate()
            per_robot_err[i, t] = math.hypot(est[0] - states[i].x,
                                             est[1] - states[i].y)

    series = trailing_mean_series(per_robot_err, cfg.err_window)
    metrics = collect_metrics(list(sessions.values())) if sessions \
        else TransportMetrics(0, 0, 0, 0.0, 0.0,
                              1.0 if cfg.delay_mode == "none" else 0.0,
                              1.0 if cfg.delay_mode == "none" else 0.0)
    tail = float(series[-cfg.tail_window:].mean())
    dropped = sum(f.dropped for f in filters)
    return CoopLocResult(cfg, series, tail, metrics, dropped)
