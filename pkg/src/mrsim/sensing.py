"""Measurement generation and the fixed 32-byte wire format for relayed
peer observations.

Each robot takes a noisy absolute fix of itself (GPS) every slot and a
noisy position estimate of every peer (LiDAR-like). The LiDAR noise grows
linearly with range: sigma = sigma_internal + d / (sqrt(2) * workspace).
The transmitted range estimate d_hat carries its own noise of std
d / (sqrt(2) * workspace) and is clamped at zero.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .kinematics import VehicleState

# sender_id u16, target_id u16, slot u32, z.x f64, z.y f64, d_hat f64
_WIRE = struct.Struct("<HHIddd")
WIRE_SIZE = _WIRE.size  # 32 bytes


@dataclass(frozen=True)
class RemoteMeasurement:
    """One robot's noisy observation of a peer, stamped with the slot it
    was taken in."""

    sender_id: int
    target_id: int
    slot: int
    zx: float
    zy: float
    d_hat: float

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.sender_id, self.target_id)


def gps_measure(state: VehicleState, sigma: float,
                rng: np.random.Generator) -> tuple[float, float]:
    nx, ny = rng.normal(0.0, sigma, size=2)
    return state.x + nx, state.y + ny


def lidar_sigma(distance: float, sigma_internal: float,
                workspace: float) -> float:
    if distance < 0.0:
        raise ValueError(f"negative distance: {distance}")
    return sigma_internal + distance / (math.sqrt(2.0) * workspace)


def lidar_measure(sender_id: int, target_id: int, slot: int,
                  sender: VehicleState, target: VehicleState,
                  sigma_internal: float, workspace: float,
                  rng: np.random.Generator) -> RemoteMeasurement:
    d = math.hypot(target.x - sender.x, target.y - sender.y)
    sigma = lidar_sigma(d, sigma_internal, workspace)
    nx, ny = rng.normal(0.0, sigma, size=2)
    d_sigma = d / (math.sqrt(2.0) * workspace)
    d_noise = rng.normal(0.0, d_sigma) if d_sigma > 0.0 else 0.0
    return RemoteMeasurement(
        sender_id, target_id, slot,
        target.x + nx, target.y + ny,
        max(0.0, d + d_noise),
    )


def pack_measurement(m: RemoteMeasurement) -> bytes:
    if not 0 <= m.sender_id < 2 ** 16 or not 0 <= m.target_id < 2 ** 16:
        raise ValueError("robot id out of u16 range")
    if not 0 <= m.slot < 2 ** 32:
        raise ValueError("slot out of u32 range")
    return _WIRE.pack(m.sender_id, m.target_id, m.slot, m.zx, m.zy, m.d_hat)


def unpack_measurement(body: bytes) -> RemoteMeasurement:
    if len(body) != WIRE_SIZE:
        raise ValueError(f"wire body must be {WIRE_SIZE} bytes, got {len(body)}")
    sender_id, target_id, slot, zx, zy, d_hat = _WIRE.unpack(body)
    return RemoteMeasurement(sender_id, target_id, slot, zx, zy, d_hat)
