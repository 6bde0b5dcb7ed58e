"""Slot-indexed binary erasure link with a fixed one-way delay and a
loss-free feedback path of the same delay.

Erasure draws are pre-generated as a (horizon x frames_per_slot) uniform
table at construction, so the realization seen by the k-th frame of slot t
is a pure function of the seed, independent of how many frames any
particular protocol chooses to send. That is what makes paired protocol
comparisons share one channel realization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class ErasureProfile:
    """Piecewise-constant erasure probability over a tiled horizon."""

    epsilons: tuple[float, ...]
    interval_len: int

    def __post_init__(self):
        if not self.epsilons:
            raise ValueError("profile needs at least one interval")
        if self.interval_len <= 0:
            raise ValueError("interval_len must be positive")
        for e in self.epsilons:
            if not 0.0 <= e <= 1.0:
                raise ValueError(f"erasure probability out of [0, 1]: {e}")

    @property
    def horizon(self) -> int:
        return self.interval_len * len(self.epsilons)

    @classmethod
    def constant(cls, epsilon: float, horizon: int) -> "ErasureProfile":
        return cls((epsilon,), horizon)

    @classmethod
    def success_ramp(cls, lo: float, hi: float, intervals: int,
                     interval_len: int) -> "ErasureProfile":
        """Success probability linearly spaced lo..hi across intervals."""
        succ = np.linspace(lo, hi, intervals)
        return cls(tuple(1.0 - s for s in succ), interval_len)

    @classmethod
    def epsilon_ramp(cls, hi: float, lo: float, intervals: int,
                     interval_len: int) -> "ErasureProfile":
        """Erasure probability linearly spaced hi..lo across intervals."""
        eps = np.linspace(hi, lo, intervals)
        return cls(tuple(float(e) for e in eps), interval_len)

    def epsilon_at(self, slot: int) -> float:
        if not 0 <= slot < self.horizon:
            raise ValueError(f"slot {slot} outside horizon {self.horizon}")
        return self.epsilons[slot // self.interval_len]


@dataclass
class Frame:
    payload: Any
    send_slot: int
    arrive_slot: int
    erased: bool


class SlottedChannel:
    """One directed link: lossy delayed forward path plus reliable delayed
    feedback. `deliver`/`deliver_feedback` must each be polled once per
    slot in increasing order."""

    def __init__(self, profile: ErasureProfile, rtt: int, frames_per_slot: int,
                 rng: np.random.Generator | None = None,
                 uniforms: np.ndarray | None = None):
        if rtt <= 0 or rtt % 2 != 0:
            raise ValueError(f"rtt must be positive and even, got {rtt}")
        if frames_per_slot <= 0:
            raise ValueError("frames_per_slot must be positive")
        self.profile = profile
        self.rtt = rtt
        self.one_way = rtt // 2
        self.frames_per_slot = frames_per_slot
        if uniforms is not None:
            u = np.asarray(uniforms, dtype=np.float64)
            if u.shape != (profile.horizon, frames_per_slot):
                raise ValueError("uniform table shape mismatch")
            self._u = u
        else:
            if rng is None:
                raise ValueError("either rng or uniforms is required")
            self._u = rng.random((profile.horizon, frames_per_slot))
        self._pending: dict[int, list[Frame]] = {}
        self._fb_pending: dict[int, list[Any]] = {}
        self._sent_at: dict[int, int] = {}
        self._last_deliver = -1
        self._last_fb_deliver = -1
        self.frames_sent = 0
        self.frames_erased = 0

    def send(self, payload: Any, slot: int) -> Frame:
        eps = self.profile.epsilon_at(slot)
        idx = self._sent_at.get(slot, 0)
        if idx >= self.frames_per_slot:
            raise ValueError(
                f"more than {self.frames_per_slot} frames in slot {slot}")
        self._sent_at[slot] = idx + 1
        erased = bool(self._u[slot, idx] < eps)
        frame = Frame(payload, slot, slot + self.one_way, erased)
        self.frames_sent += 1
        if erased:
            self.frames_erased += 1
        else:
            self._pending.setdefault(frame.arrive_slot, []).append(frame)
        return frame

    def deliver(self, slot: int) -> list[Any]:
        if slot <= self._last_deliver:
            raise ValueError(
                f"deliver called out of order: {slot} after {self._last_deliver}")
        self._last_deliver = slot
        return [f.payload for f in self._pending.pop(slot, [])]

    def send_feedback(self, payload: Any, slot: int) -> None:
        self._fb_pending.setdefault(slot + self.one_way, []).append(payload)

    def deliver_feedback(self, slot: int) -> list[Any]:
        if slot <= self._last_fb_deliver:
            raise ValueError(
                f"feedback deliver out of order: {slot} after "
                f"{self._last_fb_deliver}")
        self._last_fb_deliver = slot
        return self._fb_pending.pop(slot, [])
