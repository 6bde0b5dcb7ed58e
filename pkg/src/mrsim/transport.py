"""Three transports over one slotted erasure link: fire-and-forget UDP,
selective-repeat ARQ, and adaptive-coded random linear coding (AC-RLNC).

All three move fixed-size application messages and share a common per-slot
cycle driven by `TransportSession.advance`: forward arrivals are absorbed,
per-slot feedback is emitted, feedback arrivals update the sender, and the
sender then spends up to `beta` frame slots. Feedback is reliable, so the
sender learns the fate of every frame exactly one RTT after sending it and
never needs receiver-side erasure marks: any frame old enough to be covered
by a feedback report and absent from it was erased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import SlottedChannel
from .gf_rlnc import MUL_TABLE, CodedPacket, DecoderState, systematic_packet

PROTOCOLS = ("udp", "sr_arq", "ac_rlnc")


def compute_beta(epsilon: float, alpha: float, lam: float) -> int:
    """Frames-per-slot budget: ceil(1 / max(1 - epsilon - alpha, lam)).

    `alpha` is a safety margin on top of the erasure rate; `lam` floors the
    denominator so the budget stays bounded as epsilon approaches 1.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon out of [0, 1]: {epsilon}")
    if lam <= 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    return math.ceil(1.0 / max(1.0 - epsilon - alpha, lam))


@dataclass(frozen=True)
class ProtocolParams:
    rtt: int
    beta: int
    window_factor_sr: float = 2.0
    window_factor_ac: float = 1.5
    eps_init: float = 0.0
    ewma_history: float = 0.9
    # True for perishable traffic: a message the sender cannot take on now
    # is shed at submit instead of queueing behind a stalled window. False
    # for streams where every message must eventually go out.
    drop_unadmitted: bool = False

    def __post_init__(self):
        if self.rtt <= 0 or self.rtt % 2 != 0:
            raise ValueError(f"rtt must be positive and even, got {self.rtt}")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if not 0.0 <= self.eps_init <= 1.0:
            raise ValueError("eps_init out of [0, 1]")

    @property
    def window_sr(self) -> int:
        return math.ceil(self.window_factor_sr * self.beta * self.rtt)

    @property
    def window_ac(self) -> int:
        return math.ceil(self.window_factor_ac * self.beta * self.rtt)


@dataclass(frozen=True)
class AppMessage:
    seq: int
    gen_slot: int
    body: bytes


@dataclass
class DeliveryRecord:
    seq: int
    gen_slot: int
    delivered_slot: Optional[int] = None
    body: Optional[bytes] = None

    @property
    def delay(self) -> Optional[int]:
        if self.delivered_slot is None:
            return None
        return self.delivered_slot - self.gen_slot


@dataclass(frozen=True)
class SrFeedback:
    gen_slot: int
    cum_seq: int                    # highest in-order seq received
    received_above: tuple[int, ...]  # seqs > cum_seq held out of order


@dataclass(frozen=True)
class AcFeedback:
    gen_slot: int
    delivered_upto: int
    rank: int
    arrived: int                    # frames that arrived at gen_slot


# ---------------------------------------------------------------- UDP

class _UdpSender:
    def __init__(self, params: ProtocolParams):
        self.params = params
        self.queue: list[AppMessage] = []

    def submit(self, msg: AppMessage) -> None:
        self.queue.append(msg)

    def accepting(self) -> bool:
        return True

    def on_feedback(self, fb, now: int) -> None:
        pass

    def emit(self, now: int) -> list[CodedPacket]:
        out = []
        while self.queue and len(out) < self.params.beta:
            m = self.queue.pop(0)
            out.append(systematic_packet(m.seq, m.body, gen_slot=m.gen_slot))
        return out


class _UdpReceiver:
    def on_arrivals(self, pkts: list[CodedPacket], now: int):
        return [(p.window_start, p.payload) for p in pkts]

    def make_feedback(self, now: int):
        return None


# ---------------------------------------------------------------- SR-ARQ

class _SrSender:
    """Selective repeat: cumulative + selective feedback each slot, loss
    inferred from feedback old enough to cover a frame's arrival slot, and
    a one-RTT guard between retransmissions of the same seq."""

    def __init__(self, params: ProtocolParams):
        self.params = params
        self.queue: list[AppMessage] = []
        self.bodies: dict[int, AppMessage] = {}
        self.last_tx: dict[int, int] = {}
        self.received: set[int] = set()
        self.base = 0          # lowest seq not cumulatively acked
        self.next_new = 0
        self.retx: list[int] = []

    def submit(self, msg: AppMessage) -> None:
        self.queue.append(msg)

    def accepting(self) -> bool:
        headroom = self.params.window_sr - (self.next_new - self.base)
        return headroom > len(self.queue)

    def on_feedback(self, fb: SrFeedback, now: int) -> None:
        if fb.cum_seq + 1 > self.base:
            for s in range(self.base, fb.cum_seq + 1):
                self.bodies.pop(s, None)
                self.last_tx.pop(s, None)
                self.received.discard(s)
            self.base = fb.cum_seq + 1
        self.received.update(s for s in fb.received_above if s >= self.base)
        fate_horizon = fb.gen_slot - self.params.rtt // 2
        for s in range(self.base, self.next_new):
            if s in self.received or s not in self.last_tx:
                continue
            if self.last_tx[s] <= fate_horizon and s not in self.retx \
                    and now - self.last_tx[s] >= self.params.rtt:
                self.retx.append(s)

    def emit(self, now: int) -> list[CodedPacket]:
        out: list[CodedPacket] = []
        budget = self.params.beta
        self.retx.sort()
        while self.retx and budget:
            s = self.retx.pop(0)
            if s < self.base or s in self.received:
                continue
            m = self.bodies[s]
            out.append(systematic_packet(s, m.body, gen_slot=m.gen_slot))
            self.last_tx[s] = now
            budget -= 1
        while self.queue and budget \
                and self.next_new - self.base < self.params.window_sr:
            m = self.queue.pop(0)
            assert m.seq == self.next_new
            self.bodies[m.seq] = m
            self.last_tx[m.seq] = now
            self.next_new += 1
            out.append(systematic_packet(m.seq, m.body, gen_slot=m.gen_slot))
            budget -= 1
        return out

    @property
    def outstanding_span(self) -> int:
        return self.next_new - self.base


class _SrReceiver:
    def __init__(self):
        self.buf: dict[int, bytes] = {}
        self.expect = 0

    def on_arrivals(self, pkts: list[CodedPacket], now: int):
        released = []
        for p in pkts:
            s = p.window_start
            if s >= self.expect and s not in self.buf:
                self.buf[s] = p.payload
        while self.expect in self.buf:
            released.append((self.expect, self.buf.pop(self.expect)))
            self.expect += 1
        return released

    def make_feedback(self, now: int) -> SrFeedback:
        return SrFeedback(now, self.expect - 1, tuple(sorted(self.buf)))


# ---------------------------------------------------------------- AC-RLNC

class _AcSender:
    """Adaptive coded sender.

    Every frame is a random combination over the open window [w_min, w_max].
    Per slot the budget is spent on, in order: reactive repair frames
    (degrees-of-freedom deficit reported by feedback, net of repair already
    in flight), a-priori redundancy owed by the credit counter (each admitted
    source packet adds eps_hat / (1 - eps_hat)), then new source packets
    while the window span allows. Any budget still left while packets remain
    undelivered goes to further repair frames: the channel capacity is
    reserved either way, and each extra frame is another degree of freedom
    that can only pull the decode earlier.
    """

    EPS_CAP = 0.95

    def __init__(self, params: ProtocolParams, coeff_rng: np.random.Generator):
        self.params = params
        self.rng = coeff_rng
        self.queue: list[AppMessage] = []
        self.window: dict[int, bytes] = {}
        self.w_min = 0
        self.next_new = 0
        self.eps_hat = min(params.eps_init, self.EPS_CAP)
        self.fec_credit = 0.0
        self.reactive = 0
        # in-flight emission log: slot -> [total, fec_count, max_seq];
        # entries are folded into `committed_seq` once their fate is known
        self.emitted: dict[int, list[int]] = {}
        self.fate_known_upto = -1
        self.committed_seq = -1     # highest seq in any fate-known frame
        self._stack: np.ndarray | None = None

    def submit(self, msg: AppMessage) -> None:
        self.queue.append(msg)

    def accepting(self) -> bool:
        headroom = self.params.window_ac - (self.next_new - self.w_min)
        return headroom > len(self.queue)

    def _update_eps(self, sent: int, arrived: int) -> None:
        # one EWMA step per frame, folded into a single order-free update
        # (frames whose fate is learned together have no inner ordering)
        if sent <= 0:
            return
        h = self.params.ewma_history ** sent
        loss_rate = (sent - arrived) / sent
        self.eps_hat = min(h * self.eps_hat + (1.0 - h) * loss_rate,
                           self.EPS_CAP)

    def on_feedback(self, fb: AcFeedback, now: int) -> None:
        if fb.delivered_upto + 1 > self.w_min:
            for s in range(self.w_min, fb.delivered_upto + 1):
                self.window.pop(s, None)
            self.w_min = fb.delivered_upto + 1
            self._stack = None
        fate_slot = fb.gen_slot - self.params.rtt // 2
        for s in range(self.fate_known_upto + 1, fate_slot + 1):
            entry = self.emitted.pop(s, None)
            if entry is None:
                continue
            total, _fec, max_seq = entry
            arrived = fb.arrived if s == fate_slot else total
            self._update_eps(total, arrived)
            self.committed_seq = max(self.committed_seq, max_seq)
        self.fate_known_upto = max(self.fate_known_upto, fate_slot)

        fec_in_flight = sum(e[1] for e in self.emitted.values())
        have = (fb.delivered_upto + 1) + fb.rank
        deficit = (self.committed_seq + 1) - have
        self.reactive = max(0, deficit - fec_in_flight)

    def _combos(self, n: int, gen_slot: int) -> list[CodedPacket]:
        """n random combinations over the open window, drawn in one batch."""
        lo, hi = self.w_min, self.next_new - 1
        span = hi - lo + 1
        if self._stack is None or self._stack.shape[0] != span:
            self._stack = np.stack(
                [np.frombuffer(self.window[lo + k], dtype=np.uint8)
                 for k in range(span)])
        coeffs = self.rng.integers(1, 256, size=(n, span), dtype=np.uint8)
        mixed = np.bitwise_xor.reduce(
            MUL_TABLE[coeffs[:, :, None], self._stack[None, :, :]], axis=1)
        return [CodedPacket(lo, c.tobytes(), m.tobytes(), gen_slot=gen_slot)
                for c, m in zip(coeffs, mixed)]

    def emit(self, now: int) -> list[CodedPacket]:
        out: list[CodedPacket] = []
        budget = self.params.beta
        log = [0, 0, -1]

        def send_fec(n: int) -> None:
            if n <= 0:
                return
            out.extend(self._combos(n, now))
            log[0] += n
            log[1] += n
            log[2] = max(log[2], self.next_new - 1)

        if self.window:
            n = min(budget, self.reactive)
            send_fec(n)
            self.reactive -= n
            budget -= n
            n = min(budget, int(self.fec_credit))
            send_fec(n)
            self.fec_credit -= n
            budget -= n
        while budget and self.queue \
                and self.next_new - self.w_min < self.params.window_ac:
            m = self.queue.pop(0)
            assert m.seq == self.next_new
            self.window[m.seq] = m.body
            self.next_new += 1
            self._stack = None
            out.extend(self._combos(1, now))
            log[0] += 1
            log[2] = max(log[2], m.seq)
            budget -= 1
            self.fec_credit += self.eps_hat / (1.0 - self.eps_hat)
            n = min(budget, int(self.fec_credit))
            send_fec(n)
            self.fec_credit -= n
            budget -= n
        # anything undelivered: spend the rest of the budget on repair.
        # Every extra frame is an extra degree of freedom at the receiver,
        # pulling decode (and the window slide) earlier
        if self.window:
            send_fec(budget)
        if log[0]:
            self.emitted[now] = log
        return out


class _AcReceiver:
    def __init__(self, payload_len: int):
        self.decoder = DecoderState(payload_len)
        self.arrived_this_slot = 0

    def on_arrivals(self, pkts: list[CodedPacket], now: int):
        self.arrived_this_slot = len(pkts)
        released = []
        for p in pkts:
            res = self.decoder.absorb(p)
            released.extend(res.released)
        return released

    def make_feedback(self, now: int) -> AcFeedback:
        return AcFeedback(now, self.decoder.delivered_upto,
                          self.decoder.rank, self.arrived_this_slot)


# ---------------------------------------------------------------- session

class TransportSession:
    """One directed message flow bound to one channel.

    Per-slot cycle (`advance`): deliver forward frames -> absorb and release,
    emit receiver feedback, deliver feedback -> update sender, emit up to
    beta new frames. A message submitted in slot t can therefore ride a
    frame sent in slot t, and feedback arriving in slot t can trigger a
    repair in slot t.
    """

    def __init__(self, protocol: str, params: ProtocolParams,
                 chan: SlottedChannel, payload_len: int,
                 coeff_rng: np.random.Generator | None = None):
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        self.protocol = protocol
        self.params = params
        self.chan = chan
        self.payload_len = payload_len
        self.records: dict[int, DeliveryRecord] = {}
        self.generated = 0
        if protocol == "udp":
            self.sender, self.receiver = _UdpSender(params), _UdpReceiver()
        elif protocol == "sr_arq":
            self.sender, self.receiver = _SrSender(params), _SrReceiver()
        else:
            if coeff_rng is None:
                raise ValueError("ac_rlnc needs a coefficient rng")
            self.sender = _AcSender(params, coeff_rng)
            self.receiver = _AcReceiver(payload_len)
        self._next_seq = 0

    def submit(self, body: bytes, gen_slot: int) -> int:
        """Hand one message to the sender. Returns its seq, or -1 when the
        sender is saturated and the flow sheds rather than queues."""
        if len(body) != self.payload_len:
            raise ValueError(
                f"body length {len(body)} != {self.payload_len}")
        self.generated += 1
        if self.params.drop_unadmitted and not self.sender.accepting():
            return -1
        seq = self._next_seq
        self._next_seq += 1
        msg = AppMessage(seq, gen_slot, body)
        self.records[seq] = DeliveryRecord(seq, gen_slot)
        self.sender.submit(msg)
        return seq

    def advance(self, slot: int) -> list[DeliveryRecord]:
        arrivals = self.chan.deliver(slot)
        released = self.receiver.on_arrivals(arrivals, slot)
        fb = self.receiver.make_feedback(slot)
        if fb is not None:
            self.chan.send_feedback(fb, slot)
        for fb_in in self.chan.deliver_feedback(slot):
            self.sender.on_feedback(fb_in, slot)
        for pkt in self.sender.emit(slot):
            self.chan.send(pkt, slot)
        out = []
        for seq, body in released:
            rec = self.records[seq]
            rec.delivered_slot = slot
            rec.body = body
            out.append(rec)
        return out


@dataclass(frozen=True)
class TransportMetrics:
    generated: int
    delivered: int
    frames_sent: int
    mean_inorder_delay: float
    max_inorder_delay: float
    delivery_ratio: float
    throughput: float


def collect_metrics(sessions: list[TransportSession]) -> TransportMetrics:
    generated = sum(s.generated for s in sessions)
    frames = sum(s.chan.frames_sent for s in sessions)
    delays = [r.delay for s in sessions for r in s.records.values()
              if r.delay is not None]
    delivered = len(delays)
    return TransportMetrics(
        generated=generated,
        delivered=delivered,
        frames_sent=frames,
        mean_inorder_delay=float(np.mean(delays)) if delays else 0.0,
        max_inorder_delay=float(max(delays)) if delays else 0.0,
        delivery_ratio=delivered / generated if generated else 0.0,
        throughput=delivered / frames if frames else 0.0,
    )
