"""GF(256) arithmetic and a sliding-window random linear codec.

Coded frames carry byte-valued linear combinations of a contiguous window
of fixed-size source payloads. The decoder runs incremental Gaussian
elimination over the active window and releases decoded payloads strictly
in sequence order; rows for released positions are projected out so state
stays proportional to the open window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# x^8 + x^4 + x^3 + x + 1, with 0x03 as the multiplicative generator
REDUCING_POLY = 0x11B


def _build_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    exp = np.zeros(256, dtype=np.int32)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        nx = x << 1
        if nx & 0x100:
            nx ^= REDUCING_POLY
        x = nx ^ x  # multiply by 0x03
    exp[255] = exp[0]

    # dense 256x256 product table; zero operands handled by masking
    prod = exp[(log[:, None] + log[None, :]) % 255]
    zero = (np.arange(256)[:, None] == 0) | (np.arange(256)[None, :] == 0)
    mul = np.where(zero, 0, prod).astype(np.uint8)

    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(255 - log[1:]) % 255]
    return exp.astype(np.uint8), log, mul, inv


_EXP, _LOG, MUL_TABLE, _INV = _build_tables()


def _check_byte(a: int) -> None:
    if not isinstance(a, (int, np.integer)) or not 0 <= int(a) <= 255:
        raise ValueError(f"field element out of range: {a!r}")


def gf_add(a: int, b: int) -> int:
    """Field addition (XOR); also its own inverse."""
    _check_byte(a)
    _check_byte(b)
    return int(a) ^ int(b)


def gf_mul(a: int, b: int) -> int:
    """Field product of two bytes."""
    _check_byte(a)
    _check_byte(b)
    return int(MUL_TABLE[int(a), int(b)])


def gf_inv(a: int) -> int:
    """Multiplicative inverse; zero has none."""
    _check_byte(a)
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse in GF(256)")
    return int(_INV[int(a)])


@dataclass(frozen=True)
class CodedPacket:
    """One coded frame: coefficients over source seqs
    [window_start, window_start + len(coefficients))."""

    window_start: int
    coefficients: bytes
    payload: bytes
    sender_id: int = 0
    receiver_id: int = 0
    gen_slot: int = 0

    @property
    def window_end(self) -> int:
        return self.window_start + len(self.coefficients)

    @property
    def is_systematic(self) -> bool:
        nz = [c for c in self.coefficients if c != 0]
        return len(nz) == 1 and nz[0] == 1


def systematic_packet(seq: int, payload: bytes, sender_id: int = 0,
                      receiver_id: int = 0, gen_slot: int = 0) -> CodedPacket:
    return CodedPacket(seq, b"\x01", payload, sender_id, receiver_id, gen_slot)


def encode(window: list[bytes], coefficients: list[int] | bytes) -> bytes:
    """Combine equal-length payloads with the given coefficients."""
    coeffs = list(coefficients)
    if len(coeffs) != len(window):
        raise ValueError(
            f"coefficient count {len(coeffs)} != window size {len(window)}")
    if not window:
        raise ValueError("empty window")
    plen = len(window[0])
    for p in window:
        if len(p) != plen:
            raise ValueError("window payloads must share one length")
    for c in coeffs:
        _check_byte(c)
    acc = np.zeros(plen, dtype=np.uint8)
    for c, p in zip(coeffs, window):
        if c:
            acc ^= MUL_TABLE[c, np.frombuffer(p, dtype=np.uint8)]
    return acc.tobytes()


@dataclass
class AbsorbResult:
    innovative: bool
    released: list[tuple[int, bytes]] = field(default_factory=list)


class DecoderState:
    """Incremental Gaussian elimination over the open coding window.

    Rows are kept in reduced row echelon form. A source payload is released
    as soon as the row pivoting on the lowest open position is a unit vector,
    which by construction happens in strict sequence order. Released payloads
    are retained so frames spanning already-closed positions can still be
    absorbed after substitution.
    """

    def __init__(self, payload_len: int):
        if payload_len <= 0:
            raise ValueError("payload_len must be positive")
        self.payload_len = payload_len
        self.base = 0           # lowest undetermined source seq
        self._hi = 0            # exclusive upper edge of the active window
        self._rows: list[np.ndarray] = []
        self._pays: list[np.ndarray] = []
        self._pivots: list[int] = []
        self._released: dict[int, np.ndarray] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def delivered_upto(self) -> int:
        return self.base - 1

    @property
    def window_span(self) -> int:
        return self._hi - self.base

    def absorb(self, pkt: CodedPacket) -> AbsorbResult:
        if not pkt.coefficients:
            raise ValueError("packet with empty coefficient vector")
        if pkt.window_start < 0:
            raise ValueError("negative window start")
        if len(pkt.payload) != self.payload_len:
            raise ValueError(
                f"payload length {len(pkt.payload)} != {self.payload_len}")

        if pkt.window_end > self._hi:
            grow = pkt.window_end - self._hi
            for i in range(len(self._rows)):
                self._rows[i] = np.concatenate(
                    [self._rows[i], np.zeros(grow, dtype=np.uint8)])
            self._hi = pkt.window_end
        width = self._hi - self.base

        vec = np.zeros(width, dtype=np.uint8)
        pay = np.frombuffer(pkt.payload, dtype=np.uint8).copy()
        coeffs = np.frombuffer(pkt.coefficients, dtype=np.uint8)
        start = pkt.window_start
        # positions below base substitute the already-decoded payloads;
        # the rest scatter into the active vector as one contiguous slice
        split = min(max(self.base - start, 0), len(coeffs))
        for k in np.flatnonzero(coeffs[:split]):
            pay ^= MUL_TABLE[coeffs[k], self._released[start + int(k)]]
        if split < len(coeffs):
            vec[start + split - self.base:
                start + len(coeffs) - self.base] = coeffs[split:]

        # forward elimination against existing pivots
        for r, piv in enumerate(self._pivots):
            c = vec[piv]
            if c:
                vec ^= MUL_TABLE[c, self._rows[r]]
                pay ^= MUL_TABLE[c, self._pays[r]]

        nz = np.flatnonzero(vec)
        if nz.size == 0:
            return AbsorbResult(False, [])

        piv = int(nz[0])
        ic = _INV[vec[piv]]
        vec = MUL_TABLE[ic, vec]
        pay = MUL_TABLE[ic, pay]

        # back-substitute into rows that reference the new pivot
        for r in range(len(self._rows)):
            c = self._rows[r][piv]
            if c:
                self._rows[r] ^= MUL_TABLE[c, vec]
                self._pays[r] ^= MUL_TABLE[c, pay]

        at = 0
        while at < len(self._pivots) and self._pivots[at] < piv:
            at += 1
        self._rows.insert(at, vec)
        self._pays.insert(at, pay)
        self._pivots.insert(at, piv)

        return AbsorbResult(True, self._release_prefix())

    def _release_prefix(self) -> list[tuple[int, bytes]]:
        out: list[tuple[int, bytes]] = []
        while self._pivots and self._pivots[0] == 0 \
                and np.count_nonzero(self._rows[0]) == 1:
            pay = self._pays.pop(0)
            self._rows.pop(0)
            self._pivots.pop(0)
            seq = self.base
            self._released[seq] = pay
            out.append((seq, pay.tobytes()))
            self.base += 1
            self._rows = [row[1:] for row in self._rows]
            self._pivots = [p - 1 for p in self._pivots]
        if self.base > self._hi:
            self._hi = self.base
        return out
