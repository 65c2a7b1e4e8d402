"""Seed expansion with SHAKE128.

A stream is SHAKE128(seed || tag) read as an unbounded byte string. Field
elements are cut from it bit by bit, least-significant bit of each byte
first, so for GF(16) the low nibble of a byte is drawn before the high one.
"""

from __future__ import annotations

import hashlib

import numpy as np

from minrank.gf import Field

SEED_LAMBDAS = (128, 192, 256)


def check_seed(seed: bytes, lam: int) -> bytes:
    seed = bytes(seed)
    if len(seed) * 8 != lam:
        raise ValueError(f"seed must be {lam // 8} bytes for lambda={lam}, got {len(seed)}")
    return seed


class PrgStream:
    """Deterministic byte/bit/field-element stream keyed by ``(seed, tag)``.

    Not safe for concurrent use: every read advances the stream.
    """

    def __init__(self, seed: bytes, tag: bytes | str = b""):
        if isinstance(tag, str):
            tag = tag.encode("ascii")
        self.seed = bytes(seed)
        self.tag = bytes(tag)
        self._xof = hashlib.shake_128(self.seed + self.tag)
        self._buf = b""
        self._bitpos = 0

    @property
    def bytes_emitted(self) -> int:
        return (self._bitpos + 7) // 8

    def _ensure(self, nbytes: int) -> None:
        if nbytes > len(self._buf):
            # hashlib can only squeeze from the start; grow geometrically
            size = max(nbytes, 2 * len(self._buf), 168)
            self._buf = self._xof.digest(size)

    def read(self, nbytes: int) -> bytes:
        """Next ``nbytes`` bytes, after realigning to a byte boundary."""
        start = (self._bitpos + 7) // 8
        self._ensure(start + nbytes)
        self._bitpos = 8 * (start + nbytes)
        return self._buf[start:start + nbytes]

    def _peek_bits(self, nbits: int) -> np.ndarray:
        end = (self._bitpos + nbits + 7) // 8
        self._ensure(end)
        first = self._bitpos // 8
        raw = np.frombuffer(self._buf, dtype=np.uint8, count=end - first, offset=first)
        bits = np.unpackbits(raw, bitorder="little")
        off = self._bitpos - 8 * first
        return bits[off:off + nbits]

    def _chunks(self, count: int, width: int) -> np.ndarray:
        bits = self._peek_bits(count * width).reshape(count, width).astype(np.int64)
        return bits @ (np.int64(1) << np.arange(width, dtype=np.int64))

    def next_elements(self, count: int, field: Field) -> np.ndarray:
        """``count`` uniform field elements as an int64 array."""
        width = field.bits
        if count == 0:
            return np.zeros(0, dtype=np.int64)
        if field.q == 1 << width:
            out = self._chunks(count, width)
            self._bitpos += count * width
            return out
        # rejection sampling on ceil(log2 q)-bit chunks
        out = []
        need = count
        while need:
            batch = int(need * (1 << width) / field.q) + 8
            vals = self._chunks(batch, width)
            ok = np.flatnonzero(vals < field.q)
            if len(ok) >= need:
                last = ok[need - 1]
                out.append(vals[ok[:need]])
                self._bitpos += (last + 1) * width
                need = 0
            else:
                out.append(vals[ok])
                self._bitpos += batch * width
                need -= len(ok)
        return np.concatenate(out)

    def next_fe(self, field: Field) -> int:
        return int(self.next_elements(1, field)[0])

    def next_array(self, m: int, n: int, field: Field) -> np.ndarray:
        """m x n array filled in column-major order."""
        return self.next_elements(m * n, field).reshape(n, m).T.copy()

    def next_matrix(self, m: int, n: int, field: Field):
        from minrank.matgf import MatGF

        return MatGF(field, self.next_array(m, n, field))


def prg_init(seed: bytes, tag: bytes | str) -> PrgStream:
    return PrgStream(seed, tag)


def next_fe(s: PrgStream, f: Field) -> int:
    return s.next_fe(f)


def next_matrix(s: PrgStream, m: int, n: int, f: Field):
    return s.next_matrix(m, n, f)


def derive_seed(master: bytes, label: bytes | str, index: int, nbytes: int = 16) -> bytes:
    """Per-trial seed, a pure function of ``(master, label, index)``."""
    if isinstance(label, str):
        label = label.encode("ascii")
    h = hashlib.shake_128(b"TRIAL" + bytes(master) + b"/" + label + b"/" + index.to_bytes(8, "little"))
    return h.digest(nbytes)
