import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from minrank.gf import GF
from minrank.prg import PrgStream, check_seed, derive_seed, next_fe, next_matrix, prg_init

VECTORS = json.loads((Path(__file__).parent / "data" / "prg_vectors.json").read_text())


def test_golden_prefix():
    seed = bytes.fromhex(VECTORS["seed"])
    assert prg_init(seed, VECTORS["tag"]).read(32).hex() == VECTORS["prefix32"]
    # the stream is plain SHAKE128 over seed || tag
    assert hashlib.shake_128(seed + b"PK").digest(32).hex() == VECTORS["prefix32"]


def test_golden_matrix():
    s = prg_init(bytes.fromhex(VECTORS["seed"]), VECTORS["tag"])
    assert next_matrix(s, 2, 2, GF(16)).a.tolist() == VECTORS["matrix_q16_2x2_rows"]


def test_determinism_and_domain_separation():
    seed = bytes(range(16))
    assert prg_init(seed, "PK").read(64) == prg_init(seed, "PK").read(64)
    assert prg_init(seed, "PK").read(64) != prg_init(seed, "SK").read(64)


def test_long_reads_are_a_prefix_of_the_xof():
    seed = b"\x07" * 16
    s = PrgStream(seed, b"T")
    parts = [s.read(n) for n in (1, 200, 5000, 3)]
    assert b"".join(parts) == hashlib.shake_128(seed + b"T").digest(5204)


class FixedStream(PrgStream):
    """Stream whose underlying bytes are given directly."""

    def __init__(self, data: bytes):
        super().__init__(bytes(16), b"")
        self._buf = data

    def _ensure(self, nbytes):
        if nbytes > len(self._buf):
            raise AssertionError("fixed stream exhausted")


def test_nibble_order():
    s = FixedStream(bytes([0xAB]))
    assert [next_fe(s, GF(16)), next_fe(s, GF(16))] == [0xB, 0xA]


def test_bit_order_gf2():
    s = FixedStream(bytes([0b00000110]))
    assert s.next_elements(8, GF(2)).tolist() == [0, 1, 1, 0, 0, 0, 0, 0]


def test_prime_rejection_rule():
    # GF(5) draws 3-bit chunks: 0b111=7 and 0b101=5 are rejected, then 0b011=3
    s = FixedStream(bytes([0b11101111]) + bytes(7))  # chunks 7, 5, 3, 0, ...
    assert s.next_elements(2, GF(5)).tolist() == [3, 0]


@pytest.mark.parametrize("q", [3, 13, 251, 65521])
def test_batch_equals_sequential(q):
    F = GF(q)
    a = PrgStream(b"\x01" * 16, "X")
    b = PrgStream(b"\x01" * 16, "X")
    batch = a.next_elements(500, F)
    seq = [b.next_fe(F) for _ in range(500)]
    assert batch.tolist() == seq
    assert a.next_fe(F) == b.next_fe(F)
    assert batch.max() < q


def test_chi_square_gf13():
    vals = PrgStream(b"\x02" * 16, "U").next_elements(100_000, GF(13))
    assert sps.chisquare(np.bincount(vals, minlength=13)).pvalue > 1e-3


def test_matrix_column_major_fill():
    F = GF(16)
    a = PrgStream(bytes(16), "M").next_array(3, 4, F)
    flat = PrgStream(bytes(16), "M").next_elements(12, F)
    assert a[:, 0].tolist() == flat[:3].tolist()
    assert a.T.reshape(-1).tolist() == flat.tolist()


def test_derive_seed():
    assert derive_seed(b"m", "A", 0) == derive_seed(b"m", "A", 0)
    assert derive_seed(b"m", "A", 0) != derive_seed(b"m", "A", 1)
    assert derive_seed(b"m", "A", 0) != derive_seed(b"m", "B", 0)
    assert len(derive_seed(b"m", "A", 0, 32)) == 32


def test_seed_length_check():
    assert check_seed(bytes(24), 192) == bytes(24)
    with pytest.raises(ValueError):
        check_seed(bytes(16), 256)
