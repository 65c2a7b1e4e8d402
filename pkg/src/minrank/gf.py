"""Arithmetic in GF(p) and GF(2^e).

Elements are plain integers in ``[0, q)``. For ``GF(2^e)`` bit ``i`` of the
integer is the coefficient of ``x^i`` in the residue polynomial, so addition
is XOR. All vectorized helpers accept numpy arrays of dtype int64 and return
int64 arrays.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from minrank.errors import ZeroInverse, InvalidField

# Default reduction polynomials for GF(2^e), leading term included.
DEFAULT_MODULI = {
    2: 0b111,        # x^2 + x + 1
    3: 0b1011,       # x^3 + x + 1
    4: 0b10011,      # x^4 + x + 1
    5: 0b100101,     # x^5 + x^2 + 1
    6: 0b1000011,    # x^6 + x + 1
    7: 0b10000011,   # x^7 + x + 1
    8: 0x11B,        # x^8 + x^4 + x^3 + x + 1
}

MAX_PRIME = 1 << 16


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _poly_mod(a: int, f: int) -> int:
    df = f.bit_length() - 1
    while a.bit_length() - 1 >= df:
        a ^= f << (a.bit_length() - 1 - df)
    return a


def is_irreducible_gf2(f: int) -> bool:
    """Trial division of ``f`` by every binary polynomial of degree <= deg(f)/2."""
    deg = f.bit_length() - 1
    if deg < 1:
        return False
    for g in range(2, 1 << (deg // 2 + 1)):
        if _poly_mod(f, g) == 0:
            return False
    return True


class Field:
    """A finite field ``GF(q)`` with ``q = p`` or ``q = 2^e``.

    Instances are immutable; use :func:`GF` to get cached ones.
    """

    def __init__(self, p: int, e: int = 1, modulus: int | None = None):
        if not is_prime(p):
            raise InvalidField(f"characteristic {p} is not prime")
        if e < 1:
            raise InvalidField("extension degree must be positive")
        if e > 1 and p != 2:
            raise InvalidField("only GF(2^e) extension fields are supported")
        if e == 1 and p > MAX_PRIME:
            raise InvalidField(f"prime fields are limited to p <= {MAX_PRIME}")
        if e > 8:
            raise InvalidField("extension fields are limited to q <= 256")
        self.p = p
        self.e = e
        self.q = p ** e
        self.modulus = None
        if e > 1:
            modulus = DEFAULT_MODULI[e] if modulus is None else modulus
            if modulus.bit_length() - 1 != e or not is_irreducible_gf2(modulus):
                raise InvalidField(f"modulus {modulus:#x} is not an irreducible degree-{e} polynomial")
            self.modulus = modulus
        self._build_tables()

    @property
    def modulus_coeffs(self) -> tuple[int, ...] | None:
        """Reduction polynomial as a coefficient vector, constant term first."""
        if self.modulus is None:
            return None
        return tuple((self.modulus >> i) & 1 for i in range(self.e + 1))

    @property
    def char2(self) -> bool:
        return self.p == 2

    def _build_tables(self) -> None:
        q = self.q
        if self.e > 1:
            # log/antilog tables from a primitive element found by search
            for g in range(2, q):
                exp = [1]
                x = 1
                for _ in range(q - 2):
                    x = _poly_mod(_clmul(x, g), self.modulus)
                    exp.append(x)
                if len(set(exp)) == q - 1:
                    break
            exp_arr = np.array(exp + exp, dtype=np.int64)
            log_arr = np.zeros(q, dtype=np.int64)
            log_arr[exp_arr[: q - 1]] = np.arange(q - 1)
            a = np.arange(q)
            la, lb = log_arr[a][:, None], log_arr[a][None, :]
            mul = exp_arr[la + lb]
            mul[0, :] = 0
            mul[:, 0] = 0
            self._mul = mul
            inv = np.zeros(q, dtype=np.int64)
            inv[1:] = exp_arr[(q - 1 - log_arr[1:]) % (q - 1)]
            self._inv = inv
            # x^s mod f for s < 2e - 1, used by the bit-plane matrix product
            self._xpow = np.array([_poly_mod(1 << s, self.modulus) for s in range(2 * self.e - 1)], dtype=np.int64)
        else:
            p = self.p
            self._mul = None
            inv = np.zeros(q, dtype=np.int64)
            if p == 2:
                inv[1] = 1
            else:
                a = np.arange(1, p, dtype=np.int64)
                # Fermat inverse by vectorized square-and-multiply
                r = np.ones_like(a)
                base = a.copy()
                k = p - 2
                while k:
                    if k & 1:
                        r = r * base % p
                    base = base * base % p
                    k >>= 1
                inv[1:] = r
            self._inv = inv

    def __repr__(self) -> str:
        if self.e > 1:
            return f"GF({self.q}, modulus={self.modulus:#x})"
        return f"GF({self.q})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and (self.p, self.e, self.modulus) == (other.p, other.e, other.modulus)

    def __hash__(self) -> int:
        return hash((self.p, self.e, self.modulus))

    @property
    def bits(self) -> int:
        """Bits needed to hold one element, ``ceil(log2 q)``."""
        return (self.q - 1).bit_length()

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    # -- elementwise, broadcasting

    def add(self, a, b):
        if self.char2:
            return np.bitwise_xor(a, b)
        return (np.add(a, b)) % self.p

    def sub(self, a, b):
        if self.char2:
            return np.bitwise_xor(a, b)
        return (np.subtract(a, b)) % self.p

    def neg(self, a):
        if self.char2:
            return np.asarray(a).copy() if isinstance(a, np.ndarray) else a
        return np.negative(a) % self.p

    def mul(self, a, b):
        if self._mul is not None:
            return self._mul[a, b]
        if self.p == 2:
            return np.bitwise_and(a, b)
        return np.multiply(a, b, dtype=np.int64) % self.p

    def outer(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Products a_i * b_j for 1-D arrays."""
        if self._mul is not None:
            return self._mul[a][:, b]
        return self.mul(a[:, None], b[None, :])

    def inv(self, a):
        """Inverse; zero maps to zero. Use :func:`fe_inv` for the checked scalar version."""
        return self._inv[a]

    def sum(self, a, axis=None):
        """Field sum of array entries along ``axis``."""
        a = np.asarray(a)
        if self.char2:
            return np.bitwise_xor.reduce(a, axis=axis)
        return np.sum(a, axis=axis, dtype=np.int64) % self.p

    # -- matrices

    def matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Product of (stacks of) matrices over the field."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.e == 1:
            # exact: entries < 2^16, so inner sums stay far below 2^53
            C = np.matmul(A.astype(np.float64), B.astype(np.float64))
            return np.fmod(C, self.p).astype(np.int64)
        inner = A.shape[-1]
        if A.ndim == 2 and B.ndim == 2 and A.shape[0] * inner * B.shape[1] > 4096:
            return self._matmul_planes(A, B)
        prod = self._mul[A[..., :, :, None], B[..., None, :, :]]
        return np.bitwise_xor.reduce(prod, axis=-2)

    def _matmul_planes(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        # split into binary planes, one real matmul, recombine with x^(t+u)
        e = self.e
        m, n = A.shape[0], B.shape[1]
        Ap = np.concatenate([(A >> t) & 1 for t in range(e)], axis=0).astype(np.float64)
        Bp = np.concatenate([(B >> u) & 1 for u in range(e)], axis=1).astype(np.float64)
        P = (Ap @ Bp).astype(np.int64)
        acc = [np.zeros((m, n), dtype=np.int64) for _ in range(2 * e - 1)]
        for t in range(e):
            for u in range(e):
                acc[t + u] += P[t * m:(t + 1) * m, u * n:(u + 1) * n]
        out = np.zeros((m, n), dtype=np.int64)
        for s, c in enumerate(acc):
            out ^= (c & 1) * self._xpow[s]
        return out


@lru_cache(maxsize=None)
def GF(q: int, modulus: int | None = None) -> Field:
    """Cached field of order ``q`` (a prime, or a power of two up to 256)."""
    if q >= 4 and q & (q - 1) == 0:
        e = q.bit_length() - 1
        return Field(2, e, modulus)
    if modulus is not None:
        raise InvalidField("a modulus only applies to extension fields")
    return Field(q)


def _check(a: int, f: Field) -> None:
    if not 0 <= a < f.q:
        raise ValueError(f"{a} is not an element of {f}")


def fe_add(a: int, b: int, f: Field) -> int:
    _check(a, f)
    _check(b, f)
    return int(f.add(a, b))


def fe_sub(a: int, b: int, f: Field) -> int:
    _check(a, f)
    _check(b, f)
    return int(f.sub(a, b))


def fe_neg(a: int, f: Field) -> int:
    _check(a, f)
    return int(f.neg(a))


def fe_mul(a: int, b: int, f: Field) -> int:
    _check(a, f)
    _check(b, f)
    return int(f.mul(a, b))


def fe_inv(a: int, f: Field) -> int:
    _check(a, f)
    if a == 0:
        raise ZeroInverse("zero has no multiplicative inverse")
    return int(f.inv(a))


# -- wire encoding


def element_width_bytes(f: Field) -> float:
    """Bytes per element in the wire format: 0.5, 1 or 2."""
    if f.q <= 16:
        return 0.5
    if f.q <= 256:
        return 1
    return 2


def packed_len(count: int, f: Field) -> int:
    if f.q <= 16:
        return (count + 1) // 2
    if f.q <= 256:
        return count
    return 2 * count


def pack_elements(values, f: Field) -> bytes:
    """Nibbles (low first) for q <= 16, bytes for q <= 256, else 2 bytes little-endian."""
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    if f.q <= 16:
        if len(v) % 2:
            v = np.append(v, 0)
        return (v[0::2] | (v[1::2] << 4)).astype(np.uint8).tobytes()
    if f.q <= 256:
        return v.astype(np.uint8).tobytes()
    return v.astype("<u2").tobytes()


def unpack_elements(data: bytes, count: int, f: Field) -> np.ndarray:
    """Inverse of :func:`pack_elements`; raises ValueError on bad length, padding or range."""
    if len(data) != packed_len(count, f):
        raise ValueError(f"expected {packed_len(count, f)} bytes for {count} elements, got {len(data)}")
    raw = np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64)
    if f.q <= 16:
        v = np.empty(2 * len(raw), dtype=np.int64)
        v[0::2] = raw & 0xF
        v[1::2] = raw >> 4
        if len(v) > count and v[count:].any():
            raise ValueError("nonzero padding nibble")
        v = v[:count]
    elif f.q <= 256:
        v = raw
    else:
        v = np.frombuffer(bytes(data), dtype="<u2").astype(np.int64)
    if v.size and v.max() >= f.q:
        raise ValueError(f"encoded value out of range for {f}")
    return v
