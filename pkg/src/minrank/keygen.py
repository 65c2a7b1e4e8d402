"""The three MinRank key generators, key decompression and key sizes.

Variant 1 stores all of M0 next to the public seed. Variant 2 samples
M1..Mk with the identity pattern on their first k vectorized entries and
picks alpha so that the first k entries of M0 vanish. Variant 3 also fixes
E^L = E^R K and solves a k x k system for alpha, so only the entries of
M0^L past position k are stored.

Seed plumbing::

    root --"ROOT"--> seed_pk || seed_sk        (v3: repeated per attempt)
    seed_pk --"PK"--> M1..Mk                   (v3: M0^R first)
    seed_sk --"SK"--> alpha, E = S L T         (v1)
                      E = S L T                (v2)
                      K                        (v3)
    seed_sk --"MASK"--> masking matrices for the rank test (v3)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from minrank.errors import (
    InternalInconsistency,
    InvalidParams,
    MalformedKey,
    RetryLimitExceeded,
)
from minrank.gf import Field, pack_elements, packed_len, unpack_elements
from minrank.matgf import (
    MatGF,
    ct_solve_array,
    rank_array,
    rank_leakfree,
    sample_rank_r_array,
    unvec_array,
    vec_array,
)
from minrank.params import Params
from minrank.prg import PrgStream, check_seed

VARIANTS = (1, 2, 3)
KEYGEN3_MAX_ATTEMPTS = 1000


@dataclass(frozen=True, eq=False)
class MinRankInstance:
    """M0..Mk stacked in one (k+1, m, n) array, M0 first."""

    params: Params
    mats: np.ndarray

    @property
    def field(self) -> Field:
        return self.params.field

    @property
    def k(self) -> int:
        return self.mats.shape[0] - 1

    @property
    def M0(self) -> MatGF:
        return MatGF._wrap(self.field, self.mats[0])

    def matrix(self, i: int) -> MatGF:
        return MatGF._wrap(self.field, self.mats[i])

    def combine(self, alpha) -> np.ndarray:
        """M0 + sum alpha_i Mi as an array."""
        return combine(self.field, self.mats[0], alpha, self.mats[1:])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MinRankInstance)
            and other.params == self.params
            and np.array_equal(other.mats, self.mats)
        )


@dataclass(frozen=True, eq=False)
class Witness:
    alpha: np.ndarray
    E: MatGF
    K: MatGF | None = None

    def check(self, inst: MinRankInstance) -> bool:
        """rank(E) = r and E = M0 + sum alpha_i Mi (and E^L = E^R K if K is set)."""
        p = inst.params
        F = inst.field
        if len(self.alpha) != inst.k or self.E.shape != (p.m, p.n):
            return False
        if not np.array_equal(inst.combine(self.alpha), self.E.a):
            return False
        if rank_array(F, self.E.a) != p.r:
            return False
        if self.K is not None:
            ER = self.E.a[:, p.n - p.r:]
            if not np.array_equal(F.matmul(ER, self.K.a), self.E.a[:, : p.n - p.r]):
                return False
        return True


@dataclass(frozen=True)
class PublicKey:
    variant: int
    seed_pk: bytes
    payload: np.ndarray

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PublicKey)
            and (self.variant, self.seed_pk) == (other.variant, other.seed_pk)
            and np.array_equal(self.payload, other.payload)
        )

    def to_bytes(self, params: Params) -> bytes:
        return self.seed_pk + pack_elements(self.payload, params.field)

    @classmethod
    def from_bytes(cls, blob: bytes, params: Params, variant: int) -> "PublicKey":
        _check_variant(variant)
        count = payload_len(params, variant)
        sb = params.seed_bytes
        expected = sb + packed_len(count, params.field)
        if len(blob) != expected:
            raise MalformedKey(f"public key must be {expected} bytes, got {len(blob)}")
        try:
            payload = unpack_elements(blob[sb:], count, params.field)
        except ValueError as exc:
            raise MalformedKey(str(exc)) from exc
        return cls(variant, bytes(blob[:sb]), payload)


@dataclass(frozen=True)
class SecretKey:
    variant: int
    seed_sk: bytes
    seed_pk: bytes | None = None

    def to_bytes(self) -> bytes:
        if self.variant == 3:
            return self.seed_pk + self.seed_sk
        return self.seed_sk

    @classmethod
    def from_bytes(cls, blob: bytes, params: Params, variant: int) -> "SecretKey":
        _check_variant(variant)
        sb = params.seed_bytes
        if variant == 3:
            if len(blob) != 2 * sb:
                raise MalformedKey(f"secret key must be {2 * sb} bytes, got {len(blob)}")
            return cls(3, bytes(blob[sb:]), bytes(blob[:sb]))
        if len(blob) != sb:
            raise MalformedKey(f"secret key must be {sb} bytes, got {len(blob)}")
        return cls(variant, bytes(blob))


def _check_variant(variant: int) -> None:
    if variant not in VARIANTS:
        raise InvalidParams(f"variant must be 1, 2 or 3, got {variant}")


# -- sizes


def payload_len(p: Params, variant: int) -> int:
    """Number of field elements stored in a public key."""
    _check_variant(variant)
    if variant == 1:
        return p.m * p.n
    if variant == 2:
        return p.m * p.n - p.k
    return p.m * (p.n - p.r) - p.k


def pk_size_bits(p: Params, variant: int) -> int:
    """lambda + count * log2(q), rounded up when log2(q) is not an integer."""
    count = payload_len(p, variant)
    return p.lam + (p.q ** count - 1).bit_length()


def sk_size_bits(p: Params, variant: int) -> int:
    _check_variant(variant)
    return 2 * p.lam if variant == 3 else p.lam


# -- expansion helpers


def combine(F: Field, M0: np.ndarray, alpha, Ms: np.ndarray) -> np.ndarray:
    """M0 + sum_i alpha_i Ms[i]."""
    k = Ms.shape[0]
    if k == 0:
        return M0.copy()
    shape = Ms.shape[1:]
    lin = F.matmul(np.asarray(alpha, dtype=np.int64).reshape(1, k), Ms.reshape(k, -1)).reshape(shape)
    return F.add(M0, lin)


def uniform_stack(stream: PrgStream, count: int, m: int, n: int, F: Field) -> np.ndarray:
    """``count`` uniform m x n matrices, each filled column-major."""
    v = stream.next_elements(count * m * n, F).reshape(count, m * n)
    return unvec_array(v, m, n)


def patterned_stack(stream: PrgStream, k: int, m: int, n: int, F: Field) -> np.ndarray:
    """M1..Mk with <Mi>_j = delta_ij for j <= k; the other mn - k entries are drawn."""
    v = stream.next_elements(k * (m * n - k), F).reshape(k, m * n - k)
    v = np.concatenate([np.eye(k, dtype=np.int64), v], axis=1)
    return unvec_array(v, m, n)


def _split_root(root: bytes, p: Params) -> tuple[bytes, bytes]:
    s = PrgStream(root, "ROOT")
    return s.read(p.seed_bytes), s.read(p.seed_bytes)


# -- variant 1


def _expand_v1(root: bytes, p: Params):
    F = p.field
    seed_pk, seed_e = _split_root(root, p)
    Ms = uniform_stack(PrgStream(seed_pk, "PK"), p.k, p.m, p.n, F)
    sks = PrgStream(seed_e, "SK")
    alpha = sks.next_elements(p.k, F)
    E, _, _ = sample_rank_r_array(sks, p.m, p.n, p.r, F)
    M0 = F.sub(E, combine(F, np.zeros_like(E), alpha, Ms))
    return seed_pk, Ms, alpha, E, M0


def keygen1(root: bytes, p: Params) -> tuple[PublicKey, SecretKey]:
    root = check_seed(root, p.lam)
    seed_pk, _, _, _, M0 = _expand_v1(root, p)
    return PublicKey(1, seed_pk, vec_array(M0)), SecretKey(1, root)


# -- variant 2


def _expand_v2(root: bytes, p: Params):
    F = p.field
    seed_pk, seed_e = _split_root(root, p)
    Ms = patterned_stack(PrgStream(seed_pk, "PK"), p.k, p.m, p.n, F)
    E, _, _ = sample_rank_r_array(PrgStream(seed_e, "SK"), p.m, p.n, p.r, F)
    alpha = vec_array(E)[: p.k].copy()
    M0 = F.sub(E, combine(F, np.zeros_like(E), alpha, Ms))
    return seed_pk, Ms, alpha, E, M0


def keygen2(root: bytes, p: Params) -> tuple[PublicKey, SecretKey]:
    root = check_seed(root, p.lam)
    seed_pk, _, _, _, M0 = _expand_v2(root, p)
    v = vec_array(M0)
    assert not v[: p.k].any()
    return PublicKey(2, seed_pk, v[p.k:].copy()), SecretKey(2, root)


# -- variant 3


class V3State(NamedTuple):
    M0R: np.ndarray
    Ms: np.ndarray
    K: np.ndarray
    alpha: np.ndarray | None
    ER: np.ndarray | None


def alpha_system(F: Field, M0R: np.ndarray, MsR: np.ndarray, K: np.ndarray, k: int):
    """Matrix I - X and right-hand side of the alpha system.

    X[i][j] = <Mj^R K>_i and rhs_i = <M0^R K>_i for i, j <= k.
    """
    count, m, r = MsR.shape
    prods = F.matmul(MsR.reshape(count * m, r), K).reshape(count, m, -1)
    X = vec_array(prods)[:, :k].T
    rhs = vec_array(F.matmul(M0R, K))[:k]
    return F.sub(np.eye(k, dtype=np.int64), X), rhs


def _expand_v3(seed_pk: bytes, seed_sk: bytes, p: Params) -> V3State:
    F = p.field
    m, n, k, r = p.m, p.n, p.k, p.r
    pks = PrgStream(seed_pk, "PK")
    M0R = pks.next_array(m, r, F)
    Ms = patterned_stack(pks, k, m, n, F)
    K = PrgStream(seed_sk, "SK").next_array(r, n - r, F)
    A, rhs = alpha_system(F, M0R, Ms[:, :, n - r:], K, k)
    alpha, ok = ct_solve_array(F, A, rhs)
    if not ok:
        return V3State(M0R, Ms, K, None, None)
    ER = combine(F, M0R, alpha, Ms[:, :, n - r:])
    return V3State(M0R, Ms, K, alpha, ER)


def _m0_left(F: Field, st: V3State, p: Params) -> np.ndarray:
    nl = p.n - p.r
    return F.sub(F.matmul(st.ER, st.K), combine(F, np.zeros((p.m, nl), dtype=np.int64), st.alpha, st.Ms[:, :, :nl]))


def keygen3_attempts(root: bytes, p: Params) -> tuple[PublicKey, SecretKey, int]:
    """keygen3 that also reports how many attempts the retry loop used."""
    root = check_seed(root, p.lam)
    F = p.field
    seeds = PrgStream(root, "ROOT")
    for attempt in range(1, KEYGEN3_MAX_ATTEMPTS + 1):
        seed_pk = seeds.read(p.seed_bytes)
        seed_sk = seeds.read(p.seed_bytes)
        st = _expand_v3(seed_pk, seed_sk, p)
        if st.alpha is None:
            continue
        if rank_leakfree(MatGF._wrap(F, st.ER), PrgStream(seed_sk, "MASK")) < p.r:
            continue
        v = vec_array(_m0_left(F, st, p))
        if v[: p.k].any():
            raise InternalInconsistency("alpha system solution does not clear the first k entries of M0^L")
        return PublicKey(3, seed_pk, v[p.k:].copy()), SecretKey(3, seed_sk, seed_pk), attempt
    raise RetryLimitExceeded(f"keygen3 failed {KEYGEN3_MAX_ATTEMPTS} times for {p.label()}")


def keygen3(root: bytes, p: Params) -> tuple[PublicKey, SecretKey]:
    pk, sk, _ = keygen3_attempts(root, p)
    return pk, sk


def keygen(variant: int, root: bytes, p: Params) -> tuple[PublicKey, SecretKey]:
    _check_variant(variant)
    return (keygen1, keygen2, keygen3)[variant - 1](root, p)


# -- decompression


def decompress_pk(pk: PublicKey, p: Params) -> MinRankInstance:
    _check_variant(pk.variant)
    F = p.field
    m, n, k, r = p.m, p.n, p.k, p.r
    if len(pk.seed_pk) != p.seed_bytes:
        raise MalformedKey("public seed has the wrong length")
    payload = np.asarray(pk.payload, dtype=np.int64)
    if payload.shape != (payload_len(p, pk.variant),):
        raise MalformedKey(f"payload has {payload.size} elements, expected {payload_len(p, pk.variant)}")
    if payload.size and (payload.min() < 0 or payload.max() >= p.q):
        raise MalformedKey("payload entry out of range")
    pks = PrgStream(pk.seed_pk, "PK")
    if pk.variant == 1:
        Ms = uniform_stack(pks, k, m, n, F)
        M0 = unvec_array(payload, m, n)
    elif pk.variant == 2:
        Ms = patterned_stack(pks, k, m, n, F)
        M0 = unvec_array(np.concatenate([np.zeros(k, dtype=np.int64), payload]), m, n)
    else:
        M0R = pks.next_array(m, r, F)
        Ms = patterned_stack(pks, k, m, n, F)
        M0L = unvec_array(np.concatenate([np.zeros(k, dtype=np.int64), payload]), m, n - r)
        M0 = np.concatenate([M0L, M0R], axis=1)
    return MinRankInstance(p, np.concatenate([M0[None], Ms], axis=0))


def decompress_sk(sk: SecretKey, p: Params) -> tuple[MinRankInstance, Witness]:
    _check_variant(sk.variant)
    F = p.field
    if len(sk.seed_sk) != p.seed_bytes:
        raise MalformedKey("secret seed has the wrong length")
    if sk.variant in (1, 2):
        expand = _expand_v1 if sk.variant == 1 else _expand_v2
        _, Ms, alpha, E, M0 = expand(sk.seed_sk, p)
        inst = MinRankInstance(p, np.concatenate([M0[None], Ms], axis=0))
        return inst, Witness(alpha, MatGF._wrap(F, E))
    if sk.seed_pk is None or len(sk.seed_pk) != p.seed_bytes:
        raise MalformedKey("variant 3 secret key must carry seed_pk")
    st = _expand_v3(sk.seed_pk, sk.seed_sk, p)
    if st.alpha is None:
        raise InternalInconsistency("alpha system is singular for this secret key")
    M0L = _m0_left(F, st, p)
    M0 = np.concatenate([M0L, st.M0R], axis=1)
    E = np.concatenate([F.matmul(st.ER, st.K), st.ER], axis=1)
    inst = MinRankInstance(p, np.concatenate([M0[None], st.Ms], axis=0))
    return inst, Witness(st.alpha, MatGF._wrap(F, E), MatGF._wrap(F, st.K))
