"""Dense matrices over GF(q).

``MatGF`` is the public matrix type. Storage is a row-major int64 array;
``vectorize`` produces the column-major vector the key formats are defined on.
Positions into that vector are 1-based at the API boundary.

The hot paths (key generation, Monte Carlo) work on raw arrays through the
``*_array`` helpers and only wrap results in ``MatGF`` at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from minrank.errors import DimensionMismatch, IndexOutOfRange, InvalidSplit, RandomnessExhausted
from minrank.gf import Field

INVERTIBLE_ATTEMPTS = 100


class MatGF:
    __slots__ = ("field", "a")

    def __init__(self, field: Field, entries):
        a = np.array(entries, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatch(f"expected a non-empty 2-D matrix, got shape {a.shape}")
        if a.size and (a.min() < 0 or a.max() >= field.q):
            raise ValueError(f"entries out of range for {field}")
        self.field = field
        self.a = a

    @classmethod
    def _wrap(cls, field: Field, a: np.ndarray) -> "MatGF":
        obj = cls.__new__(cls)
        obj.field = field
        obj.a = a
        return obj

    @classmethod
    def zeros(cls, field: Field, m: int, n: int) -> "MatGF":
        return cls._wrap(field, np.zeros((m, n), dtype=np.int64))

    @classmethod
    def identity(cls, field: Field, s: int) -> "MatGF":
        return cls._wrap(field, np.eye(s, dtype=np.int64))

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    def _same(self, other: "MatGF") -> None:
        if not isinstance(other, MatGF):
            raise TypeError("expected a MatGF")
        if other.field != self.field:
            raise DimensionMismatch("matrices live over different fields")

    def __add__(self, other: "MatGF") -> "MatGF":
        self._same(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot add {self.shape} and {other.shape}")
        return MatGF._wrap(self.field, self.field.add(self.a, other.a))

    def __sub__(self, other: "MatGF") -> "MatGF":
        self._same(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot subtract {self.shape} and {other.shape}")
        return MatGF._wrap(self.field, self.field.sub(self.a, other.a))

    def __neg__(self) -> "MatGF":
        return MatGF._wrap(self.field, self.field.neg(self.a))

    def __matmul__(self, other: "MatGF") -> "MatGF":
        self._same(other)
        if self.n != other.m:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        return MatGF._wrap(self.field, self.field.matmul(self.a, other.a))

    def scale(self, c: int) -> "MatGF":
        return MatGF._wrap(self.field, self.field.mul(self.a, int(c)))

    @property
    def T(self) -> "MatGF":
        return MatGF._wrap(self.field, self.a.T.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatGF)
            and other.field == self.field
            and self.shape == other.shape
            and bool(np.array_equal(self.a, other.a))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"MatGF({self.field}, {self.a.tolist()})"

    def tolist(self) -> list[list[int]]:
        return self.a.tolist()

    def vectorize(self) -> np.ndarray:
        return vec_array(self.a)

    @classmethod
    def devectorize(cls, field: Field, v, m: int, n: int) -> "MatGF":
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (m * n,):
            raise DimensionMismatch(f"vector of length {v.size} cannot fill a {m}x{n} matrix")
        return cls(field, unvec_array(v, m, n))

    def vec_entry(self, i: int) -> int:
        if not 1 <= i <= self.m * self.n:
            raise IndexOutOfRange(f"index {i} outside 1..{self.m * self.n}")
        i -= 1
        return int(self.a[i % self.m, i // self.m])

    def split_lr(self, r: int) -> tuple["MatGF", "MatGF"]:
        if not 0 < r < self.n:
            raise InvalidSplit(f"need 0 < r < n, got r={r}, n={self.n}")
        return (MatGF._wrap(self.field, self.a[:, : self.n - r].copy()),
                MatGF._wrap(self.field, self.a[:, self.n - r:].copy()))

    def rank(self) -> int:
        return rank_array(self.field, self.a)


# -- array helpers


def vec_array(a: np.ndarray) -> np.ndarray:
    """Column-major flattening of the last two axes."""
    return np.swapaxes(a, -1, -2).reshape(*a.shape[:-2], -1)


def unvec_array(v: np.ndarray, m: int, n: int) -> np.ndarray:
    return np.swapaxes(v.reshape(*v.shape[:-1], n, m), -1, -2).copy()


def rank_array(F: Field, A: np.ndarray) -> int:
    """Row rank by Gaussian elimination, first nonzero entry as pivot."""
    A = np.array(A, dtype=np.int64)
    m, n = A.shape
    rk = 0
    for c in range(n):
        if rk == m:
            break
        nz = np.flatnonzero(A[rk:, c])
        if not len(nz):
            continue
        p = rk + nz[0]
        if p != rk:
            A[[rk, p]] = A[[p, rk]]
        A[rk] = F.mul(A[rk], F.inv(A[rk, c]))
        f = A[rk + 1:, c]
        A[rk + 1:] = F.sub(A[rk + 1:], F.outer(f, A[rk]))
        rk += 1
    return rk


def rank_batch(F: Field, X: np.ndarray) -> np.ndarray:
    """Ranks of a stack of matrices, shape (N, m, n) -> (N,)."""
    X = np.array(X, dtype=np.int64)
    if X.shape[2] > X.shape[1]:
        X = np.swapaxes(X, 1, 2).copy()
    N, m, n = X.shape
    if F.q == 2 and m <= 62:
        return _rank_batch_gf2(X)
    rk = np.zeros(N, dtype=np.int64)
    rows = np.arange(m)
    idx = np.arange(N)
    for c in range(n):
        cand = (X[:, :, c] != 0) & (rows[None, :] >= rk[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        sel = idx[has]
        p = cand[has].argmax(axis=1)
        r = rk[has]
        prow = X[sel, p].copy()
        X[sel, p] = X[sel, r]
        prow = F.mul(prow, F.inv(prow[:, c])[:, None])
        X[sel, r] = prow
        f = X[sel, :, c] * (rows[None, :] > r[:, None])
        X[sel] = F.sub(X[sel], F.mul(f[:, :, None], prow[:, None, :]))
        rk[has] += 1
    return rk


def _rank_batch_gf2(X: np.ndarray) -> np.ndarray:
    """GF(2) ranks with each column packed into one integer (m >= n)."""
    N, m, n = X.shape
    C = (X << np.arange(m, dtype=np.int64)[None, :, None]).sum(axis=1)
    for i in range(n):
        piv = C[:, i]
        low = piv & -piv
        for j in range(i + 1, n):
            C[:, j] ^= np.where(C[:, j] & low, piv, 0)
    return np.count_nonzero(C, axis=1)


def rref_array(F: Field, A: np.ndarray, ncols: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form, pivoting only within the first ``ncols`` columns."""
    A = np.array(A, dtype=np.int64)
    m, n = A.shape
    ncols = n if ncols is None else ncols
    pivots = []
    rk = 0
    for c in range(ncols):
        if rk == m:
            break
        nz = np.flatnonzero(A[rk:, c])
        if not len(nz):
            continue
        p = rk + nz[0]
        if p != rk:
            A[[rk, p]] = A[[p, rk]]
        A[rk] = F.mul(A[rk], F.inv(A[rk, c]))
        f = A[:, c].copy()
        f[rk] = 0
        A = F.sub(A, F.outer(f, A[rk]))
        pivots.append(c)
        rk += 1
    return A, pivots


def ct_solve_array(F: Field, A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    """Gauss-Jordan on ``[A | b]`` with a data-independent operation sequence.

    Every column runs the same steps whatever the entries are: a masked row
    addition repairs a zero pivot, the pivot row is scaled by its inverse
    (zero maps to zero) and eliminated from all other rows. Singularity is
    accumulated in a flag and only inspected by the caller. numpy gives no
    timing guarantees; the point is that no Python branch depends on secret
    values.
    """
    A = np.asarray(A, dtype=np.int64)
    k = A.shape[0]
    aug = np.concatenate([A, np.asarray(b, dtype=np.int64).reshape(k, 1)], axis=1)
    rows = np.arange(k)
    ok = np.int64(1)
    for c in range(k):
        below = (aug[:, c] != 0) & (rows > c)
        first = (below & (np.cumsum(below) == 1)).astype(np.int64)
        w = first * (aug[c, c] == 0)
        # w has at most one nonzero entry, so the integer product is a field row
        aug[c] = F.add(aug[c], w @ aug)
        piv = aug[c, c]
        ok &= piv != 0
        aug[c] = F.mul(aug[c], F.inv(piv))
        f = aug[:, c] * (rows != c)
        aug = F.sub(aug, F.outer(f, aug[c]))
    return aug[:, k], bool(ok)


# -- public operations


def mat_add(A: MatGF, B: MatGF) -> MatGF:
    return A + B


def mat_mul(A: MatGF, B: MatGF) -> MatGF:
    return A @ B


def mat_transpose(A: MatGF) -> MatGF:
    return A.T


def mat_scale(c: int, A: MatGF) -> MatGF:
    return A.scale(c)


def vectorize(A: MatGF) -> np.ndarray:
    return A.vectorize()


def devectorize(field: Field, v, m: int, n: int) -> MatGF:
    return MatGF.devectorize(field, v, m, n)


def vec_entry(A: MatGF, i: int) -> int:
    return A.vec_entry(i)


def split_lr(A: MatGF, r: int) -> tuple[MatGF, MatGF]:
    return A.split_lr(r)


def join_lr(AL: MatGF, AR: MatGF) -> MatGF:
    AL._same(AR)
    if AL.m != AR.m:
        raise DimensionMismatch("left and right blocks must have the same row count")
    return MatGF._wrap(AL.field, np.concatenate([AL.a, AR.a], axis=1))


def rank(A: MatGF) -> int:
    return A.rank()


def rank_leakfree(A: MatGF, prg) -> int:
    """rank(S A T) for fresh random invertible S, T drawn from ``prg``."""
    F = A.field
    S = sample_invertible_array(prg, A.m, F)
    T = sample_invertible_array(prg, A.n, F)
    return rank_array(F, F.matmul(F.matmul(S, A.a), T))


def solve_linear(A: MatGF, b) -> np.ndarray | None:
    """Unique x with A x = b, or None when A is singular."""
    if A.m != A.n:
        raise DimensionMismatch("solve_linear needs a square matrix")
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    if b.size != A.m:
        raise DimensionMismatch(f"right-hand side has length {b.size}, expected {A.m}")
    x, ok = ct_solve_array(A.field, A.a, b)
    return x if ok else None


def solve_k_array(F: Field, E: np.ndarray, r: int) -> np.ndarray | None:
    m, n = E.shape
    aug = np.concatenate([E[:, n - r:], E[:, : n - r]], axis=1)
    red, pivots = rref_array(F, aug, ncols=r)
    if len(pivots) < r:
        return None
    if red[r:, r:].any():
        return None
    return red[:r, r:].copy()


def solve_k_matrix(E: MatGF, r: int) -> MatGF | None:
    """The unique K with E^L = E^R K, or None when E^R lacks full column rank."""
    if not 0 < r < E.n:
        raise InvalidSplit(f"need 0 < r < n, got r={r}, n={E.n}")
    K = solve_k_array(E.field, E.a, r)
    return None if K is None else MatGF._wrap(E.field, K)


@dataclass(frozen=True)
class RankRSample:
    E: MatGF
    S: MatGF
    T: MatGF


def sample_uniform(prg, m: int, n: int, field: Field) -> MatGF:
    return MatGF._wrap(field, prg.next_array(m, n, field))


def sample_invertible_array(prg, s: int, field: Field) -> np.ndarray:
    for _ in range(INVERTIBLE_ATTEMPTS):
        A = prg.next_array(s, s, field)
        if rank_array(field, A) == s:
            return A
    raise RandomnessExhausted(f"no invertible {s}x{s} matrix in {INVERTIBLE_ATTEMPTS} draws")


def sample_invertible(prg, s: int, field: Field) -> MatGF:
    return MatGF._wrap(field, sample_invertible_array(prg, s, field))


def sample_rank_r_array(prg, m: int, n: int, r: int, field: Field):
    if not 0 <= r <= min(m, n):
        raise ValueError(f"rank {r} impossible for a {m}x{n} matrix")
    S = sample_invertible_array(prg, m, field)
    T = sample_invertible_array(prg, n, field)
    if r == 0:
        return np.zeros((m, n), dtype=np.int64), S, T
    # S L T with L = (I_r 0; 0 0) keeps the first r columns of S and rows of T
    return field.matmul(S[:, :r], T[:r, :]), S, T


def sample_rank_r(prg, m: int, n: int, r: int, field: Field) -> RankRSample:
    E, S, T = sample_rank_r_array(prg, m, n, r, field)
    return RankRSample(MatGF._wrap(field, E), MatGF._wrap(field, S), MatGF._wrap(field, T))
