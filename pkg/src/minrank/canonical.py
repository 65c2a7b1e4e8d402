"""Canonical form of MinRank instances and the KeyGen1 -> canonical reduction.

Stack the vectorized matrices as rows, M1..Mk first and M0 last::

    L = ( L1   | L2 )      L1: k x k
        ( ell1 | ell2 )    ell1: 1 x k

When L1 is invertible the instance reduces to the rows of
``( I | L1^-1 L2 ; 0 | ell2 - ell1 L1^-1 L2 )`` and a solution alpha maps
to ``alpha L1 + ell1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from minrank.errors import DimensionMismatch
from minrank.keygen import MinRankInstance, Witness, alpha_system
from minrank.matgf import ct_solve_array, rank_array, rref_array, solve_k_array, unvec_array, vec_array


def build_l_matrix(inst: MinRankInstance) -> np.ndarray:
    """(k+1) x mn array with rows <M1>, ..., <Mk>, <M0>."""
    v = vec_array(inst.mats)
    return np.concatenate([v[1:], v[:1]], axis=0)


def l_blocks(L: np.ndarray, k: int):
    """(L1, L2, ell1, ell2)."""
    return L[:k, :k], L[:k, k:], L[k, :k], L[k, k:]


@dataclass(frozen=True, eq=False)
class CanonicalReduction:
    instance: MinRankInstance
    L1: np.ndarray
    L1_inv: np.ndarray
    ell1: np.ndarray


def invert_array(F, A: np.ndarray) -> np.ndarray | None:
    k = A.shape[0]
    red, pivots = rref_array(F, np.concatenate([A, np.eye(k, dtype=np.int64)], axis=1), ncols=k)
    if len(pivots) < k:
        return None
    return red[:, k:].copy()


def to_canonical(inst: MinRankInstance) -> CanonicalReduction | None:
    """Canonical form of ``inst``, or None when L1 is singular."""
    F = inst.field
    k = inst.k
    p = inst.params
    L = build_l_matrix(inst)
    L1, L2, ell1, ell2 = l_blocks(L, k)
    L1_inv = invert_array(F, L1)
    if L1_inv is None:
        return None
    top = F.matmul(L1_inv, L2)
    bottom = F.sub(ell2, F.matmul(ell1[None, :], top)[0])
    rows = np.zeros((k + 1, p.m * p.n), dtype=np.int64)
    rows[:k, :k] = np.eye(k, dtype=np.int64)
    rows[:k, k:] = top
    rows[k, k:] = bottom
    mats = unvec_array(np.concatenate([rows[k:], rows[:k]], axis=0), p.m, p.n)
    return CanonicalReduction(MinRankInstance(p, mats), L1.copy(), L1_inv, ell1.copy())


def transform_solution(alpha, red: CanonicalReduction) -> np.ndarray:
    """alpha' = alpha L1 + ell1."""
    alpha = np.asarray(alpha, dtype=np.int64).reshape(-1)
    k = red.L1.shape[0]
    if alpha.size != k:
        raise DimensionMismatch(f"alpha has length {alpha.size}, expected {k}")
    F = red.instance.field
    return F.add(F.matmul(alpha[None, :], red.L1)[0], red.ell1)


def is_canonical(inst: MinRankInstance) -> bool:
    k = inst.k
    v = vec_array(inst.mats)
    return not v[0, :k].any() and np.array_equal(v[1:, :k], np.eye(k, dtype=np.int64))


class Stage(enum.Enum):
    SUCCESS = "success"
    E_NOT_IN_CAL_E = "EnotInCalE"
    NOT_REDUCIBLE = "NotReducible"
    IX_SINGULAR = "IXSingular"


@dataclass(frozen=True, eq=False)
class ReductionResult:
    stage: Stage
    instance: MinRankInstance | None = None
    alpha: np.ndarray | None = None
    K: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.stage is Stage.SUCCESS


def reduce_r(inst: MinRankInstance, wit: Witness) -> ReductionResult:
    """Map a KeyGen1 instance and its solution to canonical form.

    Aborts at the first failing step: E^R not of full column rank, L1
    singular, or I - X singular for X[i][j] = <M'_j^R K>_i.
    """
    p = inst.params
    F = inst.field
    K = solve_k_array(F, wit.E.a, p.r)
    if K is None:
        return ReductionResult(Stage.E_NOT_IN_CAL_E)
    red = to_canonical(inst)
    if red is None:
        return ReductionResult(Stage.NOT_REDUCIBLE, K=K)
    alpha = transform_solution(wit.alpha, red)
    cmats = red.instance.mats
    A, _ = alpha_system(F, cmats[0][:, p.n - p.r:], cmats[1:, :, p.n - p.r:], K, p.k)
    if rank_array(F, A) < p.k:
        return ReductionResult(Stage.IX_SINGULAR, red.instance, alpha, K)
    return ReductionResult(Stage.SUCCESS, red.instance, alpha, K)


def in_s_set(inst: MinRankInstance, alpha, E: np.ndarray, K: np.ndarray) -> bool:
    """Membership of (instance, E, alpha) in the set every KeyGen3 output lies in.

    Canonical form, E of rank r with E^L = E^R K, E = M0 + sum alpha_i Mi, and
    alpha the unique solution of (I - X) x = rhs built from the instance and K.
    """
    p = inst.params
    F = inst.field
    nl = p.n - p.r
    if not is_canonical(inst):
        return False
    if rank_array(F, E) != p.r or rank_array(F, E[:, nl:]) != p.r:
        return False
    if not np.array_equal(F.matmul(E[:, nl:], K), E[:, :nl]):
        return False
    if not np.array_equal(inst.combine(alpha), E):
        return False
    A, rhs = alpha_system(F, inst.mats[0][:, nl:], inst.mats[1:, :, nl:], K, p.k)
    x, ok = ct_solve_array(F, A, rhs)
    return ok and np.array_equal(x, np.asarray(alpha))
