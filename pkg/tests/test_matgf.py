import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from minrank.errors import DimensionMismatch, IndexOutOfRange, InvalidSplit
from minrank.gf import GF
from minrank.matgf import (
    MatGF, devectorize, join_lr, mat_add, mat_mul, mat_scale, mat_transpose, rank, rank_array, rank_batch,
    rank_leakfree, sample_invertible, sample_rank_r, sample_uniform, solve_k_matrix, solve_linear, split_lr,
    vec_entry, vectorize,
)
from minrank.prg import PrgStream
from minrank.stats import uniform_rank_r_array

F2, F3, F16 = GF(2), GF(3), GF(16)


def M(F, rows):
    return MatGF(F, rows)


def random_mat(rng, F, m, n):
    return MatGF(F, rng.integers(0, F.q, (m, n)))


def test_algebra_examples():
    rng = np.random.default_rng(0)
    A = random_mat(rng, F16, 3, 4)
    assert mat_mul(MatGF.identity(F16, 3), A) == A
    assert mat_add(A, A) == MatGF.zeros(F16, 3, 4)
    assert mat_mul(M(F2, [[1, 1], [0, 1]]), M(F2, [[1, 0], [1, 1]])) == M(F2, [[0, 1], [1, 1]])
    assert mat_transpose(A).shape == (4, 3)
    assert mat_scale(1, A) == A
    with pytest.raises(DimensionMismatch):
        mat_mul(A, A)
    with pytest.raises(DimensionMismatch):
        mat_add(A, random_mat(rng, F16, 4, 3))


def test_vectorize_column_major():
    A = M(GF(5), [[1, 2], [3, 4]])
    assert vectorize(A).tolist() == [1, 3, 2, 4]
    assert vec_entry(MatGF.identity(F2, 3), 1) == 1
    assert devectorize(F2, [0, 1, 1, 0], 2, 2) == M(F2, [[0, 1], [1, 0]])
    assert [vec_entry(A, i) for i in range(1, 5)] == [1, 3, 2, 4]
    with pytest.raises(IndexOutOfRange):
        vec_entry(A, 0)
    with pytest.raises(IndexOutOfRange):
        vec_entry(A, 5)


@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_vectorize_roundtrip(m, n, data):
    vals = data.draw(st.lists(st.integers(0, 15), min_size=m * n, max_size=m * n))
    A = devectorize(F16, vals, m, n)
    assert vectorize(A).tolist() == vals
    assert devectorize(F16, vectorize(A), m, n) == A


def test_split_join():
    I3 = MatGF.identity(F3, 3)
    L, R = split_lr(I3, 1)
    assert L.a.tolist() == [[1, 0], [0, 1], [0, 0]]
    assert R.a.tolist() == [[0], [0], [1]]
    rng = np.random.default_rng(1)
    A = random_mat(rng, F16, 4, 5)
    for r in range(1, 5):
        assert join_lr(*split_lr(A, r)) == A
    for bad in (0, 5, 7):
        with pytest.raises(InvalidSplit):
            split_lr(A, bad)


def test_split_constructed_e():
    rng = np.random.default_rng(2)
    ER = random_mat(rng, F16, 5, 2)
    K = random_mat(rng, F16, 2, 3)
    E = join_lr(mat_mul(ER, K), ER)
    L, R = split_lr(E, 2)
    assert mat_mul(R, K) == L


def test_rank_examples():
    assert rank(MatGF.identity(F16, 5)) == 5
    assert rank(MatGF.zeros(F3, 3, 4)) == 0
    assert rank(M(F2, [[1, 1], [1, 1]])) == 1


@pytest.mark.parametrize("F", [F2, F3, F16], ids=["q2", "q3", "q16"])
def test_rank_properties(F):
    rng = np.random.default_rng(F.q)
    for _ in range(200):
        m, n = rng.integers(1, 7, 2)
        A = random_mat(rng, F, m, n)
        rk = rank(A)
        assert rk == rank(A.T) <= min(m, n)
        S = sample_invertible(PrgStream(rng.bytes(16), "S"), m, F)
        T = sample_invertible(PrgStream(rng.bytes(16), "T"), n, F)
        assert rank(S @ A @ T) == rk


@pytest.mark.parametrize("q", [2, 3, 16])
def test_rank_batch_matches_rank(q):
    F = GF(q)
    rng = np.random.default_rng(7)
    for shape in [(300, 3, 5), (300, 6, 2), (100, 8, 8)]:
        X = rng.integers(0, q, shape)
        # low-rank members so that every rank shows up
        X[::3] = F.matmul(X[::3, :, :1], X[::3, :1, :])
        assert rank_batch(F, X).tolist() == [rank_array(F, x) for x in X]


def test_rank_leakfree_agrees():
    rng = np.random.default_rng(3)
    prg = PrgStream(bytes(16), "MASK")
    for _ in range(10_000):
        m, n = rng.integers(1, 9, 2)
        r = rng.integers(0, min(m, n) + 1)
        a = F16.matmul(rng.integers(0, 16, (m, r)), rng.integers(0, 16, (r, n))) if r else np.zeros((m, n), int)
        A = MatGF(F16, a)
        assert rank_leakfree(A, prg) == rank(A)
    assert rank_leakfree(MatGF.identity(F16, 4), prg) == 4
    assert rank_leakfree(MatGF.zeros(F16, 4, 4), prg) == 0


def test_solve_linear_examples():
    b = np.array([3, 1, 4])
    assert solve_linear(MatGF.identity(GF(5), 3), b).tolist() == b.tolist()
    assert solve_linear(MatGF.zeros(F3, 2, 2), [1, 0]) is None
    assert solve_linear(M(F3, [[2, 1], [1, 1]]), [1, 2]).tolist() == [2, 0]


@pytest.mark.parametrize("q", [2, 3, 16])
def test_solve_linear_iff_full_rank(q):
    F = GF(q)
    rng = np.random.default_rng(q + 10)
    seen = set()
    for _ in range(400):
        k = int(rng.integers(1, 6))
        A = random_mat(rng, F, k, k)
        b = rng.integers(0, q, k)
        x = solve_linear(A, b)
        full = rank(A) == k
        seen.add(full)
        assert (x is not None) == full
        if full:
            assert np.array_equal(F.matmul(A.a, x[:, None])[:, 0], b)
    assert seen == {True, False}


def test_solve_k_examples():
    assert solve_k_matrix(M(F2, [[1, 1], [0, 0]]), 1).a.tolist() == [[1]]
    E = M(F16, [[0, 3], [0, 7], [0, 1]])
    assert solve_k_matrix(E, 1).a.tolist() == [[0]]
    rng = np.random.default_rng(4)
    for _ in range(50):
        ER = sample_rank_r(PrgStream(rng.bytes(16), "E"), 6, 3, 3, F16).E
        K0 = random_mat(rng, F16, 3, 4)
        assert solve_k_matrix(join_lr(ER @ K0, ER), 3) == K0


@pytest.mark.parametrize("m,n", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_solve_k_characterization_exhaustive(m, n):
    """For every rank-r E over GF(2): K exists iff E^R has full column rank."""
    total = 1 << (m * n)
    X = ((np.arange(total)[:, None] >> np.arange(m * n)) & 1).reshape(total, m, n)
    ranks = rank_batch(F2, X)
    for r in range(1, n):
        for E in X[ranks == r]:
            K = solve_k_matrix(MatGF(F2, E), r)
            full = rank_array(F2, E[:, n - r:]) == r
            assert (K is not None) == full
            if full:
                assert np.array_equal(F2.matmul(E[:, n - r:], K.a), E[:, :n - r])


def test_sample_rank_r():
    prg = PrgStream(bytes(16), "R")
    assert sample_rank_r(prg, 3, 4, 0, F16).E == MatGF.zeros(F16, 3, 4)
    for F in (F2, F3, F16):
        for r in range(4):
            s = sample_rank_r(prg, 4, 5, r, F)
            assert rank(s.E) == r
            assert rank(s.S) == 4 and rank(s.T) == 5
            L = np.zeros((4, 5), dtype=np.int64)
            L[range(r), range(r)] = 1
            assert s.E == s.S @ MatGF(F, L) @ s.T


def _codes(mats):
    flat = np.stack([vectorize(m) if isinstance(m, MatGF) else m.T.reshape(-1) for m in mats])
    return flat @ (1 << np.arange(flat.shape[1]))


def test_sample_uniform_chi_square():
    prg = PrgStream(b"\x05" * 16, "U")
    X = np.stack([sample_uniform(prg, 2, 2, F2).a for _ in range(100_000)])
    assert sps.chisquare(np.bincount(X.reshape(-1), minlength=2)).pvalue > 1e-3
    assert sps.chisquare(np.bincount(_codes(X), minlength=16)).pvalue > 1e-3


def test_rank_r_samplers_agree():
    """S L T sampling and rejection sampling give the same law on rank-1 2x2 over GF(2)."""
    prg_a = PrgStream(b"\x06" * 16, "SLT")
    prg_b = PrgStream(b"\x06" * 16, "REJ")
    n = 20_000
    a = _codes([sample_rank_r(prg_a, 2, 2, 1, F2).E.a for _ in range(n)])
    b = _codes([uniform_rank_r_array(prg_b, 2, 2, 1, F2) for _ in range(n)])
    cells = np.unique(np.concatenate([a, b]))
    assert len(cells) == 9
    table = np.stack([np.bincount(a, minlength=16)[cells], np.bincount(b, minlength=16)[cells]])
    assert sps.chi2_contingency(table).pvalue > 1e-3
    assert sps.chisquare(table[0]).pvalue > 1e-3


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32))
def test_transpose_rank_property(m, n, seed):
    A = sample_uniform(PrgStream(seed.to_bytes(16, "little"), "H"), m, n, F3)
    assert rank(A) == rank(mat_transpose(A))
