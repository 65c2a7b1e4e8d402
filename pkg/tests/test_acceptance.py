"""End-to-end acceptance checks, one test per criterion."""

import time
from fractions import Fraction

import numpy as np

from oracles import keygen1_uniqueness_probability
from minrank import cli
from minrank.canonical import in_s_set, is_canonical, reduce_r
from minrank.keygen import decompress_pk, decompress_sk, keygen, keygen1, keygen3, alpha_system
from minrank.matgf import rank_array, vec_array
from minrank.params import MIRITH_SETS, TOY_SETS, resolve, mirith_params
from minrank.prg import derive_seed
from minrank.stats import (
    brute_solve_minrank, distribution_projection_test, enumerate_rank_counts, estimate_lemma,
    full_rank_failure_bound, gen_biased, gen_keygen3, gen_reduced_keygen1, rank_count, tau, toy_params,
)

MASTER = b"acceptance"

# reference public key bits (KeyGen1, KeyGen2, KeyGen3) per parameter set
REFERENCE_SIZES = {
    (128, 16, 15, 15, 78, 6): (1028, 716, 356),
    (128, 16, 16, 16, 142, 4): (1152, 584, 328),
    (192, 16, 19, 19, 109, 8): (1636, 1200, 592),
    (192, 16, 19, 19, 167, 6): (1636, 968, 512),
    (256, 16, 21, 21, 189, 7): (2020, 1264, 676),
    (256, 16, 22, 22, 254, 6): (2192, 1176, 648),
}


def roots(p, n, label):
    return [derive_seed(MASTER, label, i, p.seed_bytes) for i in range(n)]


def test_1_table_sizes(criterion):
    t0 = time.perf_counter()
    rows = cli.sizes_rows()
    elapsed = time.perf_counter() - t0
    got = {(r["lambda"], r["q"], r["m"], r["n"], r["k"], r["r"]): (r["pk1"], r["pk2"], r["pk3"]) for r in rows}
    matches = sum(got.get(key, (None,) * 3)[i] == want[i] for key, want in REFERENCE_SIZES.items() for i in range(3))
    criterion(1, matches == 18 and len(rows) == 6 and elapsed < 1.0,
              f"{matches}/18 public-key sizes match the reference sizes ({elapsed * 1e3:.1f} ms)")


def test_2_witness_validity(criterion):
    bad = []
    checked = 0
    for name in MIRITH_SETS:
        p = resolve(name)
        F = p.field
        for variant in (1, 2, 3):
            for root in roots(p, 100, f"c2/{name}/{variant}"):
                pk, sk = keygen(variant, root, p)
                inst = decompress_pk(pk, p)
                inst_sk, wit = decompress_sk(sk, p)
                ok = (inst == inst_sk and rank_array(F, wit.E.a) == p.r
                      and np.array_equal(inst.combine(wit.alpha), wit.E.a))
                if variant > 1:
                    ok = ok and is_canonical(inst)
                checked += 1
                if not ok:
                    bad.append((name, variant, root.hex()))
    criterion(2, not bad and checked == 1800,
              f"{checked - len(bad)}/{checked} keys (6 sets x 3 variants x 100) decompress to valid witnesses")


def test_3_alpha_system(criterion):
    plan = [(name, 300) for name in TOY_SETS] + [(name, 67) for name in MIRITH_SETS]
    total = bad = 0
    for name, count in plan:
        p = resolve(name)
        F = p.field
        nl = p.n - p.r
        for root in roots(p, count, f"c3/{name}"):
            inst, wit = decompress_sk(keygen3(root, p)[1], p)
            A, rhs = alpha_system(F, inst.mats[0][:, nl:], inst.mats[1:, :, nl:], wit.K.a, p.k)
            rows_ok = np.array_equal(F.matmul(A, wit.alpha[:, None])[:, 0], rhs)
            head_zero = not vec_array(inst.mats[0][:, :nl])[: p.k].any()
            total += 1
            bad += not (rows_ok and head_zero)
    criterion(3, bad == 0 and total >= 1000,
              f"{total - bad}/{total} keygen3 keys satisfy every row of the alpha system with <M0^L>_1..k = 0")


def enumeration_sizes():
    for q, max_cells in ((2, 20), (3, 12)):
        for m in range(1, max_cells + 1):
            for n in range(1, max_cells // m + 1):
                yield q, m, n


def test_4_rank_count_enumeration(criterion):
    t0 = time.perf_counter()
    mismatches = []
    sizes = list(enumeration_sizes())
    for q, m, n in sizes:
        assert q ** (m * n) <= 2 ** 20
        counts = enumerate_rank_counts(q, m, n)
        formula = [rank_count(q, m, n, r) for r in range(min(m, n) + 1)]
        if counts != formula or sum(formula) != q ** (m * n):
            mismatches.append((q, m, n))
    elapsed = time.perf_counter() - t0
    criterion(4, not mismatches and elapsed < 60,
              f"rank_count equals enumeration and sums to q^(mn) for {len(sizes) - len(mismatches)}/{len(sizes)} "
              f"(q, m, n) with q in {{2, 3}}, q^(mn) <= 2^20 ({elapsed:.1f} s)")


def test_5_bound_formulas(criterion):
    worst = Fraction(0)
    all_below = True
    for p in mirith_params():
        b = full_rank_failure_bound(p.q, p.m, p.r)
        worst = max(worst, b)
        # b < 2^-38.9  <=>  b^10 * 2^389 < 1, exactly
        all_below &= b ** 10 * 2 ** 389 < 1
    factor = (1 - tau(Fraction(1, 16))) ** -4
    ok = all_below and factor < Fraction(176, 100)
    criterion(5, ok, f"all six full-rank failure bounds < 2^-38.9 (largest 2^{np.log2(float(worst)):.2f}); "
                     f"(1 - tau(1/16))^-4 = {float(factor):.5f} < 1.76")


BOUND_TRIALS = 10_000


def bound_runs(q):
    p = toy_params(q)
    m, n, r = p.m, p.n, p.r
    yield estimate_lemma("FullRank", BOUND_TRIALS, MASTER, q=q, s=m, t=r)
    yield estimate_lemma("FullRank", BOUND_TRIALS, MASTER, q=q, s=n, t=n)
    yield estimate_lemma("Invertible", BOUND_TRIALS, MASTER, q=q, s=m)
    yield estimate_lemma("EInCalE", BOUND_TRIALS, MASTER, q=q, m=m, n=n, r=r)
    yield estimate_lemma("CanonicalReducible", BOUND_TRIALS, MASTER, params=p)
    yield estimate_lemma("IXInvertible", BOUND_TRIALS, MASTER, params=p)
    yield estimate_lemma("KUniform", BOUND_TRIALS, MASTER, q=q, m=m, n=n, r=r)
    yield estimate_lemma("ProductUniform", BOUND_TRIALS, MASTER, q=q, s=3, t=2)


def test_6_monte_carlo_suite(criterion):
    reports = [(q, rep) for q in (2, 3, 16) for rep in bound_runs(q)]
    for q, rep in reports:
        print(f"  q={q:<2} {rep}")
    failed = [f"q={q} {rep.kind}" for q, rep in reports if not rep.verdict]
    criterion(6, not failed, f"{len(reports) - len(failed)}/{len(reports)} Monte Carlo checks pass at q in {{2, 3, 16}}, "
                             f"{BOUND_TRIALS} trials each" + (f"; failed: {failed}" if failed else ""))


def test_7_reduction_success(criterion):
    p = toy_params(16)
    F = p.field
    successes = invalid = 0
    for root in roots(p, 10_000, "c7"):
        inst, wit = decompress_sk(keygen1(root, p)[1], p)
        res = reduce_r(inst, wit)
        if not res.ok:
            continue
        successes += 1
        E = res.instance.combine(res.alpha)
        valid = rank_array(F, E) == p.r and np.array_equal(E, wit.E.a)
        invalid += not (valid and in_s_set(res.instance, res.alpha, E, res.K))
    bound = (1 - tau(Fraction(1, 16))) ** 4
    est = Fraction(successes, 10_000)
    d = est - bound
    within = d >= 0 or d * d <= 9 * est * (1 - est) / 10_000
    others = [estimate_lemma("RSuccess", 10_000, MASTER, params=toy_params(q)) for q in (2, 3)]
    ok = within and invalid == 0 and all(r.verdict for r in others)
    criterion(7, ok, f"reduction success {float(est):.4f} >= {float(bound):.4f} at q=16 ({p.label()}); "
                     f"{successes - invalid}/{successes} successes valid and in S; q=2,3: "
                     + ", ".join(f"{float(r.estimate):.4f} >= {float(r.bound):.4f}" for r in others))


def test_8_distribution_equivalence(criterion):
    p = resolve("toy-2-3-3-2-1")
    honest = distribution_projection_test(gen_reduced_keygen1(p), gen_keygen3(p), None, 10_000, MASTER,
                                          p.seed_bytes)
    biased = distribution_projection_test(gen_biased(p), gen_keygen3(p), None, 10_000, MASTER + b"/bias",
                                          p.seed_bytes)
    pvals = {k: v for k, v in honest.details.items() if k.startswith("p[")}
    ok = honest.verdict and biased.details["p[alpha1]"] < 1e-3
    criterion(8, ok, f"{honest.successes} reduced vs {honest.details['samples_b']} keygen3 samples, "
                     f"min p = {honest.pvalue:.3g} ({', '.join(f'{k}={v:.3g}' for k, v in pvals.items())}); "
                     f"biased control p[alpha1] = {biased.details['p[alpha1]']:.3g}")


def test_9_oracle_equivalence(criterion):
    found = total = 0
    rates = {}
    for name in TOY_SETS:
        p = resolve(name)
        for variant in (1, 2, 3):
            unique = 0
            for root in roots(p, 100, f"c9/{name}/{variant}"):
                pk, sk = keygen(variant, root, p)
                sols = {a for a, _ in brute_solve_minrank(decompress_pk(pk, p))}
                alpha = tuple(decompress_sk(sk, p)[1].alpha.tolist())
                found += alpha in sols
                unique += len(sols) == 1
                total += 1
            rates[(name, variant)] = unique / 100
    exact = keygen1_uniqueness_probability(2, 3, 3, 2, 1)
    summary = "; ".join(f"{name} v{v}: {rate:.2f}" for (name, v), rate in rates.items())
    criterion(9, found == total, f"oracle recovers the planted alpha in {found}/{total} toy instances; "
                                 f"uniqueness rates {summary} (exact keygen1 value at q=2: {float(exact):.4f})")
