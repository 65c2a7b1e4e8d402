"""Counting formulas, probability bounds and Monte Carlo checks.

Bounds are exact ``Fraction`` values and every lower/upper-bound verdict is
decided in rational arithmetic: ``estimate >= bound - 3 sigma`` is tested as
``d >= 0 or d^2 <= 9 p(1-p)/N`` with ``d = estimate - bound``. Chi-square
p-values come from scipy and are the only floats that drive a verdict.

Trials are seeded individually from ``(master_seed, label, index)``, so a
report depends only on the master seed and the trial count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats as sps

from minrank.canonical import Stage, reduce_r
from minrank.errors import InsufficientSamples, InvalidKindParams, InvalidRank, NonPositiveInput, TooLarge
from minrank.gf import GF, Field
from minrank.keygen import MinRankInstance, SecretKey, decompress_sk, keygen3, alpha_system, uniform_stack
from minrank.matgf import rank_array, rank_batch, sample_rank_r_array, solve_k_array, vec_array
from minrank.params import Params, resolve
from minrank.prg import PrgStream, derive_seed

TAU_CAP = Fraction(72, 100)
TAU_SLOPE = Fraction(21, 10)
CHI2_ALPHA = 1e-3
SIGMAS = 3


def tau(x) -> Fraction:
    """min(0.72, 2.1 x), exactly."""
    x = Fraction(x)
    if x <= 0:
        raise NonPositiveInput(f"tau needs x > 0, got {x}")
    return min(TAU_CAP, TAU_SLOPE * x)


def rank_count(q: int, m: int, n: int, r: int) -> int:
    """Number of m x n matrices of rank r over GF(q)."""
    if not 0 <= r <= min(m, n):
        raise InvalidRank(f"rank {r} impossible for {m}x{n}")
    num = 1
    den = 1
    for i in range(r):
        num *= (q ** m - q ** i) * (q ** n - q ** i)
        den *= q ** r - q ** i
    count, rem = divmod(num, den)
    assert rem == 0
    return count


def truncated_tail_product(q: int, s: int, terms: int) -> Fraction:
    """prod_{j=s}^{s+terms-1} (1 - q^-j)."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    out = Fraction(1)
    for j in range(s, s + terms):
        out *= 1 - Fraction(1, q ** j)
    return out


def full_rank_failure_bound(q: int, s: int, t: int) -> Fraction:
    """Upper bound tau(q^(-|s-t|-1)) on Pr[uniform s x t matrix is rank deficient]."""
    if s < 1 or t < 1:
        raise ValueError("s and t must be positive")
    return tau(Fraction(1, q ** (abs(s - t) + 1)))


def invertible_probability(q: int, s: int) -> Fraction:
    """Exact fraction of invertible s x s matrices."""
    return Fraction(rank_count(q, s, s, s), q ** (s * s))


# -- reports


@dataclass
class TrialReport:
    kind: str
    trials: int
    successes: int
    bound: Fraction | None = None
    direction: str = "lower"  # lower | upper | chi2
    pvalue: float | None = None
    details: dict = dc_field(default_factory=dict)

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.successes, self.trials) if self.trials else Fraction(0)

    @property
    def sigma(self) -> float:
        p = self.estimate
        return math.sqrt(float(p * (1 - p)) / self.trials) if self.trials else 0.0

    @property
    def verdict(self) -> bool:
        if self.direction == "chi2":
            return self.pvalue is not None and self.pvalue > CHI2_ALPHA
        p = self.estimate
        d = p - self.bound if self.direction == "lower" else self.bound - p
        return d >= 0 or d * d <= SIGMAS ** 2 * p * (1 - p) / self.trials

    CSV_HEADER = "kind,trials,successes,estimate,bound,sigma,pvalue,verdict"

    def csv_row(self) -> str:
        bound = "" if self.bound is None else f"{float(self.bound):.6f}"
        pval = "" if self.pvalue is None else f"{self.pvalue:.6g}"
        return (f"{self.kind},{self.trials},{self.successes},{float(self.estimate):.6f},"
                f"{bound},{self.sigma:.6f},{pval},{'pass' if self.verdict else 'fail'}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "trials": self.trials,
            "successes": self.successes,
            "estimate": float(self.estimate),
            "bound": None if self.bound is None else float(self.bound),
            "direction": self.direction,
            "sigma": self.sigma,
            "pvalue": self.pvalue,
            "verdict": "pass" if self.verdict else "fail",
            "details": self.details,
        }

    def __str__(self) -> str:
        tag = "PASS" if self.verdict else "FAIL"
        if self.direction == "chi2":
            return f"[{tag}] {self.kind}: n={self.successes}/{self.trials} chi2 p={self.pvalue:.4g} (> {CHI2_ALPHA})"
        rel = ">=" if self.direction == "lower" else "<="
        return (f"[{tag}] {self.kind}: {self.successes}/{self.trials} = {float(self.estimate):.5f} "
                f"{rel} {float(self.bound):.5f} (3 sigma = {SIGMAS * self.sigma:.5f})")


# -- chi-square helpers


def _codes(values: np.ndarray, q: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if values.ndim == 1:
        return values
    weights = q ** np.arange(values.shape[1] - 1, -1, -1, dtype=np.int64)
    return values @ weights


def _joint_width(q: int, available: int, samples: int) -> int:
    """Largest c <= available with at least 10 expected samples per cell."""
    c = 1
    while c < available and q ** (c + 1) * 10 <= samples:
        c += 1
    return c


def chi2_uniform(values: np.ndarray, q: int) -> float:
    """p-value for ``values`` (rows of field elements) being uniform on GF(q)^c."""
    values = np.asarray(values, dtype=np.int64)
    c = 1 if values.ndim == 1 else values.shape[1]
    counts = np.bincount(_codes(values, q), minlength=q ** c)
    return float(sps.chisquare(counts).pvalue)


def chi2_two_sample(a, b) -> float:
    """p-value of the homogeneity test between two categorical samples."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    cells = np.union1d(a, b)
    if len(cells) < 2:
        return 1.0
    ca = np.array([np.count_nonzero(a == c) for c in cells])
    cb = np.array([np.count_nonzero(b == c) for c in cells])
    return float(sps.chi2_contingency(np.stack([ca, cb]), correction=False).pvalue)


# -- samplers


def uniform_rank_r_array(stream: PrgStream, m: int, n: int, r: int, F: Field, max_draws: int = 100000) -> np.ndarray:
    """Uniform m x n matrix of rank exactly r.

    Rejection from uniform matrices when that accepts at least 5% of draws,
    otherwise S L T with uniform invertible S, T (the same distribution,
    since invertible S, T act transitively on rank-r matrices).
    """
    accept = Fraction(rank_count(F.q, m, n, r), F.q ** (m * n))
    if accept >= Fraction(1, 20):
        for _ in range(max_draws):
            A = stream.next_array(m, n, F)
            if rank_array(F, A) == r:
                return A
        raise RuntimeError("rank-r rejection sampler did not terminate")
    return sample_rank_r_array(stream, m, n, r, F)[0]


def _streams(master_seed: bytes, label: str, trials: int):
    for i in range(trials):
        yield PrgStream(derive_seed(master_seed, label, i), label)


# -- Monte Carlo estimators


class Kind(str, enum.Enum):
    FULL_RANK = "FullRank"
    INVERTIBLE = "Invertible"
    E_IN_CAL_E = "EInCalE"
    K_UNIFORM = "KUniform"
    CANONICAL_REDUCIBLE = "CanonicalReducible"
    IX_INVERTIBLE = "IXInvertible"
    PRODUCT_UNIFORM = "ProductUniform"
    R_SUCCESS = "RSuccess"


# default toy dimensions per field order: (m, n, k, r)
TOY_DIMS = {2: (3, 3, 2, 1), 3: (4, 4, 3, 2)}
DEFAULT_TOY_DIMS = (4, 4, 3, 2)


def toy_params(q: int) -> Params:
    m, n, k, r = TOY_DIMS.get(q, DEFAULT_TOY_DIMS)
    return resolve(f"toy-{q}-{m}-{n}-{k}-{r}")


def _need(kw: dict, *names):
    missing = [name for name in names if kw.get(name) is None]
    if missing:
        raise InvalidKindParams(f"missing parameters: {', '.join(missing)}")
    return [kw[name] for name in names]


def estimate_lemma(kind: Kind | str, trials: int, master_seed: bytes, **kw) -> TrialReport:
    """Monte Carlo check of one probability statement.

    Parameters by kind:

    - FullRank: ``q, s, t``; Invertible: ``q, s``; ProductUniform: ``q, s, t``
    - EInCalE, KUniform: ``q, m, n, r``
    - CanonicalReducible, IXInvertible, RSuccess: ``params`` (a Params)
    """
    kind = Kind(kind)
    if trials < 1000:
        raise InvalidKindParams("at least 1000 trials are required")
    label = kind.value
    if kind in (Kind.FULL_RANK, Kind.INVERTIBLE):
        if kind is Kind.INVERTIBLE:
            q, s = _need(kw, "q", "s")
            t = s
        else:
            q, s, t = _need(kw, "q", "s", "t")
        F = GF(q)
        X = np.stack([st.next_array(s, t, F) for st in _streams(master_seed, label, trials)])
        ok = int(np.count_nonzero(rank_batch(F, X) == min(s, t)))
        bound = 1 - full_rank_failure_bound(q, s, t)
        return TrialReport(label, trials, ok, bound, details={"q": q, "s": s, "t": t})

    if kind in (Kind.E_IN_CAL_E, Kind.K_UNIFORM):
        q, m, n, r = _need(kw, "q", "m", "n", "r")
        if not 0 < r < n or r > m:
            raise InvalidKindParams("need 0 < r < n and r <= m")
        F = GF(q)
        E = np.stack([uniform_rank_r_array(st, m, n, r, F) for st in _streams(master_seed, "E", trials)])
        in_cal_e = rank_batch(F, E[:, :, n - r:]) == r
        ok = int(np.count_nonzero(in_cal_e))
        details = {"q": q, "m": m, "n": n, "r": r}
        if kind is Kind.E_IN_CAL_E:
            return TrialReport(label, trials, ok, 1 - tau(Fraction(1, q)), details=details)
        Ks = np.stack([vec_array(solve_k_array(F, e, r)) for e in E[in_cal_e]])
        c = _joint_width(q, Ks.shape[1], len(Ks))
        details["entries"] = c
        return TrialReport(label, trials, ok, direction="chi2", pvalue=chi2_uniform(Ks[:, :c], q), details=details)

    if kind is Kind.PRODUCT_UNIFORM:
        q, s, t = _need(kw, "q", "s", "t")
        F = GF(q)
        AB, CA = [], []
        for st in _streams(master_seed, label, trials):
            # lower triangular with nonzero diagonal: invertible, far from uniform on GL_s
            A = np.tril(st.next_array(s, s, F), -1)
            d = st.next_elements(s, F)
            A[np.diag_indices(s)] = np.where(d == 0, 1, d)
            B = st.next_array(s, t, F)
            C = st.next_array(t, s, F)
            AB.append(vec_array(F.matmul(A, B)))
            CA.append(vec_array(F.matmul(C, A)))
        c = _joint_width(q, s * t, trials)
        p_ab = chi2_uniform(np.stack(AB)[:, :c], q)
        p_ca = chi2_uniform(np.stack(CA)[:, :c], q)
        return TrialReport(label, trials, trials, direction="chi2", pvalue=min(p_ab, p_ca),
                           details={"q": q, "s": s, "t": t, "entries": c, "p_AB": p_ab, "p_CA": p_ca})

    params = kw.get("params")
    if not isinstance(params, Params):
        raise InvalidKindParams(f"{label} needs a Params instance as 'params'")
    F = params.field
    m, n, k, r = params.m, params.n, params.k, params.r
    q = params.q
    details = {"params": params.label()}
    one_minus_tau = 1 - tau(Fraction(1, q))

    if kind is Kind.CANONICAL_REDUCIBLE:
        L1 = np.stack([vec_array(uniform_stack(st, k, m, n, F))[:, :k] for st in _streams(master_seed, label, trials)])
        ok = int(np.count_nonzero(rank_batch(F, L1) == k))
        return TrialReport(label, trials, ok, one_minus_tau, details=details)

    if kind is Kind.IX_INVERTIBLE:
        mats = []
        for st in _streams(master_seed, label, trials):
            N = uniform_stack(st, k, m, r, F)
            K = st.next_array(r, n - r, F)
            A, _ = alpha_system(F, np.zeros((m, r), dtype=np.int64), N, K, k)
            mats.append(A)
        ok = int(np.count_nonzero(rank_batch(F, np.stack(mats)) == k))
        return TrialReport(label, trials, ok, one_minus_tau ** 2, details=details)

    if kind is Kind.R_SUCCESS:
        stages = run_reduction(params, trials, master_seed)
        counts = {s.value: stages.count(s) for s in Stage}
        details.update(counts)
        return TrialReport(label, trials, counts[Stage.SUCCESS.value], one_minus_tau ** 4, details=details)

    raise InvalidKindParams(f"unhandled kind {kind}")  # pragma: no cover


def run_reduction(params: Params, trials: int, master_seed: bytes) -> list[Stage]:
    """Outcome of the canonical reduction on ``trials`` fresh KeyGen1 keys."""
    out = []
    for i in range(trials):
        root = derive_seed(master_seed, "RSuccess", i, params.seed_bytes)
        inst, wit = decompress_sk(SecretKey(1, root), params)
        out.append(reduce_r(inst, wit).stage)
    return out


def stage_reports(params: Params, stages: list[Stage]) -> list[TrialReport]:
    """Per-step abort frequencies, each conditioned on reaching the step."""
    t = tau(Fraction(1, params.q))
    reached = len(stages)
    reports = []
    for stage, bound in ((Stage.E_NOT_IN_CAL_E, t), (Stage.NOT_REDUCIBLE, t), (Stage.IX_SINGULAR, 1 - (1 - t) ** 2)):
        aborted = stages.count(stage)
        reports.append(TrialReport(f"abort:{stage.value}", reached, aborted, bound, direction="upper",
                                   details={"params": params.label()}))
        reached -= aborted
    return reports


# -- brute force oracle


def brute_solve_minrank(inst: MinRankInstance, chunk: int = 1 << 15) -> list[tuple[tuple[int, ...], int]]:
    """Every alpha in GF(q)^k with rank(M0 + sum alpha_i Mi) <= r, by enumeration."""
    p = inst.params
    F = inst.field
    k = inst.k
    if p.q ** k > 1 << 24:
        raise TooLarge(f"q^k = {p.q ** k} exceeds 2^24")
    flat = inst.mats.reshape(k + 1, -1)
    found = []
    total = p.q ** k
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        alphas = (idx[:, None] // (p.q ** np.arange(k - 1, -1, -1, dtype=np.int64))[None, :]) % p.q
        E = F.add(flat[0][None, :], F.matmul(alphas, flat[1:]))
        ranks = rank_batch(F, E.reshape(-1, p.m, p.n))
        for j in np.flatnonzero(ranks <= p.r):
            found.append((tuple(int(x) for x in alphas[j]), int(ranks[j])))
    return found


def enumerate_rank_counts(q: int, m: int, n: int, chunk: int = 1 << 16) -> list[int]:
    """How many of the q^(mn) matrices have each rank 0..min(m, n), by enumeration."""
    F = GF(q)
    total = q ** (m * n)
    counts = np.zeros(min(m, n) + 1, dtype=np.int64)
    place = q ** np.arange(m * n, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        X = (idx[:, None] // place[None, :]) % q
        counts += np.bincount(rank_batch(F, X.reshape(-1, m, n)), minlength=len(counts))
    return counts.tolist()


# -- distribution comparison


class Sample(NamedTuple):
    instance: MinRankInstance
    alpha: np.ndarray
    K: np.ndarray


Generator = Callable[[bytes], "Sample | None"]


def gen_reduced_keygen1(params: Params) -> Generator:
    """Canonical forms produced by the reduction from KeyGen1 keys (None on abort)."""
    def gen(seed: bytes):
        inst, wit = decompress_sk(SecretKey(1, seed), params)
        res = reduce_r(inst, wit)
        return Sample(res.instance, res.alpha, res.K) if res.ok else None
    return gen


def gen_keygen3(params: Params) -> Generator:
    def gen(seed: bytes):
        _, sk = keygen3(seed, params)
        inst, wit = decompress_sk(sk, params)
        return Sample(inst, wit.alpha, wit.K.a)
    return gen


def gen_biased(params: Params) -> Generator:
    """KeyGen3 output with the solution overwritten by zero; a control for test power."""
    base = gen_keygen3(params)

    def gen(seed: bytes):
        s = base(seed)
        return s._replace(alpha=np.zeros_like(s.alpha))
    return gen


def _proj_m0(s: Sample) -> int:
    return int(vec_array(s.instance.mats[0])[s.instance.k])


def _proj_pair(s: Sample) -> int:
    inst = s.instance
    p = inst.params
    return int(vec_array(inst.mats[1])[inst.k]) * p.q + int(inst.mats[0][0, p.n - p.r])


PROJECTIONS: dict[str, Callable[[Sample], int]] = {
    "M0[k+1]": _proj_m0,
    "(M1[k+1],M0R[1])": _proj_pair,
    "alpha1": lambda s: int(s.alpha[0]),
    "K11": lambda s: int(s.K[0, 0]),
}

MIN_SAMPLES = 100


def _collect(gen: Generator, master_seed: bytes, label: str, want: int, seed_bytes: int, max_attempts: int):
    out = []
    attempts = 0
    while len(out) < want and attempts < max_attempts:
        s = gen(derive_seed(master_seed, label, attempts, seed_bytes))
        attempts += 1
        if s is not None:
            out.append(s)
    return out, attempts


def distribution_projection_test(gen_a: Generator, gen_b: Generator, projections: dict[str, Callable] | None,
                                 trials: int, master_seed: bytes, seed_bytes: int = 16,
                                 max_attempts_factor: int = 50) -> TrialReport:
    """Two-sample chi-square on each projection of ``trials`` samples per side.

    Passes when no projection rejects at significance 1e-3.
    """
    projections = PROJECTIONS if projections is None else projections
    cap = max_attempts_factor * trials
    a, att_a = _collect(gen_a, master_seed, "A", trials, seed_bytes, cap)
    b, att_b = _collect(gen_b, master_seed, "B", trials, seed_bytes, cap)
    if min(len(a), len(b)) < MIN_SAMPLES:
        raise InsufficientSamples(f"only {len(a)} / {len(b)} samples collected")
    pvals = {}
    for name, proj in projections.items():
        pvals[name] = chi2_two_sample([proj(s) for s in a], [proj(s) for s in b])
    details = {"attempts_a": att_a, "attempts_b": att_b, "samples_b": len(b), **{f"p[{k}]": v for k, v in pvals.items()}}
    return TrialReport("Distribution", att_a, len(a), direction="chi2", pvalue=min(pvals.values()), details=details)


def uniqueness_rate(instances: list[MinRankInstance]) -> Fraction:
    """Fraction of instances whose brute-force solution set has exactly one element."""
    unique = sum(1 for inst in instances if len(brute_solve_minrank(inst)) == 1)
    return Fraction(unique, len(instances))
