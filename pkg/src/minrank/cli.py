"""``minrank`` command line.

Exit codes: 0 success, 1 failed verification or statistical verdict,
2 invalid parameters or usage, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from fractions import Fraction
from pathlib import Path

from minrank import stats
from minrank.canonical import is_canonical
from minrank.errors import InvalidParams, MalformedKey, MinRankError
from minrank.keygen import (
    PublicKey,
    SecretKey,
    decompress_pk,
    decompress_sk,
    keygen,
    pk_size_bits,
    sk_size_bits,
)
from minrank.params import MIRITH_SETS, Params, resolve

EXIT_FAIL = 1
EXIT_PARAMS = 2
EXIT_IO = 3

SEED_ENV = "MINRANK_SEED"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _params(args, default_set: str | None = None) -> Params:
    explicit = [args.q, args.m, args.n, args.k, args.r]
    try:
        if args.set:
            return resolve(args.set)
        if all(v is not None for v in explicit):
            return Params(args.q, args.m, args.n, args.k, args.r, args.lam or 128)
        if default_set:
            return resolve(default_set)
    except InvalidParams as exc:
        raise CliError(EXIT_PARAMS, str(exc)) from exc
    raise CliError(EXIT_PARAMS, "give --set NAME or all of --q --m --n --k --r")


def _seed(args, nbytes: int | None) -> bytes:
    text = args.seed or os.environ.get(SEED_ENV)
    if text is None:
        if nbytes is None:
            return bytes(16)
        return os.urandom(nbytes)
    try:
        seed = bytes.fromhex(text)
    except ValueError as exc:
        raise CliError(EXIT_PARAMS, f"seed is not valid hex: {text!r}") from exc
    if nbytes is not None and len(seed) != nbytes:
        raise CliError(EXIT_PARAMS, f"seed must be {nbytes} bytes ({2 * nbytes} hex digits), got {len(seed)}")
    return seed


def _emit(args, text: str, payload) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _read_hex(path: str) -> bytes:
    try:
        text = Path(path).read_text().strip()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    try:
        return bytes.fromhex(text)
    except ValueError as exc:
        raise CliError(EXIT_FAIL, f"{path} does not contain hex") from exc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


# -- keygen / verify


def cmd_keygen(args) -> int:
    p = _params(args)
    root = _seed(args, p.seed_bytes)
    pk, sk = keygen(args.variant, root, p)
    pk_blob, sk_blob = pk.to_bytes(p), sk.to_bytes()
    out = Path(args.out)
    pk_path, sk_path = out.with_name(out.name + ".pk"), out.with_name(out.name + ".sk")
    _write(pk_path, pk_blob.hex() + "\n")
    _write(sk_path, sk_blob.hex() + "\n")
    info = {
        "set": p.label(),
        "variant": args.variant,
        "pk_bits": pk_size_bits(p, args.variant),
        "pk_bytes": len(pk_blob),
        "sk_bits": sk_size_bits(p, args.variant),
        "sk_bytes": len(sk_blob),
        "pk_file": str(pk_path),
        "sk_file": str(sk_path),
    }
    _emit(args, "\n".join(f"{k}: {v}" for k, v in info.items()), info)
    return 0


def cmd_verify(args) -> int:
    p = _params(args)
    pk_blob = _read_hex(args.pk)
    sk_blob = _read_hex(args.sk)
    try:
        pk = PublicKey.from_bytes(pk_blob, p, args.variant)
        sk = SecretKey.from_bytes(sk_blob, p, args.variant)
        inst = decompress_pk(pk, p)
        inst_sk, wit = decompress_sk(sk, p)
    except MinRankError as exc:
        raise CliError(EXIT_FAIL, f"malformed key: {exc}") from exc
    valid = wit.check(inst)
    info = {
        "set": p.label(),
        "variant": args.variant,
        "witness": "valid" if valid else "invalid",
        "instances_match": inst == inst_sk,
        "canonical": "yes" if is_canonical(inst) else "no",
    }
    _emit(args, "\n".join(f"{k}: {v}" for k, v in info.items()), info)
    return 0 if valid else EXIT_FAIL


# -- sizes


def sizes_rows() -> list[dict]:
    rows = []
    for name in MIRITH_SETS:
        p = resolve(name)
        rows.append({
            "name": name, "lambda": p.lam, "q": p.q, "m": p.m, "n": p.n, "k": p.k, "r": p.r,
            **{f"pk{v}": pk_size_bits(p, v) for v in (1, 2, 3)},
        })
    return rows


SIZES_COLUMNS = ("name", "lambda", "q", "m", "n", "k", "r", "pk1", "pk2", "pk3")
SIZES_HEADER = ("set", "lambda", "q", "m", "n", "k", "r", "KeyGen1", "KeyGen2", "KeyGen3")


def sizes_text(rows: list[dict]) -> str:
    widths = (12, 6, 3, 3, 3, 4, 2, 8, 8, 8)
    lines = ["  ".join(h.rjust(w) if i else h.ljust(w) for i, (h, w) in enumerate(zip(SIZES_HEADER, widths)))]
    for row in rows:
        cells = [str(row[c]) for c in SIZES_COLUMNS]
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths))))
    return "\n".join(lines)


def sizes_csv(rows: list[dict]) -> str:
    lines = [",".join(SIZES_HEADER)]
    lines += [",".join(str(row[c]) for c in SIZES_COLUMNS) for row in rows]
    return "\n".join(lines)


def cmd_sizes(args) -> int:
    rows = sizes_rows()
    if args.format == "csv":
        print(sizes_csv(rows))
    else:
        _emit(args, sizes_text(rows), rows)
    if args.out:
        out = Path(args.out)
        _write(out / "sizes.csv", sizes_csv(rows) + "\n")
        if not args.no_plot:
            from minrank.report import plot_sizes
            plot_sizes(rows, out / "sizes.png")
    return 0


# -- stats

STAT_KINDS = ("fullrank", "invertible", "ecal", "kuniform", "canonical", "ix", "product", "rsuccess",
              "stages", "distribution", "all")


def _stat_params(args) -> Params:
    if args.set or all(v is not None for v in (args.m, args.n, args.k, args.r)):
        if args.q is None and not args.set:
            raise CliError(EXIT_PARAMS, "--q is required with explicit dimensions")
        return _params(args)
    return stats.toy_params(args.q or 16)


def _run_stat(kind: str, args, seed: bytes) -> list:
    q = args.q or 16
    n_trials = args.trials
    if kind in ("fullrank", "invertible", "product"):
        s = args.s or 4
        t = args.t or (3 if kind == "fullrank" else 2)
        name = {"fullrank": "FullRank", "invertible": "Invertible", "product": "ProductUniform"}[kind]
        kw = {"q": q, "s": s} if kind == "invertible" else {"q": q, "s": s, "t": t}
        return [stats.estimate_lemma(name, n_trials, seed, **kw)]
    if kind in ("ecal", "kuniform"):
        p = _stat_params(args)
        name = "EInCalE" if kind == "ecal" else "KUniform"
        return [stats.estimate_lemma(name, n_trials, seed, q=p.q, m=p.m, n=p.n, r=p.r)]
    p = _stat_params(args)
    if kind == "canonical":
        return [stats.estimate_lemma("CanonicalReducible", n_trials, seed, params=p)]
    if kind == "ix":
        return [stats.estimate_lemma("IXInvertible", n_trials, seed, params=p)]
    if kind == "rsuccess":
        return [stats.estimate_lemma("RSuccess", n_trials, seed, params=p)]
    if kind == "stages":
        return stats.stage_reports(p, stats.run_reduction(p, n_trials, seed))
    if kind == "distribution":
        a = stats.distribution_projection_test(stats.gen_reduced_keygen1(p), stats.gen_keygen3(p), None,
                                               n_trials, seed, p.seed_bytes)
        return [a]
    if kind == "all":
        out = []
        for sub in ("fullrank", "invertible", "ecal", "kuniform", "canonical", "ix", "product", "rsuccess", "stages"):
            out += _run_stat(sub, args, seed)
        return out
    raise CliError(EXIT_PARAMS, f"unknown stats kind {kind}")


def cmd_stats(args) -> int:
    if args.trials < 1000:
        raise CliError(EXIT_PARAMS, "--trials must be at least 1000")
    seed = _seed(args, None)
    if args.toy and args.q is None:
        args.q = 16
    try:
        reports = _run_stat(args.kind, args, seed)
    except MinRankError as exc:
        raise CliError(EXIT_PARAMS, str(exc)) from exc
    csv = "\n".join([stats.TrialReport.CSV_HEADER] + [r.csv_row() for r in reports])
    if args.format == "csv":
        print(csv)
    else:
        _emit(args, "\n".join(str(r) for r in reports), [r.to_dict() for r in reports])
    if args.out:
        out = Path(args.out)
        _write(out / "stats.csv", csv + "\n")
        if not args.no_plot:
            from minrank.report import plot_reports
            plot_reports(reports, out / "stats.png")
    return 0 if all(r.verdict for r in reports) else EXIT_FAIL


# -- bench


def _percentile(values: list[float], pct: float) -> float:
    xs = sorted(values)
    idx = min(len(xs) - 1, max(0, round(pct / 100 * (len(xs) - 1))))
    return xs[idx]


def bench_rows(p: Params, variants, runs: int, replay: bool) -> list[dict]:
    rows = []
    for v in variants:
        seeds = [bytes([i % 256]) * p.seed_bytes if replay else os.urandom(p.seed_bytes) for i in range(runs + 1)]
        timings = {"keygen": [], "decompress_pk": [], "decompress_sk": []}
        for i, root in enumerate(seeds):
            t0 = time.perf_counter()
            pk, sk = keygen(v, root, p)
            t1 = time.perf_counter()
            decompress_pk(pk, p)
            t2 = time.perf_counter()
            decompress_sk(sk, p)
            t3 = time.perf_counter()
            if i == 0:
                continue  # warm-up
            timings["keygen"].append(t1 - t0)
            timings["decompress_pk"].append(t2 - t1)
            timings["decompress_sk"].append(t3 - t2)
        for op, ts in timings.items():
            rows.append({
                "set": p.label(), "variant": v, "op": f"v{v} {op}", "runs": runs,
                "median_ms": round(1e3 * statistics.median(ts), 3),
                "p95_ms": round(1e3 * _percentile(ts, 95), 3),
            })
    return rows


def cmd_bench(args) -> int:
    p = _params(args, default_set="mirith-Ia")
    variants = [args.variant] if args.variant else [1, 2, 3]
    rows = bench_rows(p, variants, args.runs, args.replay)
    header = "set,variant,op,runs,median_ms,p95_ms"
    csv = "\n".join([header] + [",".join(str(row[c]) for c in header.split(",")) for row in rows])
    if args.format == "csv":
        print(csv)
    else:
        text = "\n".join(f"{row['set']:<12} {row['op']:<18} median {row['median_ms']:9.3f} ms   "
                         f"p95 {row['p95_ms']:9.3f} ms" for row in rows)
        _emit(args, text, rows)
    if args.out:
        out = Path(args.out)
        _write(out / "bench.csv", csv + "\n")
        if not args.no_plot:
            from minrank.report import plot_bench
            plot_bench(rows, out / "bench.png")
    return 0


# -- parser


def _add_param_flags(sp) -> None:
    sp.add_argument("--set", help="named parameter set, e.g. mirith-Ia or toy-2-3-3-2-1")
    for flag in ("q", "m", "n", "k", "r"):
        sp.add_argument(f"--{flag}", type=int)
    sp.add_argument("--lambda", dest="lam", type=int)


def _add_common(sp, formats=("text", "json")) -> None:
    sp.add_argument("--format", choices=formats, default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minrank", description="MinRank key generation and verification harness")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("keygen", help="generate a key pair")
    _add_param_flags(sp)
    sp.add_argument("--variant", type=int, choices=(1, 2, 3), default=3)
    sp.add_argument("--seed", help=f"root seed in hex (fallback: ${SEED_ENV}, then OS entropy)")
    sp.add_argument("--out", default="key", help="output prefix; writes PREFIX.pk and PREFIX.sk")
    _add_common(sp)
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("verify", help="check a key pair")
    _add_param_flags(sp)
    sp.add_argument("--variant", type=int, choices=(1, 2, 3), default=3)
    sp.add_argument("--pk", required=True)
    sp.add_argument("--sk", required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sizes", help="public key sizes for the MiRitH parameter sets")
    sp.add_argument("--out", help="directory for sizes.csv and sizes.png")
    sp.add_argument("--no-plot", action="store_true")
    _add_common(sp, ("text", "csv", "json"))
    sp.set_defaults(func=cmd_sizes)

    sp = sub.add_parser("stats", help="Monte Carlo checks of the probability bounds")
    sp.add_argument("kind", choices=STAT_KINDS)
    _add_param_flags(sp)
    sp.add_argument("--s", type=int)
    sp.add_argument("--t", type=int)
    sp.add_argument("--toy", action="store_true", help="use the default toy dimensions for --q")
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", help=f"master seed in hex (fallback: ${SEED_ENV}, then zeros)")
    sp.add_argument("--out", help="directory for stats.csv and stats.png")
    sp.add_argument("--no-plot", action="store_true")
    _add_common(sp, ("text", "csv", "json"))
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("bench", help="time key generation and decompression")
    _add_param_flags(sp)
    sp.add_argument("--variant", type=int, choices=(1, 2, 3))
    sp.add_argument("--runs", type=int, default=20)
    sp.add_argument("--replay", action="store_true", help="use fixed seeds")
    sp.add_argument("--out", help="directory for bench.csv and bench.png")
    sp.add_argument("--no-plot", action="store_true")
    _add_common(sp, ("text", "csv", "json"))
    sp.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"minrank: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
