"""Command-line entry point: ``kanon <command> ...``.

Exit codes: 0 success, 2 anonymity verification failed, 3 bad input.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .anonymizer import anonymize
from .clustering import STRATEGIES, CannotAnonymize, FacilityConfig
from .dp import (BoundNotApplicable, DpParams, EPS_MAX, jaccard_upper_bound, randomized_response)
from .io import MalformedInput, SweepRow, read_edge_list, write_edge_list, write_report
from .matrix import SparseBinaryMatrix, diff_stats, jaccard, suppressed_created_fractions
from .oracle import InstanceTooLarge, brute_force_smooth_opt
from .sbm import SbmParams, sbm_generate
from .shard import ShardConfig, sharded_anonymize

log = logging.getLogger("kanon")

EXIT_OK, EXIT_UNVERIFIED, EXIT_INPUT = 0, 2, 3
SENTINEL = ">=100"


def _dataset_label(args) -> str:
    return args.dataset or Path(args.input).stem


def _int_list(text: str) -> list[int]:
    return [int(x) for x in _expand(text)]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in _expand(text)]


def _expand(text: str) -> list[str]:
    # "2,4,8" or "2..64" (powers of two) are both accepted
    text = text.strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split(".."))
        out, v = [], lo
        while v <= hi:
            out.append(str(v))
            v *= 2
        return out
    return [x for x in text.split(",") if x.strip()]


def _dp_run(m: SparseBinaryMatrix, eps: float, mode: str, seed: int):
    out = randomized_response(m, DpParams.for_matrix(m, eps, mode, seed))
    st = diff_stats(m, out)
    sup, cre = suppressed_created_fractions(st, m.nnz) if m.nnz else (0.0, float(st.created))
    return out, jaccard(st), sup, cre


def _anon_run(m, k, mode, args, seed):
    fcfg = FacilityConfig(k, args.beta_mult, args.runs, seed, args.strategy, not args.no_refine)
    if getattr(args, "chunk_size", None):
        return sharded_anonymize(m, k, mode, fcfg, ShardConfig(args.num_hashes, args.chunk_size, seed, args.workers))
    return anonymize(m, k, mode, fcfg)


# commands ---------------------------------------------------------------

def cmd_generate_sbm(args) -> int:
    params = SbmParams(args.r, args.s, args.q, args.p, args.seed)
    m = sbm_generate(params)
    write_edge_list(m, args.out)
    print(m.nnz)
    return EXIT_OK


def cmd_anonymize(args) -> int:
    m = read_edge_list(args.input)
    start = time.perf_counter()
    rep = _anon_run(m, args.k, args.mode, args, args.seed)
    ms = (time.perf_counter() - start) * 1000.0
    write_edge_list(rep.output, args.out)
    if args.report:
        write_report([SweepRow(_dataset_label(args), args.mode, args.k, rep.jaccard, 0.0,
                               rep.suppressed_frac, rep.created_frac, ms)], args.report)
    print(f"jaccard={rep.jaccard:.6f} suppressed={rep.suppressed_frac:.6f} "
          f"created={rep.created_frac:.6f} clusters={rep.cluster_count} verified={rep.verified}")
    return EXIT_OK if rep.verified else EXIT_UNVERIFIED


def cmd_dp(args) -> int:
    m = read_edge_list(args.input)
    start = time.perf_counter()
    out, j, sup, cre = _dp_run(m, args.epsilon, args.mode, args.seed)
    ms = (time.perf_counter() - start) * 1000.0
    write_edge_list(out, args.out)
    bound = ""
    if args.mode == "edge" and m.nnz:
        try:
            bound = jaccard_upper_bound(args.epsilon, m.density, m.n_users * m.n_features, args.delta)
        except BoundNotApplicable:
            bound = ""
    if args.report:
        row = asdict(SweepRow(_dataset_label(args), f"dp-{args.mode}", args.epsilon, j, 0.0, sup, cre, ms))
        row["jaccard_bound"] = bound
        write_report([row], args.report, extra_columns=["jaccard_bound"])
    print(f"jaccard={j:.6f} bound={bound}")
    return EXIT_OK


def _aggregate(label, algorithm, param, results, ms) -> SweepRow:
    js = np.array([r[0] for r in results])
    return SweepRow(label, algorithm, param, float(js.mean()), float(js.std()),
                    float(np.mean([r[1] for r in results])), float(np.mean([r[2] for r in results])), ms)


def cmd_sweep(args) -> int:
    m = read_edge_list(args.input)
    label = _dataset_label(args)
    rows = []
    if args.k_list:
        params = _int_list(args.k_list)
        if not params:
            raise MalformedInput("empty parameter list")
        for mode in args.modes.split(","):
            for k in params:
                start = time.perf_counter()
                res = []
                for rep in range(args.repeats):
                    r = _anon_run(m, k, mode, args, derive_seed(args.seed, rep))
                    if not r.verified:
                        log.error("verification failed for %s k=%d", mode, k)
                        return EXIT_UNVERIFIED
                    res.append((r.jaccard, r.suppressed_frac, r.created_frac))
                ms = (time.perf_counter() - start) * 1000.0 / args.repeats
                rows.append(_aggregate(label, mode, k, res, ms))
    else:
        params = _float_list(args.eps_list or "")
        if not params:
            raise MalformedInput("empty parameter list")
        for eps in params:
            start = time.perf_counter()
            res = [_dp_run(m, eps, args.dp_mode, derive_seed(args.seed, rep))[1:] for rep in range(args.repeats)]
            ms = (time.perf_counter() - start) * 1000.0 / args.repeats
            rows.append(_aggregate(label, f"dp-{args.dp_mode}", eps, res, ms))
    write_report(rows, args.csv_out)
    return EXIT_OK


def dp_jaccard_mean(m: SparseBinaryMatrix, eps: float, seed: int, repeats: int) -> float:
    return float(np.mean([_dp_run(m, eps, "edge", derive_seed(seed, r))[1] for r in range(repeats)]))


def match_epsilon(m: SparseBinaryMatrix, target: float, seed: int, repeats: int, tol: float = 0.01):
    """Epsilon whose mean empirical edge-DP Jaccard is within ``tol`` of ``target``.

    Returns None when no epsilon in [0, 100] reaches it (exactly 1 is never
    reached by a mechanism with a positive flip probability).
    """
    if target >= 1.0:
        return None
    lo, hi = 0.0, EPS_MAX
    j_lo = dp_jaccard_mean(m, lo, seed, repeats)
    if j_lo >= target - tol:
        return lo
    if dp_jaccard_mean(m, hi, seed, repeats) < target - tol:
        return None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        j = dp_jaccard_mean(m, mid, seed, repeats)
        if abs(j - target) <= tol:
            return mid
        if j < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    return hi


def cmd_k_vs_eps(args) -> int:
    m = read_edge_list(args.input)
    label = _dataset_label(args)
    ks = _int_list(args.k_list)
    if not ks:
        raise MalformedInput("empty parameter list")
    out_rows = []
    for k in ks:
        js = [_anon_run(m, k, "smooth", args, derive_seed(args.seed, r)).jaccard for r in range(args.repeats)]
        target = float(np.mean(js))
        eps = match_epsilon(m, target, args.seed, args.repeats)
        out_rows.append({"dataset": label, "k": k, "jaccard_smooth": target,
                         "epsilon": SENTINEL if eps is None else f"{eps:.4f}"})
        print(f"k={k} jaccard={target:.4f} epsilon={out_rows[-1]['epsilon']}")
    with open(args.csv_out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["dataset", "k", "jaccard_smooth", "epsilon"])
        w.writeheader()
        w.writerows(out_rows)
    return EXIT_OK


def cmd_oracle(args) -> int:
    m = read_edge_list(args.input)
    opt = brute_force_smooth_opt(m, args.k)
    rep = anonymize(m, args.k, "smooth", FacilityConfig(args.k, seed=args.seed))
    ratio = rep.jaccard / opt.best_jaccard if opt.best_jaccard > 0 else 1.0
    print(f"oracle={opt.best_jaccard:.6f} pipeline={rep.jaccard:.6f} ratio={ratio:.6f} partitions={opt.enumerated}")
    return EXIT_OK if rep.verified else EXIT_UNVERIFIED


# parser -----------------------------------------------------------------

def _add_pipeline_flags(p):
    p.add_argument("--beta-mult", type=float, default=2.0)
    p.add_argument("--strategy", choices=STRATEGIES, default="appendix_simple")
    p.add_argument("--runs", type=int, default=10, help="Meyerson passes (best kept)")
    p.add_argument("--no-refine", action="store_true", help="skip the Jaccard-guarded split pass")
    p.add_argument("--chunk-size", type=int, default=None, help="shard by minhash order into chunks")
    p.add_argument("--num-hashes", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kanon", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-sbm", help="write a bipartite SBM edge list")
    p.add_argument("--r", type=int, default=16)
    p.add_argument("--s", type=int, default=64)
    p.add_argument("--q", type=float, default=0.8)
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_sbm)

    p = sub.add_parser("anonymize", help="k-anonymize an edge list")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=("smooth", "suppress"), default="smooth")
    _add_pipeline_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--dataset", default=None)
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("dp", help="randomized response")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--mode", choices=("edge", "node"), default="edge")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--dataset", default=None)
    p.set_defaults(func=cmd_dp)

    p = sub.add_parser("sweep", help="repeat runs over a k or epsilon list, write CSV")
    p.add_argument("--in", dest="input", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k-list")
    g.add_argument("--eps-list")
    p.add_argument("--modes", default="smooth,suppress")
    p.add_argument("--dp-mode", choices=("edge", "node"), default="edge")
    p.add_argument("--repeats", type=int, default=10)
    _add_pipeline_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv-out", required=True)
    p.add_argument("--dataset", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("k-vs-eps", help="edge-DP epsilon matching smooth k-anonymity utility")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k-list", required=True)
    p.add_argument("--repeats", type=int, default=3)
    _add_pipeline_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv-out", required=True)
    p.add_argument("--dataset", default=None)
    p.set_defaults(func=cmd_k_vs_eps)

    p = sub.add_parser("oracle", help="compare the pipeline to the brute-force optimum (n <= 10)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MalformedInput, CannotAnonymize, InstanceTooLarge, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
