"""Command-line interface: ``psvd topk | threshold | rpca | bench``.

Exit codes: 0 success, 2 invalid input or arguments, 3 unreadable Matrix
Market file, 4 unconverged result when ``--strict`` is given.  The seed
defaults to ``$PSVD_SEED`` (or 0); ``--seed`` overrides it.
"""

import argparse
import os
import sys
import time

import numpy as np

from .bench import run_bench_reorth, run_bench_warmstart
from .errors import MatrixMarketError, PsvdError, ValidationError
from .mmio import read_matrix_market, write_matrix_market
from .partialsvd import ThresholdOptions, svd_above_threshold, svd_top_k
from .report import RunReport
from .rpca import BACKENDS, RpcaOptions, rpca_ialm

__all__ = ["main", "read_matrix_market", "write_matrix_market",
           "run_bench_reorth", "run_bench_warmstart", "RunReport"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_PARSE = 3
EXIT_UNCONVERGED = 4


def default_seed():
    raw = os.environ.get("PSVD_SEED", "").strip()
    if not raw:
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ValidationError(f"PSVD_SEED must be a non-negative integer, got {raw!r}") from None
    if seed < 0:
        raise ValidationError(f"PSVD_SEED must be a non-negative integer, got {raw!r}")
    return seed


def _seed(args):
    if args.seed is not None:
        if args.seed < 0:
            raise ValidationError(f"--seed must be non-negative, got {args.seed}")
        return args.seed
    return default_seed()


def _lambda(text):
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None
    if not (np.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"lambda must be positive, got {text!r}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $PSVD_SEED or 0)")
    common.add_argument("--out", metavar="REPORT.json", help="write a JSON report")
    common.add_argument("--strict", action="store_true",
                        help="exit with status 4 if the result is unconverged")

    p = argparse.ArgumentParser(prog="psvd", description="Partial SVD toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("topk", parents=[common], help="leading k singular triplets")
    q.add_argument("--input", required=True, metavar="A.mtx")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--tol", type=float, default=1e-8)

    q = sub.add_parser("threshold", parents=[common],
                       help="all singular values above a threshold")
    q.add_argument("--input", required=True, metavar="A.mtx")
    q.add_argument("--thr", type=float, required=True)
    q.add_argument("--k0", type=int, default=16, help="initial subspace size")
    q.add_argument("--tol", type=float, default=1e-8)

    q = sub.add_parser("rpca", parents=[common], help="robust PCA by inexact ALM")
    q.add_argument("--input", required=True, metavar="D.mtx")
    q.add_argument("--lambda", dest="lam", type=_lambda, default="auto")
    q.add_argument("--backend", choices=BACKENDS, default=BACKENDS[0])
    q.add_argument("--tol", type=float, default=1e-7)
    q.add_argument("--max-iter", type=int, default=500)
    q.add_argument("--out-lowrank", metavar="L.mtx")
    q.add_argument("--out-sparse", metavar="S.mtx")

    b = sub.add_parser("bench", help="benchmarks")
    bsub = b.add_subparsers(dest="bench", required=True)
    q = bsub.add_parser("reorth", parents=[common],
                        help="fused-block vs vector-loop reorthogonalization")
    q.add_argument("--m", type=int, default=1000)
    q.add_argument("--n", type=int, default=1000)
    q.add_argument("--K", type=int, default=100)
    q.add_argument("--repeats", type=int, default=1)
    q = bsub.add_parser("warmstart", parents=[common],
                        help="warm vs cold block Lanczos over a drifting sequence")
    q.add_argument("--m", type=int, default=200)
    q.add_argument("--n", type=int, default=200)
    q.add_argument("--k", type=int, default=5)
    q.add_argument("--T", type=int, default=20)
    q.add_argument("--drift", type=float, default=0.01)
    return p


def _table(rows, headers):
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    line = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    out = [line, "-" * len(line)]
    out.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows)
    return "\n".join(out)


def _print_svd(report, res):
    rows = [(str(j + 1), f"{s:.12e}", f"{b:.3e}")
            for j, (s, b) in enumerate(zip(res.S, res.bounds))]
    print(f"{report.command}: {len(rows)} singular values, {report.matvecs} matvecs, "
          f"subspace sizes {report.extra['subspace_sizes']}")
    print(_table(rows, ["j", "sigma", "bound"]))
    if report.truncated:
        print("warning: subspace cap reached before the threshold was certified")


def _svd_report(command, inputs, res, t0):
    return RunReport(
        command=command, inputs=inputs, singular_values=res.S,
        iterations=len(res.trace), matvecs=res.matvec_count,
        wall_time_ms=1e3 * (time.perf_counter() - t0),
        truncated=res.truncated, unconverged=not res.converged,
        extra=dict(bounds=res.bounds, subspace_sizes=res.trace, work_size=res.work_size),
    )


def cmd_topk(args):
    A = read_matrix_market(args.input)
    seed = _seed(args)
    t0 = time.perf_counter()
    res = svd_top_k(A, args.k, ThresholdOptions(tol=args.tol, seed=seed))
    inputs = dict(input=os.path.basename(args.input), k=args.k, tol=args.tol, seed=seed)
    rep = _svd_report("topk", inputs, res, t0)
    _print_svd(rep, res)
    return rep


def cmd_threshold(args):
    A = read_matrix_market(args.input)
    seed = _seed(args)
    t0 = time.perf_counter()
    res = svd_above_threshold(A, args.thr, ThresholdOptions(initial_K=args.k0, tol=args.tol,
                                                            seed=seed))
    inputs = dict(input=os.path.basename(args.input), thr=args.thr, k0=args.k0,
                  tol=args.tol, seed=seed)
    rep = _svd_report("threshold", inputs, res, t0)
    _print_svd(rep, res)
    return rep


def cmd_rpca(args):
    D = read_matrix_market(args.input)
    seed = _seed(args)
    t0 = time.perf_counter()
    opts = RpcaOptions(lam=args.lam, backend=args.backend, tol=args.tol,
                       max_iter=args.max_iter, seed=seed)
    res = rpca_ialm(D, opts)
    elapsed = time.perf_counter() - t0
    if args.out_lowrank:
        write_matrix_market(args.out_lowrank, res.L)
    if args.out_sparse:
        write_matrix_market(args.out_sparse, res.E)
    sv = np.linalg.svd(res.L, compute_uv=False)
    last = res.history[-1]
    rank = int(last["rank"])
    rep = RunReport(
        command="rpca",
        inputs=dict(input=os.path.basename(args.input), backend=args.backend,
                    lam=args.lam, tol=args.tol, max_iter=args.max_iter, seed=seed),
        singular_values=sv[:rank], iterations=res.iterations, matvecs=res.matvecs,
        wall_time_ms=1e3 * elapsed, unconverged=not res.converged,
        extra=dict(lam=res.lam, mu=res.mu, rank=rank, residual=last["residual"],
                   sparse_nnz=int(np.count_nonzero(res.E)),
                   history=res.history),
    )
    status = "converged" if res.converged else "NOT converged"
    print(f"rpca ({args.backend}): {status} after {res.iterations} iterations, "
          f"rank {rank}, {rep.extra['sparse_nnz']} sparse entries, "
          f"residual {last['residual']:.3e}, {rep.matvecs} matvecs")
    rows = [(str(h["iter"]), f"{h['residual']:.3e}", str(h["rank"]), str(h["matvecs"]))
            for h in res.history]
    print(_table(rows, ["iter", "residual", "rank", "matvecs"]))
    return rep


def cmd_bench(args):
    seed = _seed(args)
    t0 = time.perf_counter()
    if args.bench == "reorth":
        a, b = run_bench_reorth(args.m, args.n, args.K, seed=seed, repeats=args.repeats)
        ratio = a.timing["speedup_ratio"]
        print(f"bench reorth {args.m}x{args.n} K={args.K} seed={seed}")
        print(_table([(r.inputs["mode"], f"{r.wall_time_ms:.2f}", str(r.matvecs)) for r in (a, b)],
                     ["mode", "time_ms", "matvecs"]))
        print(f"loop/fused time ratio {ratio:.3f} (fused/loop {1 / ratio:.3f}); "
              f"max coefficient gap {a.extra['max_coef_diff']:.2e}")
        rep = RunReport(command="bench-reorth", inputs=dict(a.inputs), runs=[a, b],
                        iterations=a.iterations, matvecs=a.matvecs + b.matvecs,
                        extra=dict(max_coef_diff=a.extra["max_coef_diff"]),
                        timing=dict(a.timing))
        rep.inputs.pop("mode")
    else:
        w, c = run_bench_warmstart(args.m, args.n, args.k, args.T, args.drift, seed=seed)
        print(f"bench warmstart {args.m}x{args.n} k={args.k} T={args.T} "
              f"drift={args.drift} seed={seed}")
        print(_table([(r.inputs["mode"], str(r.matvecs), str(r.iterations),
                       f"{r.wall_time_ms:.1f}") for r in (w, c)],
                     ["mode", "matvecs", "passes", "time_ms"]))
        saved = 1.0 - w.matvecs / c.matvecs
        print(f"warm start saves {100 * saved:.1f}% of the matvecs")
        rep = RunReport(command="bench-warmstart", inputs=dict(w.inputs), runs=[w, c],
                        singular_values=w.singular_values,
                        iterations=w.iterations + c.iterations, matvecs=w.matvecs + c.matvecs,
                        unconverged=w.unconverged or c.unconverged,
                        extra=dict(warm_matvecs=w.matvecs, cold_matvecs=c.matvecs,
                                   savings=saved))
        rep.inputs.pop("mode")
    rep.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    return rep


COMMANDS = {"topk": cmd_topk, "threshold": cmd_threshold, "rpca": cmd_rpca, "bench": cmd_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rep = COMMANDS[args.command](args)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(rep.to_json() + "\n")
    except MatrixMarketError as exc:
        print(f"psvd: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PsvdError, ValueError) as exc:
        print(f"psvd: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"psvd: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.strict and (rep.unconverged or rep.truncated):
        print("psvd: result is not converged", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
