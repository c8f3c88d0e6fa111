"""Command-line front end: ``randfact gen``, ``randfact factorize``, ``randfact bench``.

Exit codes: 0 success, 2 matrix parse error, 3 parameter error, 4 numerical
failure. Failures print a JSON object with an ``error`` field to stderr.
"""
import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import diagnostics, fullfact, lowrank, rangefinder
from .core import frob, singular_values
from .errors import ParameterError, RandfactError
from .mmio import atomic_write, read_matrix, write_matrix_market

SCHEMA = "randfact/1"
ALGORITHMS = ("rsvd", "spevd", "spsvd", "nystrom", "id", "fastid", "cur", "adaptive", "blocked", "hqrrp", "randutv")
ORACLE_MAX_DIM = 300
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UnknownAlgorithm(ParameterError):
    code = "unknown_algorithm"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ParameterError(f"expected a comma-separated list of integers, got {text!r}") from exc


def build_parser():
    ap = _Parser(prog="randfact", description="Randomized matrix factorizations.")
    ap.add_argument("--deterministic", action="store_true",
                    help="single-threaded, bitwise reproducible run")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a test matrix in Matrix Market format")
    g.add_argument("--kind", required=True, help="e.g. FastDecay(0.5), ExactRank(5), FlatTail(0.1), Psd(flat), Kahan(1.2)")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    for name, typ in (("beta", float), ("tail", float), ("k", int), ("theta", float), ("decay", str)):
        g.add_argument(f"--{name}", type=typ)

    f = sub.add_parser("factorize", help="run one algorithm and write a JSON report")
    f.add_argument("--algo", required=True)
    f.add_argument("--in", dest="in_path", required=True)
    f.add_argument("--k", type=int, default=10)
    f.add_argument("--p", type=int)
    f.add_argument("--q", type=int, default=0)
    f.add_argument("--b", type=int)
    f.add_argument("--eps", type=float)
    f.add_argument("--r", type=int, default=10)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--report", required=True)

    b = sub.add_parser("bench", help="size sweep with timings and errors")
    b.add_argument("--algos", required=True)
    b.add_argument("--kind", required=True)
    b.add_argument("--sizes", type=_int_list, required=True)
    b.add_argument("--seeds", type=_int_list, default=[0])
    b.add_argument("--rows", type=int, help="fixed row count (default: square)")
    b.add_argument("--k", type=int, default=8)
    b.add_argument("--p", type=int)
    b.add_argument("--report", required=True)
    return ap


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args):
    kind, params = diagnostics.parse_kind(args.kind)
    for name in ("beta", "tail", "k", "theta", "decay"):
        if getattr(args, name) is not None:
            params[name] = getattr(args, name)
    cols = args.rows if args.cols is None else args.cols
    A = diagnostics.test_matrix(kind, args.rows, cols, seed=args.seed, **params)
    write_matrix_market(args.out, A, comment=f"randfact gen {args.kind} seed={args.seed}")
    return {"schema": SCHEMA, "out": args.out, "rows": args.rows, "cols": cols}


# ---------------------------------------------------------------------------
# factorize


def run_algorithm(algo, A, k=10, p=None, q=0, b=None, eps=None, r=10, seed=0):
    """Run ``algo`` on ``A``; returns ``(reconstruction, extra report fields, params)``."""
    m, n = A.shape
    params = {"k": k, "p": p, "q": q, "b": b, "eps": eps, "r": r, "seed": seed}
    extra = {}
    if algo == "rsvd":
        p = 10 if p is None else p
        f = lowrank.rsvd(A, k, p, q, seed)
        recon, extra["singular_values"] = f.reconstruct(), f.D.tolist()
    elif algo in ("spevd", "spsvd"):
        p = k if p is None else p
        stream = lowrank.MatrixStream(A)
        if algo == "spevd":
            f = lowrank.single_pass_evd(stream, k, p, seed)
            recon, extra["eigenvalues"] = f.reconstruct(), f.lam.tolist()
        else:
            f = lowrank.single_pass_svd(stream, k, p, seed)
            recon, extra["singular_values"] = f.reconstruct(), f.D.tolist()
        extra["stream_passes"] = stream.access_count
        extra["warnings"] = f.warnings
    elif algo == "nystrom":
        p = 10 if p is None else p
        f = lowrank.nystrom_evd(A, k, p, seed)
        recon, extra["eigenvalues"], extra["warnings"] = f.reconstruct(), f.lam.tolist(), f.warnings
    elif algo in ("id", "fastid"):
        if algo == "id":
            p = 10 if p is None else p
            f = lowrank.randomized_id(A, k, p, q, seed)
        else:
            p = k if p is None else p
            f = lowrank.fast_randomized_id(A, k, p, seed)
        recon, extra["row_indices"] = f.reconstruct(A), f.Is.tolist()
    elif algo == "cur":
        p = 10 if p is None else p
        f = lowrank.randomized_cur(A, k, p, q, seed)
        recon = f.reconstruct(A)
        extra.update(row_indices=f.Is.tolist(), col_indices=f.Js.tolist(),
                     cond_C=f.cond_C, cond_R=f.cond_R, warnings=f.warnings)
    elif algo in ("adaptive", "blocked"):
        if eps is None:
            raise ParameterError(f"{algo} needs --eps")
        if algo == "adaptive":
            f = rangefinder.certified_range(A, eps, r, seed)
            prob = 1.0 - min(m, n) * 10.0 ** (-r)
            extra["certificate"] = {
                "statement": f"||A - Q Q^T A|| <= eps with probability at least 1 - min(m,n)*10^-{r}",
                "probability": prob,
                "eps": eps,
            }
        else:
            b = 10 if b is None else b
            f = rangefinder.blocked_adaptive(A, eps, b, q, seed)
        recon = f.Q @ (f.Q.T @ A)
        extra["rank"] = f.rank
    elif algo == "hqrrp":
        b = 32 if b is None else b
        p = 10 if p is None else p
        f = fullfact.hqrrp(A, b, p, seed)
        recon = np.empty_like(A)
        recon[:, f.perm] = f.Q @ f.R
        extra["perm"] = f.perm.tolist()
        extra["r_diagonal"] = np.abs(np.diagonal(f.R)).tolist()
    elif algo == "randutv":
        b = 32 if b is None else b
        f = fullfact.randutv(A, b, q, seed)
        recon = f.reconstruct()
        extra["diagonal"] = f.diag.tolist()
    else:
        raise UnknownAlgorithm(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    params.update(p=p, b=b)
    return recon, extra, params


def error_report(A, recon, seed=0):
    """Errors recomputed from the reconstruction: Frobenius (exact) and spectral (probabilistic)."""
    E = A - recon
    nA = frob(A)
    est = diagnostics.estimate_spectral_norm(E, r=10, alpha=0.1, seed=seed, tag="report")
    return {
        "err_frob": frob(E),
        "rel_err_frob": frob(E) / nA if nA else 0.0,
        "err_spectral_estimate": est,
        "err_spectral_note": "upper bound holding with probability >= 1 - 0.1**10 (10 Gaussian probes)",
    }


def oracle_report(A, k):
    if max(A.shape) > ORACLE_MAX_DIM:
        return None
    s = singular_values(A)
    k = min(k, len(s))
    return {
        "singular_values": s.tolist(),
        "optimal_err_frob": math.sqrt(float(s[k:] @ s[k:])),
        "optimal_err_spectral": float(s[k]) if k < len(s) else 0.0,
    }


def cmd_factorize(args):
    algo = args.algo.lower()
    if algo not in ALGORITHMS:
        raise UnknownAlgorithm(f"unknown algorithm {args.algo!r}; choose from {', '.join(ALGORITHMS)}")
    A = read_matrix(args.in_path)
    t0 = time.perf_counter()
    recon, extra, params = run_algorithm(algo, A, args.k, args.p, args.q, args.b, args.eps, args.r, args.seed)
    elapsed = time.perf_counter() - t0
    report = {
        "schema": SCHEMA,
        "algorithm": algo,
        "parameters": params,
        "matrix": {"path": os.path.abspath(args.in_path), "rows": A.shape[0], "cols": A.shape[1]},
        **error_report(A, recon, args.seed),
        "wall_clock_seconds": elapsed,
        "threads": _threads(),
        **extra,
    }
    oracle = oracle_report(A, args.k)
    if oracle is not None:
        report["oracle"] = oracle
    atomic_write(args.report, json.dumps(report, indent=2) + "\n")
    return report


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args):
    algos = [a.strip().lower() for a in args.algos.split(",") if a.strip()]
    if not algos:
        raise ParameterError("empty algorithm list")
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise UnknownAlgorithm(f"unknown algorithm(s) {', '.join(bad)}")
    if not args.sizes:
        raise ParameterError("empty size list")
    kind, params = diagnostics.parse_kind(args.kind)
    rows = []
    for n in args.sizes:
        m = args.rows or n
        for seed in args.seeds:
            A = diagnostics.test_matrix(kind, m, n, seed=seed, **params)
            for algo in algos:
                row = {"algorithm": algo, "rows": m, "cols": n, "seed": seed}
                try:
                    t0 = time.perf_counter()
                    recon, _, _ = run_algorithm(algo, A, k=args.k, p=args.p, seed=seed)
                    row["seconds"] = time.perf_counter() - t0
                    E = A - recon
                    row["rel_err_frob"] = frob(E) / frob(A)
                except RandfactError as exc:
                    row["error"] = exc.code
                    row["message"] = str(exc)
                rows.append(row)
    report = {"schema": SCHEMA, "kind": args.kind, "algorithms": algos, "sizes": args.sizes,
              "seeds": args.seeds, "k": args.k, "threads": _threads(), "runs": rows}
    atomic_write(args.report, json.dumps(report, indent=2) + "\n")
    return report


# ---------------------------------------------------------------------------


def _threads():
    v = os.environ.get("OMP_NUM_THREADS") or os.environ.get("RANDFACT_THREADS")
    return int(v) if v and v.isdigit() else None


def _fail(exc):
    payload = {"schema": SCHEMA, "error": getattr(exc, "code", "error"), "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return getattr(exc, "exit_code", 1)


def main(argv=None):
    from_console = argv is None
    argv = sys.argv[1:] if argv is None else list(argv)
    if from_console and "--deterministic" in argv and os.environ.get("OMP_NUM_THREADS") != "1":
        # BLAS thread pools are sized at import time, so restart with one thread
        env = dict(os.environ, RANDFACT_THREADS="1", **{v: "1" for v in THREAD_VARS})
        os.execve(sys.executable, [sys.executable, "-m", "randfact.cli", *argv], env)
    try:
        args = build_parser().parse_args(argv)
        handler = {"gen": cmd_gen, "factorize": cmd_factorize, "bench": cmd_bench}[args.command]
        handler(args)
    except RandfactError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(ParameterError(f"{exc.filename}: {exc.strerror}"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
