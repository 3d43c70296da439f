"""Command-line front end: evaluation, sampling and verification.

Exit codes: 0 success, 1 usage error, 2 numerical non-convergence,
3 statistical test failure.  Output is CSV (header row, LF endings) or a
single JSON object with "meta" and "rows"; floats are printed in their
shortest round-trip form.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, dist, sample, verify
from .dist import ProcessParams
from .sample import RngStream
from .special_fn import NonConvergence, SeriesConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGENCE = 2
EXIT_STATFAIL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the CLI contract reserves 2 for
    # numerical non-convergence, so route usage problems through code 1.
    def error(self, message):
        raise UsageError(message)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(rows, meta, fmt, out):
    fh = open(out, "w", encoding="utf-8", newline="\n") if out else sys.stdout
    try:
        if fmt == "json":
            payload = {"meta": meta, "rows": rows}
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        else:
            if rows:
                keys = list(rows[0].keys())
                fh.write(",".join(keys) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(row[key]) for key in keys) + "\n")
    finally:
        if out:
            fh.close()


def _add_common(p, need_t=True):
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    if need_t:
        p.add_argument("--t", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-terms", type=int, default=10_000)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)


def build_parser() -> _Parser:
    p = _Parser(prog="fracpois",
                description="fractional Poisson process toolbox")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pmf", help="probability mass function table")
    _add_common(sp)
    sp.add_argument("--kmax", type=int, required=True)

    sp = sub.add_parser("pgf", help="probability generating function")
    _add_common(sp)
    sp.add_argument("--u", type=float, required=True)

    sp = sub.add_parser("sample", help="draw counts")
    _add_common(sp)
    sp.add_argument("--process", choices=sample._PROCESSES, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--stream-id", type=int, default=0)
    sp.add_argument("--gamma", type=float, default=None)

    sp = sub.add_parser("verify", help="run a verification suite")
    _add_common(sp)
    sp.add_argument("--suite", required=True,
                    choices=("pmf-mc", "min-uniform", "subordination",
                             "ode", "oracle"))
    sp.add_argument("--process", choices=sample._PROCESSES, default="space")
    sp.add_argument("--n", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--fixture", default=None)

    sp = sub.add_parser("passage", help="first-passage CDF/density table")
    _add_common(sp, need_t=False)
    sp.add_argument("--k", type=int, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float, default=None)
    g.add_argument("--tmax", type=float, default=None)
    sp.add_argument("--steps", type=int, default=20)
    return p


def _params(args) -> ProcessParams:
    try:
        return ProcessParams(args.lam, args.alpha, args.nu)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cfg(args) -> SeriesConfig:
    try:
        return SeriesConfig(rel_tol=args.tol, max_terms=args.max_terms)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _meta(args, **extra):
    meta = {"alpha": args.alpha, "nu": args.nu, "lambda": args.lam,
            "tool": "fracpois", "version": __version__}
    if getattr(args, "t", None) is not None:
        meta["t"] = args.t
    meta.update(extra)
    return meta


def cmd_pmf(args) -> int:
    params, cfg = _params(args), _cfg(args)
    if args.kmax < 0:
        raise UsageError("--kmax must be >= 0")
    rows_out = []
    try:
        rows = dist.pmf_row(params, args.t, args.kmax, cfg)
    except NonConvergence as exc:
        _emit(rows_out, _meta(args, error=str(exc)), args.format, args.out)
        print(f"fracpois: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    for r in rows:
        rows_out.append({"k": r.k, "p": min(max(r.p, 0.0), 1.0),
                         "error_bound": r.abs_error_bound})
    _emit(rows_out, _meta(args), args.format, args.out)
    return EXIT_OK


def cmd_pgf(args) -> int:
    params, cfg = _params(args), _cfg(args)
    if abs(args.u) > 1:
        raise UsageError("--u must satisfy |u| <= 1")
    try:
        res = dist.pgf(params, args.t, args.u, cfg)
    except NonConvergence as exc:
        print(f"fracpois: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    _emit([{"u": args.u, "value": res.value,
            "error_bound": res.abs_error_bound}],
          _meta(args), args.format, args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    params, _ = _params(args), _cfg(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    threads = args.threads or int(os.environ.get("FRACPOIS_THREADS", "1"))
    try:
        batch = sample.sample_batch(args.process, params, args.t, args.n,
                                    RngStream(args.seed, args.stream_id),
                                    gamma=args.gamma, threads=threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = [{"count": int(c)} for c in batch.counts]
    _emit(rows, _meta(args, process=args.process, n=args.n, seed=args.seed,
                      stream_id=args.stream_id, redraws=batch.redraws),
          args.format, args.out)
    return EXIT_OK


def _suite_pmf_mc(args, params, cfg):
    def run(n, attempt):
        rng = RngStream(args.seed + attempt, args.stream_id
                        if hasattr(args, "stream_id") else 0)
        batch = sample.sample_batch(args.process, params, args.t, n, rng,
                                    gamma=args.gamma)
        rep = verify.gof_pmf(batch, cfg)
        return rep.passed, rep

    passed, rep = verify.two_stage(run, args.n)
    rows = [{"bin": lab, "observed": o, "expected": e}
            for lab, o, e in rep.bins]
    meta = _meta(args, suite="pmf-mc", statistic=rep.statistic, dof=rep.dof,
                 p_value=rep.p_value, passed=passed)
    return passed, rows, meta


def _suite_min_uniform(args, params, cfg):
    rows = []
    passed = True
    for u in (0.2, 0.5, 0.8):
        def run(n, attempt, u=u):
            rng = RngStream(args.seed + attempt, 1)
            if params.nu == 1.0:
                res = verify.check_min_uniform_space(
                    params.alpha, params.lam, args.t, u, n, rng)
            else:
                res = verify.check_min_uniform_space_time(
                    params.alpha, params.nu, params.lam, args.t, u, n, rng)
            return abs(res.z_score) < 4.0, res

        ok, res = verify.two_stage(run, args.n)
        passed = passed and ok
        rows.append({"u": u, "empirical": res.empirical,
                     "analytic": res.analytic, "z": res.z_score,
                     "passed": ok})
    return passed, rows, _meta(args, suite="min-uniform", passed=passed)


def _suite_subordination(args, params, cfg):
    if args.gamma is None:
        raise UsageError("--gamma is required for the subordination suite")
    inner = params.alpha * args.gamma

    def run(n, attempt):
        a = sample.sample_batch("composed", params, args.t, n,
                                RngStream(args.seed + attempt, 1),
                                gamma=args.gamma)
        b = sample.sample_batch(
            "space", ProcessParams(params.lam, inner, 1.0), args.t, n,
            RngStream(args.seed + attempt, 2))
        rep = verify.gof_two_sample(a.counts, b.counts)
        return rep.passed, rep

    passed, rep = verify.two_stage(run, args.n)
    rows = [{"bin": lab, "composed": o, "direct": e}
            for lab, o, e in rep.bins]
    meta = _meta(args, suite="subordination", statistic=rep.statistic,
                 dof=rep.dof, p_value=rep.p_value, passed=passed,
                 order=inner)
    return passed, rows, meta


def _suite_ode(args, params, cfg):
    res = verify.check_ode_residual(params, args.t, 10, cfg)
    passed = res < 1e-6
    return passed, [{"max_residual": res, "passed": passed}], \
        _meta(args, suite="ode", passed=passed)


def _suite_oracle(args, params, cfg):
    ok, failures = verify.check_fixture(args.fixture, cfg)
    rows = [{"row": str(f[0]), "value": f[1], "bound": f[2]}
            for f in failures]
    return ok, rows, _meta(args, suite="oracle", passed=ok,
                           failures=len(failures))


def cmd_verify(args) -> int:
    params, cfg = _params(args), _cfg(args)
    suites = {"pmf-mc": _suite_pmf_mc, "min-uniform": _suite_min_uniform,
              "subordination": _suite_subordination, "ode": _suite_ode,
              "oracle": _suite_oracle}
    try:
        passed, rows, meta = suites[args.suite](args, params, cfg)
    except NonConvergence as exc:
        print(f"fracpois: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    _emit(rows, meta, args.format, args.out)
    return EXIT_OK if passed else EXIT_STATFAIL


def cmd_passage(args) -> int:
    params, cfg = _params(args), _cfg(args)
    if args.k < 0:
        raise UsageError("--k must be >= 0")
    if params.nu != 1.0:
        raise UsageError("first-passage laws require --nu 1")
    times = ([args.t] if args.t is not None
             else list(np.linspace(args.tmax / args.steps, args.tmax,
                                   args.steps)))
    rows = []
    try:
        for t in times:
            c = dist.first_passage_cdf(params, t, args.k, cfg)
            row = {"t": float(t), "cdf": c.value}
            if args.k >= 1:
                d = dist.first_passage_density(params, t, args.k, cfg)
                row["density"] = d.value
            rows.append(row)
    except NonConvergence as exc:
        print(f"fracpois: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    _emit(rows, _meta(args, k=args.k), args.format, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"pmf": cmd_pmf, "pgf": cmd_pgf, "sample": cmd_sample,
                   "verify": cmd_verify, "passage": cmd_passage}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"fracpois: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
