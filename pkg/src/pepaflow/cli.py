"""Command-line experiment harness.

Exit codes: 0 success, 1 validation or usage error, 2 solver
non-convergence, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

from . import bench, metrics
from .core.validate import validate
from .errors import (CapExceededError, ConvergenceError, ParseError, PepaError,
                     SaturationError)
from .netmodels import BUILDERS, default_rates, preset
from .parser import parse_model, parse_rates

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
SCALABILITY_LABEL = "qualitative (assumed value function f(T) = 1/(1 + T/targetT))"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _rates(args):
    rates = default_rates()
    if getattr(args, "rates", None):
        rates.update(parse_rates(_read(args.rates)))
    return rates


def _config(args, pid=None):
    return preset(pid or args.preset, 1, rates=_rates(args),
                  processors_per_nf=args.processors_per_nf,
                  threads_per_processor=args.threads)


def _source(args):
    if args.model:
        return bench.ModelSource(text=_read(args.model), group=args.group)
    return bench.ModelSource(arch=args.arch, config=_config(args))


def _grid(args, source):
    if args.n_grid:
        return bench.parse_grid(args.n_grid)
    return bench.default_grid(source)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    text = _read(args.path)
    try:
        spec = parse_model(text)
    except ParseError as exc:
        print(f"{args.path}:{exc}", file=sys.stderr)
        return EXIT_USAGE
    diags = validate(spec)
    for d in diags:
        print(f"{args.path}:{d}", file=sys.stderr)
    return EXIT_USAGE if any(d.severity == "error" for d in diags) else EXIT_OK


def cmd_solve(args):
    source = _source(args)
    n = args.n if args.n is not None else None
    if n is None and source.arch is not None:
        raise PepaError("--n is required with --arch", "E_USAGE")
    if n is None:
        n = next(g.population for g in source.spec().groups()
                 if g.component == source.load_group)
    sol = bench.solve_point(source, n, args.solver)
    rep = sol.report
    if args.format == "json":
        out = rep.to_dict()
        out.update(n=n, completion=sol.completion, converged=sol.converged,
                   method=sol.method)
        _emit(args, _json(out))
    else:
        procs = sorted(rep.utilization)
        header = ["n", "throughput", "art"] + [f"util_{p}" for p in procs] + ["converged"]
        row = [n, sol.throughput, rep.art] + [rep.utilization[p] for p in procs] + [
            sol.converged]
        _emit(args, _csv(header, [row]))
    return EXIT_OK if sol.converged else EXIT_SOLVER


def _sweep_rows_csv(rows, comments=()):
    procs = sorted(rows[0].utilization) if rows else []
    header = ["n", "throughput", "art"] + [f"util_{p}" for p in procs] + ["converged"]
    body = [[r.n, r.throughput, r.art] + [r.utilization[p] for p in procs] + [r.converged]
            for r in rows]
    return _csv(header, body, comments)


def _row_dict(r):
    return {"n": r.n, "throughput": r.throughput, "art": r.art,
            "utilization": dict(r.utilization), "converged": r.converged}


def cmd_sweep(args):
    source = _source(args)
    grid = _grid(args, source)
    spec = bench.SweepSpec(source, grid, args.solver)
    rows = bench.sweep(spec, args.jobs)
    ok = [r for r in rows if r.converged]
    sat = None
    if len(ok) >= 3:
        try:
            sat = bench.saturation_of(ok, args.theta)
        except SaturationError as exc:
            print(f"warning: {exc}", file=sys.stderr)
    if args.format == "json":
        out = {"theta": args.theta, "solver": args.solver,
               "saturation": None if sat is None else {
                   "n_star": sat.n_star, "plateau_throughput": sat.plateau_throughput},
               "rows": [_row_dict(r) for r in rows]}
        _emit(args, _json(out))
    else:
        comments = [f"solver: {args.solver}", f"theta: {args.theta!r}"]
        if sat is not None:
            comments.append(f"saturation: n_star={sat.n_star} "
                            f"plateau_throughput={sat.plateau_throughput!r}")
        _emit(args, _sweep_rows_csv(rows, comments))
    return EXIT_OK if len(ok) == len(rows) else EXIT_SOLVER


def cmd_compare(args):
    grid = bench.parse_grid(args.n_grid) if args.n_grid else None
    rep = bench.compare(args.preset, grid, rates=_rates(args), theta=args.theta,
                        jobs=args.jobs, processors_per_nf=args.processors_per_nf,
                        threads_per_processor=args.threads)
    if args.format == "json":
        out = {"preset": rep.preset, "theta": rep.theta, "n_grid": list(rep.n_grid),
               "ratio": rep.ratio, "architectures": {}}
        for arch, res in rep.results.items():
            out["architectures"][arch] = {
                "n_star": res.saturation.n_star,
                "plateau_throughput": res.saturation.plateau_throughput,
                "bottleneck": res.bottleneck,
                "bottleneck_utilization": res.bottleneck_utilization,
                "messages": res.messages.total,
                "messages_by_kind": res.messages.by_kind,
                "total_processors": res.total_processors,
                "rows": [_row_dict(r) for r in res.rows]}
        _emit(args, _json(out))
    else:
        header = ["arch", "n_star", "plateau_throughput", "bottleneck",
                  "bottleneck_utilization", "messages", "total_processors"]
        rows = [[a, r.saturation.n_star, r.saturation.plateau_throughput, r.bottleneck,
                 r.bottleneck_utilization, r.messages.total, r.total_processors]
                for a, r in rep.results.items()]
        _emit(args, _csv(header, rows, [f"preset: {rep.preset}", f"theta: {rep.theta!r}",
                                        f"ratio: {rep.ratio!r}"]))
    bad = any(not r.converged for res in rep.results.values() for r in res.rows)
    return EXIT_SOLVER if bad else EXIT_OK


def cmd_scalability(args):
    base = _config(args, args.base)
    scaled = _config(args, args.scaled)
    grid = (bench.parse_grid(args.n_grid) if args.n_grid
            else bench.default_grid(bench.ModelSource(arch=args.arch, config=base)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = bench.scalability_curve(args.arch, base, scaled, grid)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.format == "json":
        out = {"label": SCALABILITY_LABEL, "arch": args.arch,
               "base": args.base, "scaled": args.scaled,
               "rows": [{"n": r.n, "lam_base": r.base.lam, "T_base": r.base.T,
                         "C_base": r.base.C, "lam_scaled": r.scaled.lam,
                         "T_scaled": r.scaled.T, "C_scaled": r.scaled.C,
                         "targetT": r.base.targetT, "S": r.S} for r in rows]}
        _emit(args, _json(out))
    else:
        header = ["n", "lam_base", "T_base", "C_base", "lam_scaled", "T_scaled",
                  "C_scaled", "targetT", "S"]
        body = [[r.n, r.base.lam, r.base.T, r.base.C, r.scaled.lam, r.scaled.T,
                 r.scaled.C, r.base.targetT, r.S] for r in rows]
        _emit(args, _csv(header, body, [SCALABILITY_LABEL]))
    return EXIT_OK


def cmd_messages(args):
    if args.flow:
        flow = metrics.load_flow(args.flow)
    else:
        flow = bench.architecture_flow(args.arch)
    count = metrics.count_messages(flow)
    if args.format == "json":
        _emit(args, _json({"total": count.total, "by_kind": count.by_kind}))
    else:
        kinds = list(count.by_kind)
        _emit(args, _csv(["total"] + kinds, [[count.total] + [count.by_kind[k]
                                                             for k in kinds]]))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _add_source(p, model_required=False):
    g = p.add_argument_group("model source")
    g.add_argument("--model", help=".pepa file")
    g.add_argument("--arch", choices=sorted(BUILDERS), default="ssba")
    g.add_argument("--group", help="component whose population is the load")
    _add_layout(p)


def _add_layout(p):
    p.add_argument("--preset", choices=["b1", "b2"], default="b1")
    p.add_argument("--rates", metavar="FILE", help="rates file overriding defaults")
    p.add_argument("--processors-per-nf", type=int, default=1)
    p.add_argument("--threads", type=int, default=10, help="threads per processor")


def _add_output(p):
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", metavar="FILE")


def build_parser():
    ap = _Parser(prog="pepaflow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="parse and validate a model file")
    p.add_argument("path", nargs="?")
    p.add_argument("--model", dest="model_opt")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve one model at one load")
    _add_source(p)
    p.add_argument("--n", type=int)
    p.add_argument("--solver", choices=bench.SOLVERS, default="fluid")
    _add_output(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a grid of user counts")
    _add_source(p)
    p.add_argument("--n-grid", metavar="a:b:points")
    p.add_argument("--solver", choices=bench.SOLVERS, default="fluid")
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--jobs", type=int, default=1)
    _add_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="saturation of both architectures")
    _add_layout(p)
    p.add_argument("--n-grid", metavar="a:b:points")
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--jobs", type=int, default=1)
    _add_output(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scalability", help="productivity ratio of two configurations")
    p.add_argument("--arch", choices=sorted(BUILDERS), default="ssba")
    p.add_argument("--base", choices=["b1", "b2"], default="b1")
    p.add_argument("--scaled", choices=["b1", "b2"], default="b2")
    p.add_argument("--rates", metavar="FILE")
    p.add_argument("--processors-per-nf", type=int, default=1)
    p.add_argument("--threads", type=int, default=10)
    p.add_argument("--n-grid", metavar="a:b:points")
    _add_output(p)
    p.set_defaults(func=cmd_scalability)

    p = sub.add_parser("messages", help="count call-flow messages")
    p.add_argument("--arch", choices=sorted(BUILDERS), default="ssba")
    p.add_argument("--flow", metavar="FILE", help="call-flow descriptor")
    _add_output(p)
    p.set_defaults(func=cmd_messages)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command == "validate":
            args.path = args.path or args.model_opt
            if not args.path:
                raise _UsageError("validate needs a model path")
        return args.func(args)
    except _UsageError as exc:
        print(f"pepaflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"pepaflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceError as exc:
        print(f"pepaflow: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CapExceededError as exc:
        print(f"pepaflow: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PepaError as exc:
        print(f"pepaflow: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
