"""Command-line interface: ``cohortkit <subcommand> ...``.

Results go to standard output, or atomically to ``--out PATH``. Failures exit
nonzero with a single JSON line on standard error and leave no output file.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from . import distribution as dist
from . import projection as proj
from . import simulation as sim
from .errors import AcceptanceStarvation, CohortkitError
from .life_table import bundled_life_table, load_life_table

BUILTIN_TABLE = "builtin:synthetic"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(value):
    """Shortest round-trip text for numbers; empty for absent values."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cohortkit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_table(path):
    if path == BUILTIN_TABLE:
        return bundled_life_table()
    with open(path, encoding="utf-8", newline="") as fh:
        return load_life_table(fh, name=os.path.basename(path))


def _count(text):
    value = float(text)
    return int(value) if value.is_integer() else value


# --- subcommands: each returns {path or None: text} -------------------------

def cmd_project(args, direction):
    lt = _read_table(args.life_table)
    c = proj.CohortState(args.age, args.year, args.count)
    est = proj.project(lt, c, args.tau, direction)
    header = ["direction", "age", "year", "count", "tau", "target_age", "target_year",
              "mean", "variance", "cv", "factor"]
    row = [est.direction, c.age, c.year, c.count, est.tau, est.target_age, est.target_year,
           est.mean, est.variance, est.cv, est.factor]
    return {args.out: _csv_text(header, [row])}


def cmd_ladder(args):
    lt = _read_table(args.life_table)
    with open(args.structure, encoding="utf-8", newline="") as fh:
        s = proj.load_age_structure(fh, year=args.year)
    result = proj.project_ladder(lt, s, args.steps, args.direction, tau=args.tau)
    rows = [[0, s.year, age, count, "initial"] for age, count in s.bins]
    dropped = {}
    for d in result.dropped:
        dropped.setdefault(d.step, []).append(d)
    for k, st in enumerate(result.structures, start=1):
        rows.extend([k, st.year, age, count, "projected"] for age, count in st.bins)
        rows.extend([k, d.year, d.target_age, d.count, "dropped"] for d in dropped.get(k, []))
    return {args.out: _csv_text(["step", "year", "age", "count", "status"], rows)}


def cmd_dist(args):
    if args.kind == "forward":
        if args.N is None:
            raise UsageError("dist forward: --N is required")
        d = dist.ForwardDistribution(_count(args.N), args.p)
        if args.m is not None:
            rows = [[args.m, dist.forward_pmf(d, args.m)]]
        else:
            rows = list(zip(range(d.trials + 1), dist.forward_pmf_table(d).tolist()))
    else:
        if args.n is None:
            raise UsageError("dist backward: --n is required")
        bp = dist.make_backward_posterior(_count(args.n), args.p)
        if args.m is not None:
            rows = [[args.m, dist.backward_pmf(bp, args.m)]]
        else:
            support, pmf = dist.backward_pmf_table(bp)
            rows = list(zip(support.tolist(), pmf.tolist()))
    return {args.out: _csv_text(["m", "probability"], rows)}


def cmd_sweep(args):
    lt = _read_table(args.life_table)
    rows = proj.cv_sweep(lt, x_max=args.x_max, tau_min=args.tau_min, tau_max=args.tau_max,
                         N=args.count, direction=args.direction, x_min=args.x_min)
    outputs = {args.out: _csv_text(["x", "tau", "factor", "cv"],
                                   [[r.x, r.tau, r.factor, r.cv] for r in rows])}
    if args.ratio_out:
        comp = proj.compare_directions(lt, x_max=args.x_max, tau_min=args.tau_min,
                                       tau_max=args.tau_max, N=args.count, x_min=args.x_min)
        outputs[args.ratio_out] = _csv_text(["x", "tau", "v1", "v2", "ratio"],
                                            [[c.x, c.tau, c.v1, c.v2, c.ratio] for c in comp])
    if args.summary:
        best = proj.sweep_maximum(rows)
        print(json.dumps({"direction": args.direction, "max_factor": best.factor,
                          "x": best.x, "tau": best.tau, "max_cv": best.cv}), file=sys.stderr)
    return outputs


def cmd_simulate(args):
    cfg = sim.SimConfig(seed=args.seed, replications=args.replications,
                        tail_epsilon=args.tail_epsilon, max_attempts=args.max_attempts,
                        min_accepted=args.min_accepted, threads=args.threads,
                        backend=args.backend)
    if args.kind == "forward":
        if args.N is None:
            raise UsageError("simulate forward: --N is required")
        N = _count(args.N)
        res = sim.simulate_forward(cfg, N, args.p)
        params = {"direction": "forward", "N": N, "p": args.p}
    else:
        if args.n is None:
            raise UsageError("simulate backward: --n is required")
        n = _count(args.n)
        res = sim.simulate_backward_bayes(cfg, n, args.p)
        params = {"direction": "backward", "n": n, "p": args.p,
                  "a": dist.make_backward_posterior(n, args.p).a}
    return {args.out: res.to_json(cfg, params) + "\n"}


def build_parser():
    parser = _Parser(prog="cohortkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_flag(p):
        p.add_argument("--out", help="write output atomically to PATH instead of stdout")

    table_help = f"life table CSV (age,survival), or {BUILTIN_TABLE}"
    for name in ("project", "backproject"):
        p = sub.add_parser(name, help=f"{'forward' if name == 'project' else 'backward'} projection of one cohort")
        p.add_argument("--life-table", required=True, help=table_help)
        p.add_argument("--age", type=float, required=True)
        p.add_argument("--count", type=float, required=True)
        p.add_argument("--tau", type=float, required=True)
        p.add_argument("--year", type=float, default=0.0)
        out_flag(p)

    p = sub.add_parser("ladder", help="repeated projection of an age structure")
    p.add_argument("--life-table", required=True, help=table_help)
    p.add_argument("--structure", required=True, help="age structure CSV (age,count)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--direction", choices=["forward", "backward"], required=True)
    p.add_argument("--year", type=float, default=0.0)
    p.add_argument("--tau", type=float, help="step in years (defaults to the structure's age step)")
    out_flag(p)

    p = sub.add_parser("dist", help="probability mass of the forward or backward law")
    p.add_argument("kind", choices=["forward", "backward"])
    p.add_argument("--N", help="cohort size (forward)")
    p.add_argument("--n", help="observed survivors (backward)")
    p.add_argument("--p", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--m", type=int)
    g.add_argument("--all", action="store_true", help="full table (default)")
    out_flag(p)

    p = sub.add_parser("sweep", help="coefficient-of-variation factor over an (x, tau) grid")
    p.add_argument("--life-table", required=True, help=table_help)
    p.add_argument("--x-min", type=float, default=0)
    p.add_argument("--x-max", type=float, default=70)
    p.add_argument("--tau-min", type=float, default=1)
    p.add_argument("--tau-max", type=float, default=45)
    p.add_argument("--count", type=float, required=True)
    p.add_argument("--direction", choices=["forward", "backward"], required=True)
    p.add_argument("--ratio-out", help="also write V2/V1 per grid point to this CSV")
    p.add_argument("--summary", action="store_true", help="print the maximum row as JSON on stderr")
    out_flag(p)

    p = sub.add_parser("simulate", help="Monte Carlo comparison against the analytic law")
    p.add_argument("kind", choices=["forward", "backward"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--replications", type=int, required=True)
    p.add_argument("--N", help="cohort size (forward)")
    p.add_argument("--n", help="observed survivors (backward)")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--tail-epsilon", type=float, default=dist.DEFAULT_TAIL_EPSILON)
    p.add_argument("--max-attempts", type=int, default=10_000_000)
    p.add_argument("--min-accepted", type=int, default=1_000)
    p.add_argument("--threads", type=int)
    p.add_argument("--backend", choices=["cython", "python"])
    out_flag(p)
    return parser


def _fail(kind, message, status):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handlers = {
            "project": lambda a: cmd_project(a, proj.FORWARD),
            "backproject": lambda a: cmd_project(a, proj.BACKWARD),
            "ladder": cmd_ladder,
            "dist": cmd_dist,
            "sweep": cmd_sweep,
            "simulate": cmd_simulate,
        }
        outputs = handlers[args.command](args)
        for path, text in outputs.items():
            if path is None:
                sys.stdout.write(text)
            else:
                write_atomic(path, text)
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    except (CohortkitError, AcceptanceStarvation, OSError, ImportError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
