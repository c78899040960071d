"""Command-line harness: ``sobasip run`` and ``sobasip verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracles, problems
from .solver import SolverParams, solve, with_params

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CSV_FIELDS = ["problem", "n", "n_it", "n_f", "n_g", "gbar_norm", "lambda1_bbar", "termination", "cpu_s"]
TABLE_HEADER = ["Problem", "n", "N_it", "N_f", "N_g", "||gbar_k||", "lambda_1(Bbar)", "Cpu-time"]

_log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    problems: list
    params: SolverParams = field(default_factory=SolverParams)
    n: int | None = None
    fmt: str = "table"
    out: str | None = None
    trace: str = "summary"
    seed: int = 0
    jobs: int = 1
    problem_files: list = field(default_factory=list)
    bordered_count: int = 500


class UsageError(Exception):
    pass


def resolve_problems(config: RunConfig):
    """Build the selected problems, raising :class:`UsageError` on bad names."""
    names = []
    for item in config.problems:
        for name in str(item).split(","):
            name = name.strip().lower()
            if not name:
                continue
            if name == "all":
                names.extend(problems.list_problems())
            else:
                names.append(name)
    known = set(problems.list_problems())
    unknown = [nm for nm in names if nm not in known]
    if unknown:
        raise UsageError(f"unknown problem(s): {', '.join(unknown)}")
    out = []
    for nm in dict.fromkeys(names):
        try:
            n = config.n if config.n is not None and problems.spec(nm).scalable else None
            out.append(problems.get(nm, n))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    for path in config.problem_files:
        try:
            out.append(problems.load_problem_file(path))
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"{path}: {exc}") from None
    if not out:
        raise UsageError("no problem selected")
    return out


def _fmt17(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _trace_rows(report):
    rows = []
    for it in report.iterates:
        rows.append({
            "k": it.k, "x": it.x.tolist(), "f": it.f, "gbar_norm": it.gbar_norm, "lambda1": it.lambda1,
            "theta": it.theta, "t": it.t, "case": it.case, "alpha": it.alpha, "backtracks": it.backtracks,
        })
    return rows


def render_csv(reports, with_trace=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        s = r.summary()
        w.writerow([_fmt17(s[k]) for k in CSV_FIELDS])
    if with_trace:
        buf.write("\n")
        w.writerow(["problem", "k", "f", "gbar_norm", "lambda1", "theta", "t", "case", "alpha", "backtracks"])
        for r in reports:
            for row in _trace_rows(r):
                w.writerow([r.problem] + [_fmt17(row[k]) for k in
                                          ("k", "f", "gbar_norm", "lambda1", "theta", "t", "case", "alpha",
                                           "backtracks")])
    return buf.getvalue()


def render_json(reports, with_trace=False):
    objs = []
    for r in reports:
        obj = r.summary()
        obj["x"] = r.x.tolist()
        if r.message:
            obj["message"] = r.message
        if with_trace:
            obj["trace"] = _trace_rows(r)
        objs.append(obj)
    return json.dumps(objs, indent=2) + "\n"


def render_table(reports, with_trace=False):
    rows = [TABLE_HEADER]
    for r in reports:
        s = r.summary()
        rows.append([s["problem"].upper(), str(s["n"]), str(s["n_it"]), str(s["n_f"]), str(s["n_g"]),
                     f"{s['gbar_norm']:.4e}", f"{s['lambda1_bbar']:.4e}", f"{s['cpu_s']:.4e}"])
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_HEADER))]
    lines = ["  ".join(c.ljust(wd) if i == 0 else c.rjust(wd) for i, (c, wd) in enumerate(zip(row, widths)))
             for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    failed = [r for r in reports if not r.sosp]
    for r in failed:
        lines.append(f"# {r.problem}: terminated by {r.termination} {r.message}".rstrip())
    if with_trace:
        for r in reports:
            lines.append(f"\n# trace {r.problem}")
            for it in r.iterates:
                lines.append(f"{it.k:4d}  f={it.f: .6e}  gbar={it.gbar_norm:.4e}  lam1={it.lambda1: .4e}  "
                             f"t={it.t: .4f}  case={it.case}  alpha={it.alpha:.4e}  j={it.backtracks}")
    return "\n".join(lines) + "\n"


RENDERERS = {"table": render_table, "csv": render_csv, "json": render_json}


def solve_all(probs, params, jobs=1):
    """Solve independently; results come back in input order."""
    if jobs <= 1 or len(probs) == 1:
        return [solve(p, params) for p in probs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda p: solve(p, params), probs))


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(config: RunConfig):
    """Solve every selected problem and emit one row each.

    Returns 0 iff every run ended at an approximate second-order stationary
    point, 1 otherwise, 2 on bad input (nothing is written in that case).
    """
    try:
        probs = resolve_problems(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    reports = solve_all(probs, config.params, config.jobs)
    _emit(RENDERERS[config.fmt](reports, config.trace == "per_iter"), config.out)
    return EXIT_OK if all(r.sosp for r in reports) else EXIT_FAIL


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def verify_checks(probs, params, seed=0, bordered_count=500):
    results = []
    for p in probs:
        dc = oracles.check_derivatives(p, points=20, seed=seed)
        results.append(CheckResult(f"fd-derivatives[{p.name}]", dc.ok,
                                   f"grad rel {dc.worst_grad:.2e}, hess rel {dc.worst_hess:.2e}"))
    for p, r in zip(probs, solve_all(probs, params)):
        findings = oracles.check_lemma_conclusions(r, p)
        detail = f"{len(r.iterates)} rows, termination {r.termination}"
        if findings:
            detail += "; " + "; ".join(str(f) for f in findings[:5])
        results.append(CheckResult(f"trace-checks[{p.name}]", not findings, detail))
    bad = 0
    worst_gap = np.inf
    for B, g, delta in oracles.random_bordered_instances(bordered_count, seed=seed):
        chk = oracles.border_bound_check(B, g, delta)
        if not (chk.below_minus_delta and chk.below_lam_b and chk.interlaced):
            bad += 1
        worst_gap = min(worst_gap, -delta - chk.lam_f)
    results.append(CheckResult("random-bordered-bounds", bad == 0,
                               f"{bordered_count} instances, {bad} violations, min(-delta-lam1(F))={worst_gap:.3e}"))
    return results


def verify(config: RunConfig):
    try:
        probs = resolve_problems(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    results = verify_checks(probs, config.params, config.seed, config.bordered_count)
    _emit("".join(r.line() + "\n" for r in results), config.out)
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="sobasip", description="Second-order affine-scaling solver for bound-constrained problems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "solve problems and report results"), ("verify", "run the oracle checks")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--problem", action="append", default=[], help="problem name, comma list, or 'all' (repeatable)")
        p.add_argument("--problem-file", action="append", default=[], help="plain-text problem definition")
        p.add_argument("--n", type=int, help="dimension for scalable problems")
        p.add_argument("--eps", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--big-delta", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--local-phase", action="store_true", help="switch to delta=0 once ||gbar|| <= 1e-3")
        p.add_argument("--format", choices=sorted(RENDERERS), default="table")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--trace", choices=["summary", "per_iter"], default="summary")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1, help="concurrent solves")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args):
    params = with_params(SolverParams(), eps=args.eps, delta=args.delta, big_delta=args.big_delta, nu=args.nu,
                         beta=args.beta, gamma=args.gamma, tau=args.tau, max_iter=args.max_iter,
                         local_phase_enabled=True if args.local_phase else None)
    selected = args.problem or ([] if args.problem_file else ["all"])
    return RunConfig(problems=selected, params=params, n=args.n, fmt=args.format, out=args.out, trace=args.trace,
                     seed=args.seed, jobs=args.jobs, problem_files=args.problem_file)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config) if args.command == "run" else verify(config)


if __name__ == "__main__":
    sys.exit(main())
