"""Command-line harness: run the catalog, write report rows and traces, summarize.

Usage::

    pgeq solve --config configs/default.cfg [--problems a,b] [--out report.csv]
               [--trace DIR] [--jobs N] [--problem-file FILE]
    pgeq summarize --in report.csv

Exit codes: 0 success, 1 a solve raised an unexpected exception,
2 configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .driver import IterationRecord, SolverConfig, SolverReport, Status, solve
from .errors import ConfigError, ParseError, UnknownProblem
from .library import CatalogEntry, instantiate, list_problems, reformulate
from .tangential import SubsolverConfig

__all__ = [
    "HarnessOptions",
    "ReportRow",
    "Summary",
    "STATUS_CODES",
    "load_config",
    "parse_config",
    "run_problem",
    "run_rows",
    "run_suite",
    "write_report",
    "read_report",
    "summarize",
    "format_summary",
    "main",
]

log = logging.getLogger(__name__)

METHOD = "pgeq"
HEADER = ["Problem", "Method", "Obj", "RE", "ConstraintViolation", "SlackInf", "Status",
          "TimeSec"]
STATUS_CODES = {
    Status.KKT_POINT: "Opt",
    Status.MAX_ITERATIONS: "Max",
    Status.SUBSOLVER_ERROR: "Err",
    Status.INFEASIBLE_STATIONARY: "Isp",
}
EXIT_OK, EXIT_PANIC, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

FEASIBLE_TOL = 1e-6
SLACK_SMALL_TOL = 1e-5


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class HarnessOptions:
    lam: Optional[float] = None  # None: reference multiplier norm + offset
    reformulate: bool = True


def _convert(key: str, text: str, default):
    if isinstance(default, bool):
        low = text.lower()
        if low not in ("true", "false"):
            raise ConfigError(f"{key}: expected true or false, got {text!r}")
        return low == "true"
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if isinstance(default, float):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    raise ConfigError(f"{key}: unsupported field")


def parse_config(text: str) -> tuple[SolverConfig, HarnessOptions]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Keys are ``SolverConfig`` field names, ``subsolver.<field>`` for the
    tangential solver, and the harness keys ``lambda`` (``offset`` or a positive
    number) and ``reformulate`` (``true``/``false``).
    """
    top = {f.name: f for f in fields(SolverConfig) if f.name != "subsolver"}
    sub_defaults = SubsolverConfig()
    sub_names = {f.name for f in fields(SubsolverConfig)}
    solver_kw, sub_kw = {}, {}
    lam, reform = None, True
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if key == "lambda":
            if value.lower() == "offset":
                lam = None
            else:
                try:
                    lam = float(value)
                except ValueError:
                    raise ConfigError(f"lambda: expected 'offset' or a number, got {value!r}") from None
                if not (lam > 0 and math.isfinite(lam)):
                    raise ConfigError("lambda must be positive and finite")
        elif key == "reformulate":
            reform = _convert(key, value, True)
        elif key.startswith("subsolver."):
            name = key[len("subsolver."):]
            if name not in sub_names:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if name == "backend":
                if value not in ("auto", "cython", "python"):
                    raise ConfigError("subsolver.backend must be auto, cython or python")
                sub_kw[name] = None if value == "auto" else value
            else:
                sub_kw[name] = _convert(key, value, getattr(sub_defaults, name))
        elif key in top:
            solver_kw[key] = _convert(key, value, top[key].default)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        cfg = SolverConfig(subsolver=SubsolverConfig(**sub_kw), **solver_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, HarnessOptions(lam=lam, reformulate=reform)


def load_config(path) -> tuple[SolverConfig, HarnessOptions]:
    return parse_config(Path(path).read_text())


# --------------------------------------------------------------------------
# running

@dataclass
class ReportRow:
    problem: str
    method: str
    obj: float
    re: Optional[float]
    constraint_violation: float
    slack_inf: Optional[float]
    status: str
    time_sec: float

    def to_csv(self) -> List[str]:
        return [self.problem, self.method, _fmt(self.obj), _fmt(self.re),
                _fmt(self.constraint_violation), _fmt(self.slack_inf), self.status,
                _fmt(self.time_sec)]


def _fmt(val) -> str:
    if val is None:
        return ""
    return f"{val:.8g}"


def relative_error(obj: float, ref: Optional[float]) -> Optional[float]:
    if ref is None:
        return None
    return abs(obj - ref) / max(1.0, abs(ref))


def _lookup(name: str, extra: Sequence[CatalogEntry]) -> CatalogEntry:
    for e in extra:
        if e.name == name:
            return e
    return instantiate(name)


def run_problem(entry: CatalogEntry, cfg: SolverConfig,
                opts: HarnessOptions) -> tuple[ReportRow, SolverReport]:
    """Solve one entry.

    Infeasible entries, entries without a reference multiplier when ``lam`` is
    left to the default rule, and ``reformulate = false`` run unreformulated.
    """
    use_slack = (opts.reformulate and entry.feasible
                 and (opts.lam is not None or entry.reference_multiplier_norm is not None))
    t0 = time.perf_counter()
    if use_slack:
        ref = reformulate(entry, opts.lam)
        rep = solve(ref.problem, ref.regularizer, cfg)
        _, a = ref.split(rep.final_x)
        slack = float(np.max(np.abs(a))) if a.size else 0.0
    else:
        rep = solve(entry.base_problem, None, cfg)
        slack = None
    elapsed = time.perf_counter() - t0
    row = ReportRow(
        problem=entry.name,
        method=METHOD,
        obj=rep.final_objective,
        re=relative_error(rep.final_objective, entry.reference_objective),
        constraint_violation=rep.final_feasibility,
        slack_inf=slack,
        status=STATUS_CODES[rep.status],
        time_sec=elapsed,
    )
    return row, rep


def _worker(name: str, cfg: SolverConfig, opts: HarnessOptions,
            problem_file: Optional[str]):
    extra = _load_extra(problem_file)
    try:
        row, rep = run_problem(_lookup(name, extra), cfg, opts)
    except Exception as exc:  # reported as a panic row, not raised
        log.exception("solve of %s raised", name)
        return None, f"{type(exc).__name__}: {exc}"
    return (row, rep.trace), None


def _load_extra(problem_file: Optional[str]) -> List[CatalogEntry]:
    if not problem_file:
        return []
    from .textformat import load_problem_file
    return load_problem_file(problem_file)


def run_rows(names: Sequence[str], cfg: SolverConfig, opts: HarnessOptions,
             jobs: int = 1, problem_file: Optional[str] = None):
    """Solve ``names`` (in order) and return ``[(name, (row, trace) | None, error)]``."""
    if jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_worker, n, cfg, opts, problem_file) for n in names]
            results = [f.result() for f in futures]
    else:
        results = [_worker(n, cfg, opts, problem_file) for n in names]
    return [(n, res, err) for n, (res, err) in zip(names, results)]


def _trace_rows(trace: Sequence[IterationRecord]):
    cols = [f.name for f in fields(IterationRecord)]
    yield cols
    for rec in trace:
        out = []
        for name in cols:
            val = getattr(rec, name)
            if isinstance(val, np.ndarray):
                out.append(" ".join(repr(float(t)) for t in val))
            elif isinstance(val, float):
                out.append(repr(val))
            else:
                out.append(str(val))
        yield out


def write_trace(path, trace: Sequence[IterationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(_trace_rows(trace))


def write_report(path, rows: Sequence[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for row in rows:
            w.writerow(row.to_csv())


def _resolve_names(problem_filter, extra: Sequence[CatalogEntry]) -> List[str]:
    catalog = list_problems()
    extra_names = [e.name for e in extra]
    clash = set(extra_names) & set(catalog)
    if clash:
        raise ConfigError(f"problem file redefines catalog problems: {sorted(clash)}")
    known = catalog + extra_names
    if not problem_filter:
        return sorted(known)
    missing = [n for n in problem_filter if n not in known]
    if missing:
        raise ConfigError(f"unknown problems: {', '.join(missing)}")
    order = {n: i for i, n in enumerate(sorted(known))}
    return sorted(dict.fromkeys(problem_filter), key=order.__getitem__)


def run_suite(config_path, problem_filter: Optional[Sequence[str]] = None,
              output_path="report.csv", trace_dir=None, jobs: int = 1,
              problem_file=None) -> int:
    """Run the selected problems and write the CSV report; returns the exit code."""
    try:
        cfg, opts = load_config(config_path)
        extra = _load_extra(str(problem_file) if problem_file else None)
        names = _resolve_names(problem_filter, extra)
    except (ConfigError, ParseError, UnknownProblem) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    results = run_rows(names, cfg, opts, jobs,
                       str(problem_file) if problem_file else None)
    rows, code = [], EXIT_OK
    try:
        if trace_dir is not None:
            Path(trace_dir).mkdir(parents=True, exist_ok=True)
        for name, res, err in results:
            if res is None:
                print(f"{name}: solve raised {err}", file=sys.stderr)
                rows.append(ReportRow(name, METHOD, math.nan, None, math.nan, None, "Err",
                                      0.0))
                code = EXIT_PANIC
                continue
            row, trace = res
            rows.append(row)
            if trace_dir is not None:
                write_trace(Path(trace_dir) / f"{name}.csv", trace)
        write_report(output_path, rows)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


# --------------------------------------------------------------------------
# summary

@dataclass(frozen=True)
class Summary:
    total: int = 0
    feasible_count: int = 0
    kkt_count: int = 0
    slack_zero_count: int = 0
    slack_small_count: int = 0


def _parse_float(text: str, what: str, lineno: int) -> Optional[float]:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: {what} is not a number: {text!r}") from None


def read_report(path) -> List[ReportRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if header != HEADER:
            raise ParseError(f"unexpected header {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(HEADER):
                raise ParseError(f"line {lineno}: expected {len(HEADER)} fields")
            if rec[6] not in STATUS_CODES.values():
                raise ParseError(f"line {lineno}: unknown status {rec[6]!r}")
            obj = _parse_float(rec[2], "Obj", lineno)
            viol = _parse_float(rec[4], "ConstraintViolation", lineno)
            t = _parse_float(rec[7], "TimeSec", lineno)
            rows.append(ReportRow(
                problem=rec[0], method=rec[1],
                obj=math.nan if obj is None else obj,
                re=_parse_float(rec[3], "RE", lineno),
                constraint_violation=math.nan if viol is None else viol,
                slack_inf=_parse_float(rec[5], "SlackInf", lineno),
                status=rec[6],
                time_sec=0.0 if t is None else t,
            ))
    return rows


def summarize(report_path) -> Summary:
    """Aggregate counts: feasible (violation <= 1e-6), KKT found (Opt),
    slack exactly zero, slack small (``||a||_inf <= 1e-5``, zeros included)."""
    rows = read_report(report_path)
    return Summary(
        total=len(rows),
        feasible_count=sum(r.constraint_violation <= FEASIBLE_TOL for r in rows),
        kkt_count=sum(r.status == "Opt" for r in rows),
        slack_zero_count=sum(r.slack_inf is not None and r.slack_inf == 0.0 for r in rows),
        slack_small_count=sum(r.slack_inf is not None and r.slack_inf <= SLACK_SMALL_TOL
                              for r in rows),
    )


def format_summary(s: Summary) -> str:
    labels = [("Problems", s.total), ("Feasible", s.feasible_count),
              ("KKT Found", s.kkt_count), ("a is Zero", s.slack_zero_count),
              ("a is Small", s.slack_small_count)]
    width = max(len(k) for k, _ in labels)
    lines = [f"{k:<{width}}  {v:>5d}" for k, v in labels]
    lines.append(json.dumps(dataclasses.asdict(s), sort_keys=True))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pgeq", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run problems and write a CSV report")
    s.add_argument("--config", required=True, help="key = value solver configuration")
    s.add_argument("--problems", default=None, help="comma separated problem names")
    s.add_argument("--out", default="report.csv", help="report path (default report.csv)")
    s.add_argument("--trace", default=None, metavar="DIR",
                   help="write one per-iteration CSV per problem into DIR")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.add_argument("--problem-file", default=None,
                   help="extra problems in the text format")

    m = sub.add_parser("summarize", help="aggregate counts of a report")
    m.add_argument("--in", dest="input", required=True, help="report CSV")

    sub.add_parser("list", help="print catalog problem names")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print("\n".join(list_problems()))
        return EXIT_OK
    if args.command == "solve":
        if args.jobs < 1:
            print("config error: --jobs must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        names = [t.strip() for t in args.problems.split(",") if t.strip()] if args.problems else None
        return run_suite(args.config, names, args.out, args.trace, args.jobs, args.problem_file)
    try:
        summary = summarize(args.input)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(format_summary(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
