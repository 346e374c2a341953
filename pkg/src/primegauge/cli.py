"""Command-line front end.

Exit status: 0 completed clean, 1 completed with violations or
discrepancies in the report, 2 usage or runtime error. Data goes to the
report stream (``--output`` or stdout); progress goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import deviation, engine, equation, scanner
from .checkpoint import CheckpointError, config_fingerprint, read_checkpoint, write_checkpoint
from .report import ScanWriter, csv_line, jsonl

log = logging.getLogger("primegauge")

EXIT_CLEAN, EXIT_FOUND, EXIT_ERROR = 0, 1, 2
SCAN_COMMANDS = ("check-hl", "check-c1", "check-superadd", "check-ratio")
SUBCOMMANDS = (
    "pi", "nth-prime", "check-hl", "check-c1", "check-superadd", "check-multi",
    "check-ratio", "defect", "solve-eq", "classify-eq", "deviations",
)
DEFAULT_BOUNDS = {
    "check-hl": 10**5,
    "check-c1": 10**5,
    "check-superadd": 2 * 10**4,
    "check-ratio": 10**7,
    "defect": 10**4,
    "classify-eq": 10**4,
    "deviations": 1436,
}
SIEVE_PI_LIMIT = 10**8


class Interrupted(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    bounds: dict[str, Any] = field(default_factory=dict)
    convention: str | None = None
    sign: str | None = None
    sequence: str | None = None
    checkpoint: str | None = None
    resume: bool = False
    output: str | None = None
    format: str = "jsonl"
    workers: int = 1
    checkpoint_every: int | None = None
    requested_format: str | None = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        for k, v in self.bounds.items():
            if k != "x" and isinstance(v, int) and v <= 0:
                raise ValueError(f"{k} must be positive, got {v}")

    def semantic(self) -> dict:
        """Fields that change report content; paths and parallelism excluded."""
        return {
            "subcommand": self.subcommand,
            "bounds": self.bounds,
            "convention": self.convention,
            "sign": self.sign,
            "sequence": self.sequence,
            "format": self.format,
        }

    def fingerprint(self) -> str:
        return config_fingerprint(self.semantic())


def _positive(text: str) -> int:
    try:
        v = int(text.replace("_", ""))
    except ValueError:
        # allow 1e6 style
        try:
            f = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if f != int(f):
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        v = int(f)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="report path (default: stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"), help="report format")
    common.add_argument("--workers", type=_positive, default=os.cpu_count() or 1)
    common.add_argument("-v", "--verbose", action="store_true")

    scan = argparse.ArgumentParser(add_help=False)
    scan.add_argument("--checkpoint", help="checkpoint file, rewritten atomically after every block")
    scan.add_argument("--resume", action="store_true", help="continue from --checkpoint if present")
    scan.add_argument("--checkpoint-every", type=_positive, help="outer values per block")

    p = argparse.ArgumentParser(prog="primegauge", description="Prime counting engine and conjecture scans.")
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    s = sub.add_parser("pi", parents=[common], help="count primes <= X")
    s.add_argument("x", type=int)
    s.add_argument("--method", choices=("auto", "sieve", "combinatorial"), default="auto")

    s = sub.add_parser("nth-prime", parents=[common], help="the N-th prime, 1-based")
    s.add_argument("n", type=_positive)

    for name, flag, helptext in (
        ("check-hl", "--max", "pi(x+y) <= pi(x) + pi(y) for 2 <= x <= y, x+y <= MAX"),
        ("check-c1", "--p-max", "pi(p-1) != pi(x) + pi(p-x) for primes p <= P_MAX"),
        ("check-superadd", "--max", "p_(a+b) > p_a + p_b for 2 <= a <= b, a+b <= MAX"),
        ("check-ratio", "--max", "3 pi(x-1) <= 2 pi(2x-1) for x <= MAX"),
    ):
        s = sub.add_parser(name, parents=[common, scan], help=helptext)
        flags = [flag] if flag == "--max" else [flag, "--max"]
        s.add_argument(*flags, dest="bound", type=_positive, default=DEFAULT_BOUNDS[name])

    s = sub.add_parser("check-multi", parents=[common], help="p_(sum a_k) > sum p_(a_k)")
    s.add_argument("indices", type=int, nargs="+")

    s = sub.add_parser("defect", parents=[common], help="defect constant of a sequence's counting function")
    s.add_argument("--sequence", choices=scanner.SEQUENCE_NAMES, default="primes")
    s.add_argument("--max", dest="bound", type=_positive, default=DEFAULT_BOUNDS["defect"])

    conventions = [c.value for c in equation.Convention]
    s = sub.add_parser("solve-eq", parents=[common], help="solutions of pi(p) = pi(x) + pi(p-x)")
    s.add_argument("--p", dest="p", type=_positive, required=True)
    s.add_argument("--convention", choices=conventions, default="half")

    s = sub.add_parser("classify-eq", parents=[common], help="group primes by solution set")
    s.add_argument("--p-max", "--max", dest="bound", type=_positive, default=DEFAULT_BOUNDS["classify-eq"])
    s.add_argument("--convention", choices=conventions + ["all"], default="all")

    s = sub.add_parser("deviations", parents=[common], help="D(L) series, trend fits, periodicity")
    s.add_argument("--l-max", "--max", dest="bound", type=_positive, default=DEFAULT_BOUNDS["deviations"])
    s.add_argument("--sign", choices=[v.value for v in deviation.Sign], default="neg")
    s.add_argument("--fit", help="write the fit summary JSON here (csv format; default stderr)")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    bounds = {}
    for key in ("x", "n", "bound", "p"):
        if getattr(args, key, None) is not None:
            bounds[key] = getattr(args, key)
    if getattr(args, "indices", None) is not None:
        bounds["indices"] = list(args.indices)
    default_fmt = "csv" if args.subcommand in ("solve-eq", "classify-eq", "deviations") else "jsonl"
    return RunConfig(
        subcommand=args.subcommand,
        bounds=bounds,
        convention=getattr(args, "convention", None),
        sign=getattr(args, "sign", None),
        sequence=getattr(args, "sequence", None),
        checkpoint=getattr(args, "checkpoint", None),
        resume=getattr(args, "resume", False),
        output=args.output,
        format=args.format or default_fmt,
        requested_format=args.format,
        workers=args.workers,
        checkpoint_every=getattr(args, "checkpoint_every", None),
    )


class _Out:
    def __init__(self, path: str | None):
        self.fh = open(path, "w", encoding="utf-8", newline="") if path else sys.stdout
        self._owned = path is not None

    def write(self, text: str) -> None:
        self.fh.write(text)

    def close(self) -> None:
        if self._owned:
            self.fh.close()
        else:
            self.fh.flush()


def _plan_for(cfg: RunConfig) -> scanner._Plan:
    n = cfg.bounds["bound"]
    if cfg.subcommand == "check-hl":
        return scanner.HLPlan(engine.build(n), n)
    if cfg.subcommand == "check-c1":
        return scanner.Corollary1Plan(engine.build(n), n)
    if cfg.subcommand == "check-superadd":
        return scanner.SuperaddPlan(engine.PrimeIndex.for_count(n), n)
    return scanner.RatioPlan(engine.build(2 * n - 1 if n > 1 else 2), n)


def run_scan(cfg: RunConfig, stop_after: int | None = None) -> int:
    """Drive one checkpointable scan.

    ``stop_after`` abandons the run after that many checkpoints, exactly as a
    kill would (test hook).
    """
    started = time.monotonic()
    plan = _plan_for(cfg)
    fp = cfg.fingerprint()
    resume = None
    if cfg.resume:
        if not cfg.checkpoint:
            raise CheckpointError("--resume needs --checkpoint")
        if Path(cfg.checkpoint).exists():
            resume = read_checkpoint(cfg.checkpoint)
            if resume.engine_limit != plan.engine_limit:
                raise CheckpointError(
                    f"checkpoint engine limit {resume.engine_limit} differs from {plan.engine_limit}"
                )
            log.info("resuming %s at cursor %d", resume.scan_kind, resume.cursor)
    writer = ScanWriter(cfg.output, cfg.format, keep=resume.violations_so_far if resume else None)
    start = max(resume.cursor, plan.origin) if resume else plan.origin
    pairs = plan.pairs_before(start)
    seen = resume.violations_so_far if resume else 0
    done = 0
    try:
        for ckpt, res in scanner.iter_scan(
            plan, resume, fingerprint=fp, block=cfg.checkpoint_every, workers=cfg.workers
        ):
            writer.violations(res.violations)
            pairs += res.pairs
            seen = ckpt.violations_so_far
            if cfg.checkpoint:
                writer.sync()
                write_checkpoint(cfg.checkpoint, ckpt)
            done += 1
            if stop_after is not None and done >= stop_after:
                raise Interrupted(f"stopped after {done} blocks")
            log.debug("%s cursor %d/%d", plan.kind.value, ckpt.cursor, plan.bound)
        summary = {"kind": plan.kind.value, "bound": plan.bound, "pairs_checked": pairs, "violations": seen}
        writer.summary(summary)
    finally:
        writer.close()
    log.info("%s to %d: %d pairs, %d violations in %.2fs",
             plan.kind.value, plan.bound, pairs, seen, time.monotonic() - started)
    return EXIT_FOUND if seen else EXIT_CLEAN


def _scalar_line(cfg: RunConfig, key: str, arg: int, value: int) -> str:
    # bare number unless a format was asked for
    if cfg.requested_format == "jsonl":
        return jsonl({key: arg, "value": value})
    if cfg.requested_format == "csv":
        return csv_line((key, "value")) + csv_line((arg, value))
    return f"{value}\n"


def _run_multi(cfg: RunConfig) -> int:
    idx = cfg.bounds["indices"]
    ix = engine.PrimeIndex.for_count(max(sum(idx), 1))
    res = scanner.check_multi_superadd(ix, idx)
    joined = ";".join(map(str, idx))
    out = _Out(cfg.output)
    check = {"kind": scanner.Kind.MULTI_SUPERADD.value, "indices": joined,
             "lhs": res.lhs, "rhs": res.rhs, "holds": res.holds}
    rec = res.violation(idx)
    summary = {"kind": check["kind"], "bound": sum(idx), "pairs_checked": 1, "violations": 0 if rec is None else 1}
    if cfg.format == "jsonl":
        out.write(jsonl(check))
        if rec:
            out.write(jsonl(rec.as_dict()))
        out.write(jsonl(summary))
    else:
        out.write(csv_line(("indices", "lhs", "rhs", "holds")))
        out.write(csv_line((joined, res.lhs, res.rhs, str(res.holds).lower())))
        if rec:
            out.write(csv_line(("kind", "x", "y", "lhs", "rhs")))
            out.write(csv_line(rec.as_dict().values()))
    out.close()
    log.info("p_%d = %d %s %d", sum(idx), res.lhs, ">" if res.holds else "<=", res.rhs)
    return EXIT_CLEAN if res.holds else EXIT_FOUND


def _run_defect(cfg: RunConfig) -> int:
    n = cfg.bounds["bound"]
    if n < 4:
        raise engine.DomainError(f"defect needs --max >= 4, got {n}")
    table = engine.build(n + 2)
    src = scanner.sequence_source(cfg.sequence, table)
    res = scanner.compute_defect(src, n)
    # Only the full prime sequence carries a claim (defect <= 0).
    rec = scanner.defect_violation(res, src) if cfg.sequence == "primes" else None
    out = _Out(cfg.output)
    d = res.as_dict()
    if cfg.format == "jsonl":
        out.write(jsonl(d))
        if rec:
            out.write(jsonl(rec.as_dict()))
    else:
        out.write(csv_line(d.keys()) + csv_line(d.values()))
        if rec:
            out.write(csv_line(("kind", "x", "y", "lhs", "rhs")) + csv_line(rec.as_dict().values()))
    out.close()
    return EXIT_FOUND if rec else EXIT_CLEAN


EQ_HEADER = ("p", "convention", "solution_set", "shape_id")
DISCREPANCY_HEADER = ("convention", "discrepancy", "shape", "first_p", "count")


def shape_ids(shapes) -> dict[tuple[int, ...], str]:
    """P1..P3 for the reported sets, X1, X2, ... for others by first appearance."""
    ids, extra = {}, 0
    for s in shapes:
        if s in equation.REFERENCE_SETS:
            ids[s] = f"P{equation.REFERENCE_SETS.index(s) + 1}"
        else:
            extra += 1
            ids[s] = f"X{extra}"
    return ids


def _eq_row(sol: equation.SolutionSet, sid: str, fmt: str) -> str:
    if fmt == "jsonl":
        return jsonl({"p": sol.p, "convention": sol.convention.value, "solution_set": sol.shape, "shape_id": sid})
    return csv_line((sol.p, sol.convention.value, sol.shape, sid))


def _run_solve(cfg: RunConfig) -> int:
    p = cfg.bounds["p"]
    table = engine.build(max(p, 2))
    sol = equation.solve_pi_split(table, p, equation.Convention(cfg.convention))
    sid = shape_ids([sol.xs])[sol.xs]
    out = _Out(cfg.output)
    if cfg.format == "csv":
        out.write(csv_line(EQ_HEADER))
    out.write(_eq_row(sol, sid, cfg.format))
    out.close()
    return EXIT_CLEAN


def _run_classify(cfg: RunConfig) -> int:
    n = cfg.bounds["bound"]
    table = engine.build(max(n, 2))
    convs = list(equation.Convention) if cfg.convention == "all" else [equation.Convention(cfg.convention)]
    results = [equation.classify_solution_sets(table, n, c) for c in convs]
    out = _Out(cfg.output)
    if cfg.format == "csv":
        out.write(csv_line(EQ_HEADER))
    discrepancies = []
    for res in results:
        ids = shape_ids(res.shapes)
        for sol in res.solutions:
            out.write(_eq_row(sol, ids[sol.xs], cfg.format))
        discrepancies.extend(res.discrepancies())
        log.info("%s: %d shapes, missing %s, extra %s", res.convention.value, len(res.shapes),
                 res.missing, [";".join(map(str, s)) for s in res.extra])
    if cfg.format == "csv":
        if discrepancies:
            out.write(csv_line(DISCREPANCY_HEADER))
            for d in discrepancies:
                out.write(csv_line(d[k] for k in DISCREPANCY_HEADER))
    else:
        for d in discrepancies:
            out.write(jsonl(d))
    out.close()
    return EXIT_FOUND if discrepancies else EXIT_CLEAN


def deviation_summary(rows, sign) -> dict:
    fit = deviation.fit_trend(rows, sign)
    summary = fit.as_dict()
    residuals = [r.residual for r in rows]
    if len(rows) >= deviation.MIN_PERIODICITY_POINTS:
        summary["residual_periodicity"] = deviation.periodicity_scan(residuals)
        summary["increment_periodicity"] = deviation.periodicity_scan(
            [b - a for a, b in zip(residuals, residuals[1:])]
        ) if len(rows) > deviation.MIN_PERIODICITY_POINTS else []
    summary["nonnegative_d_beyond_2"] = [r.L for r in rows if r.L >= 3 and r.d >= 0]
    return summary


def _run_deviations(cfg: RunConfig, fit_path: str | None) -> int:
    L = cfg.bounds["bound"]
    need = L * (L + 1) // 2
    table = engine.build(engine.nth_prime_upper_bound(need))
    sign = deviation.Sign(cfg.sign)
    rows = deviation.deviation_series(table, L, sign)
    summary = deviation_summary(rows, sign) if L >= deviation.MIN_FIT_ROWS else None
    out = _Out(cfg.output)
    if cfg.format == "csv":
        out.write(csv_line(deviation.CSV_HEADER))
        for r in rows:
            out.write(csv_line(r.as_tuple()))
    else:
        for r in rows:
            out.write(jsonl(dict(zip(deviation.CSV_HEADER, r.as_tuple()))))
        if summary is not None:
            out.write(jsonl(summary))
    out.close()
    if summary is not None and cfg.format == "csv":
        text = json.dumps(summary, indent=2) + "\n"
        if fit_path:
            Path(fit_path).write_text(text, encoding="utf-8")
        else:
            sys.stderr.write(text)
    broken = [r.L for r in rows if r.L >= 3 and r.d >= 0]
    if broken:
        log.warning("D(L) >= 0 for L in %s", broken[:10])
    return EXIT_FOUND if broken else EXIT_CLEAN


def run(cfg: RunConfig, args: argparse.Namespace | None = None) -> int:
    cmd = cfg.subcommand
    if cmd in SCAN_COMMANDS:
        return run_scan(cfg)
    if cmd == "pi":
        x = cfg.bounds["x"]
        method = getattr(args, "method", "auto")
        if x < 0:
            raise engine.DomainError(f"pi is defined for x >= 0, got {x}")
        if method == "sieve" or (method == "auto" and x <= SIEVE_PI_LIMIT):
            value = engine.build(max(x, 1)).pi(x)
        else:
            value = engine.pi_unbounded(x)
        out = _Out(cfg.output)
        out.write(_scalar_line(cfg, "x", x, value))
        out.close()
        return EXIT_CLEAN
    if cmd == "nth-prime":
        n = cfg.bounds["n"]
        value = engine.PrimeIndex.for_count(n).nth_prime(n)
        out = _Out(cfg.output)
        out.write(_scalar_line(cfg, "n", n, value))
        out.close()
        return EXIT_CLEAN
    if cmd == "check-multi":
        return _run_multi(cfg)
    if cmd == "defect":
        return _run_defect(cfg)
    if cmd == "solve-eq":
        return _run_solve(cfg)
    if cmd == "classify-eq":
        return _run_classify(cfg)
    return _run_deviations(cfg, getattr(args, "fit", None))


def _on_sigterm(signum, frame):
    raise Interrupted(f"terminated by signal {signum}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = config_from_args(args)
        if cfg.output:
            parent = Path(cfg.output).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise OSError(f"output path {cfg.output} is not writable")
        previous = signal.signal(signal.SIGTERM, _on_sigterm)
        try:
            return run(cfg, args)
        finally:
            signal.signal(signal.SIGTERM, previous)
    except Interrupted as exc:
        print(f"primegauge: interrupted ({exc}); rerun with --resume to continue", file=sys.stderr)
        return EXIT_ERROR
    except (engine.EngineError, CheckpointError, ValueError, OSError) as exc:
        print(f"primegauge: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
