"""Exhaustive inequality scans over pi(x) and p_n.

Each scan is split into consecutive blocks of its outer variable (the
anti-diagonal s = x + y for pair scans, p for the Corollary-style scan, x for
the linear ratio scan). Blocks are independent given a read-only table, so
they may run on a thread pool; results are always merged in ascending block
order, and a :class:`ScanCheckpoint` can be cut after any block.
"""
from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .checkpoint import CheckpointError, ScanCheckpoint, config_fingerprint
from .engine import DomainError, PrimeIndex, PrimeTable, RangeError


class Kind(str, Enum):
    HL = "HL"
    COROLLARY1 = "COROLLARY1"
    SUPERADD = "SUPERADD"
    MULTI_SUPERADD = "MULTI_SUPERADD"
    RATIO32 = "RATIO32"
    SUBSET_DEFECT = "SUBSET_DEFECT"


@dataclass(frozen=True)
class ViolationRecord:
    kind: Kind
    x: int
    y: int | str  # index list "a;b;c" for MULTI_SUPERADD
    lhs: int
    rhs: int

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, "x": self.x, "y": self.y, "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class ScanReport:
    kind: Kind
    bound: int
    pairs_checked: int
    violations: list[ViolationRecord] = field(default_factory=list)
    prior_violations: int = 0  # found before the checkpoint this run resumed from

    @property
    def violation_count(self) -> int:
        return self.prior_violations + len(self.violations)

    @property
    def clean(self) -> bool:
        return self.violation_count == 0

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "bound": self.bound,
            "pairs_checked": self.pairs_checked,
            "violations": self.violation_count,
        }


@dataclass(frozen=True)
class BlockResult:
    cursor: int  # last outer value fully checked
    pairs: int
    violations: tuple[ViolationRecord, ...]


def diagonal_pairs_upto(s: int) -> int:
    """Number of pairs 2 <= x <= y with x + y <= s."""
    if s < 4:
        return 0
    return (s // 2) * ((s + 1) // 2) - 2 - (s - 3)


def _records(kind: Kind, out, n: int) -> tuple[ViolationRecord, ...]:
    xs, ys, lhs, rhs = out
    return tuple(
        ViolationRecord(kind, int(xs[i]), int(ys[i]), int(lhs[i]), int(rhs[i])) for i in range(n)
    )


def _run_kernel(kind: Kind, kernel: Callable, *args) -> tuple[ViolationRecord, ...]:
    n = kernel(*args, *_kernels.empty_out())
    if n == 0:
        return ()
    out = _kernels.empty_out(n)
    kernel(*args, *out)
    return _records(kind, out, n)


class _Plan:
    """One exhaustive scan: its outer range, block runner, and pair counter."""

    kind: Kind
    bound: int
    origin: int  # cursor value before any work
    engine_limit: int
    default_block: int

    def pairs_before(self, cursor: int) -> int:
        raise NotImplementedError

    def run(self, lo: int, hi: int) -> BlockResult:
        raise NotImplementedError

    def ranges(self, cursor: int, block: int) -> Iterator[tuple[int, int]]:
        lo = cursor + 1
        while lo <= self.bound:
            hi = min(lo + block - 1, self.bound)
            yield lo, hi
            lo = hi + 1


class HLPlan(_Plan):
    kind = Kind.HL
    default_block = 1000

    def __init__(self, table: PrimeTable, n_max: int):
        if n_max < 4:
            raise DomainError(f"HL scan needs n_max >= 4, got {n_max}")
        if n_max > table.limit:
            raise RangeError(f"n_max {n_max} exceeds engine limit {table.limit}")
        self.table, self.bound, self.origin = table, n_max, 3
        self.engine_limit = table.limit
        self.flags = table.flags(0, n_max + 1)

    def pairs_before(self, cursor):
        return diagonal_pairs_upto(cursor)

    def run(self, lo, hi):
        t = self.table
        found = _run_kernel(self.kind, _kernels.hl_diagonals, self.flags, lo, hi, t.pi(lo), t.pi(lo - 2))
        return BlockResult(hi, diagonal_pairs_upto(hi) - diagonal_pairs_upto(lo - 1), found)


class Corollary1Plan(_Plan):
    kind = Kind.COROLLARY1
    default_block = 1000

    def __init__(self, table: PrimeTable, p_max: int):
        if p_max < 5:
            raise DomainError(f"Corollary 1 scan needs p_max >= 5, got {p_max}")
        if p_max > table.limit:
            raise RangeError(f"p_max {p_max} exceeds engine limit {table.limit}")
        self.table, self.bound, self.origin = table, p_max, 4
        self.engine_limit = table.limit
        self.flags = table.flags(0, p_max + 1)

    def _primes(self, lo, hi):
        return self.table.primes_between(max(lo, 5), hi + 1) if hi >= 5 else np.zeros(0, np.int64)

    def pairs_before(self, cursor):
        return int((self._primes(5, cursor) - 3).sum())

    def run(self, lo, hi):
        ps = self._primes(lo, hi)
        if len(ps) == 0:
            return BlockResult(hi, 0, ())
        pis = self.table.pi(int(ps[0])) + np.arange(len(ps), dtype=np.int64)
        found = _run_kernel(self.kind, _kernels.corollary1_primes, self.flags, ps, pis)
        return BlockResult(hi, int((ps - 3).sum()), found)


class SuperaddPlan(_Plan):
    kind = Kind.SUPERADD
    default_block = 1000

    def __init__(self, index: PrimeIndex, n_max: int):
        if n_max < 4:
            raise DomainError(f"superadditivity scan needs n_max >= 4, got {n_max}")
        if n_max > index.max_index:
            raise RangeError(f"prime index {n_max} exceeds engine index limit {index.max_index}")
        self.bound, self.origin = n_max, 3
        self.engine_limit = index.table.limit
        self.primes1 = np.concatenate(([0], index.first(n_max))).astype(np.int64)

    def pairs_before(self, cursor):
        return diagonal_pairs_upto(cursor)

    def run(self, lo, hi):
        found = _run_kernel(self.kind, _kernels.superadd_diagonals, self.primes1, lo, hi)
        return BlockResult(hi, diagonal_pairs_upto(hi) - diagonal_pairs_upto(lo - 1), found)


class RatioPlan(_Plan):
    kind = Kind.RATIO32
    default_block = 1_000_000

    def __init__(self, table: PrimeTable, x_max: int):
        if x_max < 1:
            raise DomainError(f"ratio scan needs x_max >= 1, got {x_max}")
        if 2 * x_max - 1 > table.limit:
            raise RangeError(f"ratio scan to {x_max} needs engine limit >= {2 * x_max - 1}, have {table.limit}")
        self.table, self.bound, self.origin = table, x_max, 0
        self.engine_limit = table.limit

    def pairs_before(self, cursor):
        return cursor

    def run(self, lo, hi):
        t = self.table
        left = 3 * t.pi_array(lo - 1, hi)  # 3 pi(x-1)
        right = 2 * t.pi_array(2 * lo - 1, 2 * hi)[::2]  # 2 pi(2x-1)
        bad = np.flatnonzero(left > right)
        found = tuple(
            ViolationRecord(self.kind, lo + int(i), 2 * (lo + int(i)) - 1, int(left[i]), int(right[i]))
            for i in bad
        )
        return BlockResult(hi, hi - lo + 1, found)


def _ordered_map(fn, items: Iterable, workers: int) -> Iterator:
    """map() that may fan out to threads but always yields in input order."""
    if workers <= 1:
        for item in items:
            yield fn(*item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        window: deque = deque()
        for item in items:
            window.append(pool.submit(fn, *item))
            if len(window) >= 2 * workers:
                yield window.popleft().result()
        while window:
            yield window.popleft().result()


def default_fingerprint(kind: Kind, bound: int) -> str:
    return config_fingerprint({"scan_kind": kind.value, "bound": bound})


def iter_scan(
    plan: _Plan,
    resume: ScanCheckpoint | None = None,
    *,
    fingerprint: str | None = None,
    block: int | None = None,
    workers: int = 1,
) -> Iterator[tuple[ScanCheckpoint, BlockResult]]:
    """Run ``plan`` block by block, yielding a checkpoint after every block."""
    fingerprint = fingerprint or default_fingerprint(plan.kind, plan.bound)
    cursor, seen = plan.origin, 0
    if resume is not None:
        if resume.config_fingerprint != fingerprint:
            raise CheckpointError("checkpoint fingerprint does not match this scan configuration")
        if resume.scan_kind != plan.kind.value or resume.bound != plan.bound:
            raise CheckpointError(
                f"checkpoint is for {resume.scan_kind} to {resume.bound}, not {plan.kind.value} to {plan.bound}"
            )
        cursor, seen = max(resume.cursor, plan.origin), resume.violations_so_far
    for res in _ordered_map(plan.run, plan.ranges(cursor, block or plan.default_block), workers):
        seen += len(res.violations)
        ckpt = ScanCheckpoint(plan.kind.value, plan.bound, res.cursor, seen, fingerprint, plan.engine_limit)
        yield ckpt, res


def run_plan(plan: _Plan, resume: ScanCheckpoint | None = None, **kwargs) -> ScanReport:
    start = max(resume.cursor, plan.origin) if resume else plan.origin
    report = ScanReport(
        plan.kind,
        plan.bound,
        plan.pairs_before(start),
        prior_violations=resume.violations_so_far if resume else 0,
    )
    for _, res in iter_scan(plan, resume, **kwargs):
        report.pairs_checked += res.pairs
        report.violations.extend(res.violations)
    return report


def scan_hl(table: PrimeTable, n_max: int, resume: ScanCheckpoint | None = None, **kwargs) -> ScanReport:
    """All pairs 2 <= x <= y, x + y <= n_max against pi(x+y) <= pi(x) + pi(y)."""
    return run_plan(HLPlan(table, n_max), resume, **kwargs)


def scan_corollary1(table: PrimeTable, p_max: int, resume: ScanCheckpoint | None = None, **kwargs) -> ScanReport:
    """Every prime p <= p_max and 2 <= x <= p-2 against pi(x) + pi(p-x) != pi(p-1)."""
    return run_plan(Corollary1Plan(table, p_max), resume, **kwargs)


def scan_superadditivity(
    index: PrimeIndex, n_max: int, resume: ScanCheckpoint | None = None, **kwargs
) -> ScanReport:
    """All 2 <= a <= b, a + b <= n_max against the strict p_{a+b} > p_a + p_b."""
    return run_plan(SuperaddPlan(index, n_max), resume, **kwargs)


def scan_ratio_conjecture(
    table: PrimeTable, x_max: int, resume: ScanCheckpoint | None = None, **kwargs
) -> ScanReport:
    """3 pi(x-1) <= 2 pi(2x-1) for 1 <= x <= x_max."""
    return run_plan(RatioPlan(table, x_max), resume, **kwargs)


@dataclass(frozen=True)
class MultiCheck:
    holds: bool
    lhs: int  # p at the summed index
    rhs: int  # sum of the primes at each index

    def violation(self, indices: Sequence[int]) -> ViolationRecord | None:
        if self.holds:
            return None
        return ViolationRecord(
            Kind.MULTI_SUPERADD, int(sum(indices)), ";".join(str(a) for a in indices), self.lhs, self.rhs
        )


def check_multi_superadd(index: PrimeIndex, indices: Sequence[int]) -> MultiCheck:
    if len(indices) < 2:
        raise DomainError("need at least two indices")
    if min(indices) < 2:
        raise DomainError(f"indices must all be >= 2, got {list(indices)}")
    total = sum(indices)
    if total > index.max_index:
        raise RangeError(f"index sum {total} exceeds engine index limit {index.max_index}")
    lhs = index.nth_prime(total)
    rhs = sum(index.nth_prime(a) for a in indices)
    return MultiCheck(lhs > rhs, lhs, rhs)


# -- defect constants over pluggable sequences --------------------------------


@dataclass(frozen=True)
class SequenceSource:
    """A named increasing integer sequence; ``generate(n)`` yields members <= n."""

    name: str
    generate: Callable[[int], Iterable[int]]


@dataclass(frozen=True)
class DefectResult:
    sequence_name: str
    bound: int
    defect: int
    witness_x: int
    witness_y: int

    def as_dict(self) -> dict:
        return {
            "sequence": self.sequence_name,
            "bound": self.bound,
            "defect": self.defect,
            "witness_x": self.witness_x,
            "witness_y": self.witness_y,
        }


def prime_source(table: PrimeTable) -> SequenceSource:
    return SequenceSource("primes", lambda n: table.primes_between(0, n + 1))


def twin_lower_source(table: PrimeTable) -> SequenceSource:
    """Lower members p of twin pairs (p, p+2); needs the table to reach n + 2."""

    def gen(n):
        ps = table.primes_between(0, n + 3)
        lower = ps[:-1][np.diff(ps) == 2]
        return lower[lower <= n]

    return SequenceSource("twin-lower", gen)


def evens_source() -> SequenceSource:
    return SequenceSource("evens", lambda n: range(2, n + 1, 2))


SEQUENCE_NAMES = ("primes", "twin-lower", "evens")


def sequence_source(name: str, table: PrimeTable | None = None) -> SequenceSource:
    if name == "evens":
        return evens_source()
    if table is None:
        raise DomainError(f"sequence {name!r} needs a prime table")
    if name == "primes":
        return prime_source(table)
    if name == "twin-lower":
        return twin_lower_source(table)
    raise DomainError(f"unknown sequence {name!r}; choose from {SEQUENCE_NAMES}")


def compute_defect(f: SequenceSource | Iterable[int], n_max: int) -> DefectResult:
    """Smallest A with count(x) + count(y) >= count(x+y) - A on the range.

    count() is the counting function of the sequence; pairs are
    2 <= x <= y with x + y <= n_max.
    """
    if n_max < 4:
        raise DomainError(f"defect needs n_max >= 4, got {n_max}")
    if not isinstance(f, SequenceSource):
        f = SequenceSource("custom", lambda n, items=list(f): items)
    members = np.asarray([int(v) for v in f.generate(n_max)], dtype=np.int64)
    if len(members) > 1 and np.any(np.diff(members) <= 0):
        raise DomainError(f"sequence {f.name!r} is not strictly increasing")
    members = members[(members >= 0) & (members <= n_max)]
    flags = np.zeros(n_max + 1, dtype=np.uint8)
    flags[members] = 1
    best, bx, by = _kernels.defect_diagonals(flags, n_max)
    return DefectResult(f.name, n_max, int(best), int(bx), int(by))


def defect_violation(res: DefectResult, f: SequenceSource, allowed: int = 0) -> ViolationRecord | None:
    """A SUBSET_DEFECT record when the defect exceeds ``allowed``."""
    if res.defect <= allowed:
        return None
    members = np.asarray(list(f.generate(res.bound)), dtype=np.int64)
    cnt = lambda n: int(np.searchsorted(members, n, side="right"))
    x, y = res.witness_x, res.witness_y
    return ViolationRecord(Kind.SUBSET_DEFECT, x, y, cnt(x + y), cnt(x) + cnt(y))


# -- recomputation -----------------------------------------------------------


def recompute(rec: ViolationRecord, table: PrimeTable, index: PrimeIndex | None = None) -> tuple[int, int, bool]:
    """Re-evaluate both sides of ``rec`` from the engine; returns (lhs, rhs, violated)."""
    x, y = rec.x, rec.y
    if rec.kind is Kind.HL:
        lhs, rhs = table.pi(x + y), table.pi(x) + table.pi(y)
        return lhs, rhs, lhs > rhs
    if rec.kind is Kind.COROLLARY1:
        lhs, rhs = table.pi(x + y - 1), table.pi(x) + table.pi(y)
        return lhs, rhs, lhs == rhs
    if rec.kind is Kind.SUPERADD:
        lhs, rhs = index.nth_prime(x + y), index.nth_prime(x) + index.nth_prime(y)
        return lhs, rhs, lhs <= rhs
    if rec.kind is Kind.MULTI_SUPERADD:
        idx = [int(a) for a in str(y).split(";")]
        c = check_multi_superadd(index, idx)
        return c.lhs, c.rhs, not c.holds
    if rec.kind is Kind.RATIO32:
        lhs, rhs = 3 * table.pi(x - 1), 2 * table.pi(2 * x - 1)
        return lhs, rhs, lhs > rhs
    raise DomainError(f"cannot recompute {rec.kind} records from the engine alone")
