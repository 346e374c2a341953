"""Solutions of pi(p) = pi(x) + pi(p - x) at primes p, and their shapes."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .engine import DomainError, PrimeTable, RangeError

# The three solution sets reported for this equation.
REFERENCE_SETS: tuple[tuple[int, ...], ...] = ((2,), (2, 3, 4), (2, 3, 4, 9, 10))


class Convention(str, Enum):
    FULL = "full"  # 2 <= x <= p-2
    HALF = "half"  # 2 <= x <= floor(p/2)
    HALF_OPEN = "half-open"  # 2 <= x < p/2
    HALF_UP = "half-up"  # 2 <= x <= ceil(p/2)


def x_range(p: int, convention: Convention) -> tuple[int, int]:
    """Inclusive x bounds for ``p`` under ``convention``."""
    if convention is Convention.FULL:
        return 2, p - 2
    if convention is Convention.HALF:
        return 2, p // 2
    if convention is Convention.HALF_OPEN:
        return 2, (p - 1) // 2
    return 2, (p + 1) // 2


@dataclass(frozen=True)
class SolutionSet:
    p: int
    convention: Convention
    xs: tuple[int, ...]

    @property
    def shape(self) -> str:
        return ";".join(map(str, self.xs))


def _solve(pis: np.ndarray, p: int, convention: Convention) -> SolutionSet:
    lo, hi = x_range(p, convention)
    x = np.arange(lo, hi + 1)
    hit = x[pis[x] + pis[p - x] == pis[p]]
    return SolutionSet(p, convention, tuple(int(v) for v in hit))


def solve_pi_split(table: PrimeTable, p: int, convention: Convention = Convention.HALF) -> SolutionSet:
    """All x in the convention's range with pi(x) + pi(p-x) = pi(p)."""
    if p > table.limit:
        raise RangeError(f"p = {p} exceeds engine limit {table.limit}")
    if p < 5 or not table.is_prime(p):
        raise DomainError(f"p must be a prime >= 5, got {p}")
    return _solve(table.pi_array(0, p + 1), p, Convention(convention))


@dataclass
class Classification:
    convention: Convention
    p_max: int
    solutions: list[SolutionSet] = field(default_factory=list)
    # shape -> primes with that solution set, in order of first appearance
    shapes: dict[tuple[int, ...], list[int]] = field(default_factory=dict)

    def shape_id(self, xs: tuple[int, ...]) -> int:
        return list(self.shapes).index(xs) + 1

    @property
    def missing(self) -> list[tuple[int, ...]]:
        return [s for s in REFERENCE_SETS if s not in self.shapes]

    @property
    def extra(self) -> list[tuple[int, ...]]:
        return [s for s in self.shapes if s not in REFERENCE_SETS]

    @property
    def matches_reference(self) -> bool:
        return not self.missing and not self.extra

    def discrepancies(self) -> list[dict]:
        out = []
        for s in self.missing:
            out.append({"convention": self.convention.value, "discrepancy": "missing",
                        "shape": ";".join(map(str, s)), "first_p": 0, "count": 0})
        for s in self.extra:
            ps = self.shapes[s]
            out.append({"convention": self.convention.value, "discrepancy": "extra",
                        "shape": ";".join(map(str, s)), "first_p": ps[0], "count": len(ps)})
        return out


def classify_solution_sets(
    table: PrimeTable, p_max: int, convention: Convention = Convention.HALF
) -> Classification:
    """Group the primes 5 <= p <= p_max by their solution set."""
    if p_max < 5:
        raise DomainError(f"p_max must be >= 5, got {p_max}")
    if p_max > table.limit:
        raise RangeError(f"p_max {p_max} exceeds engine limit {table.limit}")
    convention = Convention(convention)
    pis = table.pi_array(0, p_max + 1)
    result = Classification(convention, p_max)
    for p in table.primes_between(5, p_max + 1):
        sol = _solve(pis, int(p), convention)
        result.solutions.append(sol)
        result.shapes.setdefault(sol.xs, []).append(sol.p)
    return result
