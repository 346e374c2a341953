"""Deviation series D(L) = sum of the first L primes - p at index L(L+1)/2.

Also: power-law fits in log-log space and an autocorrelation scan for
periodic structure in the residuals against the 4L^2 trend.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .engine import PrimeTable, RangeError

REFERENCE_RESIDUAL_EXPONENT = 4 / 3
TREND_COEFFICIENT = 4
MIN_FIT_ROWS = 8
MIN_PERIODICITY_POINTS = 32


class InsufficientDataError(ValueError):
    pass


class Sign(str, Enum):
    NEG = "neg"  # residual = d - (-4L^2)
    POS = "pos"  # residual = d - 4L^2


@dataclass(frozen=True)
class DeviationRow:
    L: int
    index_sum: int
    prime_sum: int
    p_at_index_sum: int
    d: int
    trend: int
    residual: int

    def as_tuple(self) -> tuple[int, ...]:
        return (self.L, self.index_sum, self.prime_sum, self.p_at_index_sum, self.d, self.trend, self.residual)


CSV_HEADER = ("L", "index_sum", "prime_sum", "p_at_index_sum", "d", "trend", "residual")


def residual_of(d: int, L: int, sign: Sign) -> int:
    trend = TREND_COEFFICIENT * L * L
    return d + trend if Sign(sign) is Sign.NEG else d - trend


def deviation_series(table: PrimeTable, L_max: int, sign: Sign = Sign.NEG) -> list[DeviationRow]:
    """Rows for L = 1..L_max from one ascending pass over the primes."""
    if L_max < 1:
        raise ValueError(f"L_max must be >= 1, got {L_max}")
    need = L_max * (L_max + 1) // 2
    if need > table.prime_count:
        raise RangeError(
            f"L_max = {L_max} needs p_{need}; table to {table.limit} serves only {table.prime_count} primes"
        )
    sign = Sign(sign)
    Ls = np.arange(1, L_max + 1, dtype=np.int64)
    targets = Ls * (Ls + 1) // 2  # 1-based prime indices
    prime_sums = np.zeros(L_max, dtype=np.int64)
    at_target = np.zeros(L_max, dtype=np.int64)
    seen = 0  # primes consumed so far
    running = 0
    for chunk in table.iter_primes():
        n = len(chunk)
        # prefix sums for the first L_max indices
        if seen < L_max:
            take = min(n, L_max - seen)
            sums = running + np.cumsum(chunk[:take])
            prime_sums[seen : seen + take] = sums
            running = int(sums[-1])
        k0, k1 = np.searchsorted(targets, [seen + 1, seen + n + 1])
        at_target[k0:k1] = chunk[targets[k0:k1] - 1 - seen]
        seen += n
        if seen >= need:
            break
    rows = []
    for L, T, s, p in zip(Ls.tolist(), targets.tolist(), prime_sums.tolist(), at_target.tolist()):
        d = s - p
        rows.append(DeviationRow(L, T, s, p, d, TREND_COEFFICIENT * L * L, residual_of(d, L, sign)))
    return rows


@dataclass(frozen=True)
class FitResult:
    model: str
    exponent: float
    coefficient: float
    r_squared: float
    n_points: int

    def as_dict(self) -> dict:
        return asdict(self)


def fit_power_law(xs: Sequence[float], ys: Sequence[float], model: str = "|y| = c * x^e") -> FitResult:
    """Least squares of log|y| on log x; points with y == 0 are dropped."""
    x = np.asarray(xs, dtype=float)
    y = np.abs(np.asarray(ys, dtype=float))
    keep = (y > 0) & (x > 0)
    if keep.sum() < MIN_FIT_ROWS:
        raise InsufficientDataError(f"need >= {MIN_FIT_ROWS} nonzero points, have {int(keep.sum())}")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    e, logc = np.polyfit(lx, ly, 1)
    resid = ly - (e * lx + logc)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float((resid**2).sum()) / ss_tot
    return FitResult(model, float(e), float(math.exp(logc)), min(max(r2, 0.0), 1.0), int(keep.sum()))


@dataclass(frozen=True)
class TrendFit:
    sign: Sign
    magnitude: FitResult  # |d| against L
    residual: FitResult | None  # |d -/+ 4L^2| against L; None if under 8 are nonzero
    quadratic_coefficient: float  # c minimizing sum (d - s*c*L^2)^2, s the sign

    def as_dict(self) -> dict:
        return {
            "sign": self.sign.value,
            "magnitude_fit": self.magnitude.as_dict(),
            "residual_fit": None if self.residual is None else self.residual.as_dict(),
            "quadratic_coefficient": self.quadratic_coefficient,
            "trend_coefficient": TREND_COEFFICIENT,
            "reference_residual_exponent": REFERENCE_RESIDUAL_EXPONENT,
            "residual_exponent_gap": None if self.residual is None
            else self.residual.exponent - REFERENCE_RESIDUAL_EXPONENT,
        }


def fit_trend(rows: Sequence[DeviationRow], sign: Sign = Sign.NEG) -> TrendFit:
    if len(rows) < MIN_FIT_ROWS:
        raise InsufficientDataError(f"need >= {MIN_FIT_ROWS} rows, have {len(rows)}")
    sign = Sign(sign)
    L = np.array([r.L for r in rows], dtype=float)
    d = np.array([r.d for r in rows], dtype=float)
    resid = np.array([residual_of(r.d, r.L, sign) for r in rows], dtype=float)
    mag = fit_power_law(L, d, "|d| = c * L^e")
    try:
        res = fit_power_law(L, resid, f"|d {'+' if sign is Sign.NEG else '-'} 4L^2| = c * L^e")
    except InsufficientDataError:
        res = None
    s = -1.0 if sign is Sign.NEG else 1.0
    quad = float(s * (d * L**2).sum() / (L**4).sum())
    return TrendFit(sign, mag, res, quad)


def autocorrelation(values: Sequence[float], max_lag: int) -> np.ndarray:
    """Mean-removed autocorrelation r[0..max_lag], normalized so r[0] = 1."""
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0:
        return np.zeros(max_lag + 1)
    n = len(x)
    return np.array([float(x[: n - k] @ x[k:]) / denom for k in range(max_lag + 1)])


def periodicity_scan(residuals: Sequence[float], top_k: int = 5) -> list[tuple[int, float]]:
    """Strongest autocorrelation peaks among lags 1..n//4.

    A lag qualifies when it is a local maximum of the autocorrelation and
    exceeds 2/sqrt(n). For white noise each lag crosses that line with
    probability about 0.023, so a few spurious peaks are expected over many
    lags; see the tests for the measured rate.
    """
    n = len(residuals)
    if n < MIN_PERIODICITY_POINTS:
        raise InsufficientDataError(f"need >= {MIN_PERIODICITY_POINTS} points, have {n}")
    m = n // 4
    r = autocorrelation(residuals, min(m + 1, n - 1))
    threshold = 2 / math.sqrt(n)
    peaks = []
    for k in range(1, m + 1):
        right = r[k + 1] if k + 1 < len(r) else -math.inf
        if r[k] > r[k - 1] and r[k] >= right and r[k] > threshold:
            peaks.append((k, float(r[k])))
    peaks.sort(key=lambda kv: (-kv[1], kv[0]))
    return peaks[:top_k]

