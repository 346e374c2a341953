"""Exact prime tables: bit-packed odd sieve with block rank counts.

A :class:`PrimeTable` stores one bit per odd integer (bit ``i`` is ``2*i + 1``)
and the cumulative prime count at every 4096-number block boundary, so
``pi(x)`` is one array lookup plus a popcount over at most 32 words.
:class:`PrimeIndex` layers 1-based nth-prime access on top of a table.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

BLOCK_NUMBERS = 4096
BLOCK_BITS = BLOCK_NUMBERS // 2
BLOCK_BYTES = BLOCK_BITS // 8
BLOCK_WORDS = BLOCK_BITS // 64

DEFAULT_LIMIT_CEILING = 2**31
DEFAULT_COUNTING_CEILING = 10**11
MATERIALIZE_THRESHOLD = 10**6
DEFAULT_SEGMENT = 1 << 21
MEM_CEILING_ENV = "PRIMEGAUGE_MEM_CEILING"


class EngineError(Exception):
    """Base class for prime engine failures."""


class RangeError(EngineError, ValueError):
    """An argument falls outside the range a table or index serves."""


class DomainError(EngineError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ResourceError(EngineError):
    """A request would exceed a configured resource ceiling."""


def estimate_table_bytes(limit: int, materialize_threshold: int = MATERIALIZE_THRESHOLD) -> int:
    nblocks = limit // BLOCK_NUMBERS + 1
    size = nblocks * BLOCK_BYTES + 8 * nblocks
    if limit <= materialize_threshold:
        size += 8 * int(1.3 * limit / max(math.log(max(limit, 3)), 1.0) + 10)
    return size


def memory_ceiling_bytes() -> int | None:
    raw = os.environ.get(MEM_CEILING_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ResourceError(f"{MEM_CEILING_ENV} must be an integer byte count, got {raw!r}") from None
    if value <= 0:
        raise ResourceError(f"{MEM_CEILING_ENV} must be positive, got {value}")
    return value


def check_build_limit(limit: int, max_limit: int = DEFAULT_LIMIT_CEILING) -> None:
    if limit < 1:
        raise RangeError(f"table limit must be >= 1, got {limit}")
    if limit > max_limit:
        raise ResourceError(f"table limit {limit} exceeds ceiling {max_limit}")
    mem = memory_ceiling_bytes()
    if mem is not None and estimate_table_bytes(limit) > mem:
        raise ResourceError(
            f"table limit {limit} needs ~{estimate_table_bytes(limit)} bytes, "
            f"over memory ceiling {mem} ({MEM_CEILING_ENV})"
        )


def small_primes(n: int) -> np.ndarray:
    """All primes <= n by a plain (unsegmented) sieve; used for base primes."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for q in range(3, math.isqrt(n) + 1, 2):
        if sieve[q]:
            sieve[q * q :: 2 * q] = False
    return np.flatnonzero(sieve).astype(np.int64)


@dataclass(frozen=True, eq=False)
class PrimeTable:
    limit: int
    odd_bits: np.ndarray = field(repr=False)
    block_counts: np.ndarray = field(repr=False)
    prime_count: int

    # block_counts[b] = number of primes < b * BLOCK_NUMBERS (2 included)

    @property
    def words(self) -> np.ndarray:
        return self.odd_bits.view(np.uint64)

    def _check(self, n: int) -> None:
        if n < 0 or n > self.limit:
            raise RangeError(f"{n} outside table range [0, {self.limit}]")

    def is_prime(self, n: int) -> bool:
        self._check(n)
        if n == 2:
            return True
        if n < 2 or n % 2 == 0:
            return False
        i = n >> 1
        return bool((int(self.odd_bits[i >> 3]) >> (i & 7)) & 1)

    def pi(self, x: int) -> int:
        self._check(x)
        if x < 2:
            return 0
        b = x // BLOCK_NUMBERS
        count = int(self.block_counts[b])
        if b == 0:
            count += 1  # the prime 2
        last = (x - 1) >> 1  # highest odd bit index <= x
        if last < b * BLOCK_BITS:
            return count
        w0 = b * BLOCK_WORDS
        w1 = last >> 6
        words = self.words
        if w1 > w0:
            count += int(np.bitwise_count(words[w0:w1]).sum())
        tail = int(words[w1]) & ((1 << ((last & 63) + 1)) - 1)
        return count + tail.bit_count()

    def flags(self, lo: int, hi: int) -> np.ndarray:
        """uint8 primality flags for every n in [lo, hi)."""
        if lo < 0 or hi - 1 > self.limit or hi < lo:
            raise RangeError(f"[{lo}, {hi}) outside table range [0, {self.limit}]")
        out = np.zeros(hi - lo, dtype=np.uint8)
        if hi <= lo:
            return out
        i_lo = lo // 2
        i_hi = (hi - 2) // 2 + 1 if hi >= 2 else 0  # odd n = 2i+1 < hi
        if i_hi > i_lo:
            byte_lo, byte_hi = i_lo >> 3, ((i_hi - 1) >> 3) + 1
            bits = np.unpackbits(self.odd_bits[byte_lo:byte_hi], bitorder="little")
            bits = bits[i_lo - 8 * byte_lo : i_hi - 8 * byte_lo]
            first_odd = 2 * i_lo + 1
            out[first_odd - lo :: 2] = bits[: len(out[first_odd - lo :: 2])]
        if lo <= 2 < hi:
            out[2 - lo] = 1
        return out

    def pi_array(self, lo: int, hi: int) -> np.ndarray:
        """pi(n) for every n in [lo, hi) as int64."""
        f = self.flags(lo, hi)
        base = self.pi(lo - 1) if lo >= 1 else 0
        return base + np.cumsum(f, dtype=np.int64)

    def primes_between(self, lo: int, hi: int) -> np.ndarray:
        return np.flatnonzero(self.flags(lo, hi)).astype(np.int64) + lo

    def iter_primes(self, chunk: int = DEFAULT_SEGMENT) -> Iterator[np.ndarray]:
        """Yield all primes <= limit in ascending order, chunk by chunk."""
        for lo in range(0, self.limit + 1, chunk):
            hi = min(lo + chunk, self.limit + 1)
            ps = self.primes_between(lo, hi)
            if len(ps):
                yield ps


def build(
    limit: int,
    *,
    segment: int = DEFAULT_SEGMENT,
    max_limit: int = DEFAULT_LIMIT_CEILING,
) -> PrimeTable:
    """Sieve [0, limit] segment by segment into a :class:`PrimeTable`.

    Transient memory is the base primes up to sqrt(limit) plus one segment
    of ``segment`` numbers; the packed result itself is limit/16 bytes.
    """
    check_build_limit(limit, max_limit)
    seg_bits = max(BLOCK_BITS, (segment // 2) // BLOCK_BITS * BLOCK_BITS)
    nbits = (limit + 1) // 2  # odd n = 2i+1 <= limit
    nblocks = limit // BLOCK_NUMBERS + 1
    total_bits = nblocks * BLOCK_BITS
    odd_bits = np.zeros(total_bits // 8, dtype=np.uint8)
    per_block = np.zeros(nblocks, dtype=np.int64)
    base = small_primes(math.isqrt(limit))[1:]  # odd base primes

    for lo in range(0, total_bits, seg_bits):
        hi = min(lo + seg_bits, total_bits)
        seg = np.ones(hi - lo, dtype=bool)
        if hi > nbits:
            seg[max(nbits - lo, 0) :] = False
        if lo == 0:
            seg[0] = False  # 1 is not prime
        for q in base:
            q = int(q)
            start = (q * q) >> 1
            if start >= hi:
                break
            if start < lo:
                start = lo + (start - lo) % q
            seg[start - lo :: q] = False
        odd_bits[lo // 8 : hi // 8] = np.packbits(seg, bitorder="little")
        per_block[lo // BLOCK_BITS : hi // BLOCK_BITS] = seg.reshape(-1, BLOCK_BITS).sum(axis=1)

    if limit >= 2:
        per_block[0] += 1
    block_counts = np.zeros(nblocks, dtype=np.int64)
    np.cumsum(per_block[:-1], out=block_counts[1:])
    prime_count = int(block_counts[-1] + per_block[-1])
    odd_bits.flags.writeable = False
    block_counts.flags.writeable = False
    return PrimeTable(limit, odd_bits, block_counts, prime_count)


def nth_prime_upper_bound(n: int) -> int:
    """An integer >= p_n (Rosser's bound for n >= 6)."""
    if n < 6:
        return 13
    ln = math.log(n)
    return int(n * (ln + math.log(ln))) + 1


class PrimeIndex:
    """1-based access p_1 = 2, p_2 = 3, ... over a :class:`PrimeTable`.

    Below ``materialize_threshold`` the primes are kept as an array; above it
    lookups binary-search the block counts and scan one block.
    """

    def __init__(self, table: PrimeTable, materialize_threshold: int = MATERIALIZE_THRESHOLD):
        self.table = table
        self.max_index = table.prime_count
        self._ends = np.append(table.block_counts[1:], table.prime_count)
        self.primes: np.ndarray | None = None
        if table.limit <= materialize_threshold:
            self.primes = table.primes_between(0, table.limit + 1)
            self.primes.flags.writeable = False

    @classmethod
    def for_count(cls, n: int, **kwargs) -> "PrimeIndex":
        """Build the smallest convenient table serving indices up to ``n``."""
        return cls(build(nth_prime_upper_bound(n)), **kwargs)

    def nth_prime(self, n: int) -> int:
        if n < 1 or n > self.max_index:
            raise RangeError(f"prime index {n} outside [1, {self.max_index}]")
        if self.primes is not None:
            return int(self.primes[n - 1])
        b = int(np.searchsorted(self._ends, n, side="left"))
        k = n - int(self.table.block_counts[b])
        if b == 0:
            if n == 1:
                return 2
            k -= 1
        raw = self.table.odd_bits[b * BLOCK_BYTES : (b + 1) * BLOCK_BYTES]
        offset = int(np.flatnonzero(np.unpackbits(raw, bitorder="little"))[k - 1])
        return 2 * (b * BLOCK_BITS + offset) + 1

    def first(self, n: int) -> np.ndarray:
        """The first ``n`` primes as an int64 array."""
        if n < 0 or n > self.max_index:
            raise RangeError(f"prime index {n} outside [0, {self.max_index}]")
        if self.primes is not None:
            return self.primes[:n].copy()
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        return self.table.primes_between(0, self.nth_prime(n) + 1)


def pi_unbounded(x: int, ceiling: int = DEFAULT_COUNTING_CEILING) -> int:
    """Exact pi(x) without sieving to x.

    Legendre-style recursion on the ~2*sqrt(x) distinct values floor(x/k):
    S(v) starts as the count of 2..v and each prime p <= sqrt(x) removes the
    numbers whose least prime factor is p, in O(x^(3/4)) array work.
    """
    if x < 0:
        raise DomainError(f"pi is defined for x >= 0, got {x}")
    if x > ceiling:
        raise ResourceError(f"{x} exceeds combinatorial counting ceiling {ceiling}")
    if x < 2:
        return 0
    r = math.isqrt(x)
    # small[v] = S(v) for v <= r; large[i-1] = S(x // i) for 1 <= i <= r
    small = np.arange(-1, r, dtype=np.int64)
    large = x // np.arange(1, r + 1, dtype=np.int64) - 1
    for p in range(2, r + 1):
        if small[p] == small[p - 1]:
            continue
        sp = small[p - 1]
        p2 = p * p
        lim = min(r, x // p2)
        d = np.arange(1, lim + 1, dtype=np.int64) * p
        inner = np.where(d <= r, large[np.minimum(d, r) - 1], small[np.minimum(x // d, r)])
        large[:lim] -= inner - sp
        if p2 <= r:
            small[p2:] -= small[np.arange(p2, r + 1) // p] - sp
    return int(large[0])


# Functional spellings of the table/index methods.

def is_prime(t: PrimeTable, n: int) -> bool:
    return t.is_prime(n)


def pi(t: PrimeTable, x: int) -> int:
    return t.pi(x)


def nth_prime(ix: PrimeIndex, n: int) -> int:
    return ix.nth_prime(n)
