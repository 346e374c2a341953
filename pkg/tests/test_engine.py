import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from primegauge import engine
from primegauge.engine import (
    BLOCK_NUMBERS,
    DomainError,
    PrimeIndex,
    RangeError,
    ResourceError,
    build,
    is_prime,
    nth_prime,
    pi,
    pi_unbounded,
)

from oracles import first_primes, simple_sieve, trial_division

# Frozen from oracles.simple_sieve / trial division, run independently of the engine.
PI_1E6 = 78498
PI_1E7 = 664579
P_1E5 = 1299709
PI_1E8 = 5761455


def test_build_small_counts():
    assert build(10).prime_count == 4
    assert build(1).prime_count == 0
    assert build(2).prime_count == 1


def test_build_matches_independent_sieve():
    sieve = simple_sieve(10**6)
    assert sum(sieve) == PI_1E6
    assert build(10**6).prime_count == PI_1E6


def test_is_prime_against_trial_division(small_table):
    for n in range(0, 10**4 + 1):
        assert small_table.is_prime(n) == trial_division(n), n


@pytest.mark.parametrize("n,expected", [(0, False), (1, False), (2, True), (3, True), (4, False), (9, False)])
def test_is_prime_edges(small_table, n, expected):
    assert is_prime(small_table, n) is expected


def test_is_prime_large():
    t = build(10**6)
    assert trial_division(999983)
    assert t.is_prime(999983)
    assert not t.is_prime(999981)


def test_pi_against_trial_division(small_table, naive_pi):
    for x in range(0, 10**4 + 1):
        assert small_table.pi(x) == naive_pi[x], x


def test_pi_base_case():
    t = build(10)
    assert pi(t, 4) == 2
    assert pi(t, 4) <= pi(t, 2) + pi(t, 2)
    assert pi(t, 0) == 0 and pi(t, 1) == 0


def test_pi_block_boundaries():
    t = build(5 * BLOCK_NUMBERS)
    sieve = simple_sieve(5 * BLOCK_NUMBERS)
    for b in range(1, 5):
        for x in range(b * BLOCK_NUMBERS - 3, b * BLOCK_NUMBERS + 4):
            assert t.pi(x) == sum(sieve[: x + 1]), x


def test_pi_1e7(big_table):
    assert big_table.pi(10**7) == PI_1E7
    assert big_table.pi(10**6) == PI_1E6


def test_range_errors(small_table):
    for bad in (-1, small_table.limit + 1):
        with pytest.raises(RangeError):
            small_table.pi(bad)
        with pytest.raises(RangeError):
            small_table.is_prime(bad)


def test_build_rejects_over_ceiling():
    with pytest.raises(ResourceError, match="2147483648"):
        build(2**31 + 1)
    with pytest.raises(RangeError):
        build(0)


def test_memory_ceiling_env(monkeypatch):
    monkeypatch.setenv(engine.MEM_CEILING_ENV, "1000")
    with pytest.raises(ResourceError, match=engine.MEM_CEILING_ENV):
        build(10**6)
    build(100)


def test_segmented_build_is_segment_independent():
    a = build(300_001, segment=4096)
    b = build(300_001)
    assert np.array_equal(a.odd_bits, b.odd_bits)
    assert np.array_equal(a.block_counts, b.block_counts)


def test_block_counts_invariants(big_table):
    bc = big_table.block_counts
    assert np.all(np.diff(bc) >= 0)
    last_block = len(bc) - 1
    residual = big_table.prime_count - int(bc[-1])
    assert residual == big_table.pi(big_table.limit) - big_table.pi(last_block * BLOCK_NUMBERS - 1)


def test_telescoping(small_table):
    for x in range(0, small_table.limit):
        step = small_table.pi(x + 1) - small_table.pi(x)
        assert step == (1 if small_table.is_prime(x + 1) else 0)


@given(x=st.integers(0, 10**4), y=st.integers(0, 10**4))
def test_pi_monotone(small_table, x, y):
    lo, hi = sorted((x, y))
    assert small_table.pi(lo) <= small_table.pi(hi)


def test_flags_and_pi_array(small_table, naive_pi):
    for lo, hi in [(0, 1), (0, 50), (1, 2), (2, 3), (3, 100), (4095, 4200), (9000, 10001)]:
        f = small_table.flags(lo, hi)
        assert f.tolist() == [int(trial_division(n)) for n in range(lo, hi)]
        assert small_table.pi_array(lo, hi).tolist() == naive_pi[lo:hi]


def test_iter_primes_is_complete():
    t = build(100_000)
    got = np.concatenate(list(t.iter_primes(chunk=7919)))
    sieve = simple_sieve(100_000)
    assert got.tolist() == [i for i in range(len(sieve)) if sieve[i]]


def test_nth_prime_reference_list():
    ix = PrimeIndex(build(100))
    assert [nth_prime(ix, n) for n in (1, 2, 3, 4)] == [2, 3, 5, 7]


@pytest.mark.parametrize("threshold", [0, engine.MATERIALIZE_THRESHOLD])
def test_nth_prime_1e5(threshold):
    ix = PrimeIndex(build(1_300_000), materialize_threshold=threshold)
    assert ix.nth_prime(10**5) == P_1E5


def test_nth_prime_block_scan_matches_list():
    t = build(200_000)
    listed = PrimeIndex(t, materialize_threshold=10**9)
    scanned = PrimeIndex(t, materialize_threshold=0)
    assert scanned.primes is None
    ref = first_primes(300)
    for n in list(range(1, 301)) + random.Random(3).sample(range(1, t.prime_count + 1), 300):
        assert scanned.nth_prime(n) == listed.nth_prime(n)
        if n <= 300:
            assert scanned.nth_prime(n) == ref[n - 1]
    assert np.array_equal(scanned.first(5000), listed.first(5000))


def test_nth_prime_range():
    ix = PrimeIndex(build(100))
    with pytest.raises(RangeError):
        ix.nth_prime(0)
    with pytest.raises(RangeError):
        ix.nth_prime(26)


def test_round_trip(table_1e5):
    ix = PrimeIndex(table_1e5, materialize_threshold=0)
    for n in range(1, ix.max_index + 1, 37):
        p = ix.nth_prime(n)
        assert table_1e5.pi(p) == n
        assert ix.nth_prime(table_1e5.pi(p)) == p
    ps = PrimeIndex(table_1e5).primes
    assert np.all(np.diff(ps) > 0)


def test_nth_prime_upper_bound():
    ps = first_primes(2000)
    for n in range(1, 2001):
        assert engine.nth_prime_upper_bound(n) >= ps[n - 1]


def test_pi_unbounded_small():
    assert pi_unbounded(0) == 0
    assert pi_unbounded(1) == 0
    assert pi_unbounded(10**6) == PI_1E6
    assert [pi_unbounded(n) for n in range(12)] == [0, 0, 1, 2, 2, 3, 3, 4, 4, 4, 4, 5]


def test_pi_unbounded_matches_table(big_table):
    rng = random.Random(20261016)
    for x in [rng.randrange(0, big_table.limit + 1) for _ in range(1000)]:
        assert pi_unbounded(x) == big_table.pi(x), x


def test_pi_unbounded_1e8():
    assert pi_unbounded(10**8) == PI_1E8
    assert build(10**8).pi(10**8) == PI_1E8


def test_pi_unbounded_errors():
    with pytest.raises(ResourceError):
        pi_unbounded(10**11 + 1)
    with pytest.raises(DomainError):
        pi_unbounded(-1)


def test_table_is_read_only(small_table):
    with pytest.raises(ValueError):
        small_table.odd_bits[0] = 0
