"""Compiled inner loops for the exhaustive scans.

Every kernel takes preallocated output arrays and returns the number of hits
it found. Callers run once with zero-length outputs to count, then again with
exact-size outputs if the count is nonzero; hits are rare, so the second pass
almost never happens. All pi values are carried incrementally from 0/1
primality flags.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def hl_diagonals(flags, s_lo, s_hi, pi_s, pi_s2, xs, ys, lhs, rhs):
    """Check pi(s) <= pi(x) + pi(s-x) for s in [s_lo, s_hi], 2 <= x <= s//2.

    ``pi_s`` and ``pi_s2`` are pi(s_lo) and pi(s_lo - 2).
    """
    cap = xs.shape[0]
    nv = 0
    for s in range(s_lo, s_hi + 1):
        if s > s_lo:
            pi_s += flags[s]
            pi_s2 += flags[s - 2]
        px = 1
        py = pi_s2
        for x in range(2, s // 2 + 1):
            if x > 2:
                px += flags[x]
                py -= flags[s - x + 1]
            if pi_s > px + py:
                if nv < cap:
                    xs[nv] = x
                    ys[nv] = s - x
                    lhs[nv] = pi_s
                    rhs[nv] = px + py
                nv += 1
    return nv


@njit(cache=True, nogil=True)
def corollary1_primes(flags, primes, pi_primes, xs, ys, lhs, rhs):
    """Flag every 2 <= x <= p-2 with pi(x) + pi(p-x) == pi(p-1), p in ``primes``.

    ``primes`` are odd primes >= 5 and ``pi_primes`` their pi values.
    """
    cap = xs.shape[0]
    nv = 0
    for k in range(primes.shape[0]):
        p = primes[k]
        target = pi_primes[k] - 1  # pi(p-1); p-1 is even and > 2
        px = 1
        py = target  # pi(p-2) == pi(p-1)
        for x in range(2, p - 1):
            if x > 2:
                px += flags[x]
                py -= flags[p - x + 1]
            if px + py == target:
                if nv < cap:
                    xs[nv] = x
                    ys[nv] = p - x
                    lhs[nv] = target
                    rhs[nv] = px + py
                nv += 1
    return nv


@njit(cache=True, nogil=True)
def superadd_diagonals(primes1, s_lo, s_hi, xs, ys, lhs, rhs):
    """Check p_s > p_a + p_b for a + b = s in [s_lo, s_hi], 2 <= a <= b.

    ``primes1[i]`` is the i-th prime (index 0 unused).
    """
    cap = xs.shape[0]
    nv = 0
    for s in range(s_lo, s_hi + 1):
        ps = primes1[s]
        for a in range(2, s // 2 + 1):
            r = primes1[a] + primes1[s - a]
            if ps <= r:
                if nv < cap:
                    xs[nv] = a
                    ys[nv] = s - a
                    lhs[nv] = ps
                    rhs[nv] = r
                nv += 1
    return nv


@njit(cache=True, nogil=True)
def defect_diagonals(member, n_max):
    """Max of count(x+y) - count(x) - count(y) over 2 <= x <= y, x+y <= n_max.

    ``member[n]`` is 1 when n belongs to the sequence. Returns the maximum and
    the first attaining pair in (diagonal, x) order.
    """
    cnt_s = 0
    for n in range(4):
        cnt_s += member[n]
    cnt_s2 = member[0] + member[1]
    cnt_2 = cnt_s2 + member[2]
    best = -(1 << 62)
    bx = 0
    by = 0
    for s in range(4, n_max + 1):
        cnt_s += member[s]
        cnt_s2 += member[s - 2]
        cx = cnt_2
        cy = cnt_s2
        for x in range(2, s // 2 + 1):
            if x > 2:
                cx += member[x]
                cy -= member[s - x + 1]
            d = cnt_s - cx - cy
            if d > best:
                best = d
                bx = x
                by = s - x
    return best, bx, by


def empty_out(n=0):
    return tuple(np.zeros(n, dtype=np.int64) for _ in range(4))
