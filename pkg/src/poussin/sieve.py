"""Odd-only segmented sieve of Eratosthenes on numpy bool masks."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SEGMENT_ODDS = 1 << 20


def small_primes(n: int) -> np.ndarray:
    """All primes <= n with a plain sieve; used for the base primes."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(n + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def _sieve_segment(low: int, high: int, base: np.ndarray) -> np.ndarray:
    """Odd primes in [low, high); low is odd and at least 3."""
    n_odd = (high - low + 1) // 2
    mask = np.ones(n_odd, dtype=bool)
    for p in base:
        p = int(p)
        p2 = p * p
        if p2 >= high:
            break
        start = max(p2, -(-low // p) * p)
        if start % 2 == 0:
            start += p
        if start < high:
            mask[(start - low) // 2 :: p] = False
    return low + 2 * np.flatnonzero(mask).astype(np.int64)


def resolve_threads(threads: int) -> int:
    return threads if threads > 0 else (os.cpu_count() or 1)


def primes_up_to(limit: int, segment_odds: int = DEFAULT_SEGMENT_ODDS, threads: int = 0) -> np.ndarray:
    """Ascending int64 array of every prime <= limit.

    Segments are sieved independently (optionally on a thread pool) and
    concatenated in segment order, so the result does not depend on
    ``threads``.
    """
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    base = small_primes(math.isqrt(limit))[1:]  # odd base primes
    span = 2 * segment_odds
    bounds = [(lo, min(lo + span, limit + 1)) for lo in range(3, limit + 1, span)]
    workers = min(resolve_threads(threads), max(1, len(bounds)))
    if workers == 1:
        parts = [_sieve_segment(lo, hi, base) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _sieve_segment(b[0], b[1], base), bounds))
    return np.concatenate([np.array([2], dtype=np.int64), *parts])
