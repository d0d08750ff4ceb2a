"""The first Chebyshev function theta(x) = sum of ln p over primes p <= x.

A :class:`ThetaTable` stores theta at every prime up to a limit, accumulated
with Neumaier's compensated summation, together with a per-entry bound on the
floating-point error.  :func:`extended_theta` is an independent oracle: it
forms the exact primorial product and takes one logarithm at 40 digits.
"""

from __future__ import annotations

import bisect
import functools
import logging
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import gmpy2
import mpmath
import numba
import numpy as np

from .errors import CacheError, RangeError, ResourceError
from .sieve import DEFAULT_SEGMENT_ODDS, primes_up_to

log = logging.getLogger(__name__)

UNIT_ROUNDOFF = 2.0**-53
# 2u*theta from compensation theory, inflated x4
BUDGET_FACTOR = 8 * UNIT_ROUNDOFF
DEFAULT_MEMORY_BUDGET = 4 << 30
EXTENDED_CAP = 10**8
EXTENDED_DPS = 40
CACHE_ENV = "POUSSIN_CACHE_DIR"
CACHE_MAGIC = b"THET1"
_HEADER = struct.Struct("<5sQQ")


@numba.njit(cache=True)
def _neumaier_prefix(primes, out):
    total = 0.0
    comp = 0.0
    for i in range(primes.size):
        term = math.log(primes[i])
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        out[i] = total + comp


def compensated_prefix_log(primes: np.ndarray) -> np.ndarray:
    """Prefix sums of ln p in the order given, with Neumaier compensation."""
    out = np.empty(primes.size, dtype=np.float64)
    _neumaier_prefix(np.ascontiguousarray(primes, dtype=np.int64), out)
    return out


@dataclass(frozen=True, eq=False)
class ThetaTable:
    """theta at each prime <= limit; ``err_budget[k]`` bounds |theta[k] - exact|."""

    limit: int
    primes: np.ndarray
    theta: np.ndarray
    err_budget: np.ndarray

    def __post_init__(self):
        for arr in (self.primes, self.theta, self.err_budget):
            arr.flags.writeable = False

    def __len__(self):
        return int(self.primes.size)


@dataclass(frozen=True)
class ThetaValue:
    value: float
    err: float
    x: float


def estimated_bytes(limit: int) -> int:
    """Rough peak memory of a table build: 24 bytes per prime plus one segment."""
    if limit < 17:
        n_primes = 8
    else:
        n_primes = int(1.26 * limit / math.log(limit)) + 1
    return 24 * n_primes + 3 * DEFAULT_SEGMENT_ODDS


def build_theta_table(
    limit: int,
    threads: int = 0,
    segment_odds: int = DEFAULT_SEGMENT_ODDS,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> ThetaTable:
    """Sieve primes up to ``limit`` and accumulate theta at each of them.

    The output is bit-identical for every value of ``threads``: segments are
    joined in order and the summation runs sequentially in sieve order.
    """
    limit = int(limit)
    if limit < 2:
        raise RangeError(f"sieve limit must be at least 2, got {limit}")
    if estimated_bytes(limit) > memory_budget:
        raise ResourceError(
            f"limit {limit} needs about {estimated_bytes(limit) >> 20} MiB, "
            f"over the {memory_budget >> 20} MiB budget"
        )
    primes = primes_up_to(limit, segment_odds=segment_odds, threads=threads)
    theta = compensated_prefix_log(primes)
    return ThetaTable(limit, primes, theta, BUDGET_FACTOR * theta)


def theta_at(table: ThetaTable, x) -> ThetaValue:
    """theta(x) as a right-continuous step function, with its error bound."""
    if not 0 < x <= table.limit:
        raise RangeError(f"x = {x} outside (0, {table.limit}]")
    k = int(np.searchsorted(table.primes, x, side="right")) - 1
    if k < 0:
        return ThetaValue(0.0, 0.0, x)
    return ThetaValue(float(table.theta[k]), float(table.err_budget[k]), x)


# --- extended-precision oracle -------------------------------------------


def _odd_sieve_list(n: int) -> list[int]:
    # bytearray sieve kept separate from the numpy segmented one
    if n < 2:
        return []
    flags = bytearray([1]) * ((n - 1) // 2)  # index i <-> 2i + 3
    for i in range((math.isqrt(n) - 1) // 2):
        if flags[i]:
            p = 2 * i + 3
            start = (p * p - 3) // 2
            flags[start::p] = bytes(len(range(start, len(flags), p)))
    return [2] + [2 * i + 3 for i, f in enumerate(flags) if f]


def _product(values: list[int]) -> gmpy2.mpz:
    items = [gmpy2.mpz(v) for v in values] or [gmpy2.mpz(1)]
    while len(items) > 1:
        items = [items[i] * items[i + 1] if i + 1 < len(items) else items[i] for i in range(0, len(items), 2)]
    return items[0]


def extended_theta_many(xs, cap: int = EXTENDED_CAP) -> list[mpmath.mpf]:
    """theta at each of ``xs`` to about 40 significant digits.

    Primes between consecutive sorted queries are multiplied exactly and each
    block contributes one logarithm, so the only rounding is a handful of
    40-digit operations.
    """
    xs = list(xs)
    if not xs:
        return []
    top = max(math.floor(x) for x in xs)
    if top > cap:
        raise ResourceError(f"extended theta is capped at {cap}, asked for {top}")
    plist = _odd_sieve_list(top)
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    out = [None] * len(xs)
    with mpmath.workdps(EXTENDED_DPS):
        acc = mpmath.mpf(0)
        pos = 0
        for i in order:
            end = bisect.bisect_right(plist, math.floor(xs[i]))
            if end > pos:
                acc += mpmath.log(mpmath.mpf(_product(plist[pos:end])))
                pos = end
            out[i] = +acc
    return out


@functools.lru_cache(maxsize=4096)
def extended_theta(x, cap: int = EXTENDED_CAP) -> mpmath.mpf:
    """theta(x) to at least 30 significant digits.

    >>> mpmath.nstr(extended_theta(10), 20)
    '5.3471075307174686805'
    """
    return extended_theta_many([x], cap=cap)[0]


# --- binary cache ----------------------------------------------------------


def save_table(table: ThetaTable, path) -> None:
    """Write ``THET1`` header, delta-encoded primes, then theta and budgets."""
    deltas = np.diff(table.primes, prepend=0).astype("<u4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, table.limit, len(table)))
        fh.write(deltas.tobytes())
        fh.write(table.theta.astype("<f8").tobytes())
        fh.write(table.err_budget.astype("<f8").tobytes())


def check_telescoping(primes, theta, idx) -> bool:
    """theta[k] - theta[k-1] equals ln p_k within 4 ulp of theta[k]."""
    idx = np.asarray(idx)
    idx = idx[idx >= 1]
    step = theta[idx] - theta[idx - 1]
    logs = np.array([math.log(int(p)) for p in primes[idx]])
    return bool(np.all(np.abs(step - logs) <= 4 * np.spacing(theta[idx])))


def load_table(path, n_samples: int = 1000, seed: int = 0) -> ThetaTable:
    """Read a cached table and re-validate it on ``n_samples`` random entries."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CacheError(f"{path}: truncated header")
    magic, limit, count = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise CacheError(f"{path}: bad magic {magic!r}")
    if len(data) != _HEADER.size + count * (4 + 8 + 8):
        raise CacheError(f"{path}: size does not match {count} entries")
    off = _HEADER.size
    deltas = np.frombuffer(data, "<u4", count, off)
    off += 4 * count
    theta = np.frombuffer(data, "<f8", count, off).astype(np.float64)
    off += 8 * count
    err = np.frombuffer(data, "<f8", count, off).astype(np.float64)
    primes = np.cumsum(deltas, dtype=np.int64)
    if count == 0 or primes[0] != 2 or primes[-1] > limit or np.any(np.diff(primes) <= 0):
        raise CacheError(f"{path}: primes are not a valid ascending list starting at 2")
    if abs(theta[0] - math.log(2)) > 4 * np.spacing(theta[0]):
        raise CacheError(f"{path}: theta[0] is not ln 2")
    rng = np.random.default_rng(seed)
    idx = rng.integers(1, count, size=min(n_samples, count - 1)) if count > 1 else []
    if not check_telescoping(primes, theta, idx):
        raise CacheError(f"{path}: telescoping check failed")
    return ThetaTable(int(limit), primes, theta, err)


def cache_path(limit: int, cache_dir=None) -> Path | None:
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return None
    return Path(cache_dir) / f"theta_{int(limit)}.bin"


def get_table(limit: int, threads: int = 0, cache_dir=None) -> ThetaTable:
    """Build a table, going through the on-disk cache when one is configured."""
    path = cache_path(limit, cache_dir)
    if path is not None and path.exists():
        try:
            return load_table(path)
        except CacheError as exc:
            log.warning("ignoring cache file: %s", exc)
    table = build_theta_table(limit, threads=threads)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        save_table(table, tmp)
        os.replace(tmp, path)
    return table
