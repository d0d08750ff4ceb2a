"""Decide |theta(x) - x| < g(x) for every real x in a range.

theta is constant on each prime gap [p_k, p_{k+1}), say equal to T.  With g
increasing there:

* surplus side: T - x falls while g rises, so T - p_k < g(p_k) settles it;
* deficit side: x - T and g both rise.  On [u, v] the difference is at most
  (v - T) - g(u), so an interval passes once that is negative and is split at
  its midpoint otherwise.  Near the open right end this converges exactly
  when (p_{k+1} - T) < g(p_{k+1}).

Every comparison carries the theta error budget and an envelope rounding
budget.  A comparison inside its budget re-runs the whole gap at 40 digits
with theta from the primorial oracle; if that is still within 1e-25
(relative), the gap is reported Inconclusive.  Fails witnesses are always
re-confirmed at 40 digits before they are reported.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .bounds import BoundFamily, ExpThreshold, exact, to_mpf
from .errors import DomainError, InconclusiveError, NotExtendable, RangeError
from .sieve import resolve_threads
from .theta import UNIT_ROUNDOFF, ThetaTable, extended_theta

MAX_DEPTH = 60
TIE_RTOL = mpmath.mpf("1e-25")
MP_DPS = 40
MP_RTOL = mpmath.mpf("1e-35")
PREFACTOR_RTOL = 1e-9

FAST = "fast"
RIGOROUS = "rigorous"


class Status(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


def envelope_monotone_from(amp, pow, decay) -> float:
    """Smallest x >= 1 past which amp * x * (ln x)^pow * exp(-decay sqrt(ln x)) increases.

    The log-derivative has the sign of u^2 - (decay/2) u + pow with u = sqrt(ln x).
    """
    amp, pow, decay = float(exact(amp)), float(exact(pow)), float(exact(decay))
    if amp <= 0 or pow < 0 or decay <= 0:
        raise DomainError("need amp > 0, pow >= 0, decay > 0")
    half = decay / 2
    disc = half * half - 4 * pow
    if disc <= 0:
        return 1.0
    root = (half + math.sqrt(disc)) / 2
    # round outward so the certificate stays valid
    return math.nextafter(math.nextafter(math.exp(root * root), math.inf), math.inf)


@dataclass(frozen=True)
class EnvelopeFn:
    """g(x) = amp * x * (ln x)^pow * exp(-decay * sqrt(ln x)), parameters held exactly."""

    amp: Fraction
    pow: Fraction
    decay: Fraction
    monotone_from: float = field(init=False)

    def __init__(self, amp, pow, decay):
        object.__setattr__(self, "amp", exact(amp))
        object.__setattr__(self, "pow", exact(pow))
        object.__setattr__(self, "decay", exact(decay))
        object.__setattr__(self, "monotone_from", envelope_monotone_from(self.amp, self.pow, self.decay))

    @classmethod
    def from_family(cls, family: BoundFamily, scale=1) -> "EnvelopeFn":
        return cls(exact(family.a) * exact(scale), family.b, family.c)

    def __call__(self, x):
        """Float evaluation, vectorized over numpy arrays."""
        lx = np.log(x)
        val = float(self.amp) * x * np.exp(-float(self.decay) * np.sqrt(lx))
        if self.pow:
            val = val * lx ** float(self.pow)
        return val

    def rel_budget(self, x):
        """Relative error bound for :meth:`__call__` at x >= 2 (loose by design)."""
        lx = np.log(x)
        terms = 1 + float(self.decay) * np.sqrt(lx)
        if self.pow:
            terms = terms + float(self.pow) * (1 + np.abs(np.log(lx)))
        return 32 * UNIT_ROUNDOFF * terms

    def mp(self, x) -> mpmath.mpf:
        """Evaluation at the current mpmath precision."""
        x = to_mpf(x)
        lx = mpmath.log(x)
        val = to_mpf(self.amp) * x * mpmath.exp(-to_mpf(self.decay) * mpmath.sqrt(lx))
        if self.pow:
            val *= lx ** to_mpf(self.pow)
        return val


@dataclass(frozen=True)
class CheckOutcome:
    """Verdict of a range check.

    ``slack`` is a certified lower bound on min(g(x) - |theta(x) - x|) over
    the range and is only set for Holds.  ``lhs``/``rhs`` are |theta - x| and
    g at the witness.
    """

    status: Status
    witness_x: float | None = None
    lhs: float | None = None
    rhs: float | None = None
    slack: float | None = None
    theta_budget: float = 0.0
    envelope_rel_budget: float = 0.0
    escalations: int = 0
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    def as_dict(self) -> dict:
        return {
            "status": str(self.status),
            "witness_x": self.witness_x,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "theta_budget": self.theta_budget,
            "envelope_rel_budget": self.envelope_rel_budget,
            "escalations": self.escalations,
            "reason": self.reason,
        }


# --- arithmetic back ends ----------------------------------------------------


class _Ambiguous(Exception):
    def __init__(self, x, why):
        self.x, self.why = x, why


class _FloatArith:
    def __init__(self, env: EnvelopeFn, table: ThetaTable):
        self.env, self.table = env, table

    def theta(self, k):
        if k < 0:
            return 0.0, 0.0
        return float(self.table.theta[k]), float(self.table.err_budget[k])

    def g(self, x):
        v = float(self.env(x))
        return v, v * float(self.env.rel_budget(x))

    def compare(self, gv, gerr, d, derr, x):
        """Sign of gv - d, or _Ambiguous when the budgets overlap; returns a lower bound."""
        m = gv - d
        err = gerr + derr + 2 * UNIT_ROUNDOFF * (abs(gv) + abs(d))
        if m > err:
            return m - err
        if m < -err:
            return None
        raise _Ambiguous(x, "float margin within error budget")

    def diff(self, a, b):
        # a - b with a an exact float point and b carrying its own error
        return a - b

    def mid(self, u, v):
        return u + (v - u) / 2


class _MpArith:
    def __init__(self, env: EnvelopeFn, table: ThetaTable):
        self.env, self.table = env, table

    def theta(self, k):
        if k < 0:
            return mpmath.mpf(0), mpmath.mpf(0)
        t = extended_theta(int(self.table.primes[k]))
        return t, abs(t) * MP_RTOL

    def g(self, x):
        v = self.env.mp(x)
        return v, v * MP_RTOL

    def compare(self, gv, gerr, d, derr, x):
        m = gv - d
        err = max(gerr + derr, TIE_RTOL * max(abs(gv), abs(d)))
        if m > err:
            return m - err
        if m < -err:
            return None
        raise _Ambiguous(x, "margin below 1e-25 relative at 40 digits")

    def diff(self, a, b):
        return to_mpf(a) - b

    def mid(self, u, v):
        return (to_mpf(u) + to_mpf(v)) / 2


@dataclass
class _PieceResult:
    status: Status
    x: float | None = None
    slack: float = math.inf
    reason: str = ""


def _scan_piece(ar, k, s, e, point=False):
    """Check |T - x| < g(x) on [s, e) (or at the single point s when ``point``)."""
    T, terr = ar.theta(k)
    gs, gs_err = ar.g(s)
    slack = math.inf
    for d in (ar.diff(s, T), -ar.diff(s, T)):
        lb = ar.compare(gs, gs_err, d, terr, s)
        if lb is None:
            return _PieceResult(Status.FAILS, s)
        slack = min(slack, float(lb))
    if point:
        return _PieceResult(Status.HOLDS, slack=slack)

    ge, ge_err = ar.g(e)
    if ar.compare(ge, ge_err, ar.diff(e, T), terr, e) is None:
        # the closure fails, so points just left of e fail
        h = ar.diff(e, s) / 2
        for _ in range(MAX_DEPTH):
            x = ar.diff(e, h)
            if x <= s or x >= e:
                break
            gx, gx_err = ar.g(x)
            if ar.compare(gx, gx_err, ar.diff(x, T), terr, x) is None:
                return _PieceResult(Status.FAILS, x)
            h /= 2
        raise _Ambiguous(e, "closure fails but no witness resolved below the gap end")

    stack = [(s, gs, gs_err, e, 0)]
    while stack:
        u, gu, gu_err, v, depth = stack.pop()
        lb = ar.compare(gu, gu_err, ar.diff(v, T), terr, u)
        if lb is not None:
            slack = min(slack, float(lb))
            continue
        if depth >= MAX_DEPTH:
            raise _Ambiguous(u, "bisection depth cap")
        mid = ar.mid(u, v)
        if not u < mid < v:
            raise _Ambiguous(u, "resolution exhausted in bisection")
        gm, gm_err = ar.g(mid)
        if ar.compare(gm, gm_err, ar.diff(mid, T), terr, mid) is None:
            return _PieceResult(Status.FAILS, mid)
        stack.append((mid, gm, gm_err, v, depth + 1))
        stack.append((u, gu, gu_err, mid, depth + 1))
    return _PieceResult(Status.HOLDS, slack=slack)


def _resolve_piece(env, table, k, s, e, point, policy):
    """Float first, 40-digit rerun on ambiguity; returns (_PieceResult, escalated)."""
    if policy != RIGOROUS:
        try:
            return _scan_piece(_FloatArith(env, table), k, s, e, point), False
        except _Ambiguous:
            pass
    with mpmath.workdps(MP_DPS):
        try:
            return _scan_piece(_MpArith(env, table), k, s, e, point), True
        except _Ambiguous as amb:
            return _PieceResult(Status.INCONCLUSIVE, amb.x, reason=amb.why), True


def _pieces(table: ThetaTable, lo, hi):
    """Prime-gap pieces covering [lo, hi): arrays k, s, e."""
    primes = table.primes
    k_lo = int(np.searchsorted(primes, lo, side="right")) - 1
    k_hi = int(np.searchsorted(primes, hi, side="left")) - 1
    ks = np.arange(k_lo, k_hi + 1)
    left = primes[ks].astype(np.float64)
    nxt = np.append(primes, table.limit + 1)[ks + 1].astype(np.float64)
    s = np.maximum(left, lo)
    e = np.minimum(nxt, hi)
    return ks, s, e


@dataclass
class _ChunkResult:
    fail: _PieceResult | None = None
    inconclusive: _PieceResult | None = None
    slack: float = math.inf
    escalations: int = 0


def _check_chunk(env, table, ks, s, e, policy):
    out = _ChunkResult()
    if ks.size == 0:
        return out
    T = table.theta[ks]
    terr = table.err_budget[ks]
    if policy == RIGOROUS:
        todo = np.arange(ks.size)
    else:
        gs = env(s)
        gerr = gs * env.rel_budget(s)
        slop = gerr + terr + 2 * UNIT_ROUNDOFF * (gs + np.abs(e - T) + np.abs(T - s))
        deficit = gs - (e - T) - slop
        surplus = gs - (T - s) - slop
        ok = (deficit > 0) & (surplus > 0)
        if ok.any():
            out.slack = float(np.minimum(deficit, surplus)[ok].min())
        todo = np.flatnonzero(~ok)
    for i in todo:
        res, escalated = _resolve_piece(env, table, int(ks[i]), float(s[i]), float(e[i]), False, policy)
        out.escalations += escalated
        if res.status is Status.FAILS:
            out.fail = res
            break
        if res.status is Status.INCONCLUSIVE:
            out.inconclusive = out.inconclusive or res
        else:
            out.slack = min(out.slack, res.slack)
    return out


def _confirm_fail(env, table, x) -> tuple[bool, float, float]:
    """Recheck a witness at 40 digits: returns (confirmed, |theta - x|, g)."""
    with mpmath.workdps(MP_DPS):
        # theta(x) = theta(floor x); x may be an mpf finer than any float
        k = int(np.searchsorted(table.primes, int(mpmath.floor(to_mpf(x))), side="right")) - 1
        t = extended_theta(int(table.primes[k])) if k >= 0 else mpmath.mpf(0)
        lhs = abs(t - to_mpf(x))
        rhs = env.mp(x)
        return lhs >= rhs, float(lhs), float(rhs)


def check_range(env: EnvelopeFn, lo, hi, table: ThetaTable, threads: int = 0, policy: str = FAST) -> CheckOutcome:
    """Whether |theta(x) - x| < env(x) for all real x in [lo, hi]."""
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise RangeError(f"empty range [{lo}, {hi}]")
    if lo < max(2.0, env.monotone_from):
        raise RangeError(f"lo = {lo} is below max(2, monotone_from = {env.monotone_from})")
    if hi > table.limit:
        raise RangeError(f"hi = {hi} exceeds the table limit {table.limit}")

    ks, s, e = _pieces(table, lo, hi)
    n_chunks = min(resolve_threads(threads), max(1, ks.size // 4096)) if policy != RIGOROUS else 1
    bounds = np.linspace(0, ks.size, n_chunks + 1).astype(int)
    jobs = [(ks[a:b], s[a:b], e[a:b]) for a, b in zip(bounds, bounds[1:])]
    if len(jobs) == 1:
        results = [_check_chunk(env, table, *jobs[0], policy)]
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(lambda j: _check_chunk(env, table, *j, policy), jobs))

    # the closed right end is a point of its own
    k_pt = int(np.searchsorted(table.primes, hi, side="right")) - 1
    point, escalated = _resolve_piece(env, table, k_pt, hi, hi, True, policy)
    tail = _ChunkResult(escalations=int(escalated))
    if point.status is Status.FAILS:
        tail.fail = point
    elif point.status is Status.INCONCLUSIVE:
        tail.inconclusive = point
    else:
        tail.slack = point.slack
    results.append(tail)

    escalations = sum(r.escalations for r in results)
    theta_budget = float(table.err_budget[max(k_pt, 0)]) if k_pt >= 0 else 0.0
    env_budget = float(env.rel_budget(hi))
    common = dict(theta_budget=theta_budget, envelope_rel_budget=env_budget, escalations=escalations)

    fail = next((r.fail for r in results if r.fail is not None), None)
    if fail is not None:
        confirmed, lhs, rhs = _confirm_fail(env, table, fail.x)
        if confirmed:
            return CheckOutcome(Status.FAILS, float(fail.x), lhs, rhs, **common)
        return CheckOutcome(
            Status.INCONCLUSIVE, float(fail.x), lhs, rhs, reason="witness not confirmed at 40 digits", **common
        )
    inc = next((r.inconclusive for r in results if r.inconclusive is not None), None)
    if inc is not None:
        _, lhs, rhs = _confirm_fail(env, table, inc.x)
        return CheckOutcome(Status.INCONCLUSIVE, float(inc.x), lhs, rhs, reason=inc.reason, **common)
    return CheckOutcome(Status.HOLDS, slack=min(r.slack for r in results), **common)


def verify_parent(family: BoundFamily, lo, hi, table: ThetaTable, threads: int = 0, policy: str = FAST) -> CheckOutcome:
    """Check a source family's full (a, b, c) envelope on [lo, hi], lo >= x0."""
    if isinstance(family.x0, ExpThreshold):
        raise RangeError(f"{family.source} starts at {family.x0}, beyond any sieve")
    if float(lo) < family.x0:
        raise RangeError(f"lo = {lo} is below the family threshold x0 = {family.x0}")
    env = EnvelopeFn.from_family(family)
    return check_range(env, lo, hi, table, threads=threads, policy=policy)


def _check_or_raise(env, lo, hi, table, threads, policy) -> bool:
    out = check_range(env, lo, hi, table, threads=threads, policy=policy)
    if out.status is Status.INCONCLUSIVE:
        raise InconclusiveError(out)
    return out.holds


def find_x_star(env: EnvelopeFn, x0, table: ThetaTable, threads: int = 0, policy: str = FAST) -> int:
    """Smallest integer m >= 2 with the bound verified on [m, x0].

    The bound is taken on trust for x >= x0 (the lemma guarantees it there).
    Holding on [m, x0] is monotone in m, so the search steps down with
    doubling strides and then bisects.
    """
    x0 = float(x0)
    if x0 > table.limit:
        raise RangeError(f"x0 = {x0} exceeds the table limit {table.limit}")
    if env.monotone_from > 2:
        raise RangeError(f"envelope is only certified monotone from {env.monotone_from} > 2")
    top = math.ceil(x0)
    if top <= 2:
        return 2

    def holds_from(m):
        return _check_or_raise(env, m, x0, table, threads, policy)

    if not holds_from(top - 1):
        raise NotExtendable(top)
    good, stride = top - 1, 1
    bad = None
    while good > 2:
        m = max(2, good - stride)
        if holds_from(m):
            good = m
            stride *= 2
        else:
            bad = m
            break
    if bad is None:
        return 2
    while good - bad > 1:
        mid = (good + bad) // 2
        if holds_from(mid):
            good = mid
        else:
            bad = mid
    return good


def _ratio_estimate(tilde_c, lo, hi, table: ThetaTable) -> float:
    """max |theta - x| / (x exp(-tilde_c sqrt(ln x))) over the gap endpoints in [lo, hi]."""
    ks, s, e = _pieces(table, lo, hi)
    T = table.theta[ks]
    c = float(exact(tilde_c))

    def h(x):
        return x * np.exp(-c * np.sqrt(np.log(x)))

    deficit = (e - T) / h(e)
    surplus = (T - s) / h(s)
    k_pt = int(np.searchsorted(table.primes, hi, side="right")) - 1
    t_hi = float(table.theta[k_pt]) if k_pt >= 0 else 0.0
    end = abs(t_hi - hi) / float(h(hi))
    return float(max(deficit.max(initial=0.0), surplus.max(initial=0.0), end))


def min_prefactor(tilde_c, lo, hi, table: ThetaTable, threads: int = 0, rtol: float = PREFACTOR_RTOL, policy: str = FAST) -> float:
    """Least prefactor A for which A x exp(-tilde_c sqrt(ln x)) bounds |theta - x| on [lo, hi].

    Found by bisection on A to relative width ``rtol``; the returned value is
    the upper end of the final bracket and verifiably Holds.
    """
    lo, hi = float(lo), float(hi)
    if lo < max(2.0, envelope_monotone_from(1, 0, tilde_c)):
        raise RangeError(f"lo = {lo} below the monotone region")

    def holds(a):
        return _check_or_raise(EnvelopeFn(Fraction(a), 0, tilde_c), lo, hi, table, threads, policy)

    guess = _ratio_estimate(tilde_c, lo, hi, table)
    if guess <= 0:
        guess = 1e-300
    up = guess * (1 + rtol)
    while not holds(up):
        up *= 1 + 16 * rtol + (up - guess) / guess
    down = guess * (1 - rtol)
    while holds(down):
        up, down = down, down * (1 - 16 * rtol - (guess - down) / guess)
    while up - down > rtol * up:
        mid = (up + down) / 2
        if mid in (up, down):
            break
        if holds(mid):
            up = mid
        else:
            down = mid
    return up
