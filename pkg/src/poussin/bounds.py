"""Effective bounds on |theta(x) - x| and the log-power elimination lemma.

A *family* is a bound of the shape

    |theta(x) - x| < a * x * (ln x)^b * exp(-c * sqrt(ln x)),   x >= x0,

and a *derived* bound drops the log power in exchange for a weaker decay:

    |theta(x) - x| < A * x * exp(-C * sqrt(ln x)),   x >= x_star,

with 0 < C < c and A = a * (2b / (c - C))^(2b) * exp(-2b).  That prefactor is
the maximum over u >= 0 of u^(2b) * exp(-(c - C) u), attained at
u = 2b / (c - C), i.e. at x_peak = exp((2b / (c - C))^2).

All lemma arithmetic runs at ``WORK_DPS`` decimal digits with mpmath.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Union

import mpmath

from .errors import DomainError, RangeError

WORK_DPS = 40
# relative agreement of two values printed at 10 significant digits
PRINT_RTOL = mpmath.mpf("5e-10")

Exact = Union[Decimal, Fraction, int]


def exact(value) -> Fraction:
    """Convert a number or numeric string (``"1/3"``, ``"0.25"``) to a Fraction without rounding."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Decimal, float)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, mpmath.mpf):
        man, exp = value.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact number")


def to_mpf(value) -> mpmath.mpf:
    """Exact conversion into mpmath at the current working precision."""
    if isinstance(value, mpmath.mpf):
        return value
    if isinstance(value, ExpThreshold):
        return mpmath.exp(value.exponent)
    q = exact(value)
    return mpmath.mpf(q.numerator) / q.denominator


@dataclass(frozen=True)
class ExpThreshold:
    """A threshold ``exp(exponent)`` kept symbolic; exp(10^10) has no float."""

    exponent: int
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", f"exp({self.exponent})")

    def __str__(self):
        return self.text

    def log(self) -> int:
        return self.exponent

    def __float__(self):
        if self.exponent > 709:
            raise OverflowError(f"{self.text} exceeds the float range")
        return math.exp(self.exponent)


Threshold = Union[int, ExpThreshold]


def threshold_log(x0: Threshold) -> float:
    """Natural log of a threshold, finite for symbolic ones too."""
    if isinstance(x0, ExpThreshold):
        return float(x0.exponent)
    return math.log(x0)


def parse_threshold(text: str) -> Threshold:
    """Parse ``"101"``, ``"exp(3000)"`` or ``"exp(10^5)"``."""
    text = text.strip()
    m = re.fullmatch(r"exp\((\d+)(?:\^(\d+))?\)", text)
    if m:
        base, power = int(m.group(1)), m.group(2)
        exponent = base ** int(power) if power is not None else base
        return ExpThreshold(exponent, text)
    return int(text)


def _parse_number(text: str) -> Exact:
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    return Decimal(text)


@dataclass(frozen=True)
class BoundFamily:
    """Source bound ``a x (ln x)^b exp(-c sqrt(ln x))`` valid for x >= x0."""

    a: Exact
    b: Exact
    c: Exact
    x0: Threshold
    source: str = ""

    def __post_init__(self):
        if not exact(self.a) > 0:
            raise DomainError(f"a must be positive, got {self.a}")
        if not exact(self.b) >= 0:
            raise DomainError(f"b must be nonnegative, got {self.b}")
        if not exact(self.c) > 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if threshold_log(self.x0) < math.log(2):
            raise DomainError(f"x0 must be at least 2, got {self.x0}")

    def row(self) -> list[str]:
        """The entry as printed: source, a, b, c, x0."""
        return [self.source, str(self.a), str(self.b), str(self.c), str(self.x0)]


@dataclass(frozen=True)
class DerivedBound:
    """De la Vallee Poussin form ``tilde_a x exp(-tilde_c sqrt(ln x))``."""

    tilde_a: Exact
    tilde_c: Exact
    parent: BoundFamily
    x_star: int | None = None
    lemma_tilde_a: mpmath.mpf = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tc, c = exact(self.tilde_c), exact(self.parent.c)
        if not 0 < tc < c:
            raise DomainError(f"tilde_c must lie in (0, {c}), got {self.tilde_c}")
        lemma = derive_prefactor(self.parent, self.tilde_c)
        with mpmath.workdps(WORK_DPS):
            # relaxed prefactors may only be larger, up to 10-digit printing
            if to_mpf(self.tilde_a) < lemma * (1 - PRINT_RTOL):
                raise DomainError(
                    f"tilde_a={self.tilde_a} is below the lemma value {mpmath.nstr(lemma, 12)}"
                )
        object.__setattr__(self, "lemma_tilde_a", lemma)
        if self.x_star is not None and self.x_star < 2:
            raise DomainError("x_star must be an integer >= 2")

    @classmethod
    def from_lemma(cls, parent: BoundFamily, tilde_c) -> "DerivedBound":
        a = derive_prefactor(parent, tilde_c)
        return cls(tilde_a=exact(a), tilde_c=exact(tilde_c), parent=parent)


def _check_decay(c, tilde_c):
    if not 0 < tilde_c < c:
        raise DomainError(f"tilde_c must satisfy 0 < tilde_c < c = {c}; got {tilde_c}")


def _braced_factor(b, gap):
    # (2b/gap)^(2b) * exp(-2b); b = 0 is the continuous limit 1
    if b == 0:
        return mpmath.mpf(1)
    return (2 * b / gap) ** (2 * b) * mpmath.exp(-2 * b)


def derive_prefactor(family: BoundFamily, tilde_c) -> mpmath.mpf:
    """Prefactor of the derived bound for decay ``tilde_c``.

    Returns ``a (2b/(c - tilde_c))^(2b) e^(-2b)`` at ``WORK_DPS`` digits; for
    b = 0 this is ``a`` itself.

    >>> sch = lookup("Schoenfeld")
    >>> mpmath.nstr(derive_prefactor(sch, "1/4"), 10)
    '0.3510691792'
    """
    with mpmath.workdps(WORK_DPS):
        a, b, c, tc = (to_mpf(v) for v in (family.a, family.b, family.c, tilde_c))
        _check_decay(c, tc)
        return +(a * _braced_factor(b, c - tc))


def peak_exponent(b, c, tilde_c) -> mpmath.mpf:
    """ln(x_peak) = (2b / (c - tilde_c))^2."""
    with mpmath.workdps(WORK_DPS):
        b, c, tc = to_mpf(b), to_mpf(c), to_mpf(tilde_c)
        if not b > 0:
            raise DomainError("b must be positive: for b = 0 the factor has no interior maximum")
        _check_decay(c, tc)
        return +((2 * b / (c - tc)) ** 2)


def peak_location(b, c, tilde_c) -> mpmath.mpf:
    """Where ``(ln x)^b exp(-(c - tilde_c) sqrt(ln x))`` is largest.

    >>> float(peak_location("1/4", "0.75", "1/4")) == float(mpmath.e)
    True
    """
    with mpmath.workdps(WORK_DPS):
        return +mpmath.exp(peak_exponent(b, c, tilde_c))


SOLVE_EDGE = mpmath.mpf("1e-9")
SOLVE_MAX_ITER = 200


def solve_decay(family: BoundFamily, target_tilde_a) -> mpmath.mpf:
    """Inverse of :func:`derive_prefactor` in ``tilde_c``.

    The prefactor increases strictly in ``tilde_c`` for b > 0, so bisection on
    ``[1e-9, c - 1e-9]`` finds the unique root.  Targets at or below the
    infimum ``a (2b/c)^(2b) e^(-2b)`` are unreachable.
    """
    with mpmath.workdps(WORK_DPS):
        a, b, c = to_mpf(family.a), to_mpf(family.b), to_mpf(family.c)
        target = to_mpf(target_tilde_a)
        if not b > 0:
            raise DomainError("solve_decay needs b > 0; for b = 0 the prefactor is constant")
        infimum = a * _braced_factor(b, c)
        if target <= infimum:
            raise RangeError(
                f"target {mpmath.nstr(target, 12)} is not above the infimum {mpmath.nstr(infimum, 12)}"
            )
        lo, hi = SOLVE_EDGE, c - SOLVE_EDGE

        def f(tc):
            return a * _braced_factor(b, c - tc)

        if target <= f(lo) or target >= f(hi):
            raise RangeError("target lies outside the prefactors reachable on [1e-9, c - 1e-9]")
        for _ in range(SOLVE_MAX_ITER):
            mid = (lo + hi) / 2
            if f(mid) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= mpmath.mpf(10) ** (-WORK_DPS + 5) * c:
                break
        return +((lo + hi) / 2)


# Published families, digits as printed.
CATALOG_VERSION = "1"
_CATALOG_CSV = """\
source,a,b,c,x0
Schoenfeld,0.2196138920,1/4,0.3219796502,101
Trudgian,0.2428127763,1/4,0.3935970880,149
Fiori-Kadiri-Swidinsky,9.220226,3/2,0.8476836,2
Johnston-Yang,9.40,1.515,0.8274,2
Johnston-Yang exp(3000),8.87,1.514,0.8288,exp(3000)
Johnston-Yang exp(4000),8.16,1.512,0.8309,exp(4000)
Johnston-Yang exp(5000),7.66,1.511,0.8324,exp(5000)
Johnston-Yang exp(6000),7.23,1.510,0.8335,exp(6000)
Johnston-Yang exp(7000),7.00,1.510,0.8345,exp(7000)
Johnston-Yang exp(8000),6.79,1.509,0.8353,exp(8000)
Johnston-Yang exp(9000),6.59,1.509,0.8359,exp(9000)
Johnston-Yang exp(10000),6.73,1.509,0.8359,exp(10000)
Johnston-Yang exp(10^5),23.14,1.503,0.8659,exp(10^5)
Johnston-Yang exp(10^6),38.58,1.502,1.0318,exp(10^6)
Johnston-Yang exp(10^7),42.91,1.501,1.0706,exp(10^7)
Johnston-Yang exp(10^8),44.42,1.501,1.0839,exp(10^8)
Johnston-Yang exp(10^9),44.98,1.501,1.0886,exp(10^9)
Johnston-Yang exp(10^10),45.18,1.501,1.0903,exp(10^10)
"""


def catalog_csv() -> str:
    return _CATALOG_CSV


def catalog() -> list[BoundFamily]:
    """All catalog families, in printed order."""
    rows = csv.DictReader(io.StringIO(_CATALOG_CSV))
    return [
        BoundFamily(
            a=_parse_number(r["a"]),
            b=_parse_number(r["b"]),
            c=_parse_number(r["c"]),
            x0=parse_threshold(r["x0"]),
            source=r["source"],
        )
        for r in rows
    ]


def lookup(source: str) -> BoundFamily:
    """Find a catalog family by its label (case-insensitive)."""
    key = source.strip().lower()
    for fam in catalog():
        if fam.source.lower() == key:
            return fam
    known = ", ".join(f.source for f in catalog())
    raise KeyError(f"unknown source {source!r}; known: {known}")
