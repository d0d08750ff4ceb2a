import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poussin.bounds import lookup
from poussin.errors import NotExtendable, RangeError
from poussin.theta import extended_theta
from poussin.verifier import (
    RIGOROUS,
    EnvelopeFn,
    Status,
    check_range,
    envelope_monotone_from,
    find_x_star,
    min_prefactor,
    verify_parent,
)

THIRD = Fraction(1, 3)


def brute_margin(amp, decay, lo, hi, table, per_gap=10_000):
    """max over samples of (|theta(x) - x| - g(x)) / g(x).

    Surplus at each gap's left end, deficit at ``per_gap`` equally spaced
    points plus both ends (the right end with the gap's own theta), and the
    closed point hi.
    """
    primes = table.primes
    amp, decay = float(amp), float(decay)

    def g(x):
        return amp * x * np.exp(-decay * np.sqrt(np.log(x)))

    k_lo = int(np.searchsorted(primes, lo, side="right")) - 1
    k_hi = int(np.searchsorted(primes, hi, side="left")) - 1
    worst = -math.inf
    t = np.linspace(0.0, 1.0, per_gap + 2)
    for k in range(k_lo, k_hi + 1):
        s = max(float(primes[k]), lo)
        e = min(float(primes[k + 1]) if k + 1 < len(primes) else hi, hi)
        T = float(table.theta[k])
        xs = s + (e - s) * t
        worst = max(worst, float(np.max((np.abs(T - xs) - g(xs)) / g(xs))))
    k = int(np.searchsorted(primes, hi, side="right")) - 1
    worst = max(worst, (abs(float(table.theta[k]) - hi) - g(hi)) / g(hi))
    return worst


def test_monotone_from_closed_forms():
    assert envelope_monotone_from(1, 0, 1) == pytest.approx(math.exp(0.25), rel=1e-15)
    assert envelope_monotone_from(1, 0, 0.25) == pytest.approx(math.exp(1 / 64), rel=1e-15)
    assert envelope_monotone_from(1, 0.25, 0.3219796502) < 2
    assert envelope_monotone_from(1, 0, 1) >= math.exp(0.25)


@pytest.mark.parametrize("pow_, decay", [(0, 1), (0.25, 0.3219796502), (0.01, 1.5), (0, 3)])
def test_monotone_from_is_a_certificate(pow_, decay):
    start = envelope_monotone_from(1, pow_, decay)
    env = EnvelopeFn(1, pow_, decay)
    xs = np.geomspace(max(start, 1.0000001), 1e6, 20_000)
    assert np.all(np.diff(env(xs)) > 0)
    if start > 1.01:
        below = np.linspace(1.001, start * 0.999, 200)
        assert not np.all(np.diff(env(below)) > 0)


def test_clean_bound_holds_from_two(table_1e4):
    out = check_range(EnvelopeFn(1, 0, "1/4"), 2, 101, table_1e4)
    assert out.status is Status.HOLDS and out.slack > 0


def test_half_prefactor_fails_below_29(table_1e4):
    out = check_range(EnvelopeFn("1/2", 0, "1/4"), 28, 29, table_1e4)
    assert out.status is Status.FAILS
    assert 28 <= out.witness_x < 29
    # theta is theta(23) on [23, 29)
    with mpmath.workdps(40):
        w = mpmath.mpf(out.witness_x)
        lhs = w - extended_theta(23)
        rhs = mpmath.mpf(1) / 2 * w * mpmath.exp(-mpmath.sqrt(mpmath.log(w)) / 4)
    assert lhs >= rhs


def test_large_prefactor_holds_with_large_slack(table_1e4):
    out = check_range(EnvelopeFn(10, 0, "1/4"), 2, 1000, table_1e4)
    assert out.status is Status.HOLDS
    assert brute_margin(10, 0.25, 2, 1000, table_1e4, per_gap=50) < -0.5
    assert out.slack > 1


def test_closed_right_end_is_checked(table_1e4):
    # at x = 3 the gap [2, 3) is fine but ln 6 - 3 is not the issue; pick a range ending on a failing point
    env = EnvelopeFn("1/2", 0, "1/4")
    assert check_range(env, 29, 149, table_1e4).holds
    assert not check_range(env, 28.9, 29, table_1e4).holds


def test_range_errors(table_1e4):
    env = EnvelopeFn(1, 0, "1/4")
    with pytest.raises(RangeError):
        check_range(env, 2, 10**4 + 1, table_1e4)
    with pytest.raises(RangeError):
        check_range(env, 5, 5, table_1e4)
    with pytest.raises(RangeError):
        check_range(EnvelopeFn(1, 0, 3), 2, 10, table_1e4)


@pytest.mark.parametrize(
    "amp, decay, x0, expected",
    [
        ("0.3510691792", "1/4", 101, 59),
        ("0.2748124978", "1/4", 149, 101),
        ("0.4242102935", THIRD, 149, 59),
        (1, "1/4", 101, 2),
        (1, THIRD, 149, 3),
        ("1/2", "1/4", 101, 29),
        ("1/2", THIRD, 149, 41),
    ],
)
def test_x_star_values(amp, decay, x0, expected, table_1e4):
    env = EnvelopeFn(amp, 0, decay)
    assert find_x_star(env, x0, table_1e4) == expected
    # contract: holds on [m, x0] and fails on [m - 1, m]
    assert check_range(env, expected, x0, table_1e4).holds
    if expected > 2:
        assert check_range(env, expected - 1, expected, table_1e4).status is Status.FAILS


def test_x_star_not_extendable(table_1e4):
    env = EnvelopeFn("1/2", 0, "1/4")
    with pytest.raises(NotExtendable) as info:
        find_x_star(env, 29, table_1e4)
    assert info.value.x_star == 29


def test_x_star_trivial_threshold(table_1e4):
    assert find_x_star(EnvelopeFn(295, 0, "1/2"), 2, table_1e4) == 2


def test_min_prefactor_examples(table_1e4):
    assert min_prefactor("1/4", 29, 149, table_1e4) <= 0.5
    assert min_prefactor("1/4", 28, 149, table_1e4) > 0.5
    assert min_prefactor("1/4", 2, 149, table_1e4) <= 1
    assert min_prefactor("1/4", 59, 101, table_1e4) <= 0.3510691792


def test_min_prefactor_is_tight(table_1e4):
    value = min_prefactor("1/4", 29, 149, table_1e4)
    assert check_range(EnvelopeFn(Fraction(value), 0, "1/4"), 29, 149, table_1e4).holds
    below = Fraction(value) * (1 - Fraction(2, 10**9))
    assert not check_range(EnvelopeFn(below, 0, "1/4"), 29, 149, table_1e4).holds
    # independent estimate: the sup ratio sits at some gap's right end
    assert abs(brute_margin(value, 0.25, 29, 149, table_1e4, per_gap=0)) < 1e-8


def test_verify_parent_desk_scale(table_1e6):
    assert verify_parent(lookup("Schoenfeld"), 101, 10**6, table_1e6).holds
    assert verify_parent(lookup("Trudgian"), 149, 10**6, table_1e6).holds


def test_shrunken_parent_fails(table_1e4):
    env = EnvelopeFn.from_family(lookup("Schoenfeld"), scale=Fraction(1, 10**6))
    assert check_range(env, 59, 101, table_1e4).status is Status.FAILS


def test_verify_parent_preconditions(table_1e4):
    with pytest.raises(RangeError):
        verify_parent(lookup("Schoenfeld"), 59, 101, table_1e4)
    with pytest.raises(RangeError):
        verify_parent(lookup("Johnston-Yang exp(3000)"), 101, 1000, table_1e4)


def test_rigorous_policy_agrees(table_1e4):
    for amp, lo, hi in [(1, 2, 101), ("1/2", 28, 29), ("1/2", 29, 60)]:
        env = EnvelopeFn(amp, 0, "1/4")
        fast = check_range(env, lo, hi, table_1e4)
        slow = check_range(env, lo, hi, table_1e4, policy=RIGOROUS)
        assert fast.status is slow.status


def test_thread_count_does_not_change_verdict(table_1e6):
    env = EnvelopeFn.from_family(lookup("Schoenfeld"))
    one = check_range(env, 101, 10**6, table_1e6, threads=1)
    four = check_range(env, 101, 10**6, table_1e6, threads=4)
    assert one == four


def test_fails_witness_rechecks_at_40_digits(table_1e4):
    rng = np.random.default_rng(7)
    for _ in range(20):
        lo = float(rng.uniform(2, 5000))
        hi = lo + float(rng.uniform(1, 3000))
        amp = float(rng.uniform(0.05, 0.6))
        out = check_range(EnvelopeFn(amp, 0, "1/4"), lo, hi, table_1e4)
        if out.status is Status.FAILS:
            w = out.witness_x
            assert lo <= w <= hi
            k = int(np.searchsorted(table_1e4.primes, w, side="right")) - 1
            with mpmath.workdps(40):
                x = mpmath.mpf(w)
                lhs = abs(extended_theta(int(table_1e4.primes[k])) - x)
                rhs = mpmath.mpf(amp) * x * mpmath.exp(-mpmath.sqrt(mpmath.log(x)) / 4)
            assert lhs >= rhs


@settings(max_examples=25, deadline=None)
@given(
    amp=st.floats(0.2, 3.0),
    bump=st.floats(1.0001, 3.0),
    lo=st.floats(2.0, 3000.0),
    width=st.floats(1.0, 5000.0),
)
def test_verdict_monotone_in_prefactor(amp, bump, lo, width, table_1e4):
    hi = min(lo + width, 10**4)
    if check_range(EnvelopeFn(amp, 0, "1/3"), lo, hi, table_1e4).holds:
        assert check_range(EnvelopeFn(amp * bump, 0, "1/3"), lo, hi, table_1e4).holds


@settings(max_examples=25, deadline=None)
@given(amp=st.floats(0.2, 1.5), a=st.floats(0, 1), b=st.floats(0, 1))
def test_verdict_monotone_in_range(amp, a, b, table_1e4):
    env = EnvelopeFn(amp, 0, "1/4")
    lo, hi = 2.0, 2000.0
    if not check_range(env, lo, hi, table_1e4).holds:
        return
    sub_lo, sub_hi = sorted((lo + a * (hi - lo), lo + b * (hi - lo)))
    if sub_lo < sub_hi:
        assert check_range(env, sub_lo, sub_hi, table_1e4).holds


def test_surplus_slack_positive_at_primes(table_1e4):
    env = EnvelopeFn(1, 0, "1/4")
    out = check_range(env, 2, 5000, table_1e4)
    assert out.holds
    p = table_1e4.primes[table_1e4.primes <= 5000].astype(float)
    T = table_1e4.theta[: p.size]
    assert np.all(env(p) - (T - p) > table_1e4.err_budget[: p.size])


def test_outcome_dict_round_trip(table_1e4):
    out = check_range(EnvelopeFn("1/2", 0, THIRD), 40, 41, table_1e4)
    d = out.as_dict()
    assert d["status"] == "Fails" and d["witness_x"] == out.witness_x
    assert d["lhs"] >= d["rhs"]
