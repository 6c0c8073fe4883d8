import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bb84_info_z import bounds as bd
from bb84_info_z.attacks import binomial_tail
from bb84_info_z.rng import stream

# Reference values evaluated once at 40 significant digits and frozen here.
H2_0756 = 0.3864825045724582532
RATE_05 = 0.2446074492947626500
RATE_0756 = 0.0006823194687708940
SYMMETRIC_ROOT = 0.0756794560109924205
CURVE_AT_0756 = 0.0757890024180023876
CURVE_POINTS = {0.05: 0.1205725500128340318, 0.1: 0.0480539175946401033, 0.2: 0.0029505695213526139}


def params(**kw):
    base = dict(n=100, n_z=100, n_x=100, r=0, m=10, p_az=0.0, p_ax=0.0, eps_sec=0.0, eps_rel=0.0)
    base.update(kw)
    return bd.BoundParams(**base)


def test_h2_examples():
    assert bd.h2(0.5) == 1.0
    assert bd.h2(0.0) == 0.0 and bd.h2(1.0) == 0.0
    assert bd.h2(0.0756) == pytest.approx(H2_0756, abs=1e-14)
    assert bd.h2(1e-300) > 0
    with pytest.raises(bd.BoundsError):
        bd.h2(1.5)


def test_secret_rate_examples():
    assert bd.secret_rate(0, 0) == 1.0
    assert bd.secret_rate(0.05, 0.05) == pytest.approx(RATE_05, abs=1e-14)
    assert bd.secret_rate(0.0756, 0.0756) == pytest.approx(RATE_0756, abs=1e-14)
    assert bd.secret_rate(0.05, 0.05, 0.0, 0.0, 100) < bd.secret_rate(0.05, 0.05)
    with pytest.raises(bd.BoundsError, match="security term"):
        bd.secret_rate(0.0, 0.4, eps_sec=0.2)
    with pytest.raises(bd.BoundsError, match="reliability term"):
        bd.secret_rate(0.9, 0.0, eps_rel=0.2)


def test_security_exponent_examples():
    assert bd.security_exponent_bound(params(m=10)) == pytest.approx(20.0)
    assert bd.security_exponent_bound(params(m=10, eps_sec=0.1)) == pytest.approx(15.576015661428097, abs=1e-12)
    big = params(n=10**4, n_x=10**4, m=1000, eps_sec=0.1)
    assert bd.security_exponent_bound(big) == pytest.approx(2.777588772992804e-08, rel=1e-9)


def test_reliability_exponent_examples():
    assert bd.reliability_exponent_bound(params()) == 1.0
    assert bd.reliability_exponent_bound(params(eps_rel=0.1)) == pytest.approx(0.6065306597126334, abs=1e-14)
    big = params(n=10**4, n_z=10**4, eps_rel=0.05)
    assert bd.reliability_exponent_bound(big) == pytest.approx(3.726653172078671e-06, rel=1e-9)


def test_composability_examples():
    p = params(m=10)
    assert bd.composability_bound(p) == pytest.approx(1 + 2 * p.R * p.n)
    p = params(m=10, eps_sec=0.1, eps_rel=0.1)
    assert bd.composability_bound(p) == bd.security_exponent_bound(p) + bd.reliability_exponent_bound(p)
    big = params(n=10**4, n_z=10**4, n_x=10**4, m=1000, eps_sec=0.1, eps_rel=0.1)
    assert bd.composability_bound(big) < 1e-5


def test_hoeffding_tail_examples():
    assert bd.hoeffding_tail_bound(50, 70, 0.0) == 1.0
    assert bd.hoeffding_tail_bound(80, 80, 0.3) == pytest.approx(math.exp(-80 * 0.09 / 2))
    assert bd.hoeffding_tail_bound(200, 100, 0.1) == pytest.approx(0.6411803884299546, abs=1e-14)


def test_distance_bound_examples():
    assert bd.theorem1_rhs(3, 10, 0.0, 1) == 0.0
    assert bd.theorem1_rhs(1, 2, 0.5, 2) == pytest.approx(1.7320508075688772, abs=1e-14)
    assert bd.theorem1_rhs(1, 8, 0.1, 6) == pytest.approx(0.3903423625485709, abs=1e-12)


def test_distance_bound_monotone():
    for n in (4, 9, 16):
        qs = np.linspace(0, 1, 21)
        for d in range(n + 2):
            vals = [bd.theorem1_rhs(2, n, q, d) for q in qs]
            assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
        for q in (0.05, 0.3, 0.7):
            vals = [bd.theorem1_rhs(2, n, q, d) for d in range(n + 2)]
            assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_symmetric_threshold_value_and_consistency():
    t0 = time.perf_counter()
    p = bd.symmetric_threshold()
    assert time.perf_counter() - t0 < 1.0
    assert p == pytest.approx(SYMMETRIC_ROOT, abs=1e-9)
    assert bd.secret_rate(p, p) == pytest.approx(0, abs=1e-9)
    assert bd.secret_rate(0.07, 0.07) > 0 > bd.secret_rate(0.08, 0.08)


def test_threshold_curve_points():
    curve = dict(bd.threshold_curve([0.0, 0.05, 0.0756, 0.1, 0.2, 0.25, 0.3]))
    assert curve[0.0] == pytest.approx(0.5, abs=1e-9)
    assert curve[0.0756] == pytest.approx(CURVE_AT_0756, abs=1e-9)
    for p_ax, p_az in CURVE_POINTS.items():
        assert curve[p_ax] == pytest.approx(p_az, abs=1e-9)
    assert curve[0.25] is None and curve[0.3] is None
    # p_az -> 0 as p_ax -> 1/4
    assert bd.threshold_point(0.25 - 1e-9) < 1e-6


def test_threshold_curve_strictly_decreasing():
    curve = bd.threshold_curve(bd.grid(0, 0.245, 0.005))
    assert len(curve) == 50
    values = [z for _, z in curve]
    assert all(a > b for a, b in zip(values, values[1:]))


@settings(max_examples=500, deadline=None)
@given(st.floats(0, 0.5), st.floats(0, 0.25), st.floats(0, 0.1), st.floats(0, 0.1),
       st.one_of(st.just(math.inf), st.integers(10, 10**6)))
def test_rate_sign_matches_direct_inequality(p_az, p_ax, eps_sec, eps_rel, n):
    try:
        rate = bd.secret_rate(p_az, p_ax, eps_sec, eps_rel, n)
    except bd.BoundsError:
        return
    assert (rate > 0) == bd.rate_condition(p_az, p_ax, eps_sec, eps_rel, n)


def test_evaluate_report():
    p = params(m=10, p_az=0.02, p_ax=0.02, eps_sec=0.05, eps_rel=0.05)
    row = bd.report_row(p)
    assert row["R"] == 0.1
    assert row["composability_bound"] == row["security_bound"] + row["reliability_bound"]
    assert row["threshold_ok"] == (row["secret_rate"] > 0)
    out_of_domain = bd.evaluate(params(p_ax=0.45, eps_sec=0.1))
    assert out_of_domain.secret_rate is None and not out_of_domain.threshold_ok
    with pytest.raises(bd.BoundsError):
        params(n=0)


def test_hoeffding_empirical_trivial_cases():
    rng = stream(1)
    zero = bd.hoeffding_empirical(np.zeros(50, np.uint8), 25, [0.01, 0.1], 2000, rng)
    assert all(r["empirical"] == 0 for r in zero)
    pop = np.zeros(40, np.uint8)
    pop[:13] = 1
    full = bd.hoeffding_empirical(pop, 40, [0.01, 0.2], 500, rng)
    assert all(r["empirical"] == 0 for r in full)


def test_hoeffding_empirical_below_bound_on_random_populations():
    rng = stream(2)
    for _ in range(12):
        n, n_x = (int(v) for v in rng.integers(10, 60, size=2))
        w = int(rng.integers(0, n + n_x + 1))
        pop = np.zeros(n + n_x, np.uint8)
        pop[rng.choice(n + n_x, w, replace=False)] = 1
        for row in bd.hoeffding_empirical(pop, n, [0.02, 0.1, 0.2, 0.4], 5000, rng):
            assert row["empirical"] <= row["bound"] + 3 * row["stderr"]


def test_hoeffding_empirical_matches_hypergeometric_tail():
    # population of 20 with 6 ones, sample 10: P[mean - 0.3 > t] is a hypergeometric tail
    pop = np.zeros(20, np.uint8)
    pop[:6] = 1
    eps = 0.3
    rows = bd.hoeffding_empirical(pop, 10, [eps], 100_000, stream(3))
    t = 0.5 * eps
    exact = sum(math.comb(6, k) * math.comb(14, 10 - k) for k in range(7) if k / 10 - 0.3 > t + 1e-12)
    exact /= math.comb(20, 10)
    assert abs(rows[0]["empirical"] - exact) <= 4 * math.sqrt(exact * (1 - exact) / 100_000)


def test_binomial_tail_summation_is_stable():
    assert binomial_tail(2000, 0.5, 1000) == pytest.approx(float(Fraction(1, 2) + Fraction(math.comb(2000, 1000), 2**2001)), rel=1e-12)
