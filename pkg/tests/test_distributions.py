import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridge_extrema import distributions as d
from bridge_extrema._series import Accuracy, AccuracyError, DomainError, clamp_prob, gauss_series

GRID = [round(0.1 * i, 10) for i in range(1, 31)]

# Frozen from mpmath at 30 digits: partial sums to |n| = 50 (series laws)
# and adaptive quadrature of 2 int_0^inf sinh^2(zx)/sinh^2((z+1)x) dx (quotient).
KS_1 = 0.73000032832264547880
MIN_TAIL_05 = 0.24911607576039175282
JOINT_05_05 = 0.036054756335124905614
KUIPER_1 = 0.17792335564307067869
DIFF_1 = 0.045134125689206877526
QUOTIENT_2 = 0.73639985871871507791


def mp_partial(term, lo, hi):
    with mpmath.workdps(40):
        return float(mpmath.fsum(term(mpmath.mpf(n)) for n in range(lo, hi + 1)))


class TestOracleValues:
    def test_oracles_reproduce_frozen_values(self):
        z = mpmath.mpf(1)
        assert mp_partial(lambda n: (-1) ** int(abs(n)) * mpmath.exp(-2 * n * n * z * z), -50, 50) == pytest.approx(KS_1, abs=1e-15)
        assert mp_partial(lambda k: (1 - 4 * k * k) * mpmath.exp(-2 * k * k), -50, 50) == pytest.approx(KUIPER_1, abs=1e-15)

    def test_ks(self):
        assert d.ks_cdf(0.0) == 0.0
        assert d.ks_cdf(1.0) == pytest.approx(KS_1, abs=1e-12)
        assert d.ks_cdf(10.0) == pytest.approx(1.0, abs=1e-12)

    def test_min_tail(self):
        assert d.min_extremum_tail(0.0) == 1.0
        assert d.min_extremum_tail(0.5) == pytest.approx(MIN_TAIL_05, abs=1e-12)
        assert d.min_extremum_tail(5.0) == pytest.approx(0.0, abs=1e-12)

    def test_joint(self):
        assert d.joint_cdf(0.5, 0.5) == pytest.approx(JOINT_05_05, abs=1e-12)
        assert d.joint_cdf(0.7, 10.0) == pytest.approx(1 - math.exp(-2 * 0.49), abs=1e-10)
        assert d.joint_cdf(0.0, 1.0) == 0.0
        assert d.joint_cdf(1.0, 0.0) == 0.0

    def test_kuiper(self):
        assert d.kuiper_cdf(0.0) == 0.0
        assert d.kuiper_cdf(1.0) == pytest.approx(KUIPER_1, abs=1e-12)
        assert d.kuiper_cdf(8.0) == pytest.approx(1.0, abs=1e-12)

    def test_diff(self):
        assert d.diff_tail(0.0) == 0.5
        assert d.diff_tail(1.0) == pytest.approx(DIFF_1, abs=1e-12)
        assert d.diff_tail(6.0) == pytest.approx(math.exp(-72) / 3, abs=1e-12)

    def test_quotient(self):
        assert d.quotient_cdf(1.0) == pytest.approx(0.5, abs=1e-15)
        assert d.quotient_cdf(0.0) == 0.0
        assert d.quotient_cdf(2.0) == pytest.approx(QUOTIENT_2, abs=1e-13)

    def test_one_sided(self):
        assert d.one_sided_tail(0.0) == 1.0
        assert d.one_sided_tail(0.5) == pytest.approx(0.6065307, abs=1e-7)
        assert d.one_sided_tail(1.0) == pytest.approx(math.exp(-2))

    def test_moments(self):
        m = d.extrema_moments()
        assert m.corr == pytest.approx(-0.654534, abs=1e-6)
        assert m.e_product == pytest.approx(math.pi ** 2 / 12 - 0.5, abs=1e-15)
        assert m.mean_mplus == pytest.approx(0.6266571, abs=1e-7)
        assert m.corr == m.cov / m.var_mplus
        assert m.cov < 0 and -1 < m.corr < 0


@pytest.mark.parametrize("z", [0.01, 0.05, 0.2, 0.24, 0.26, 0.4, 0.7, 0.88, 0.89, 1.2, 1.25, 1.26, 2.0, 3.5])
def test_all_series_match_long_mpmath_sums(z):
    with mpmath.workdps(40):
        zz = mpmath.mpf(z)
        nmax = int(12 / z) + 10
        ks = mpmath.fsum((-1) ** abs(n) * mpmath.exp(-2 * n * n * zz * zz) for n in range(-nmax, nmax + 1))
        ku = mpmath.fsum((1 - 4 * k * k * zz * zz) * mpmath.exp(-2 * k * k * zz * zz) for k in range(-nmax, nmax + 1))
        mn = 2 * mpmath.fsum((-1) ** n * mpmath.exp(-2 * n * n * zz * zz) for n in range(2, nmax))
        w = zz * mpmath.mpf("0.7")
        s = zz + w
        jo = mpmath.fsum(mpmath.exp(-2 * k * k * s * s) - mpmath.exp(-2 * (k * s + zz) ** 2) for k in range(-nmax, nmax + 1))
        # the 1/(4k^2-1) tail is summed in closed form past the Gaussian cutoff
        df = mpmath.nsum(lambda k: mpmath.exp(-2 * k * k * zz * zz) / (4 * k * k - 1), [1, mpmath.inf])
    assert d.ks_cdf(z) == pytest.approx(float(ks), abs=2e-12)
    assert d.kuiper_cdf(z) == pytest.approx(float(ku), abs=2e-12)
    assert d.min_extremum_tail(z) == pytest.approx(float(mn), abs=2e-12)
    assert d.joint_cdf(z, 0.7 * z) == pytest.approx(float(jo), abs=2e-12)
    assert d.diff_tail(z) == pytest.approx(float(df), abs=2e-12)


@pytest.mark.parametrize("z", [0.3, 0.9, 1.3, 2.2])
def test_reported_bound_covers_true_remainder(z):
    acc = Accuracy(abs_tol=1e-6)
    a = 2 * z * z
    short = gauss_series(lambda n: math.exp(-a * n * n) / (4 * n * n - 1), acc)
    long = mp_partial(lambda k: mpmath.exp(-a * k * k) / (4 * k * k - 1), 1, 10 * (short.terms + 2))
    assert abs(long - short.value) <= short.bound
    for fn in (d._ks_cdf_series, d._kuiper_series, d._min_tail_series):
        r = fn(z, acc)
        tight = fn(z, Accuracy(abs_tol=1e-16, max_terms=10 * (r.terms + 2)))
        assert abs(tight.value - r.value) <= r.bound + 1e-15


class TestInvariants:
    @pytest.mark.parametrize("z", GRID)
    def test_marginal(self, z):
        assert abs(d.joint_cdf(z, 50.0) - (1 - d.one_sided_tail(z))) <= 1e-10
        assert d.joint_cdf(z, math.inf) == pytest.approx(1 - math.exp(-2 * z * z), abs=1e-15)

    @pytest.mark.parametrize("z", GRID)
    def test_diagonal(self, z):
        assert abs(d.joint_cdf(z, z) - d.ks_cdf(z)) <= 1e-10

    @pytest.mark.parametrize("z", GRID)
    def test_decomposition(self, z):
        lhs = (1 - d.ks_cdf(z)) + d.min_extremum_tail(z)
        assert abs(lhs - 2 * math.exp(-2 * z * z)) <= 1e-10

    @pytest.mark.parametrize("z", [0.25, 0.5, 2.0, 4.0, 0.1, 7.5])
    def test_quotient_symmetry(self, z):
        assert abs(d.quotient_cdf(z) + d.quotient_cdf(1 / z) - 1) <= 1e-12

    def test_monotone(self):
        xs = np.linspace(0, 4, 401)
        for f in (d.ks_cdf, d.kuiper_cdf, d.quotient_cdf, lambda x: d.joint_cdf(x, 0.8)):
            v = [f(x) for x in xs]
            assert all(b >= a - 1e-15 for a, b in zip(v, v[1:]))
        for f in (d.one_sided_tail, d.min_extremum_tail, d.diff_tail):
            v = [f(x) for x in xs]
            assert all(b <= a + 1e-15 for a, b in zip(v, v[1:]))

    def test_kuiper_dominated(self):
        for x in np.linspace(0, 4, 401):
            assert d.kuiper_cdf(x) <= d.ks_cdf(x) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-4, max_value=6.0), st.floats(min_value=1e-4, max_value=6.0))
def test_joint_bounded_by_marginals(z, w):
    j = d.joint_cdf(z, w)
    assert 0.0 <= j <= 1.0
    assert j <= 1 - d.one_sided_tail(z) + 1e-12
    assert j <= 1 - d.one_sided_tail(w) + 1e-12
    assert d.joint_cdf(z, w) == pytest.approx(d.joint_cdf(w, z), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=20.0))
def test_probabilities_in_unit_interval(x):
    for f in (d.ks_cdf, d.kuiper_cdf, d.min_extremum_tail, d.diff_tail, d.quotient_cdf, d.one_sided_tail):
        assert 0.0 <= f(x) <= 1.0
    assert d.diff_tail(x) <= 0.5


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-3, max_value=0.5))
def test_diff_routes_agree_at_switch(z):
    # integral route below the switch against a long direct sum
    with mpmath.workdps(30):
        ref = mpmath.nsum(lambda k: mpmath.exp(-2 * k * k * z * z) / (4 * k * k - 1), [1, mpmath.inf])
    assert d.diff_tail(z) == pytest.approx(float(ref), abs=1e-11)


def test_domain_errors():
    for f in (d.one_sided_tail, d.ks_cdf, d.kuiper_cdf, d.min_extremum_tail, d.diff_tail, d.quotient_cdf):
        with pytest.raises(DomainError):
            f(-0.1)
        with pytest.raises(DomainError):
            f(float("nan"))
    with pytest.raises(DomainError):
        d.joint_cdf(1.0, -1.0)


def test_accuracy_cap_raises_with_best_value():
    with pytest.raises(AccuracyError) as info:
        d.diff_tail(0.3, Accuracy(abs_tol=1e-15, max_terms=3))
    assert 0.0 < info.value.value < 0.5
    assert info.value.bound > 1e-15


def test_accuracy_validation():
    with pytest.raises(ValueError):
        Accuracy(abs_tol=0.0)
    with pytest.raises(ValueError):
        Accuracy(max_terms=0)


def test_clamp_rules():
    acc = Accuracy(abs_tol=1e-12)
    assert clamp_prob(1 + 5e-13, 0.0, acc) == 1.0
    assert clamp_prob(-5e-13, 0.0, acc) == 0.0
    with pytest.raises(AccuracyError):
        clamp_prob(1 + 1e-9, 0.0, acc)


def test_evaluate_reports_bound():
    r = d.evaluate("ks", (1.0,))
    assert r.value == d.ks_cdf(1.0)
    assert 0.0 < r.bound <= 1e-12
    assert d.evaluate("joint", (0.5, 0.5)).value == d.joint_cdf(0.5, 0.5)
    with pytest.raises(DomainError):
        d.evaluate("joint", (0.5,))
