import math

import numpy as np
import pytest
from scipy import integrate, stats

from bridge_extrema import distributions as d
from bridge_extrema import gof, mc
from bridge_extrema._series import DomainError
from bridge_extrema.laplace import ThetaParam


def test_bridge_is_deterministic_and_pinned():
    a = mc.sample_bridge(64, seed=7, index=3)
    b = mc.sample_bridge(64, seed=7, index=3)
    c = mc.sample_bridge(64, seed=7, index=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.values[0] == 0.0 and a.values[-1] == 0.0
    assert a.n_steps == 64 and a.times[-1] == 1.0


def test_streams_differ_by_purpose():
    x = mc.path_rng(1, 0, mc.BRIDGE).random(4)
    y = mc.path_rng(1, 0, mc.LAST_ZERO).random(4)
    assert not np.array_equal(x, y)


def test_bridge_covariance():
    z = np.stack([mc.sample_bridge(8, 11, i).values for i in range(20000)])
    # cov(U_s, U_t) = s (1 - t)
    assert np.var(z[:, 4]) == pytest.approx(0.25, abs=0.01)
    assert np.cov(z[:, 2], z[:, 6])[0, 1] == pytest.approx(0.25 * 0.25, abs=0.01)


def test_path_extrema_brute_force():
    p = mc.sample_bridge(100, 3)
    e = mc.path_extrema(p)
    assert e.m_plus == max(p.values)
    assert e.m_minus == -min(p.values)
    assert e.range == pytest.approx(e.m_plus + e.m_minus)
    i = list(p.values).index(min(p.values))
    assert e.argmin_time == p.times[i]


def test_vervaat_identity():
    for i in range(200):
        p = mc.sample_bridge(50, 5, i)
        e = mc.vervaat_excursion(p)
        assert e.values.min() >= 0.0
        assert e.values[0] == 0.0 and e.values[-1] == 0.0
        assert abs(e.values.max() - mc.path_extrema(p).range) <= 1e-12


def test_refined_extrema_bounds():
    v = np.array([0.0, 0.3, -0.2, 0.0])
    ones = np.ones(3)
    hi, lo = mc.refined_extrema(v, 1 / 3, ones, ones)
    assert hi == pytest.approx(0.3) and lo == pytest.approx(0.2)
    u = np.full(3, 0.5)
    hi, lo = mc.refined_extrema(v, 1 / 3, u, u)
    assert hi > 0.3 and lo > 0.2


def test_refined_step_max_law():
    # one step from 0 to 0 over dt = 1: P(max > y) = exp(-2 y^2)
    u = np.random.default_rng(0).random((20000, 1))
    hi, _ = mc.refined_extrema(np.zeros((20000, 2)), 1.0, u, u)
    assert gof.ks_test(gof.Sample.of(hi), lambda y: 1 - math.exp(-2 * y * y)).p_value > 0.001


def test_split_across_workers_is_identical():
    a = mc.simulate_extrema(1000, 32, seed=9, workers=1)
    b = mc.simulate_extrema(1000, 32, seed=9, workers=4)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    ea = mc.estimate("max_cdf", (1.0,), 1000, 32, seed=9, workers=1)
    eb = mc.estimate("max_cdf", (1.0,), 1000, 32, seed=9, workers=3)
    assert ea == eb


def test_grid_bias_shrinks_and_refinement_removes_it():
    target = d.ks_cdf(1.0)
    bias = [mc.estimate("max_cdf", (1.0,), 20000, n, seed=1, refine=False).mean - target
            for n in (256, 1024, 4096)]
    assert bias[0] > bias[1] > bias[2] > 0.0
    ref = mc.estimate("max_cdf", (1.0,), 20000, 256, seed=1, refine=True)
    assert abs(ref.mean - target) <= 4 * ref.stderr


def test_functional_values():
    mp = np.array([0.5, 1.2])
    mm = np.array([0.8, 0.3])
    assert list(mc.functional_values("max_cdf", (1.0,), mp, mm)) == [1.0, 0.0]
    assert list(mc.functional_values("quotient_cdf", (2.0,), mp, mm)) == [1.0, 0.0]
    assert list(mc.functional_values("product_moment", (), mp, mm)) == pytest.approx([0.4, 0.36])
    with pytest.raises(DomainError):
        mc.functional_values("nope", (), mp, mm)
    with pytest.raises(DomainError):
        mc.functional_values("joint_cdf", (1.0,), mp, mm)


def test_summarize():
    est = mc.summarize(np.array([0.0, 1.0, 0.0, 1.0]))
    assert est.mean == 0.5
    assert est.stderr == pytest.approx(math.sqrt(1 / 3 / 4))
    with pytest.raises(DomainError):
        mc.summarize(np.array([1.0]))


def test_last_zero_grid_fixtures():
    t = np.linspace(0, 1, 5)
    assert mc.last_zero_time(np.array([0.0, 0.1, 0.2, 0.3, 0.4]), t) == 0.0
    assert mc.last_zero_time(np.array([0.0, 1.0, -1.0, 2.0, 3.0]), t) == pytest.approx(0.5 + 0.25 / 3)
    assert mc.last_zero_time(np.array([0.0, 1.0, 2.0, 1.0, 0.0]), t) == 1.0


def test_zero_hit_cdf_matches_quadrature():
    h, a, b = 0.7, 0.4, 0.25
    for s in (0.1, 0.35, 0.6):
        mu = a + (b - a) * s / h
        sd = math.sqrt(s * (h - s) / h)
        pdf = stats.norm(mu, sd).pdf
        ref = stats.norm(mu, sd).cdf(0.0) + integrate.quad(lambda x: pdf(x) * math.exp(-2 * a * x / s), 0, np.inf)[0]
        assert mc._zero_hit_cdf(s, h, a, b) == pytest.approx(ref, abs=1e-10)
    assert mc._zero_hit_cdf(h, h, a, b) == pytest.approx(math.exp(-2 * a * b / h))
    assert mc._zero_hit_cdf(0.0, h, a, b) == 0.0


def test_last_zero_offset_inside_interval():
    for u in (0.01, 0.5, 0.99):
        off = mc._last_zero_offset(0.1, 0.05, 0.08, u)
        assert 0.0 <= off <= 0.1
    assert mc._last_zero_offset(0.1, 0.3, 0.0, 0.5) == 0.1


def test_last_zero_is_arcsine():
    g = mc.last_zero_samples(4000, 256, seed=2)
    assert gof.ks_test(gof.Sample.of(g), gof.arcsine_cdf).p_value > 0.001


def test_killed_bm():
    tp = ThetaParam(2.0)
    path, s, g = mc.sample_killed_bm(tp, 64, seed=4, index=1)
    assert path.values[0] == 0.0 and path.times[-1] == pytest.approx(s)
    assert 0.0 <= g <= s
    again = mc.sample_killed_bm(tp, 64, seed=4, index=1)
    assert again[1] == s and again[2] == g


def test_killed_pair_nonnegative_and_fits():
    tp = ThetaParam(0.5)
    pairs = mc.killed_pair_samples(tp, 3000, 128, seed=6)
    assert (pairs >= 0).all()
    from bridge_extrema import laplace
    p = gof.ks_test(gof.Sample.of(pairs.max(axis=1)), lambda x: laplace.rescaled_law("max_cdf", x, tp=tp)).p_value
    assert p > 0.001


def test_vervaat_max_deterministic_across_workers():
    a = mc.vervaat_max_samples(600, 64, seed=3, workers=1)
    b = mc.vervaat_max_samples(600, 64, seed=3, workers=3)
    assert np.array_equal(a, b)
    assert (mc.vervaat_max_samples(600, 64, seed=3, refine=False) <= a).all()


def test_argument_checks():
    with pytest.raises(DomainError):
        mc.sample_bridge(1, 0)
    with pytest.raises(DomainError):
        mc.simulate_extrema(0, 8, 0)
    with pytest.raises(DomainError):
        mc.last_zero_unit_bm(1, 0)


def test_threads_env(monkeypatch):
    monkeypatch.setenv(mc.THREADS_ENV, "3")
    assert mc.default_workers() == 3


def test_path_extrema_fixtures():
    t = np.linspace(0, 1, 5)
    zero = mc.path_extrema(mc.BridgePath(np.zeros(5), t, "bridge"))
    assert (zero.m_plus, zero.m_minus, zero.range, zero.argmin_time) == (0.0, 0.0, 0.0, 0.0)
    tent = mc.path_extrema(mc.BridgePath(np.array([0.0, 0.5, 1.0, 0.5, 0.0]), t, "bridge"))
    assert tent.m_plus == 1.0 and tent.m_minus == 0.0
