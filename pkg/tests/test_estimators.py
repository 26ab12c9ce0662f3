import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrobust import estimators as e
from qrobust import functionals as f
from qrobust import measures as m
from qrobust.estimators import Estimator
from qrobust.functionals import Functional
from qrobust.models import IIDParametric, ParametricFamily
from qrobust.robustness import replicate
from qrobust.seeding import SeedSpec

samples = st.lists(st.integers(-20, 20).map(lambda k: k / 4), min_size=2, max_size=8)


def test_plug_in_examples():
    assert e.plug_in(Functional("mean"), [1, 2, 3]) == pytest.approx(2.0)
    assert e.plug_in(Functional("abs_moment", p=2), [1, -1]) == pytest.approx(1.0)
    assert e.plug_in(Functional("avar", alpha=0.5), [0, 0, 1, 1]) == pytest.approx(1.0)


def test_mle_examples():
    assert e.mle("bernoulli", [1, 0, 1, 1]) == 0.75
    assert e.mle("exponential", [0.5, 1.5]) == 1.0
    assert e.mle("normal", [-1, 1]) == 0.0
    res = e.mle_result("bernoulli", [0, 0, 0])
    assert res.value == 0.0 and res.boundary
    assert not e.mle_result("poisson", [1, 2]).boundary
    with pytest.raises(ValueError):
        e.mle("bernoulli", [0.5])
    with pytest.raises(ValueError):
        e.mle("normal", [])


def test_yule_walker_examples():
    assert e.yule_walker([0, 0, 0]) == 0.0
    assert e.yule_walker([1, 1, 1]) == pytest.approx(1.0)
    assert e.yule_walker([1, -1, 1, -1]) == pytest.approx(-1.0)
    assert e.yule_walker([5e-324, 0.0]) == 0.0
    with pytest.raises(ValueError):
        e.yule_walker([1.0])


def test_premium_estimator_examples():
    assert e.premium_estimator([2.5] * 6, 0.3) == pytest.approx(2.5)
    assert e.premium_estimator([1.7], 0.3) == pytest.approx(1.7)
    exact = f.avar(m.convolve_power(m.empirical([0, 0, 1, 1]), 4), 0.5) / 4
    assert e.premium_estimator([0, 0, 1, 1], 0.5) == pytest.approx(exact)


def test_premium_binomial_against_monte_carlo():
    exact = e.premium_estimator([0, 0, 1, 1], 0.5)
    sums = np.random.default_rng(3).binomial(4, 0.5, 1_000_000).astype(float)
    mc = f.avar(m.empirical(sums), 0.5) / 4
    # AVaR_0.5 of the empirical law is the mean of the top half
    top = np.sort(sums)[500_000:] / 4
    se = top.std(ddof=1) / math.sqrt(len(top))
    assert abs(mc - exact) <= 3 * se + 1e-12


def test_premium_fallback_is_flagged():
    xs = np.random.default_rng(0).uniform(size=40)
    res = e.premium_result(xs, 0.5, atom_cap=1000, mc_fallback_size=2000, seed=SeedSpec(1))
    assert res.path == "monte_carlo"
    again = e.premium_result(xs, 0.5, atom_cap=1000, mc_fallback_size=2000, seed=SeedSpec(1))
    assert res == again
    assert abs(res.value - m.mean(m.empirical(xs))) < 0.2


def test_estimator_dict_roundtrip():
    for est in (Estimator("plug_in", functional=Functional("avar", alpha=0.2)), Estimator("mle", family="poisson"),
                Estimator("yule_walker"), Estimator("premium", alpha=0.5)):
        assert Estimator.from_dict(est.to_dict()) == est
    with pytest.raises(ValueError):
        Estimator("mle", family="gamma")


def test_bernoulli_mle_unbiased_and_efficient():
    theta, n, R = 0.3, 50, 100_000
    vals, _, _ = replicate(IIDParametric(ParametricFamily("bernoulli", theta)), Estimator("mle", family="bernoulli"),
                           n, R, SeedSpec(2024))
    assert abs(vals.mean() - theta) <= 4 * vals.std() / math.sqrt(R)
    var = vals.var(ddof=1)
    var_se = math.sqrt((np.mean((vals - vals.mean()) ** 4) - var**2) / R)
    assert abs(var - theta * (1 - theta) / n) <= 4 * var_se


@given(samples, st.floats(0.5, 4.0))
@settings(max_examples=60, deadline=None)
def test_plug_in_abs_moment_identity(xs, p):
    want = np.mean(np.abs(xs) ** p)
    assert e.plug_in(Functional("abs_moment", p=p), xs) == pytest.approx(want, rel=1e-12, abs=1e-15)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30))
@settings(max_examples=100, deadline=None)
def test_yule_walker_bound(xs):
    n = len(xs)
    assert abs(e.yule_walker(xs)) <= n / (n - 1) + 1e-12


@given(samples, st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_plug_in_and_premium_are_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    for fn in (Functional("mean"), Functional("avar", alpha=0.3), Functional("var", s=0.4)):
        assert e.plug_in(fn, ys) == pytest.approx(e.plug_in(fn, xs), abs=1e-12)
    assert e.premium_estimator(ys, 0.4) == pytest.approx(e.premium_estimator(xs, 0.4), abs=1e-9)


def test_yule_walker_is_not_permutation_invariant():
    xs = [1.0, 2.0, 3.0, 4.0]
    assert e.yule_walker(xs) != pytest.approx(e.yule_walker([1.0, 3.0, 2.0, 4.0]))


@given(samples, st.floats(0.1, 8.0))
@settings(max_examples=40, deadline=None)
def test_premium_scale_equivariance(xs, c):
    ys = [c * x for x in xs]
    assert e.premium_estimator(ys, 0.4) == pytest.approx(c * e.premium_estimator(xs, 0.4), rel=1e-9, abs=1e-9)
