import math

import numpy as np
import pytest
from scipy import integrate, stats

from qrobust import measures as m
from qrobust import models as md
from qrobust.models import InnovationLaw, LinearProcessModel, ParametricFamily
from qrobust.robustness import fisher_info_mc
from qrobust.seeding import SeedSpec

POINTS = {"bernoulli": (0.2, 0.5, 0.8), "poisson": (0.5, 3.0, 10.0),
          "exponential": (0.5, 2.0, 5.0), "normal": (-1.0, 0.0, 2.0)}


def test_log_likelihood_examples():
    assert md.log_likelihood(ParametricFamily("bernoulli", 0.5), 0.5, [1, 0]) == pytest.approx(2 * math.log(0.5))
    assert md.log_likelihood(ParametricFamily("normal", 0.0), 0.0, [0.0]) == pytest.approx(-0.5 * math.log(2 * math.pi))
    # mean parametrisation: density exp(-x/2)/2 at x = 1
    assert md.log_likelihood(ParametricFamily("exponential", 2.0), 2.0, [1.0]) == pytest.approx(-math.log(2) - 0.5)
    with pytest.raises(ValueError):
        md.log_likelihood(ParametricFamily("bernoulli", 0.5), 0.5, [2])
    with pytest.raises(ValueError):
        md.log_likelihood(ParametricFamily("poisson", 1.0), 1.0, [1.5])


def test_log_likelihood_matches_scipy():
    xs = np.array([0.0, 1.0, 4.0])
    assert md.log_likelihood(ParametricFamily("poisson", 2.0), 2.0, xs) == pytest.approx(
        stats.poisson.logpmf(xs, 2.0).sum())
    assert md.log_likelihood(ParametricFamily("exponential", 1.5), 1.5, xs) == pytest.approx(
        stats.expon.logpdf(xs, scale=1.5).sum())
    assert md.log_likelihood(ParametricFamily("normal", 1.0, 2.0), 1.0, xs) == pytest.approx(
        stats.norm.logpdf(xs, 1.0, math.sqrt(2.0)).sum())


def test_fisher_info_closed_forms():
    assert md.fisher_info(ParametricFamily("bernoulli", 0.5)) == 4.0
    assert md.fisher_info(ParametricFamily("exponential", 2.0)) == 0.25
    assert md.fisher_info(ParametricFamily("normal", 7.0)) == 1.0
    assert md.fisher_info(ParametricFamily("poisson", 4.0)) == 0.25
    with pytest.raises(ValueError):
        ParametricFamily("bernoulli", 1.0)
    with pytest.raises(ValueError):
        ParametricFamily("exponential", 0.0)


@pytest.mark.parametrize("kind", sorted(POINTS))
def test_fisher_info_matches_score_variance(kind):
    for i, th in enumerate(POINTS[kind]):
        fam = ParametricFamily(kind, th)
        est, se = fisher_info_mc(fam, 100_000, SeedSpec(99, i))
        assert abs(est - md.fisher_info(fam)) <= 4 * se


def test_score_is_derivative_of_log_likelihood():
    for kind, pts in POINTS.items():
        fam = ParametricFamily(kind, pts[1])
        xs = fam.sample(5, np.random.default_rng(1))
        h = 1e-6
        num = (md.log_likelihood(fam, pts[1] + h, xs) - md.log_likelihood(fam, pts[1] - h, xs)) / (2 * h)
        assert md.score(fam, pts[1], xs).sum() == pytest.approx(num, rel=1e-5, abs=1e-6)


def test_l1_distance_examples():
    b = ParametricFamily("bernoulli", 0.2)
    assert md.l1_density_distance(b, 0.2, 0.5) == pytest.approx(0.6)
    for kind, pts in POINTS.items():
        assert md.l1_density_distance(ParametricFamily(kind, pts[1]), pts[1], pts[1]) == 0.0


def test_l1_distance_against_quadrature():
    n = ParametricFamily("normal", 0.0)
    for d in (0.1, 0.7, 2.0):
        x = np.linspace(-12, 14, 1_000_001)
        quad = integrate.trapezoid(np.abs(stats.norm.pdf(x) - stats.norm.pdf(x, d)), x)
        assert md.l1_density_distance(n, 0.0, d) == pytest.approx(quad, abs=1e-8)
        assert md.l1_density_distance(n, 0.0, d) == pytest.approx(2 * (2 * stats.norm.cdf(d / 2) - 1))
    e = ParametricFamily("exponential", 1.0)
    x = np.linspace(0, 80, 2_000_001)
    quad = integrate.trapezoid(np.abs(stats.expon.pdf(x, scale=1.0) - stats.expon.pdf(x, scale=1.7)), x)
    assert md.l1_density_distance(e, 1.0, 1.7) == pytest.approx(quad, abs=1e-6)
    p = ParametricFamily("poisson", 2.0)
    k = np.arange(200)
    assert md.l1_density_distance(p, 2.0, 2.9) == pytest.approx(
        np.abs(stats.poisson.pmf(k, 2.0) - stats.poisson.pmf(k, 2.9)).sum(), abs=1e-12)


@pytest.mark.parametrize("kind", sorted(POINTS))
def test_l1_distance_shrinks(kind):
    th = POINTS[kind][1]
    fam = ParametricFamily(kind, th)
    vals = [md.l1_density_distance(fam, th, th + d) for d in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_bernoulli_sample_mean():
    xs = md.IIDParametric(ParametricFamily("bernoulli", 0.3)).sample(100_000, SeedSpec(5))
    assert abs(xs.mean() - 0.3) <= 0.006


def test_sampling_is_deterministic():
    model = md.IIDParametric(ParametricFamily("normal", 0.0))
    assert np.array_equal(model.sample(10, SeedSpec(3, 1)), model.sample(10, SeedSpec(3, 1)))


def test_linear_process_with_zero_coefficient_returns_innovations():
    law = InnovationLaw("normal")
    xs = md.LinearProcess(LinearProcessModel(0.0, law)).sample(50, SeedSpec(8))
    assert np.array_equal(xs, law.sample(50, SeedSpec(8).rng()))


def test_linear_process_recursion_matches_truncated_sum():
    law = InnovationLaw("uniform", 1.0)
    a = 0.6
    K = md.burn_in(a)
    xs = md.LinearProcess(LinearProcessModel(a, law)).sample(20, SeedSpec(4))
    z = law.sample(K + 20, SeedSpec(4).rng())
    direct = [sum(a**k * z[K + i - k] for k in range(K + i + 1)) for i in range(20)]
    assert np.allclose(xs, direct, atol=1e-12)


def test_burn_in():
    assert md.burn_in(0.0) == 0
    assert md.burn_in(0.5) == math.ceil(math.log(0.5e-12) / math.log(0.5))
    assert md.burn_in(0.9999999) == md.BURN_IN_CAP
    K = md.burn_in(-0.8)
    assert 0.8**K <= 1e-12 * 0.2


def test_linear_process_autocovariances():
    a, n = 0.5, 100_000
    xs = md.LinearProcess(LinearProcessModel(a, InnovationLaw("normal"))).sample(n, SeedSpec(21))
    g0, g1 = 1 / (1 - a * a), a / (1 - a * a)
    prods = {0: xs * xs, 1: np.append(xs[:-1] * xs[1:], xs[-1] * xs[0])}
    for lag, want in ((0, g0), (1, g1)):
        # batch means give a standard error that accounts for serial dependence
        batches = prods[lag].reshape(100, -1).mean(axis=1)
        se = batches.std(ddof=1) / math.sqrt(100)
        assert abs(prods[lag][: n - lag].mean() - want) <= 4 * se


def test_innovation_laws():
    with pytest.raises(ValueError):
        InnovationLaw("discrete", measure=m.empirical([0.0, 1.0]))
    law = InnovationLaw.centered(m.empirical([0.0, 1.0, 5.0]))
    assert abs(m.mean(law.measure)) < 1e-12
    assert not law.absolutely_continuous
    c = InnovationLaw("normal").contaminated(0.1, 3.0)
    xs = c.sample(200_000, np.random.default_rng(2))
    assert abs(xs.mean()) < 0.02
    assert xs.var() == pytest.approx(c.second_moment(), rel=0.02)


def test_model_dict_roundtrip():
    models = [
        md.IIDParametric(ParametricFamily("normal", 1.0, 2.0)),
        md.IIDNonparametric(m.empirical([1.0, 2.0, 2.0])),
        md.LinearProcess(LinearProcessModel(0.3, InnovationLaw("uniform", 2.0))),
        md.LinearProcess(LinearProcessModel(-0.3, InnovationLaw.centered(m.empirical([0.0, 3.0])))),
    ]
    for model in models:
        back = md.model_from_dict(md.model_to_dict(model))
        assert np.array_equal(back.sample(5, SeedSpec(1)), model.sample(5, SeedSpec(1)))
