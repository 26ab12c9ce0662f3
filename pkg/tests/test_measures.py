import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qrobust import measures as m
from qrobust.measures import AtomCapExceeded, DiscreteMeasure, GaugeFunction

from conftest import measures_1d, random_measure


def test_construction_rejects_bad_input():
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, 0.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, math.inf], [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, 1.0], [1.0, 0.0])


def test_from_pairs_merges_and_sorts():
    mu = DiscreteMeasure.from_pairs([2.0, 0.0, 2.0, 1.0], [0.25, 0.25, 0.25, 0.25])
    assert list(mu.points) == [0.0, 1.0, 2.0]
    assert list(mu.masses) == [0.25, 0.25, 0.5]


def test_arrays_are_read_only():
    mu = m.empirical([1.0, 2.0])
    with pytest.raises(ValueError):
        mu.masses[0] = 1.0


def test_empirical_counts():
    mu = m.empirical([3, 1, 3, 3])
    assert mu == DiscreteMeasure([1.0, 3.0], [0.25, 0.75])


def test_mix_endpoints_and_middle():
    a, b = m.dirac(0.0), m.dirac(1.0)
    assert m.mix(a, b, 0.0) == a
    assert m.mix(a, b, 1.0) == b
    assert m.mix(a, b, 0.25) == DiscreteMeasure([0.0, 1.0], [0.75, 0.25])
    with pytest.raises(ValueError):
        m.mix(a, b, 1.5)


def test_json_roundtrip_is_exact(rng):
    for _ in range(20):
        mu = random_measure(rng)
        assert DiscreteMeasure.from_json(mu.to_json()) == mu
        assert DiscreteMeasure.from_dict(json.loads(json.dumps(mu.to_dict()))) == mu


def test_multidimensional_measure():
    mu = DiscreteMeasure([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
    assert mu.dim == 2
    assert DiscreteMeasure.from_json(mu.to_json()) == mu
    with pytest.raises(ValueError):
        mu.points


def test_cdf_quantile_cumulative():
    mu = DiscreteMeasure([0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
    assert m.cdf(mu, -1) == 0.0
    assert m.cdf(mu, 1.0) == pytest.approx(0.5)
    assert m.cdf(mu, 1.5) == pytest.approx(0.5)
    assert m.cumulative(mu)[-1] == 1.0
    assert m.quantile(mu, 0.2) == 0.0
    assert m.quantile(mu, 0.21) == 1.0
    assert m.quantile(mu, 1.0) == 2.0


def test_gauge_function_values():
    assert GaugeFunction(0)(np.array([5.0]))[0] == 1.0
    assert GaugeFunction(2)(np.array([1.0]))[0] == 4.0
    mu = DiscreteMeasure([0.0, 3.0], [0.5, 0.5])
    assert m.gauge_integral(mu, GaugeFunction(1)) == pytest.approx(0.5 * 1 + 0.5 * 4)
    assert m.gauge_tail(mu, GaugeFunction(1), 2.0) == pytest.approx(2.0)
    assert m.gauge_tail(mu, GaugeFunction(1), 5.0) == 0.0


def _brute_convolve(mu1, mu2):
    atoms, masses = [], []
    for (x, p), (y, q) in itertools.product(zip(mu1.points, mu1.masses), zip(mu2.points, mu2.masses)):
        atoms.append(x + y)
        masses.append(p * q)
    return DiscreteMeasure.from_pairs(atoms, masses)


def test_convolution_matches_binomial():
    coin = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
    for n in range(1, 9):
        mu = m.convolve_power(coin, n)
        assert np.allclose(mu.points, np.arange(n + 1))
        assert np.allclose(mu.masses, stats.binom.pmf(np.arange(n + 1), n, 0.5), atol=1e-15)


def test_convolution_generic_matches_enumeration(rng):
    for _ in range(30):
        a, b = random_measure(rng, 6), random_measure(rng, 6)
        got, want = m.convolve(a, b), _brute_convolve(a, b)
        assert got.size == want.size
        assert np.allclose(got.points, want.points, atol=1e-12)
        assert np.allclose(got.masses, want.masses, atol=1e-12)


def test_lattice_convolution_is_exact_on_dyadic_atoms(rng):
    for _ in range(30):
        a, b = random_measure(rng, 6, grid=16), random_measure(rng, 6, grid=4)
        got, want = m.convolve(a, b), _brute_convolve(a, b)
        assert np.array_equal(got.points, want.points)
        assert np.allclose(got.masses, want.masses, rtol=0, atol=1e-14)


def test_convolve_power_matches_repeated_convolution(rng):
    mu = random_measure(rng, 4, grid=8)
    rep = mu
    for _ in range(3):
        rep = _brute_convolve(rep, mu)
    got = m.convolve_power(mu, 4)
    assert np.array_equal(got.points, rep.points)
    assert np.allclose(got.masses, rep.masses, atol=1e-14)


def test_atom_cap():
    mu = m.empirical(np.random.default_rng(0).uniform(size=50))
    with pytest.raises(AtomCapExceeded):
        m.convolve_power(mu, 5, atom_cap=1000)


def test_sample_frequencies(rng):
    mu = DiscreteMeasure([0.0, 1.0, 5.0], [0.2, 0.3, 0.5])
    xs = m.sample(mu, 100_000, rng)
    freq = [np.mean(xs == x) for x in (0.0, 1.0, 5.0)]
    assert np.allclose(freq, [0.2, 0.3, 0.5], atol=0.006)


@given(measures_1d(), measures_1d())
@settings(max_examples=60, deadline=None)
def test_convolution_mass_and_mean_are_additive(a, b):
    c = m.convolve(a, b)
    assert c.masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert m.mean(c) == pytest.approx(m.mean(a) + m.mean(b), abs=1e-9)
    assert m.convolve(b, a).allclose(c, atol=1e-15)


@given(measures_1d(), st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_mix_is_affine_in_integrals(mu, t):
    nu = m.dirac(0.75)
    mixed = m.mix(mu, nu, t)
    psi = GaugeFunction(1.5)
    want = (1 - t) * m.gauge_integral(mu, psi) + t * m.gauge_integral(nu, psi)
    assert m.gauge_integral(mixed, psi) == pytest.approx(want, rel=1e-12, abs=1e-12)
