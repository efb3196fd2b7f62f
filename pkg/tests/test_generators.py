import math

import numpy as np
import pytest

from palmdiff.estimators import correlation_estimate
from palmdiff.generators import (Bernoulli, BinaryField, ConstantOne, GaussianThreshold, Markov,
                                 Product, Seed, SpectralThreshold, bernoulli_field,
                                 bernoulli_marks, binomial, circulant_eigenvalues,
                                 gaussian_threshold_field, markov_field_1d, nu_atoms, nu_charfn,
                                 palm_sample_lattice, poisson, product_field, stationarize)
from palmdiff.measure import CorrelationSequence, arcsine_f
from palmdiff.pointset import Window, pair_differences


# -- seeds -------------------------------------------------------------------

def test_seed_streams_reproducible_and_distinct():
    a = Seed(7).child(1, 2).rng().random(4)
    b = Seed(7, (1, 2)).rng().random(4)
    c = Seed(7).child(1, 3).rng().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seed_rejects_negative_root():
    with pytest.raises(ValueError):
        Seed(-1)


# -- Poisson -----------------------------------------------------------------

def test_poisson_mean_count():
    counts = [len(poisson(1.0, Window.box([0.0], [1e4]), Seed(1).child(r))) for r in range(100)]
    assert abs(np.mean(counts) - 1e4) <= 3 * math.sqrt(1e4 / 100)


def test_poisson_ball_mean_count():
    W = Window.ball([0.0, 0.0], 1.0)
    counts = [len(poisson(0.5, W, Seed(2).child(r))) for r in range(4000)]
    sd = math.sqrt(0.5 * math.pi / 4000)
    assert abs(np.mean(counts) - 0.5 * math.pi) <= 4 * sd
    pts = np.vstack([poisson(0.5, W, Seed(2).child(r)).points for r in range(200)])
    assert np.all((pts ** 2).sum(axis=1) <= 1.0)


def test_poisson_deterministic():
    W = Window.box([-100.0], [100.0])
    a, b = poisson(1.0, W, Seed(7)), poisson(1.0, W, Seed(7))
    assert np.array_equal(a.points, b.points)


def test_poisson_dispersion_index():
    ps = poisson(1.0, Window.box([0.0], [1e4]), Seed(3))
    counts = np.histogram(ps.points[:, 0], bins=1000, range=(0, 1e4))[0]
    assert 0.9 <= counts.var(ddof=1) / counts.mean() <= 1.1


def test_poisson_rejects_bad_intensity():
    with pytest.raises(ValueError):
        poisson(0.0, Window.box([0.0], [1.0]), Seed(0))


def test_binomial_count_fixed():
    ps = binomial(37, Window.box([0, 0], [2, 3]), Seed(4))
    assert len(ps) == 37


# -- Bernoulli ---------------------------------------------------------------

def test_bernoulli_extremes():
    assert bernoulli_field(0.0, 100, Seed(0)).values.sum() == 0
    assert bernoulli_field(1.0, 100, Seed(0)).values.sum() == 100


def test_bernoulli_mean():
    bf = bernoulli_field(0.5, 1 << 20, Seed(5))
    assert abs(bf.values.mean() - 0.5) <= 0.003


def test_bernoulli_rejects_p():
    with pytest.raises(ValueError):
        bernoulli_field(1.5, 10, Seed(0))


# -- Markov ------------------------------------------------------------------

def test_markov_transition_matrix_oracle():
    m = Markov(0.25, 0.25)
    assert m.pi1 == 0.5 and m.lam == 0.5
    P = m.transition_matrix
    pi = np.array([0.5, 0.5])
    for k in range(6):
        exact = pi[1] * np.linalg.matrix_power(P, k)[1, 1]
        assert m.correlation(np.array([[k]]))[0] == pytest.approx(exact, abs=1e-15)
    assert m.correlation(np.array([[1]]))[0] == 0.375


def test_markov_independent_case():
    m = Markov(0.5, 0.5)
    assert np.allclose(m.correlation(np.array([[1], [2], [7]])), 0.25)
    assert m.correlation(np.array([[0]]))[0] == 0.5


def test_markov_empirical():
    corr = correlation_estimate(markov_field_1d(0.25, 0.25, 1 << 20, Seed(6)), 3)
    assert corr[0] == pytest.approx(0.5, abs=0.005)
    assert corr[1] == pytest.approx(0.375, abs=0.005)


def test_markov_stationary_start():
    first = [markov_field_1d(0.1, 0.3, 3, Seed(8).child(r)).values[0] for r in range(4000)]
    assert abs(np.mean(first) - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / 4000)


def test_markov_rejects_degenerate():
    with pytest.raises(ValueError):
        markov_field_1d(0.0, 0.5, 10, Seed(0))
    with pytest.raises(ValueError):
        markov_field_1d(0.5, 1.0, 10, Seed(0))


# -- Gaussian threshold ------------------------------------------------------

def test_gaussian_white_noise_threshold():
    rho = CorrelationSequence(np.array([1.0]))
    bf = gaussian_threshold_field(rho, 1 << 18, Seed(9))
    c = correlation_estimate(bf, 2)
    assert c[1] == pytest.approx(0.25, abs=0.005)


def test_gaussian_threshold_rho_half():
    rho = CorrelationSequence(np.array([0.5, 1.0, 0.5]))
    bf = gaussian_threshold_field(rho, 1 << 20, Seed(10))
    c = correlation_estimate(bf, 2)
    assert c[1] == pytest.approx(1 / 3, abs=0.005)
    assert c[2] == pytest.approx(0.25, abs=0.005)


def test_gaussian_threshold_lags_within_3_sigma():
    vals = np.array([1.0, 0.6, 0.3, 0.1])
    rho = CorrelationSequence(np.concatenate([vals[:0:-1], vals]))
    model = GaussianThreshold(rho)
    est = np.array([[correlation_estimate(model.sample(1 << 14, Seed(11).child(r)), 5)[k]
                     for k in range(6)] for r in range(24)])
    se = est.std(axis=0, ddof=1) / math.sqrt(24)
    expected = arcsine_f(np.concatenate([vals, [0.0, 0.0]]))
    assert np.all(np.abs(est.mean(axis=0) - expected) <= 3 * se + 1e-12)


def test_circulant_rejects_non_embeddable():
    rho = CorrelationSequence(np.array([0.9, 1.0, 0.9]))
    assert circulant_eigenvalues(rho, (64,)).min() < -1e-8
    with pytest.raises(ValueError):
        gaussian_threshold_field(rho, 64, Seed(0))


def test_gaussian_requires_unit_variance():
    with pytest.raises(ValueError):
        gaussian_threshold_field(CorrelationSequence(np.array([2.0])), 16, Seed(0))


def test_nu_charfn_and_atoms():
    t = np.arange(-10, 11)
    atoms, w = nu_atoms(6)
    direct = (w[None, :] * np.cos(2 * np.pi * t[:, None] * atoms[None, :])).sum(axis=1)
    assert np.allclose(nu_charfn(t), direct, rtol=0, atol=1e-12)
    # omitted factors: |1 - prod cos| <= sum (2 pi t n^-n)^2 / 2
    extra = np.prod([np.cos(2 * np.pi * t * float(n) ** (-n)) for n in range(7, 30)], axis=0)
    bound = sum((2 * np.pi * t * float(n) ** (-n)) ** 2 / 2 for n in range(7, 30))
    assert np.all(np.abs(nu_charfn(t) * (extra - 1)) <= bound + 1e-15)
    assert np.all(np.abs(nu_charfn(t, 30) - nu_charfn(t)) <= bound + 1e-15)
    assert np.allclose(nu_charfn(np.array([1, 3, 5, -7])), 0.0, atol=1e-12)


def test_spectral_threshold_exact_covariance_form():
    model = SpectralThreshold([0.1, -0.1], [0.5, 0.5])
    # rho(k) = cos(0.2 pi k)
    assert model.correlation(np.array([[2]]))[0] == pytest.approx(arcsine_f(np.cos(0.4 * np.pi)))


# -- product / stationarize / marks / Palm ------------------------------------

def test_product_field_all_ones():
    f = product_field([BinaryField([0], np.ones(5)), BinaryField([0], np.ones(5))])
    assert f.values.shape == (5, 5) and f.values.min() == 1


def test_product_field_mean_and_factorisation():
    model = Product([Bernoulli(0.5), Markov(0.25, 0.25)])
    f = model.sample(512, Seed(12))
    rows = [fac.sample(([0], [512]), Seed(12).child(i)).values for i, fac in enumerate(model.factors)]
    assert np.array_equal(f.values, np.multiply.outer(*rows))
    assert f.values.mean() == pytest.approx(rows[0].mean() * rows[1].mean(), rel=1e-12)
    assert model.correlation(np.array([[1, 1]]))[0] == 0.25 * 0.375


def test_product_field_rejects_mismatch():
    with pytest.raises(ValueError):
        product_field([BinaryField([0], np.ones(3)), BinaryField([0], np.ones(4))])


def test_stationarize_lattice():
    bf = ConstantOne(2).sample(([0, 0], [6, 6]))
    ps = stationarize(bf, Seed(13))
    assert len(ps) == 36
    m = pair_differences(ps, np.inf)
    assert np.allclose(m.locations, np.rint(m.locations), rtol=0, atol=1e-12)
    empty = stationarize(BinaryField([0], np.zeros(8)), Seed(13))
    assert len(empty) == 0


def test_stationarize_spacing():
    ps = stationarize(bernoulli_field(0.7, 200, Seed(14)), Seed(15))
    gaps = np.diff(np.sort(ps.points[:, 0]))
    assert np.all(gaps >= 1 - 1e-12)


def test_bernoulli_marks_rate():
    keep = bernoulli_marks(0.3, Seed(16))
    assert keep(np.zeros((100000, 2))).mean() == pytest.approx(0.3, abs=0.005)


def test_palm_sample_bernoulli():
    f, intensity = palm_sample_lattice(Bernoulli(0.3), ([-50], [50]), Seed(17))
    assert f[0] == 1 and intensity == 0.3


def test_palm_sample_markov_conditional():
    hits = [palm_sample_lattice(Markov(0.25, 0.25), ([-1], [3]), Seed(18).child(r))[0][1]
            for r in range(10000)]
    assert np.mean(hits) == pytest.approx(0.75, abs=0.01)


def test_palm_sample_rejection_failure():
    with pytest.raises(RuntimeError):
        palm_sample_lattice(Bernoulli(0.0), ([-1], [2]), Seed(19), max_attempts=5)


def test_generators_deterministic():
    for make in (lambda s: bernoulli_field(0.4, 300, s).values,
                 lambda s: markov_field_1d(0.2, 0.3, 300, s).values,
                 lambda s: gaussian_threshold_field(CorrelationSequence(np.array([0.5, 1, 0.5])), 300, s).values):
        assert np.array_equal(make(Seed(20)), make(Seed(20)))
