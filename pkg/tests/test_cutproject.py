import math

import numpy as np
import pytest

from palmdiff.cutproject import (QuadraticIrrational, Splitter, bragg_peak_table,
                                 check_injectivity, compute_alpha, decompose,
                                 direction_independent, fiber_density, fibonacci_splitter,
                                 lattice_gamma, lattice_intensity, lattice_points_in_slab,
                                 match_peaks, model_set, orth_project, palm_pushforward,
                                 palm_pushforward_gamma, project, psi, psi_hat,
                                 theoretical_diffraction, theoretical_gamma)
from palmdiff.estimators import (autocorrelation, bernoulli_spectral_model,
                                 comb_spectral_model)
from palmdiff.generators import Seed, bernoulli_marks
from palmdiff.measure import AtomicMeasure
from palmdiff.pointset import PointSet, Window, translate

GOLDEN = (1 + math.sqrt(5)) / 2
NORM = math.sqrt(1 + GOLDEN ** 2)

AXES = Splitter([[1.0, 0.0]], [[0.0, 1.0]])
OBLIQUE = Splitter([[1 / math.sqrt(2), 1 / math.sqrt(2)]], [[1.0, 0.0]])


def z2(half):
    r = np.arange(-half, half + 1)
    g = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2).astype(float)
    return PointSet(g, Window.box([-half - 0.5] * 2, [half + 0.5] * 2))


def interval(a, b):
    return Window.box([a], [b])


# -- splitter geometry -------------------------------------------------------

def test_decompose_examples():
    xE, xF = decompose(AXES, [3.0, 4.0])
    assert (xE[0], xF[0]) == (3.0, 4.0)
    xE, xF = decompose(OBLIQUE, [1.0, 1.0])
    assert xE[0] == pytest.approx(math.sqrt(2), abs=1e-15)
    assert xF[0] == pytest.approx(0.0, abs=1e-15)
    xE, xF = decompose(OBLIQUE, [0.0, 0.0])
    assert xE[0] == 0.0 and xF[0] == 0.0


def test_orth_project_examples():
    x = np.array([[3.0, 4.0], [-1.0, 2.5]])
    for a, b in zip(orth_project(AXES, x), decompose(AXES, x)):
        assert np.array_equal(a, b)
    xE, xF = orth_project(OBLIQUE, [1.0, 0.0])
    assert xE[0] == pytest.approx(1 / math.sqrt(2))
    # a vector of E has non-zero orthogonal F-component in the oblique case
    _, xF = orth_project(OBLIQUE, [1.0, 1.0])
    assert xF[0] == pytest.approx(1.0)


def test_alpha_examples():
    assert compute_alpha(AXES) == pytest.approx(1.0)
    assert compute_alpha(OBLIQUE) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    sp, _ = fibonacci_splitter()
    assert sp.alpha == pytest.approx(1.0, abs=1e-14)


def test_alpha_rotation_within_E():
    rng = np.random.default_rng(4)
    A = np.linalg.qr(rng.normal(size=(4, 4)))[0]
    sp = Splitter(A[:2], A[2:] + 0.0)
    rot = np.array([[math.cos(0.7), -math.sin(0.7)], [math.sin(0.7), math.cos(0.7)]])
    sp2 = Splitter(rot @ A[:2], A[2:])
    assert compute_alpha(sp2) == pytest.approx(compute_alpha(sp), abs=1e-12)


def test_splitter_validation():
    with pytest.raises(ValueError):
        Splitter([[1.0, 1.0]], [[0.0, 1.0]])
    with pytest.raises(ValueError):
        Splitter([[1.0, 0.0]], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        Splitter([[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])


def test_from_spans_orthogonal_complement():
    sp = Splitter.from_spans([[1.0, GOLDEN]])
    assert sp.basis_F @ sp.basis_E.T == pytest.approx(0.0, abs=1e-15)
    assert compute_alpha(sp) == pytest.approx(1.0)


def test_decompose_reconstructs():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(100, 2)) * 50
    xE, xF = decompose(OBLIQUE, x)
    back = xE @ OBLIQUE.basis_E + xF @ OBLIQUE.basis_F
    assert np.allclose(back, x, rtol=0, atol=1e-10)


# -- window functions --------------------------------------------------------

def test_psi_examples():
    W = interval(-0.5, 0.5)
    assert psi(W, 0.0) == 1.0
    assert psi(W, 0.25) == 0.75
    assert psi(W, [1.0, -1.0, 3.0]).tolist() == [0.0, 0.0, 0.0]
    assert psi(Window.box([0, 0], [2, 3]), [0.0, 0.0]) == 6.0


def test_psi_hat_examples():
    W = interval(-0.5, 0.5)
    assert psi_hat(W, 0.0) == 1.0
    assert psi_hat(W, 1.0) == pytest.approx(0.0, abs=1e-30)
    assert psi_hat(W, 0.5) == pytest.approx(4 / math.pi ** 2, rel=1e-15)
    assert psi_hat(Window.box([0, 0], [2, 3]), [0.0, 0.0]) == 36.0


def test_psi_hat_is_fourier_transform_of_psi():
    W = interval(-0.3, 0.9)
    l = 1.2
    x, w = np.polynomial.legendre.leggauss(40)
    for t in (0.0, 0.13, 0.77, 2.4):
        total = 0.0
        for a, b in ((-l, 0.0), (0.0, l)):
            xs = (a + b) / 2 + (b - a) / 2 * x
            total += (b - a) / 2 * np.sum(w * psi(W, xs) * np.cos(2 * np.pi * t * xs))
        assert psi_hat(W, t) == pytest.approx(total, abs=1e-8)


def test_psi_rejects_ball_window():
    with pytest.raises(ValueError):
        psi(Window.ball([0.0], 1.0), 0.0)


# -- projection --------------------------------------------------------------

def test_project_single_row():
    out = project(z2(5), AXES, interval(-0.5, 0.5))
    assert out.points[:, 0].tolist() == list(range(-5, 6))


def test_project_shifted_lattice_misses_window():
    phi = translate(z2(5), [0.0, -0.3])
    assert len(project(phi, AXES, interval(-0.1, 0.1))) == 0


def test_project_requires_covered_slab():
    with pytest.raises(ValueError):
        project(z2(3), AXES, interval(-0.5, 0.5), extent=interval(-10, 10))


def test_fibonacci_density():
    sp, W = fibonacci_splitter()
    L = 1e4
    chain, _ = model_set(sp, W, interval(-L / 2, L / 2))
    assert len(chain) / L == pytest.approx(sp.alpha * W.volume(), rel=0.02)


def test_model_set_matches_project():
    sp, W = fibonacci_splitter()
    ext = interval(-30, 30)
    chain, _ = model_set(sp, W, ext)
    direct = project(z2(40), sp, W, ext)
    assert np.allclose(np.sort(chain.points[:, 0]), np.sort(direct.points[:, 0]), atol=1e-12)


def test_lattice_points_in_slab_oblique_shifted():
    W = interval(-0.7, 0.4)
    ext = interval(-8, 8)
    u = np.array([0.21, -0.37])
    ks, xs = lattice_points_in_slab(OBLIQUE, W, ext, shift=u)
    r = np.arange(-20, 21)
    g = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2) + u
    xE, xF = decompose(OBLIQUE, g)
    want = g[W.contains(xF) & ext.contains(xE)]
    assert sorted(map(tuple, np.round(xs, 9))) == sorted(map(tuple, np.round(want, 9)))


def test_injectivity_examples():
    ok, pairs = check_injectivity(z2(5), AXES, interval(-0.5, 0.5))
    assert ok and pairs == []
    ok, pairs = check_injectivity(z2(5), AXES, interval(-0.5, 1.5))
    assert not ok and len(pairs) == 11
    for a, b in pairs:
        assert a[0] == b[0] and {a[1], b[1]} == {0.0, 1.0}
    sp, W = fibonacci_splitter()
    assert check_injectivity(z2(60), sp, W)[0]


# -- directions --------------------------------------------------------------

def test_direction_independent_examples():
    one = QuadraticIrrational(1, 0, 0)
    assert direction_independent([one, QuadraticIrrational(1, 1, 5, 2)])
    assert not direction_independent([one, QuadraticIrrational(3, 0, 0, 2)])
    assert not direction_independent([QuadraticIrrational(2, 1, 9), one])


def test_direction_same_field():
    s2 = QuadraticIrrational(0, 1, 2)
    assert not direction_independent([s2, QuadraticIrrational(0, 3, 8)])  # 3 sqrt 8 = 6 sqrt 2
    assert direction_independent([s2, QuadraticIrrational(1, 1, 2)])
    assert direction_independent([QuadraticIrrational(0, 1, 2), QuadraticIrrational(0, 1, 3)])


def test_direction_higher_dimension():
    one, s5 = QuadraticIrrational(1, 0, 0), QuadraticIrrational(0, 1, 5)
    assert not direction_independent([one, s5, QuadraticIrrational(2, 3, 5)])
    with pytest.raises(ValueError):
        direction_independent([one, s5, QuadraticIrrational(0, 1, 2)])


def test_quadratic_irrational_parse():
    assert QuadraticIrrational.parse("-3/2").parts()[0] == pytest.approx(-1.5)
    assert QuadraticIrrational.parse([1, 1, 5, 2]).parts()[2] == 5
    assert QuadraticIrrational.parse([0, 2, 12]).parts()[1:] == (4, 3)
    with pytest.raises(ValueError):
        QuadraticIrrational(1, 1, 5, 0)


# -- autocorrelation of the projected set -------------------------------------

def test_theoretical_gamma_single_atom():
    sp, W = fibonacci_splitter()
    got = theoretical_gamma(AtomicMeasure.dirac([0.0, 0.0]), sp, W, [interval(-0.1, 0.1)])
    assert got[0] == pytest.approx(sp.alpha * W.volume())


@pytest.mark.parametrize("split", ["fibonacci", "oblique"])
def test_theoretical_gamma_equals_lattice_formula(split):
    sp, W = fibonacci_splitter() if split == "fibonacci" else (OBLIQUE, interval(-0.6, 0.3))
    C = [interval(-0.1, 0.1), interval(0.5, 1.7), interval(-4, -2), interval(-6, 6)]
    corr = lambda ks: np.where(np.all(ks == 0, axis=1), 0.3, 0.09)
    IQ = lattice_intensity(sp, W, interval(-7, 7), corr)
    a = theoretical_gamma(IQ, sp, W, C)
    b = lattice_gamma(sp, W, C, 20, corr)
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_model_set_autocorrelation_matches_theory():
    sp, W = fibonacci_splitter()
    R = 1e4
    chain, _ = model_set(sp, W, interval(-R - 1, R + 1))
    g = autocorrelation(chain, R, cutoff=6.0)
    IQ = lattice_intensity(sp, W, interval(-5.5, 5.5))
    xE, xF = decompose(sp, IQ.locations)
    live = psi(W, xF) > 0.02
    for x in xE[live, 0]:
        C = interval(x - 1e-3, x + 1e-3)
        want = theoretical_gamma(IQ, sp, W, [C])[0]
        assert g.mass(C) == pytest.approx(want, rel=0.03)


# -- Palm pushforward --------------------------------------------------------

def test_palm_pushforward_empty():
    sp, W = fibonacci_splitter()
    empty = PointSet(np.empty((0, 2)), Window.box([-5, -5], [5, 5]))
    assert len(palm_pushforward(sp, W, [0.0], empty)) == 0


def test_palm_pushforward_is_translated_projection():
    sp, W = fibonacci_splitter()
    phi = z2(10)
    w = np.array([0.31])
    ext = interval(-4, 4)
    a = palm_pushforward(sp, W, w, phi, ext)
    b = project(translate(phi, -sp.embed_F(w)), sp, W, ext)
    assert np.array_equal(a.points, b.points)
    with pytest.raises(ValueError):
        palm_pushforward(sp, W, [5.0], phi)


def test_palm_pushforward_matches_theoretical_gamma():
    sp, W = fibonacci_splitter()
    C = [interval(-0.2, 0.2), interval(0.5, 1.2), interval(-2.5, -1.0)]
    mean, se = palm_pushforward_gamma(sp, W, z2(8), C, 400, Seed(30), extent=interval(-3, 3))
    want = theoretical_gamma(lattice_intensity(sp, W, interval(-3, 3)), sp, W, C)
    assert mean[0] == pytest.approx(want[0])
    assert np.all(np.abs(mean - want) <= 3 * se + 1e-12)


# -- diffraction -------------------------------------------------------------

def test_bragg_table_fibonacci_closed_form():
    sp, W = fibonacci_splitter()
    tab = bragg_peak_table(comb_spectral_model(2), sp, W, interval(-0.01, 4.0), 12)
    assert tab.weights[0] == pytest.approx(W.volume() ** 2)
    assert np.all(np.diff(tab.weights) <= 0)
    l = W.volume()
    for pos, wt, (k1, k2) in zip(tab.positions[:20, 0], tab.weights[:20], tab.ks[:20]):
        assert pos == pytest.approx((k1 + k2 * GOLDEN) / NORM, abs=1e-12)
        s = (k2 - k1 * GOLDEN) / NORM
        closed = (math.sin(math.pi * l * s) / (math.pi * s)) ** 2 if s else l * l
        assert wt == pytest.approx(closed, rel=1e-10)


def test_bernoulli_marks_scale_peaks():
    sp, W = fibonacci_splitter()
    region = interval(-4.0, 4.0)
    one = bragg_peak_table(comb_spectral_model(2), sp, W, region, 10)
    bern = bragg_peak_table(bernoulli_spectral_model(0.5, 2), sp, W, region, 10)
    assert np.allclose(bern.weights, 0.25 * one.weights)
    assert np.array_equal(bern.positions, one.positions)


def test_fiber_density_levels():
    sp, W = fibonacci_splitter()
    s = np.array([0.3, 1.1, 2.7])
    assert np.all(fiber_density(comb_spectral_model(2), sp, W, s, 6) == 0.0)
    level = fiber_density(bernoulli_spectral_model(0.5, 2), sp, W, s, 6)
    assert np.allclose(level, 0.25 * sp.alpha ** 2 * W.volume(), rtol=0.01)


def test_theoretical_diffraction_model():
    sp, W = fibonacci_splitter()
    m = theoretical_diffraction(bernoulli_spectral_model(0.3, 2), sp, W, interval(-2, 2), 6)
    assert m.pure_point.weight_at([0.0]) == pytest.approx(0.09 * W.volume() ** 2)
    assert m.density(np.array([[0.77]]))[0] > 0
    with pytest.raises(ValueError):
        theoretical_diffraction(comb_spectral_model(2), sp, W, interval(-2, 2),
                                np.empty((0, 2), dtype=int))


def test_match_peaks_greedy():
    sp, W = fibonacci_splitter()
    tab = bragg_peak_table(comb_spectral_model(2), sp, W, interval(-0.01, 4.0), 8).top(3)
    obs = tab.positions[[2, 0], 0] + 2e-4
    assert match_peaks(obs, tab, 1e-3).tolist() == [1, -1, 0]
    assert match_peaks([], tab, 1e-3).tolist() == [-1, -1, -1]


def test_marked_model_set_thins():
    sp, W = fibonacci_splitter()
    full, ks = model_set(sp, W, interval(-2000, 2000))
    marked, mks = model_set(sp, W, interval(-2000, 2000), keep=bernoulli_marks(0.5, Seed(31)))
    assert len(marked) / len(full) == pytest.approx(0.5, abs=0.02)
    assert set(map(tuple, mks)) <= set(map(tuple, ks))
