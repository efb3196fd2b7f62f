import numpy as np
import pytest

from palmdiff import _kernels


def direct_sum(locs, w, freqs):
    return (w[None, :] * np.exp(-2j * np.pi * freqs @ locs.T)).sum(axis=1)


def test_fourier_sum_matches_direct(backend, rng):
    locs = rng.uniform(-50, 50, (300, 2))
    w = rng.random(300)
    freqs = rng.uniform(-3, 3, (40, 2))
    got = _kernels.fourier_sum(locs, w, freqs, 1, backend)
    assert np.allclose(got, direct_sum(locs, w, freqs), rtol=0, atol=1e-9)


def test_fourier_sum_threads_bit_identical(backend, rng):
    locs = rng.uniform(-10, 10, (200, 1))
    w = np.ones(200)
    freqs = rng.uniform(0, 2, (64, 1))
    a = _kernels.fourier_sum(locs, w, freqs, 1, backend)
    b = _kernels.fourier_sum(locs, w, freqs, 4, backend)
    assert np.array_equal(a, b)


def test_fourier_sum_large_phase_reduced(backend):
    # integer sites at integer frequencies must give exactly the point count
    locs = np.arange(-10**6, 10**6, 997, dtype=float)[:, None]
    got = _kernels.fourier_sum(locs, np.ones(len(locs)), np.array([[3.0], [17.0]]), 1, backend)
    assert np.allclose(got, len(locs), rtol=0, atol=1e-9)


def test_fourier_sum_line_matches_direct(backend, rng):
    locs = rng.uniform(-500, 500, (700, 1))
    w = rng.random(700)
    nt = 1000  # crosses several re-seeding blocks
    t0, dt = 0.1, 0.0037
    got = _kernels.fourier_sum_line(locs, w, [t0], [dt], nt, backend)
    freqs = (t0 + dt * np.arange(nt))[:, None]
    assert np.allclose(got, direct_sum(locs, w, freqs), rtol=0, atol=1e-8)


def test_fourier_sum_line_2d_direction(backend, rng):
    locs = rng.uniform(-20, 20, (50, 2))
    w = np.ones(50)
    t0, dt = np.array([0.1, -0.2]), np.array([0.01, 0.02])
    got = _kernels.fourier_sum_line(locs, w, t0, dt, 300, backend)
    freqs = t0 + np.arange(300)[:, None] * dt
    assert np.allclose(got, direct_sum(locs, w, freqs), rtol=0, atol=1e-9)


@pytest.mark.parametrize("d,n,cutoff", [(1, 500, 0.5), (2, 2000, 0.1), (3, 800, 0.2),
                                        (2, 300, np.inf), (1, 1, 1.0)])
def test_pair_grid_equals_bruteforce(backend, rng, d, n, cutoff):
    pts = rng.random((n, d))
    grid = _kernels.pair_differences_raw(pts, pts, cutoff, backend)
    brute = _kernels.pair_differences_bruteforce(pts, pts, cutoff)
    assert np.array_equal(grid, brute)


def test_pair_grid_cross_sets(backend, rng):
    src = rng.uniform(0, 5, (100, 2))
    dst = rng.uniform(-1, 6, (400, 2))
    assert np.array_equal(_kernels.pair_differences_raw(src, dst, 0.7, backend),
                          _kernels.pair_differences_bruteforce(src, dst, 0.7))


def test_pair_grid_boundary_distance_included(backend):
    pts = np.array([[0.0], [0.25], [1.0]])
    out = _kernels.pair_differences_raw(pts, pts, 0.75, backend)
    assert sorted(out[:, 0].tolist()) == [-0.75, -0.25, 0.0, 0.0, 0.0, 0.25, 0.75]


def test_pair_grid_far_apart_points(backend):
    # extent much larger than the cutoff must not blow up the cell count
    pts = np.array([[0.0, 0.0], [1e12, 1e12], [1e12 + 0.5, 1e12]])
    out = _kernels.pair_differences_raw(pts, pts, 1.0, backend)
    assert len(out) == 5


def test_backends_agree(rng):
    if not _kernels.HAVE_COMPILED:
        pytest.skip("compiled kernels not built")
    locs = rng.uniform(-1e3, 1e3, (500, 1))
    w = np.ones(500)
    a = _kernels.fourier_sum_line(locs, w, [0.0], [1e-3], 5000, "python")
    b = _kernels.fourier_sum_line(locs, w, [0.0], [1e-3], 5000, "compiled")
    assert np.max(np.abs(a - b)) < 1e-9


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.fourier_sum(np.zeros((1, 1)), np.ones(1), np.zeros((1, 1)), 1, "fortran")
