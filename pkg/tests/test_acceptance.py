"""Acceptance criteria 1-9, at full scale.

Each test prints exactly one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line (visible under plain ``pytest``) and then asserts the verdict.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from palmdiff import _kernels
from palmdiff import verify as vf
from palmdiff.cutproject import (fibonacci_splitter, lattice_intensity, palm_pushforward_gamma,
                                 theoretical_gamma)
from palmdiff.estimators import autocorrelation, periodogram
from palmdiff.generators import Seed
from palmdiff.measure import arcsine_coefficients, arcsine_f, arcsine_series, fourier_at
from palmdiff.pointset import PointSet, Window

TESTS_DIR = Path(__file__).parent


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        return ok
    return emit


def worst(rep):
    """Largest |empirical - theoretical| / tolerance over the rows of a report."""
    return max(abs(r.empirical - r.theoretical) / r.tolerance if r.tolerance > 0 else
               (0.0 if r.empirical == r.theoretical else math.inf) for r in rep.rows)


def test_criterion_1_poisson(verdict):
    tests = [Window.box([-0.1], [0.1]), Window.box([-1.0], [1.0]), Window.box([1.0], [2.0])]
    t0 = time.perf_counter()
    rep = vf.verify_poisson(1.0, 1, 1e4, tests, replicas=32, seed=Seed(1001),
                            n_sigma=3.0, rel_tol=0.05)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and elapsed < 30.0
    means = ", ".join(f"{r.label}={r.empirical:.4f}/{r.theoretical:g}" for r in rep.rows)
    assert verdict(1, ok, f"Poisson R=1e4 x32: {means}; tol=min(3se, 5%); {elapsed:.1f}s < 30s"), \
        rep.format()


def test_criterion_2_identity_and_grid(verdict):
    rng = np.random.default_rng(1002)
    worst_gap, grid_ok = 0.0, True
    backends = ["python"] + (["compiled"] if _kernels.HAVE_COMPILED else [])
    for i in range(200):
        d = 1 + i % 2
        n = int(rng.integers(1, 501))
        half = 30.0
        pts = rng.uniform(-half, half, (n, d))
        ps = PointSet(pts, Window.box([-half] * d, [half] * d))
        t = rng.uniform(-4, 4, (100, d))
        R = 25.0
        g = autocorrelation(ps, R, merge_tol=0.0)
        gap = np.max(np.abs(periodogram(ps, R, t).values - fourier_at(g, t).real))
        worst_gap = max(worst_gap, gap)
        cutoff = float(rng.uniform(0.05, 3.0))
        brute = _kernels.pair_differences_bruteforce(pts, pts, cutoff)
        for b in backends:
            grid_ok &= np.array_equal(_kernels.pair_differences_raw(pts, pts, cutoff, b), brute)
    ok = worst_gap <= 1e-6 and grid_ok
    assert verdict(2, ok, f"200 sets: max |periodogram - FT(gamma_R)| = {worst_gap:.2e} <= 1e-6; "
                          f"grid == O(n^2) oracle on {'+'.join(backends)}: {grid_ok}")


def test_criterion_3_bernoulli(verdict):
    t0 = time.perf_counter()
    reps = [vf.verify_bernoulli(p, 1 << 20, 1, 5, Seed(1003).child(j), tol=0.005,
                                coef_tol=0.01, grid=1 << 21)
            for j, p in enumerate((0.3, 0.5))]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in reps) and elapsed < 60.0
    detail = "; ".join(f"p={p}: worst |err|/tol={worst(r):.2f}" for p, r in zip((0.3, 0.5), reps))
    assert verdict(3, ok, f"N=2^20, |k|<=5, corr tol 0.005, coef tol 0.01: {detail}; "
                          f"{elapsed:.1f}s < 60s"), "\n".join(r.format() for r in reps)


def test_criterion_4_markov(verdict):
    rep = vf.verify_markov(0.25, 0.25, 1 << 16, 8, replicas=32, seed=Seed(1004), n_sigma=3.0)
    assert verdict(4, rep.passed, f"a=b=0.25, |k|<=8, 32 replicas of 2^16: "
                                  f"worst |err|/3se={worst(rep):.2f}"), rep.format()


def test_criterion_5_arcsine(verdict):
    gauss = vf.verify_gaussian([1.0, 0.5], 1 << 20, 1, 1, Seed(1005), tol=0.005)
    nu = vf.verify_nu(6, 1 << 10, 5, replicas=400, seed=Seed(1006), n_sigma=3.0)
    K = 101
    tail = 0.5 - arcsine_coefficients(K).sum()
    x = np.linspace(-1, 1, 401)
    series_gap = float(np.max(np.abs(arcsine_series(x, K) - arcsine_f(x))))
    series_ok = series_gap <= tail + 1e-15
    e1 = gauss.rows[1].empirical
    ok = gauss.passed and nu.passed and series_ok
    assert verdict(5, ok, f"rho(1)=1/2: E X0X1={e1:.4f} vs 1/3 +- 0.005; nu (|k|<=5, 400 replicas) "
                          f"worst |err|/3se={worst(nu):.2f}; series K={K} gap {series_gap:.3e} "
                          f"<= tail {tail:.3e}"), gauss.format() + "\n" + nu.format()


def test_criterion_6_fibonacci_peaks(verdict):
    rep = vf.verify_fibonacci(1e4, 10, 0.0, 4.0, 30, Seed(1007), position_tol=1e-3,
                              intensity_rel_tol=0.05)
    n_pos = sum(1 for r in rep.rows if r.label.endswith("position") and r.passed)
    zero = next(r for r in rep.rows if r.label.startswith("peak(0)"))
    assert verdict(6, rep.passed, f"length 1e4: {n_pos}/10 positions within 1e-3, relative "
                                  f"intensities within 5% (worst |err|/tol={worst(rep):.2f}); "
                                  f"peak(0)/|B_R|={zero.empirical:.4f} vs "
                                  f"(alpha|W|)^2={zero.theoretical:.4f}"), rep.format()


def test_criterion_7_bernoulli_marks(verdict):
    rep = vf.verify_fibonacci(1e4, 10, 0.0, 4.0, 30, Seed(1008), mark_p=0.5, mark_replicas=4,
                              mark_min_rel_weight=0.1, mark_rel_tol=0.1)
    ratios = [r for r in rep.rows if r.label.startswith("marked/full")]
    diffuse = next(r for r in rep.rows if r.label == "diffuse level")
    ok = rep.passed
    assert verdict(7, ok, f"p=0.5: {len(ratios)} strong peaks, ratio to X=1 "
                          f"{min(r.empirical for r in ratios):.3f}..{max(r.empirical for r in ratios):.3f}"
                          f" vs 0.25 +- 10%; diffuse {diffuse.empirical:.4f} vs "
                          f"{diffuse.theoretical:.4f} +- 10%"), rep.format()


def test_criterion_8_palm_pushforward(verdict):
    sp, W = fibonacci_splitter()
    r = np.arange(-10, 11)
    z2 = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2).astype(float)
    palm = PointSet(z2, Window.box([-10.5, -10.5], [10.5, 10.5]))
    C = [Window.box([a], [b]) for a, b in
         ((-0.3, 0.3), (0.4, 1.5), (-2.0, -0.5), (1.5, 3.0), (-4.0, 4.0))]
    ext = Window.box([-4.5], [4.5])
    mean, se = palm_pushforward_gamma(sp, W, palm, C, 2000, Seed(1009), extent=ext)
    theory = theoretical_gamma(lattice_intensity(sp, W, ext), sp, W, C)
    z = np.abs(mean - theory) / np.where(se > 0, se, np.inf)
    exact = (se == 0) & np.isclose(mean, theory, rtol=0, atol=1e-12)
    ok = bool(np.all((z <= 3.0) | exact))
    assert verdict(8, ok, "5 intervals, 2000 samples: " + ", ".join(
        f"{m:.4f}+-{s:.4f} vs {t:.4f}" for m, s, t in zip(mean, se, theory)))


PROPERTY_SUITES = ("TestMeasure", "TestPointSet", "TestEstimators", "TestGenerators",
                   "TestCutProject")


def test_criterion_9_property_suites(verdict):
    results, logs = [], []
    for suite in PROPERTY_SUITES:
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                               f"{TESTS_DIR / 'test_properties.py'}::{suite}"],
                              capture_output=True, text=True, cwd=TESTS_DIR.parent)
        elapsed = time.perf_counter() - t0
        results.append((suite, proc.returncode == 0 and elapsed < 60.0, elapsed))
        logs.append(proc.stdout)
    ok = all(r[1] for r in results)
    detail = ", ".join(f"{name} {'ok' if good else 'FAILED'} {t:.1f}s" for name, good, t in results)
    assert verdict(9, ok, f"property suites (each < 60s): {detail}"), "\n".join(logs)
