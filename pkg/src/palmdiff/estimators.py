"""Empirical autocorrelation, Palm intensity, periodograms and lattice formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .generators import BinaryField, Seed, as_seed
from .measure import (AtomicMeasure, CorrelationSequence, SpectralModel,
                      DEFAULT_MERGE_TOL, lattice_reps)
from .pointset import PointSet, Window, cross_differences, pair_differences, restrict


class CoverageError(ValueError):
    """The requested estimate needs points outside the observed window."""


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    """Periodogram values on a set of frequencies; ``norm`` is the |B_R| used."""

    freqs: np.ndarray
    values: np.ndarray
    norm: float

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        v = np.asarray(self.values, dtype=float)
        if f.shape[0] != v.shape[0]:
            raise ValueError("freqs and values differ in length")
        if np.any(v < 0):
            raise ValueError("periodogram values must be non-negative")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    radii: np.ndarray
    estimates: np.ndarray
    spread: np.ndarray
    cauchy_gap: np.ndarray
    expected_gap: np.ndarray
    converged: bool
    labels: tuple = ()


def _ball(ps_or_dim, R) -> Window:
    d = ps_or_dim if isinstance(ps_or_dim, int) else ps_or_dim.dim
    return Window.ball(np.zeros(d), R)


def _observed_ball(ps: PointSet, R: float) -> PointSet:
    B = _ball(ps, R)
    if not ps.window.covers(B):
        raise CoverageError(f"ball of radius {R} is not inside the observed window")
    return restrict(ps, B)


# -- autocorrelation and Palm intensity ---------------------------------------

def autocorrelation(ps: PointSet, R: float, cutoff: float = np.inf,
                    merge_tol=DEFAULT_MERGE_TOL, backend=None) -> AtomicMeasure:
    """gamma_R = |B_R|^-1 sum_{x,y in chi cap B_R} delta_{y-x}, atoms with |y-x| <= cutoff."""
    inner = _observed_ball(ps, R)
    pairs = pair_differences(inner, cutoff, merge_tol, backend)
    return pairs.scaled(1.0 / _ball(ps, R).volume())


def _window_reach(C: Window) -> float:
    return float(np.sqrt((C.corners() ** 2).sum(axis=1)).max())


def palm_intensity(ps: PointSet, B: Window, C_list: Sequence[Window], backend=None) -> np.ndarray:
    """Empirical I(P~)(C) = |B|^-1 sum_{x in phi cap B} card((phi - x) cap C)."""
    if not ps.window.covers(B):
        raise CoverageError("B is not inside the observed window")
    for C in C_list:
        if not ps.window.covers(B.minkowski_box(C)):
            raise CoverageError("B + C is not inside the observed window")
    if len(ps) == 0:
        return np.zeros(len(C_list))
    src = ps.points[B.contains(ps.points)]
    reach = max(_window_reach(C) for C in C_list)
    diffs = cross_differences(src, ps.points, reach, backend)
    vol = B.volume()
    return np.array([np.count_nonzero(C.contains(diffs)) / vol if len(diffs) else 0.0
                     for C in C_list])


# -- periodograms ------------------------------------------------------------

def _freq_array(freqs, d):
    f = np.asarray(freqs, dtype=float)
    if f.ndim == 1:
        f = f[:, None] if d == 1 else f[None, :]
    if f.shape[1] != d:
        raise ValueError("frequency dimension does not match the point set")
    return f


def periodogram(ps: PointSet, R: float, freqs, threads: int = 1, backend=None) -> SpectralEstimate:
    """|sum_{x in chi cap B_R} exp(-2 pi i <t, x>)|^2 / |B_R| at each frequency."""
    inner = _observed_ball(ps, R)
    f = _freq_array(freqs, ps.dim)
    vol = _ball(ps, R).volume()
    if len(inner) == 0:
        return SpectralEstimate(f, np.zeros(len(f)), vol)
    s = _kernels.fourier_sum(inner.points, np.ones(len(inner)), f, threads, backend)
    return SpectralEstimate(f, np.abs(s) ** 2 / vol, vol)


def periodogram_line(ps: PointSet, R: float, t0, dt, nt: int, backend=None) -> SpectralEstimate:
    """Periodogram on the frequencies ``t0 + j*dt`` (phasor recurrence)."""
    inner = _observed_ball(ps, R)
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    dt = np.atleast_1d(np.asarray(dt, dtype=float))
    f = t0 + np.arange(nt)[:, None] * dt
    vol = _ball(ps, R).volume()
    if len(inner) == 0:
        return SpectralEstimate(f, np.zeros(nt), vol)
    s = _kernels.fourier_sum_line(inner.points, np.ones(len(inner)), t0, dt, nt, backend)
    return SpectralEstimate(f, np.abs(s) ** 2 / vol, vol)


def unit_grid(n: int, d: int) -> np.ndarray:
    """Uniform grid ``{j/n}`` on [0,1)^d, last axis fastest."""
    return _grid_indices(n, d) / n


def _grid_indices(n, d):
    axes = [np.arange(n)] * d
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def _integer_offsets(pts, tol=1e-9):
    rel = pts - pts[0]
    k = np.rint(rel)
    if np.all(np.abs(rel - k) <= tol):
        return k.astype(np.int64)
    return None


def periodogram_grid(ps: PointSet, R: float, n: int, threads: int = 1) -> SpectralEstimate:
    """Periodogram on the uniform grid of [0,1)^d with ``n`` points per axis.

    When the points are a common shift of integer sites the modulus reduces to
    a DFT of site counts folded mod n, evaluated exactly by FFT.
    """
    inner = _observed_ball(ps, R)
    d = ps.dim
    vol = _ball(ps, R).volume()
    freqs = unit_grid(n, d)
    if len(inner) == 0:
        return SpectralEstimate(freqs, np.zeros(len(freqs)), vol)
    ks = _integer_offsets(inner.points)
    if ks is None:
        s = _kernels.fourier_sum(inner.points, np.ones(len(inner)), freqs, threads)
        return SpectralEstimate(freqs, np.abs(s) ** 2 / vol, vol)
    counts = np.zeros((n,) * d)
    np.add.at(counts, tuple((ks % n).T), 1.0)
    F = np.fft.fftn(counts)
    return SpectralEstimate(freqs, (np.abs(F) ** 2).ravel() / vol, vol)


def find_peaks_1d(ps: PointSet, R: float, fmin: float, fmax: float, n_peaks: int,
                  oversample: int = 2, suppress: float = 32.0, backend=None):
    """Locate the ``n_peaks`` highest periodogram maxima in ``[fmin, fmax]`` (d=1).

    A coarse scan at spacing 1/(oversample |B_R|) is followed by bounded
    refinement of the candidates. Maxima within ``suppress/|B_R|`` of a
    higher one (side lobes) are dropped. Returns ``(positions, heights)``.
    """
    if ps.dim != 1:
        raise ValueError("find_peaks_1d needs a one-dimensional point set")
    inner = _observed_ball(ps, R)
    L = _ball(ps, R).volume()
    dt = 1.0 / (oversample * L)
    nt = int(math.ceil((fmax - fmin) / dt)) + 1
    coarse = periodogram_line(ps, R, [fmin], [dt], nt, backend).values
    left = np.concatenate([[-np.inf], coarse[:-1]])
    right = np.concatenate([coarse[1:], [-np.inf]])
    cand = np.nonzero((coarse >= left) & (coarse >= right))[0]
    cand = cand[np.argsort(-coarse[cand], kind="stable")]
    radius = suppress / L
    chosen = _suppress(fmin + cand * dt, coarse[cand], radius, 3 * n_peaks)

    pts = inner.points
    ones = np.ones(len(pts))

    def neg(t):
        return -abs(_kernels.fourier_sum(pts, ones, np.array([[t]]), 1, backend)[0]) ** 2 / L

    pos, hts = [], []
    for t, _ in chosen:
        lo, hi = max(fmin, t - dt), min(fmax, t + dt)
        if hi > lo:
            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            cands = [(t, -neg(t)), (res.x, -res.fun)]
            best = max(cands, key=lambda c: c[1])
        else:
            best = (t, -neg(t))
        pos.append(best[0])
        hts.append(best[1])
    order = np.argsort(-np.asarray(hts), kind="stable")
    final = _suppress(np.asarray(pos)[order], np.asarray(hts)[order], radius, n_peaks)
    return np.array([p for p, _ in final]), np.array([h for _, h in final])


def _suppress(pos, hts, radius, limit):
    kept = []
    for p, h in zip(pos, hts):
        if all(abs(p - q) > radius for q, _ in kept):
            kept.append((float(p), float(h)))
            if len(kept) == limit:
                break
    return kept


# -- lattice fields ----------------------------------------------------------

def correlation_estimate(bf: BinaryField, kmax: int) -> CorrelationSequence:
    """Unbiased window average of X_x X_{x+k} for |k|_inf <= kmax."""
    shape = np.array(bf.values.shape)
    if np.any(shape <= 2 * kmax):
        raise ValueError("box side must exceed 2*kmax")
    v = bf.values.astype(bool)
    d = bf.dim
    out = np.zeros((2 * kmax + 1,) * d)
    for k in lattice_reps(kmax, d):
        a = tuple(slice(max(0, -c), n - max(0, c)) for c, n in zip(k, shape))
        b = tuple(slice(max(0, c), n - max(0, -c)) for c, n in zip(k, shape))
        hits = np.count_nonzero(v[a] & v[b])
        out[tuple(k + kmax)] = hits / np.prod(shape - np.abs(k))
    return CorrelationSequence(out)


def lattice_autocorrelation(corr: CorrelationSequence) -> AtomicMeasure:
    """gamma = sum_k E X_0 X_k delta_k over the stored lags."""
    vals = np.clip(corr.values.ravel(), 0.0, None)
    return AtomicMeasure(corr.lags().astype(float), vals)


def diffraction_coefficients(se: SpectralEstimate, kmax: int) -> CorrelationSequence:
    """Fourier coefficients int_{[0,1)^d} se(t) exp(2 pi i <k,t>) dt by the trapezoid rule."""
    N, d = se.freqs.shape
    n = int(round(N ** (1.0 / d)))
    if n ** d != N or not np.allclose(se.freqs, unit_grid(n, d), rtol=0, atol=1e-12):
        raise ValueError("frequencies must form the uniform grid on [0,1)^d")
    if 2 * kmax + 1 > n:
        raise ValueError("kmax too large for the grid")
    coef = np.fft.ifftn(se.values.reshape((n,) * d)).real
    ks = lattice_reps(kmax, d)
    out = coef[tuple((ks % n).T)].reshape((2 * kmax + 1,) * d)
    return CorrelationSequence(0.5 * (out + np.flip(out)))


# -- closed-form spectral models ---------------------------------------------

def _unit_cell(t):
    return np.all((t >= 0.0) & (t < 1.0), axis=1)


def comb_spectral_model(dim: int = 1) -> SpectralModel:
    """Spectral measure of X = 1: a unit atom at 0 (periodizes to the Dirac comb)."""
    return SpectralModel(AtomicMeasure.dirac(np.zeros(dim)), None, "lattice")


def bernoulli_spectral_model(p: float, dim: int = 1) -> SpectralModel:
    """p^2 delta_0 + p(1-p) Lebesgue on [0,1)^d."""
    q = p * (1.0 - p)
    return SpectralModel(AtomicMeasure.dirac(np.zeros(dim), p * p),
                         lambda t: q * _unit_cell(t).astype(float),
                         f"bernoulli(p={p})")


def markov_spectral_model(a: float, b: float) -> SpectralModel:
    """Two-state chain: pi^2 delta_0 + pi(1-pi)(1-l^2)/|1 - l e^{-2 pi i t}|^2 on [0,1)."""
    pi1 = a / (a + b)
    lam = 1.0 - a - b
    q = pi1 * (1.0 - pi1)

    def dens(t):
        t = np.asarray(t, dtype=float)
        core = (1 - lam ** 2) / (1 - 2 * lam * np.cos(2 * np.pi * t[:, 0]) + lam ** 2)
        return q * core * _unit_cell(t)

    return SpectralModel(AtomicMeasure.dirac([0.0], pi1 ** 2), dens, f"markov(a={a},b={b})")


# -- convergence harness -----------------------------------------------------

def convergence_study(sampler: Callable[[Seed], PointSet], C_list: Sequence[Window],
                      radii, replicas: int = 32, seed=0, labels=()) -> ConvergenceReport:
    """gamma_R(C) on nested balls of one realization per replica.

    ``sampler(seed)`` must return a point set observed on the largest ball.
    Non-convergence is flagged when the Cauchy gap over the last half of the
    radii exceeds 3 standard errors extrapolated from the smallest radius with
    1/sqrt(volume) scaling; the scaling is a heuristic, not a bound.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    seed = as_seed(seed)
    reach = max(_window_reach(C) for C in C_list)
    est = np.zeros((replicas, len(radii), len(C_list)))
    for r in range(replicas):
        ps = sampler(seed.child(r))
        for i, R in enumerate(radii):
            g = autocorrelation(ps, R, reach)
            est[r, i] = [g.mass(C) for C in C_list]
    mean = est.mean(axis=0)
    sd = est.std(axis=0, ddof=1) if replicas > 1 else np.zeros_like(mean)
    spread = sd / math.sqrt(replicas)
    nR = len(radii)
    tail = list(range(nR // 2, nR))
    gap = np.abs(mean[tail] - mean[-1]).max(axis=0)
    d = C_list[0].dim
    vols = np.array([_ball(d, R).volume() for R in radii])
    sd0 = sd[0] if replicas > 1 else np.sqrt(np.clip(mean[0], 0, None) / vols[0])
    m = tail[0] if nR > 1 else 0
    expected = 3.0 * sd0 * math.sqrt(vols[0] / vols[m]) / math.sqrt(replicas) + 1e-9
    return ConvergenceReport(radii, mean, spread, gap, expected,
                             bool(np.all(gap <= expected)), tuple(labels))
