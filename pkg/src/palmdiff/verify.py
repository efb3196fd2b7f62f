"""Paired empirical/theoretical pipelines producing comparison reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from . import cutproject as cp
from .estimators import (autocorrelation, bernoulli_spectral_model, comb_spectral_model,
                         correlation_estimate, diffraction_coefficients, find_peaks_1d,
                         palm_intensity, periodogram, periodogram_grid)
from .generators import (Bernoulli, GaussianThreshold, Markov, SpectralThreshold,
                         as_seed, bernoulli_marks, nu_atoms, poisson)
from .measure import CorrelationSequence, lattice_reps
from .pointset import PointSet, Window


@dataclass(frozen=True)
class Row:
    label: str
    empirical: float
    theoretical: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.empirical - self.theoretical) <= self.tolerance)


@dataclass
class ComparisonReport:
    title: str
    rows: List[Row] = field(default_factory=list)

    def add(self, label, empirical, theoretical, tolerance) -> None:
        self.rows.append(Row(label, float(empirical), float(theoretical), float(tolerance)))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {"title": self.title, "passed": self.passed,
                "rows": [{"label": r.label, "empirical": r.empirical,
                          "theoretical": r.theoretical, "tolerance": r.tolerance,
                          "pass": r.passed} for r in self.rows]}

    def format(self) -> str:
        lines = [self.title]
        for r in self.rows:
            lines.append(f"  {'PASS' if r.passed else 'FAIL'}  {r.label:<32} "
                         f"empirical={r.empirical:.6g} theoretical={r.theoretical:.6g} "
                         f"tol={r.tolerance:.3g}")
        lines.append("verdict: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _interval_label(C: Window) -> str:
    return "[" + ",".join(f"{a:g}" for a in C.lower) + "]-[" + ",".join(f"{b:g}" for b in C.upper) + "]"


def _lebesgue_plus_atom(C: Window, lam: float) -> float:
    atom = float(C.contains(np.zeros((1, C.dim)))[0])
    return lam * atom + lam * lam * C.volume()


def verify_poisson(intensity: float, dim: int, radius: float, test_sets: Sequence[Window],
                   replicas: int, seed, n_sigma: float = 3.0, rel_tol: float = 0.05,
                   threads: int = 1) -> ComparisonReport:
    """Palm intensity and autocorrelation against intensity*delta_0 + intensity^2*Lebesgue."""
    seed = as_seed(seed)
    reach = max(float(np.abs(C.corners()).max()) for C in test_sets)
    margin = reach + 1.0
    window = Window.box([-radius - margin] * dim, [radius + margin] * dim)
    B = Window.box([-radius] * dim, [radius] * dim)
    cut = max(float(np.sqrt((C.corners() ** 2).sum(axis=1)).max()) for C in test_sets)
    palm = np.zeros((replicas, len(test_sets)))
    auto = np.zeros((replicas, len(test_sets)))
    for r in range(replicas):
        ps = poisson(intensity, window, seed.child(r))
        palm[r] = palm_intensity(ps, B, test_sets)
        g = autocorrelation(ps, radius, cut)
        auto[r] = [g.mass(C) for C in test_sets]
    rep = ComparisonReport(f"poisson(intensity={intensity:g}, d={dim}, R={radius:g}, replicas={replicas})")
    for name, est in (("palm", palm), ("autocorrelation", auto)):
        se = est.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros(len(test_sets))
        for j, C in enumerate(test_sets):
            th = _lebesgue_plus_atom(C, intensity)
            tol = min(n_sigma * se[j], rel_tol * abs(th)) if n_sigma > 0 else rel_tol * abs(th)
            rep.add(f"{name} {_interval_label(C)}", est[:, j].mean(), th, tol)
    return rep


def _half_lags(kmax, d):
    ks = lattice_reps(kmax, d)
    first = np.array([k[np.nonzero(k)[0][0]] if np.any(k) else 0 for k in ks])
    return ks[first >= 0]


def _field_points(bf):
    pts = bf.ones().astype(float)
    return PointSet(pts, Window.box(bf.lower.astype(float), bf.upper.astype(float)))


def _centered_box(size, dim):
    lo = np.array([-(n // 2) for n in size])
    return lo, lo + np.array(size)


def verify_bernoulli(p: float, size, dim: int, kmax: int, seed, tol: float = 0.005,
                     coef_tol: float = 0.01, grid: int = 0, threads: int = 1) -> ComparisonReport:
    """Correlation estimates and periodogram Fourier coefficients against p, p^2."""
    size = [int(size)] * dim if np.isscalar(size) else [int(n) for n in size]
    box = _centered_box(size, dim)
    model = Bernoulli(p, dim)
    bf = model.sample(box, as_seed(seed))
    corr = correlation_estimate(bf, kmax)
    ps = _field_points(bf)
    R = float(min(min(-box[0]), min(box[1])))
    n = grid or 1 << int(math.ceil(math.log2(2 * R + kmax + 1)))
    coef = diffraction_coefficients(periodogram_grid(ps, R, n, threads), kmax)
    rep = ComparisonReport(f"bernoulli(p={p:g}, size={'x'.join(map(str, size))})")
    for k in _half_lags(kmax, dim):
        th = float(model.correlation(k[None, :])[0])
        rep.add(f"E X0Xk k={tuple(int(c) for c in k)}", corr[tuple(k)], th, tol)
    for k in _half_lags(kmax, dim):
        th = float(model.correlation(k[None, :])[0])
        rep.add(f"coefficient k={tuple(int(c) for c in k)}", coef[tuple(k)], th, coef_tol)
    return rep


def _replica_rows(rep, model, size, kmax, replicas, seed, n_sigma, abs_tol=0.0):
    seed = as_seed(seed)
    lo, hi = _centered_box([size] * model.dim, model.dim)
    ks = _half_lags(kmax, model.dim)
    est = np.zeros((replicas, len(ks)))
    for r in range(replicas):
        corr = correlation_estimate(model.sample((lo, hi), seed.child(r)), kmax)
        est[r] = [corr[tuple(k)] for k in ks]
    th = model.correlation(ks)
    se = est.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros(len(ks))
    for j, k in enumerate(ks):
        tol = max(n_sigma * se[j], abs_tol)
        rep.add(f"E X0Xk k={tuple(int(c) for c in k)}", est[:, j].mean(), th[j], tol)


def verify_markov(a: float, b: float, size: int, kmax: int, replicas: int, seed,
                  n_sigma: float = 3.0) -> ComparisonReport:
    """Replica-averaged E X0Xk against the transition-matrix-power formula."""
    rep = ComparisonReport(f"markov(a={a:g}, b={b:g}, size={size}, replicas={replicas})")
    _replica_rows(rep, Markov(a, b), size, kmax, replicas, seed, n_sigma)
    return rep


def verify_gaussian(rho_values: Sequence[float], size: int, kmax: int, replicas: int, seed,
                    tol: float = 0.005) -> ComparisonReport:
    """Threshold-field correlations against the arcsine law f(rho(k))."""
    vals = np.asarray(rho_values, dtype=float)
    rho = CorrelationSequence(np.concatenate([vals[:0:-1], vals]))
    rep = ComparisonReport(f"gaussian threshold (rho={[float(x) for x in vals]}, size={size}, replicas={replicas})")
    _replica_rows(rep, GaussianThreshold(rho), size, kmax, replicas, seed, 0.0, tol)
    return rep


def verify_nu(nmax: int, size: int, kmax: int, replicas: int, seed,
              n_sigma: float = 3.0) -> ComparisonReport:
    """Threshold of the Gaussian field with spectral law nu (non-ergodic: replica average)."""
    atoms, weights = nu_atoms(nmax)
    rep = ComparisonReport(f"nu threshold (nmax={nmax}, size={size}, replicas={replicas})")
    _replica_rows(rep, SpectralThreshold(atoms, weights), size, kmax, replicas, seed, n_sigma)
    return rep


def verify_fibonacci(length: float, n_peaks: int, fmin: float, fmax: float, reps: int,
                     seed, position_tol: float = 1e-3, intensity_rel_tol: float = 0.05,
                     mark_p: float = None, mark_replicas: int = 4,
                     mark_min_rel_weight: float = 0.1, mark_rel_tol: float = 0.1,
                     diffuse_freqs: int = 2000) -> ComparisonReport:
    """Model-set periodogram peaks against the predicted Bragg table.

    With ``mark_p`` the lattice points are kept independently with probability
    p: peak heights must scale by p^2 and the level away from peaks must match
    the diffuse density of the Bernoulli spectral model.
    """
    seed = as_seed(seed)
    sp, W = cp.fibonacci_splitter()
    R = length / 2.0
    extent = Window.box([-R], [R])
    ps, ks = cp.model_set(sp, W, extent)
    L = 2.0 * R
    region = Window.box([fmin], [np.nextafter(fmax, np.inf)])
    table = cp.bragg_peak_table(comb_spectral_model(2), sp, W, region, reps).top(n_peaks)
    pos, hts = find_peaks_1d(ps, R, fmin, fmax, n_peaks)
    h0 = periodogram(ps, R, [0.0]).values[0]
    scale = (sp.alpha * W.volume()) ** 2
    rep = ComparisonReport(f"fibonacci model set (length={length:g}, top {n_peaks} peaks)")
    rep.add("density", len(ps) / L, sp.alpha * W.volume(), 0.02 * sp.alpha * W.volume())
    rep.add("peak(0)/|B_R|", h0 / L, scale, 0.01 * scale)
    match = cp.match_peaks(pos, table, 10 * position_tol)
    for i, j in enumerate(match):
        label = f"k={tuple(int(c) for c in table.ks[i])}"
        pred = table.weights[i] / scale
        if j < 0:
            rep.add(f"peak {label} position", np.nan, table.positions[i, 0], position_tol)
            continue
        rep.add(f"peak {label} position", pos[j], table.positions[i, 0], position_tol)
        rep.add(f"peak {label} relative", hts[j] / h0, pred, intensity_rel_tol * pred)
    if mark_p is None:
        return rep

    strong = [(i, j) for i, j in enumerate(match)
              if j >= 0 and table.weights[i] / scale >= mark_min_rel_weight]
    freqs = np.array([pos[j] for _, j in strong])
    base = np.array([hts[j] for _, j in strong])
    full_table = cp.bragg_peak_table(comb_spectral_model(2), sp, W, region, reps)
    visible = full_table.positions[full_table.weights / scale > 1e-4, 0]
    rng = seed.child(0).rng()
    probe = np.sort(rng.uniform(max(fmin, 0.1), fmax, 4 * diffuse_freqs))
    far = np.abs(probe[:, None] - visible[None, :]).min(axis=1) > 32.0 / L
    probe = probe[far][:diffuse_freqs]
    ratios = np.zeros((mark_replicas, len(freqs)))
    level = np.zeros(mark_replicas)
    for r in range(mark_replicas):
        keep = bernoulli_marks(mark_p, seed.child(1, r))
        marked, _ = cp.model_set(sp, W, extent, keep=keep)
        ratios[r] = periodogram(marked, R, freqs[:, None]).values / base
        level[r] = periodogram(marked, R, probe[:, None]).values.mean()
    for col, (i, _) in enumerate(strong):
        label = f"k={tuple(int(c) for c in table.ks[i])}"
        rep.add(f"marked/full {label}", ratios[:, col].mean(), mark_p ** 2,
                mark_rel_tol * mark_p ** 2)
    diffuse = float(cp.fiber_density(bernoulli_spectral_model(mark_p, 2), sp, W,
                                     [[0.5 * (fmin + fmax)]], 20)[0])
    rep.add("diffuse level", level.mean(), diffuse, mark_rel_tol * diffuse)
    return rep
