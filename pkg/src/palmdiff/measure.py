"""Atomic measures, spectral models, and the arcsine functional calculus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import _kernels

DEFAULT_MERGE_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when objects of different ambient dimension are combined."""


def _check_dim(d1, d2):
    if d1 != d2:
        raise DimensionError(f"dimension mismatch: {d1} != {d2}")


def merge_atoms(locs, weights, tol=DEFAULT_MERGE_TOL):
    """Merge atoms closer than ``tol`` (single linkage).

    A merged atom sits at the weight-averaged location of its members and
    carries their summed weight. Output is sorted lexicographically.
    """
    locs = np.asarray(locs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n, d = locs.shape
    if n == 0:
        return locs.reshape(0, d), weights.reshape(0)
    order = np.lexsort(locs.T[::-1])
    locs, weights = locs[order], weights[order]
    if tol <= 0:
        uniq, inv = np.unique(locs, axis=0, return_inverse=True)
        return uniq, np.bincount(inv.ravel(), weights=weights, minlength=len(uniq))

    # points sharing a cell of side tol/sqrt(d) are pairwise within tol
    h = tol / math.sqrt(d)
    keys = np.floor(locs / h).astype(np.int64)
    ukeys, cell_of = np.unique(keys, axis=0, return_inverse=True)
    cell_of = cell_of.ravel()
    ncell = len(ukeys)
    rows, cols = [], []
    if ncell > 1:
        centers = (ukeys + 0.5) * h
        cand = cKDTree(centers).query_pairs(tol + 1.01 * h * math.sqrt(d), output_type="ndarray")
        if len(cand):
            members = np.split(np.argsort(cell_of, kind="stable"),
                               np.cumsum(np.bincount(cell_of, minlength=ncell))[:-1])
            for a, b in cand:
                pa, pb = locs[members[a]], locs[members[b]]
                if len(pa) * len(pb) <= 250_000:
                    dist2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(-1)
                    hit = dist2.min() <= tol * tol
                else:
                    dmin, _ = cKDTree(pb).query(pa, k=1, distance_upper_bound=tol * (1 + 1e-12))
                    hit = np.isfinite(dmin).any()
                if hit:
                    rows.append(a)
                    cols.append(b)
    if rows:
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(ncell, ncell))
        _, comp = connected_components(graph, directed=False)
        _, comp = np.unique(comp, return_inverse=True)
    else:
        comp = np.arange(ncell)
    label = comp[cell_of]
    ng = int(label.max()) + 1
    wsum = np.bincount(label, weights=weights, minlength=ng)
    cnt = np.bincount(label, minlength=ng).astype(float)
    use_w = wsum > 0
    coef = np.where(use_w[label], weights / np.where(use_w, wsum, 1.0)[label],
                    1.0 / cnt[label])
    out = np.zeros((ng, d))
    for a in range(d):
        out[:, a] = np.bincount(label, weights=coef * locs[:, a], minlength=ng)
    order = np.lexsort(out.T[::-1])
    return out[order], wsum[order]


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite positive combination of Dirac masses in R^d.

    Construction merges atoms closer than ``merge_tol`` and sorts them, so two
    measures built from the same multiset of atoms compare equal.
    """

    locations: np.ndarray
    weights: np.ndarray
    merge_tol: float = DEFAULT_MERGE_TOL
    merged: bool = field(default=False, repr=False)

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        if locs.ndim == 1:
            locs = locs[:, None]
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if locs.shape[0] != w.shape[0]:
            raise ValueError("locations and weights have different lengths")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("atom weights must be finite and non-negative")
        if not self.merged:
            locs, w = merge_atoms(locs, w, self.merge_tol)
        locs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "merged", True)

    @classmethod
    def dirac(cls, x, weight=1.0, merge_tol=DEFAULT_MERGE_TOL):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x[None, :], [weight], merge_tol)

    @classmethod
    def zero(cls, dim, merge_tol=DEFAULT_MERGE_TOL):
        return cls(np.empty((0, dim)), np.empty(0), merge_tol)

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    def __len__(self):
        return self.locations.shape[0]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mass(self, window) -> float:
        """Measure of a window (anything with a ``contains`` method)."""
        if len(self) == 0:
            return 0.0
        return float(self.weights[window.contains(self.locations)].sum())

    def weight_at(self, x, tol=None) -> float:
        """Total weight of atoms within ``tol`` (default merge_tol) of ``x``."""
        tol = self.merge_tol if tol is None else tol
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if len(self) == 0:
            return 0.0
        dist = np.sqrt(((self.locations - x) ** 2).sum(axis=1))
        return float(self.weights[dist <= max(tol, 1e-300)].sum())

    def scaled(self, c: float) -> "AtomicMeasure":
        return AtomicMeasure(self.locations, self.weights * c, self.merge_tol, merged=True)

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        _check_dim(self.dim, other.dim)
        return AtomicMeasure(np.vstack([self.locations, other.locations]),
                             np.concatenate([self.weights, other.weights]),
                             min(self.merge_tol, other.merge_tol))

    def allclose(self, other: "AtomicMeasure", atol=1e-12) -> bool:
        """Same atoms up to ``atol`` in location and weight, in any order."""
        if self.locations.shape != other.locations.shape:
            return False
        if len(self) == 0:
            return True
        dist, j = cKDTree(other.locations).query(self.locations)
        return bool(np.all(dist <= atol) and len(np.unique(j)) == len(j)
                    and np.allclose(self.weights, other.weights[j], rtol=0, atol=atol))


def fourier_at(m: AtomicMeasure, freqs, threads=1) -> np.ndarray:
    """Fourier transform ``sum_j w_j exp(-2 pi i <t, x_j>)`` at each frequency."""
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim == 1:
        freqs = freqs[:, None] if m.dim == 1 else freqs[None, :]
    _check_dim(freqs.shape[1], m.dim)
    if len(m) == 0:
        return np.zeros(freqs.shape[0], dtype=complex)
    return _kernels.fourier_sum(m.locations, m.weights, freqs, threads)


def convolve(m1: AtomicMeasure, m2: AtomicMeasure) -> AtomicMeasure:
    _check_dim(m1.dim, m2.dim)
    d = m1.dim
    locs = (m1.locations[:, None, :] + m2.locations[None, :, :]).reshape(-1, d)
    w = np.outer(m1.weights, m2.weights).reshape(-1)
    return AtomicMeasure(locs, w, min(m1.merge_tol, m2.merge_tol))


def reflect(m: AtomicMeasure) -> AtomicMeasure:
    return AtomicMeasure(-m.locations, m.weights, m.merge_tol)


# -- spectral models ---------------------------------------------------------

@dataclass(frozen=True)
class SpectralModel:
    """Pure-point atoms plus an absolutely continuous density.

    ``ac_density`` maps an ``(n, d)`` array of frequencies to ``n`` non-negative
    values; ``None`` means no continuous part.
    """

    pure_point: AtomicMeasure
    ac_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    @property
    def dim(self) -> int:
        return self.pure_point.dim

    def density(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim == 1:
            t = t[:, None] if self.dim == 1 else t[None, :]
        if self.ac_density is None:
            return np.zeros(t.shape[0])
        return np.asarray(self.ac_density(t), dtype=float)


def lattice_reps(reps, dim) -> np.ndarray:
    """Normalise ``reps`` to an ``(m, dim)`` integer array.

    An integer ``K`` stands for the box ``{-K..K}^dim``.
    """
    if np.isscalar(reps):
        K = int(reps)
        if K < 0:
            raise ValueError("reps must be non-negative")
        axes = [np.arange(-K, K + 1)] * dim
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)
    arr = np.asarray(reps, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr.reshape(-1, dim)


def periodize(m: SpectralModel, reps) -> SpectralModel:
    """Sum of the lattice translates ``m(. - k)`` for ``k`` in ``reps``."""
    ks = lattice_reps(reps, m.dim)
    if ks.shape[0] == 0:
        raise ValueError("empty set of lattice translates")
    pp = m.pure_point
    if len(pp):
        locs = (pp.locations[None, :, :] + ks[:, None, :]).reshape(-1, m.dim)
        w = np.tile(pp.weights, ks.shape[0])
        atoms = AtomicMeasure(locs, w, pp.merge_tol)
    else:
        atoms = pp
    dens = None
    if m.ac_density is not None:
        base = m.ac_density
        kf = ks.astype(float)

        def dens(t, _base=base, _kf=kf):
            t = np.asarray(t, dtype=float)
            acc = np.zeros(t.shape[0])
            for k in _kf:
                acc += _base(t - k)
            return acc

    return SpectralModel(atoms, dens, f"periodized({m.label})")


# -- arcsine calculus --------------------------------------------------------

def arcsine_f(x):
    """``1/4 + arcsin(x) / (2 pi)``."""
    return 0.25 + np.arcsin(x) / (2.0 * np.pi)


def arcsine_coefficients(K: int) -> np.ndarray:
    """Taylor coefficients a_0..a_K of ``1/4 + arcsin(x)/(2 pi)``."""
    if K < 0:
        raise ValueError("K must be >= 0")
    a = np.zeros(K + 1)
    a[0] = 0.25
    # c_m = (2m)! / (4^m (m!)^2), via c_{m+1} = c_m (2m+1) / (2m+2)
    c = 1.0
    for m in range((K - 1) // 2 + 1):
        if 2 * m + 1 > K:
            break
        a[2 * m + 1] = c / (2 * m + 1) / (2.0 * np.pi)
        c *= (2 * m + 1) / (2 * m + 2)
    return a


def arcsine_series(x, K: int):
    """Truncated series ``sum_{j<=K} a_j x^j``; test oracle only."""
    a = arcsine_coefficients(K)
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), a)


def arcsine_transform(rho: "CorrelationSequence") -> "CorrelationSequence":
    """Map a Gaussian correlation sequence to the {0,1} threshold correlations."""
    vals = np.asarray(rho.values, dtype=float)
    if np.any(np.abs(vals) > 1.0 + 1e-12):
        raise ValueError("correlations must lie in [-1, 1]")
    return CorrelationSequence(arcsine_f(np.clip(vals, -1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class CorrelationSequence:
    """Values ``c(k)`` for ``|k|_inf <= kmax``, stored centred.

    ``values`` has shape ``(2*kmax+1,)*dim``; index ``kmax`` along each axis
    is the origin. ``c[k]`` accepts an int (d=1) or a tuple.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 0 or any(s % 2 == 0 or s != v.shape[0] for s in v.shape):
            raise ValueError("values must be a centred hypercube of odd side")
        if not np.allclose(v, np.flip(v), rtol=0, atol=1e-12):
            raise ValueError("correlation sequence must satisfy c(k) = c(-k)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, kmax: int, dim: int = 1):
        """Tabulate ``func(k)`` (``k`` an ``(m, dim)`` int array) on the box."""
        ks = lattice_reps(kmax, dim)
        vals = np.asarray(func(ks), dtype=float).reshape((2 * kmax + 1,) * dim)
        return cls(vals)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def kmax(self) -> int:
        return self.values.shape[0] // 2

    def __getitem__(self, k):
        k = (k,) if np.isscalar(k) else tuple(k)
        if len(k) != self.dim:
            raise DimensionError("lag has wrong dimension")
        if any(abs(int(x)) > self.kmax for x in k):
            return 0.0
        return float(self.values[tuple(int(x) + self.kmax for x in k)])

    def lags(self) -> np.ndarray:
        return lattice_reps(self.kmax, self.dim)

    def at(self, ks) -> np.ndarray:
        """Vectorised lookup; lags outside the stored box give 0."""
        ks = np.asarray(ks, dtype=np.int64).reshape(-1, self.dim)
        inside = np.all(np.abs(ks) <= self.kmax, axis=1)
        out = np.zeros(ks.shape[0])
        idx = tuple((ks[inside] + self.kmax).T)
        out[inside] = self.values[idx]
        return out
