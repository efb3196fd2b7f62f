"""Cut-and-project sets: splittings R^d = E + F, windows, and their spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import cKDTree

from .generators import as_seed
from .measure import AtomicMeasure, SpectralModel, lattice_reps
from .pointset import PointSet, Window, count_in, translate

PEAK_MERGE_TOL = 1e-6


# -- exact direction test ----------------------------------------------------

def _squarefree(r: int):
    """Split r = m^2 * r' with r' squarefree; returns (m, r')."""
    if r < 0:
        raise ValueError("radicand must be non-negative")
    if r == 0:
        return 0, 1
    m, rest, f = 1, r, 2
    while f * f <= rest:
        while rest % (f * f) == 0:
            rest //= f * f
            m *= f
        f += 1
    return m, rest


@dataclass(frozen=True)
class QuadraticIrrational:
    """The number (p + q sqrt(r)) / s with integers p, q, r >= 0, s != 0."""

    p: int
    q: int
    r: int
    s: int = 1

    def __post_init__(self):
        if self.s == 0:
            raise ValueError("denominator must be non-zero")
        if self.r < 0:
            raise ValueError("radicand must be non-negative")

    def parts(self):
        """``(a, b, r')`` with value a + b sqrt(r'), a, b rational, r' squarefree.

        Rational values come back with ``b = 0`` and ``r' = 1``.
        """
        m, rr = _squarefree(self.r)
        a = Fraction(self.p, self.s)
        b = Fraction(self.q * m, self.s)
        if rr == 1 or b == 0:
            return a + (b if rr == 1 else 0), Fraction(0), 1
        return a, b, rr

    def is_rational(self) -> bool:
        return self.parts()[1] == 0

    def __float__(self):
        return (self.p + self.q * math.sqrt(self.r)) / self.s

    @classmethod
    def parse(cls, spec) -> "QuadraticIrrational":
        """From ``[p, q, r, s]``, an int, or a rational string like ``"-3/2"``."""
        if isinstance(spec, (list, tuple)):
            return cls(*(int(x) for x in spec))
        fr = Fraction(str(spec))
        return cls(fr.numerator, 0, 0, fr.denominator)


def _rank(rows):
    rows = [list(r) for r in rows]
    rank, ncol = 0, len(rows[0]) if rows else 0
    for c in range(ncol):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def direction_independent(coords: Sequence[QuadraticIrrational]) -> bool:
    """True iff the coordinates are linearly independent over Q.

    Exact for d = 2; for d > 2 all coordinates must lie in one quadratic field.
    """
    parts = [c.parts() for c in coords]
    fields = {rr for _, b, rr in parts if b != 0}
    if len(fields) > 1:
        if len(coords) == 2:
            # both irrational, in different quadratic fields: ratio is irrational
            return True
        raise ValueError("coordinates from several quadratic fields are not supported for d > 2")
    rows = [[a for a, _, _ in parts], [b for _, b, _ in parts]]
    return _rank(rows) == len(coords)


# -- splittings --------------------------------------------------------------

def _orthonormal_rows(vectors):
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    q, r = np.linalg.qr(v.T)
    diag = np.diag(r)
    if np.any(np.abs(diag) < 1e-12):
        raise ValueError("spanning vectors are linearly dependent")
    # keep the orientation of the given vectors
    return (q * np.sign(diag)).T


@dataclass(frozen=True, eq=False)
class Splitter:
    """Direct sum R^d = E + F given by orthonormal bases (rows) of E and F."""

    basis_E: np.ndarray
    basis_F: np.ndarray

    def __post_init__(self):
        bE = np.atleast_2d(np.asarray(self.basis_E, dtype=float))
        bF = np.atleast_2d(np.asarray(self.basis_F, dtype=float))
        d = bE.shape[1]
        if bF.shape[1] != d or bE.shape[0] + bF.shape[0] != d:
            raise ValueError("bases do not split R^d")
        for b in (bE, bF):
            if not np.allclose(b @ b.T, np.eye(b.shape[0]), rtol=0, atol=1e-12):
                raise ValueError("bases must be orthonormal")
        M = np.vstack([bE, bF]).T
        det = abs(np.linalg.det(M))
        if det < 1e-12:
            raise ValueError("E and F do not span R^d")
        object.__setattr__(self, "basis_E", bE)
        object.__setattr__(self, "basis_F", bF)
        object.__setattr__(self, "_M", M)
        object.__setattr__(self, "_Minv", np.linalg.inv(M))
        object.__setattr__(self, "_alpha", det)

    @classmethod
    def from_spans(cls, E_vectors, F_vectors=None) -> "Splitter":
        """Orthonormalise spanning vectors; F defaults to the orthogonal complement."""
        bE = _orthonormal_rows(E_vectors)
        if F_vectors is None:
            bF = null_space(bE).T
        else:
            bF = _orthonormal_rows(F_vectors)
        return cls(bE, bF)

    @property
    def dim(self) -> int:
        return self.basis_E.shape[1]

    @property
    def dim_E(self) -> int:
        return self.basis_E.shape[0]

    @property
    def dim_F(self) -> int:
        return self.basis_F.shape[0]

    @property
    def alpha(self) -> float:
        return self._alpha

    @property
    def matrix(self) -> np.ndarray:
        return self._M

    def embed_E(self, a) -> np.ndarray:
        return np.asarray(a, dtype=float) @ self.basis_E

    def embed_F(self, b) -> np.ndarray:
        return np.asarray(b, dtype=float) @ self.basis_F


def compute_alpha(sp: Splitter) -> float:
    """Volume of C_E + C_F for unit-volume C_E in E and C_F in F."""
    return abs(float(np.linalg.det(sp.matrix)))


def _rows(sp, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != sp.dim:
        raise ValueError("vector dimension does not match the splitter")
    return x, single


def decompose(sp: Splitter, x):
    """Oblique coordinates (x_E, x_F) of x = x_E + x_F, w.r.t. the two bases."""
    x, single = _rows(sp, x)
    c = x @ sp._Minv.T
    e = sp.dim_E
    xE, xF = c[:, :e], c[:, e:]
    return (xE[0], xF[0]) if single else (xE, xF)


def orth_project(sp: Splitter, x):
    """Orthogonal projections of x onto E and F, in basis coordinates."""
    x, single = _rows(sp, x)
    xE, xF = x @ sp.basis_E.T, x @ sp.basis_F.T
    return (xE[0], xF[0]) if single else (xE, xF)


def fibonacci_splitter():
    """E spanned by (1, golden ratio), F = E^perp, W = projection of [0,1]^2 on F, centred."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    norm = math.sqrt(1.0 + phi * phi)
    sp = Splitter([[1.0 / norm, phi / norm]], [[-phi / norm, 1.0 / norm]])
    half = (1.0 + phi) / norm / 2.0
    return sp, Window.box([-half], [half])


# -- window functions --------------------------------------------------------

def _box_sides(W: Window):
    if W.kind != "box":
        raise ValueError("only box windows are supported")
    return W.upper - W.lower


def _frows(W, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and W.dim > 1)
    x = np.atleast_1d(x)
    if x.ndim == 1:
        x = x[:, None] if W.dim == 1 else x[None, :]
    return x, single


def psi(W: Window, x):
    """Overlap volume |W cap (W + x)| = (1_W * 1_{-W})(x)."""
    sides = _box_sides(W)
    x, single = _frows(W, x)
    out = np.prod(np.clip(sides - np.abs(x), 0.0, None), axis=1)
    return float(out[0]) if single else out


def psi_hat(W: Window, t):
    """Fourier transform of psi: |W^(t)|^2 = prod (sin(pi l t) / (pi t))^2."""
    sides = _box_sides(W)
    t, single = _frows(W, t)
    out = np.prod((sides * np.sinc(sides * t)) ** 2, axis=1)
    return float(out[0]) if single else out


# -- projection --------------------------------------------------------------

def _slab_corners(sp, W, extent):
    lo = np.concatenate([extent.lower, W.lower])
    hi = np.concatenate([extent.upper, W.upper])
    d = len(lo)
    sel = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1
    return np.where(sel == 1, hi, lo) @ sp.matrix.T


def _window_holds(window: Window, pts, tol=1e-9) -> bool:
    if window.kind == "box":
        return bool(np.all(pts >= window.lower - tol) and np.all(pts <= window.upper + tol))
    return bool(np.all(np.sqrt(((pts - window.center) ** 2).sum(1)) <= window.radius + tol))


def project(phi: PointSet, sp: Splitter, W: Window, extent: Optional[Window] = None) -> PointSet:
    """pi(phi) = p_E(phi cap (E x W)), returned in E-coordinates.

    With ``extent`` (a box in E-coordinates) the slab extent x W must lie in the
    observed window and the output is observed on ``extent``; without it the
    output window is the E-shadow of the observed window.
    """
    if phi.dim != sp.dim or W.dim != sp.dim_F:
        raise ValueError("dimension mismatch between point set, splitter and window")
    if extent is not None:
        if not _window_holds(phi.window, _slab_corners(sp, W, extent)):
            raise ValueError("slab is not covered by the observed window")
        out_window = extent
    else:
        cE, _ = decompose(sp, phi.window.corners())
        out_window = Window.box(cE.min(axis=0), np.nextafter(cE.max(axis=0), np.inf))
    if len(phi) == 0:
        return PointSet(np.empty((0, sp.dim_E)), out_window)
    xE, xF = decompose(sp, phi.points)
    keep = W.contains(xF) & out_window.contains(xE)
    return PointSet(xE[keep], out_window)


def check_injectivity(phi: PointSet, sp: Splitter, W: Window, tol: float = 1e-9):
    """Whether distinct points of phi cap (E x W) have distinct E-coordinates.

    Returns ``(ok, pairs)`` where ``pairs`` lists colliding point pairs.
    """
    if len(phi) == 0:
        return True, []
    xE, xF = decompose(sp, phi.points)
    idx = np.nonzero(W.contains(xF))[0]
    if len(idx) < 2:
        return True, []
    hits = cKDTree(xE[idx]).query_pairs(tol, output_type="ndarray")
    pairs = [(phi.points[idx[i]], phi.points[idx[j]]) for i, j in hits]
    return len(pairs) == 0, pairs


def lattice_points_in_slab(sp: Splitter, W: Window, extent: Window, shift=None):
    """Sites k of Z^d with u + k in the slab extent x W (E- and F-coordinates).

    Scans integer values of the first d-1 coordinates over the slab's bounding
    box and solves the linear constraints for the last one. Returns the integer
    sites and the points u + k.
    """
    d = sp.dim
    u = np.zeros(d) if shift is None else np.asarray(shift, dtype=float)
    lo = np.concatenate([extent.lower, W.lower])
    hi = np.concatenate([extent.upper, W.upper])
    corners = _slab_corners(sp, W, extent) - u
    bmin = np.floor(corners.min(axis=0)).astype(np.int64)
    bmax = np.ceil(corners.max(axis=0)).astype(np.int64)
    axes = [np.arange(bmin[a], bmax[a] + 1) for a in range(d - 1)]
    grid = np.meshgrid(*axes, indexing="ij")
    head = np.stack([g.ravel() for g in grid], axis=1) if d > 1 else np.zeros((1, 0), np.int64)
    Minv = sp._Minv
    r = (head + u[:d - 1]) @ Minv[:, :d - 1].T + Minv[:, d - 1] * u[d - 1]
    g = Minv[:, d - 1]
    tlo = np.full(len(head), -np.inf)
    thi = np.full(len(head), np.inf)
    for j in range(d):
        if g[j] > 0:
            tlo = np.maximum(tlo, (lo[j] - r[:, j]) / g[j])
            thi = np.minimum(thi, (hi[j] - r[:, j]) / g[j])
        elif g[j] < 0:
            tlo = np.maximum(tlo, (hi[j] - r[:, j]) / g[j])
            thi = np.minimum(thi, (lo[j] - r[:, j]) / g[j])
        else:
            bad = (r[:, j] < lo[j]) | (r[:, j] >= hi[j])
            thi[bad] = -np.inf
    kmin = np.ceil(tlo - 1e-9)
    kmax = np.floor(thi + 1e-9)
    ok = np.isfinite(kmin) & np.isfinite(kmax) & (kmax >= kmin)
    head, kmin, kmax = head[ok], kmin[ok].astype(np.int64), kmax[ok].astype(np.int64)
    cnt = kmax - kmin + 1
    rows = np.repeat(head, cnt, axis=0)
    last = np.repeat(kmin, cnt) + (np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt))
    ks = np.column_stack([rows, last]).astype(np.int64)
    xs = ks + u
    c = xs @ Minv.T
    inside = np.all((c >= lo) & (c < hi), axis=1)
    return ks[inside], xs[inside]


def model_set(sp: Splitter, W: Window, extent: Window, shift=None,
              keep: Optional[Callable[[np.ndarray], np.ndarray]] = None):
    """Project the (shifted, optionally thinned) lattice slab onto E.

    ``keep(sites)`` returns a boolean mask, e.g. i.i.d. Bernoulli marks.
    Returns ``(PointSet in E-coordinates on extent, integer sites)``.
    """
    ks, xs = lattice_points_in_slab(sp, W, extent, shift)
    if keep is not None:
        m = np.asarray(keep(ks), dtype=bool)
        ks, xs = ks[m], xs[m]
    xE, _ = decompose(sp, xs) if len(xs) else (np.empty((0, sp.dim_E)), None)
    return PointSet(xE, extent), ks


# -- Palm measure of the projected process ------------------------------------

def palm_pushforward(sp: Splitter, W: Window, w, phi_tilde: PointSet,
                     extent: Optional[Window] = None) -> PointSet:
    """pi(w + phi~) for w in W (F-coordinates)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if not W.contains(w[None, :])[0]:
        raise ValueError("w must lie in the window W")
    return project(translate(phi_tilde, -sp.embed_F(w)), sp, W, extent)


def palm_pushforward_gamma(sp: Splitter, W: Window, palm_sample, C_list: Sequence[Window],
                           n_samples: int, seed, extent: Optional[Window] = None):
    """Monte Carlo gamma(C) = alpha |W| E[card(pi(w + phi~) cap C)].

    ``palm_sample`` is a PointSet (deterministic Palm configuration) or a
    callable ``seed -> PointSet``. Returns ``(mean, standard_error)`` arrays.
    """
    seed = as_seed(seed)
    rng = seed.child(0).rng()
    counts = np.zeros((n_samples, len(C_list)))
    for i in range(n_samples):
        w = W.lower + (W.upper - W.lower) * rng.random(W.dim)
        phi_t = palm_sample(seed.child(1, i)) if callable(palm_sample) else palm_sample
        out = palm_pushforward(sp, W, w, phi_t, extent)
        counts[i] = [count_in(out, C) for C in C_list]
    scale = sp.alpha * W.volume()
    sd = counts.std(axis=0, ddof=1) if n_samples > 1 else np.zeros(len(C_list))
    return scale * counts.mean(axis=0), scale * sd / math.sqrt(n_samples)


def theoretical_gamma(IQ: AtomicMeasure, sp: Splitter, W: Window,
                      C_list: Sequence[Window]) -> np.ndarray:
    """gamma(C) = alpha * sum_x w(x) psi(x_F) 1_C(x_E) over the atoms of I(Q~)."""
    if len(IQ) == 0:
        return np.zeros(len(C_list))
    xE, xF = decompose(sp, IQ.locations)
    base = sp.alpha * IQ.weights * psi(W, xF)
    return np.array([float(base[C.contains(xE)].sum()) for C in C_list])


def _difference_window(W: Window) -> Window:
    sides = _box_sides(W)
    return Window.box(-sides, sides)


def lattice_intensity(sp: Splitter, W: Window, extent: Window, corr=None) -> AtomicMeasure:
    """Atoms corr(k) delta_k over sites k with k_E in extent and psi(k_F) possibly > 0."""
    ks, _ = lattice_points_in_slab(sp, _difference_window(W), extent)
    w = np.ones(len(ks)) if corr is None else np.asarray(corr(ks), dtype=float)
    return AtomicMeasure(ks.astype(float), w)


def lattice_gamma(sp: Splitter, W: Window, C_list: Sequence[Window], K: int, corr=None):
    """alpha * sum_{|k|_inf <= K} corr(k) psi(k_F) 1_C(k_E), by plain enumeration."""
    ks = lattice_reps(K, sp.dim)
    w = np.ones(len(ks)) if corr is None else np.asarray(corr(ks), dtype=float)
    xE, xF = decompose(sp, ks.astype(float))
    base = sp.alpha * w * psi(W, xF)
    return np.array([float(base[C.contains(xE)].sum()) for C in C_list])


# -- diffraction -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BraggTable:
    """Predicted Bragg peaks: E-positions, weights and the lattice labels k."""

    positions: np.ndarray
    weights: np.ndarray
    ks: np.ndarray

    def top(self, n: int) -> "BraggTable":
        return BraggTable(self.positions[:n], self.weights[:n], self.ks[:n])


def bragg_peak_table(model: SpectralModel, sp: Splitter, W: Window,
                     freq_region: Window, reps) -> BraggTable:
    """Peaks alpha^2 w psi^(x_F^perp) at x_E^perp for the atoms x of the periodized model.

    Sorted by decreasing weight, ties broken by position.
    """
    ks = lattice_reps(reps, sp.dim)
    if ks.shape[0] == 0:
        raise ValueError("empty set of lattice translates")
    pp = model.pure_point
    pos, wts, lab = [], [], []
    for loc, w0 in zip(pp.locations, pp.weights):
        x = loc + ks
        xE, xF = orth_project(sp, x)
        w = sp.alpha ** 2 * w0 * psi_hat(W, xF)
        m = freq_region.contains(xE) & (w > 0)
        pos.append(xE[m])
        wts.append(w[m])
        lab.append(ks[m])
    pos = np.vstack(pos) if pos else np.empty((0, sp.dim_E))
    wts = np.concatenate(wts) if wts else np.empty(0)
    lab = np.vstack(lab) if lab else np.empty((0, sp.dim), np.int64)
    order = np.lexsort((pos[:, 0], -wts))
    return BraggTable(pos[order], wts[order], lab[order])


def fiber_density(model: SpectralModel, sp: Splitter, W: Window, s, reps,
                  panels_per_unit: int = 4, nodes: int = 10) -> np.ndarray:
    """alpha^2 int_{E^perp} psi^(P_F(s + v)) rho_p(s + v) dv at E-positions ``s``.

    ``rho_p`` is the model's continuous density periodized over ``reps``; the
    integral runs over the bounded region where it can be non-zero, using
    composite Gauss-Legendre on each axis of E^perp.
    """
    from .measure import periodize

    s = np.atleast_2d(np.asarray(s, dtype=float))
    if s.shape[1] != sp.dim_E:
        s = s.reshape(-1, sp.dim_E)
    if model.ac_density is None:
        return np.zeros(len(s))
    per = periodize(SpectralModel(AtomicMeasure.zero(sp.dim), model.ac_density), reps)
    ks = lattice_reps(reps, sp.dim)
    reach = float(np.sqrt(((np.abs(ks) + 1.0) ** 2).sum(axis=1)).max())
    Q = null_space(sp.basis_E).T
    npan = max(1, int(math.ceil(2 * reach * panels_per_unit)))
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(-reach, reach, npan + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    y1 = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w1 = (half[:, None] * gw[None, :]).ravel()
    k = Q.shape[0]
    grids = np.meshgrid(*([y1] * k), indexing="ij")
    Y = np.stack([g.ravel() for g in grids], axis=1)
    WY = np.prod(np.meshgrid(*([w1] * k), indexing="ij"), axis=0).ravel()
    out = np.zeros(len(s))
    for i, si in enumerate(s):
        x = sp.embed_E(si) + Y @ Q
        _, xF = orth_project(sp, x)
        out[i] = sp.alpha ** 2 * float(np.sum(WY * psi_hat(W, xF) * per.density(x)))
    return out


def theoretical_diffraction(model: SpectralModel, sp: Splitter, W: Window,
                            freq_region: Window, reps) -> SpectralModel:
    """Diffraction of the projected process as a spectral model on E.

    Pure-point part from :func:`bragg_peak_table` (peaks merged within 1e-6);
    continuous part from :func:`fiber_density`.
    """
    table = bragg_peak_table(model, sp, W, freq_region, reps)
    atoms = AtomicMeasure(table.positions, table.weights, PEAK_MERGE_TOL)
    dens = None
    if model.ac_density is not None:
        def dens(t):
            return fiber_density(model, sp, W, t, reps)
    return SpectralModel(atoms, dens, f"cut-and-project({model.label})")


def match_peaks(positions, table: BraggTable, tol: float) -> np.ndarray:
    """Greedy matching of predicted peaks (in table order) to observed positions.

    Returns, for each table row, the index of the nearest unused observed
    position within ``tol`` (Euclidean), or -1.
    """
    pos = np.asarray(positions, dtype=float).reshape(len(positions), table.positions.shape[1])
    used = np.zeros(len(pos), dtype=bool)
    out = np.full(len(table.weights), -1, dtype=np.int64)
    for i, p in enumerate(table.positions):
        if len(pos) == 0:
            break
        dist = np.sqrt(((pos - p) ** 2).sum(axis=1))
        dist[used] = np.inf
        j = int(np.argmin(dist))
        if dist[j] <= tol:
            out[i] = j
            used[j] = True
    return out
