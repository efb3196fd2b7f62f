"""Seeded samplers: Poisson processes, binary fields on Z^d, shifted lattices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .measure import CorrelationSequence, arcsine_f
from .pointset import PointSet, Window

EIGEN_TOL = 1e-8


@dataclass(frozen=True)
class Seed:
    """Root seed plus a derivation path; equal seeds give equal streams."""

    root: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.root) < 2 ** 64:
            raise ValueError("seed root must be an unsigned 64-bit integer")
        object.__setattr__(self, "root", int(self.root))
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *idx) -> "Seed":
        return Seed(self.root, self.path + tuple(idx))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.root, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def to_dict(self):
        return {"root": self.root, "path": list(self.path)}


def as_seed(seed) -> Seed:
    return seed if isinstance(seed, Seed) else Seed(int(seed))


def _as_box(box, dim=None):
    """``(lower, upper)`` integer arrays for a half-open box of Z^d.

    Accepts an int ``N`` (the box ``[0, N)`` in d=1 or ``[0, N)^dim``) or a
    pair of sequences.
    """
    if np.isscalar(box):
        d = 1 if dim is None else dim
        lo, hi = np.zeros(d, np.int64), np.full(d, int(box), np.int64)
    else:
        lo = np.atleast_1d(np.asarray(box[0], dtype=np.int64))
        hi = np.atleast_1d(np.asarray(box[1], dtype=np.int64))
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError("integer box needs lower < upper componentwise")
    return lo, hi


@dataclass(frozen=True, eq=False)
class BinaryField:
    """{0,1}-valued array on the integer box ``[lower, lower + shape)``."""

    lower: np.ndarray
    values: np.ndarray
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("binary field values must be 0 or 1")
        v = v.astype(np.uint8)
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.int64))
        if lo.shape != (v.ndim,):
            raise ValueError("lower corner does not match field dimension")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lower", lo)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def upper(self) -> np.ndarray:
        return self.lower + np.array(self.values.shape)

    @property
    def box(self):
        return self.lower, self.upper

    def __getitem__(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        return int(self.values[tuple(k - self.lower)])

    def ones(self) -> np.ndarray:
        """Integer sites with value 1, shape ``(m, d)``."""
        return np.argwhere(self.values == 1) + self.lower


# -- point processes ---------------------------------------------------------

def poisson(intensity: float, window: Window, seed) -> PointSet:
    """Homogeneous Poisson process on ``window``."""
    if not intensity > 0:
        raise ValueError("intensity must be positive")
    rng = as_seed(seed).rng()
    n = rng.poisson(intensity * window.volume())
    d = window.dim
    if window.kind == "box":
        pts = window.lower + (window.upper - window.lower) * rng.random((n, d))
        # guard the half-open upper face against rounding
        pts = np.minimum(pts, np.nextafter(window.upper, -np.inf))
    else:
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = window.radius * rng.random(n) ** (1.0 / d)
        pts = window.center + g * r[:, None]
    return PointSet(pts, window)


def binomial(n: int, window: Window, seed) -> PointSet:
    """``n`` i.i.d. uniform points in a box window (not stationary on R^d)."""
    if n < 0:
        raise ValueError("point count must be non-negative")
    if window.kind != "box":
        raise ValueError("binomial sampler needs a box window")
    rng = as_seed(seed).rng()
    pts = window.lower + (window.upper - window.lower) * rng.random((int(n), window.dim))
    pts = np.minimum(pts, np.nextafter(window.upper, -np.inf))
    return PointSet(pts, window)


# -- binary fields -----------------------------------------------------------

def bernoulli_field(p: float, box, seed, dim=None) -> BinaryField:
    """I.i.d. Bernoulli(p) sites."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    lo, hi = _as_box(box, dim)
    rng = as_seed(seed).rng()
    vals = rng.random(tuple(hi - lo)) < p
    return BinaryField(lo, vals, {"model": "bernoulli", "p": p})


def markov_field_1d(a: float, b: float, length: int, seed, lower: int = 0) -> BinaryField:
    """Stationary two-state chain; ``a`` = P(0->1), ``b`` = P(1->0).

    Sampled as alternating geometric sojourns, starting from the stationary
    law (the residual sojourn is geometric by memorylessness).
    """
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        raise ValueError("transition probabilities must lie in (0, 1)")
    length = int(length)
    rng = as_seed(seed).rng()
    state = int(rng.random() < a / (a + b))
    runs, states, total = [], [], 0
    while total < length:
        m = max(16, int(2 * (length - total) * max(a, b)) + 16)
        p_leave = np.where((np.arange(m) + state) % 2 == 1, b, a)
        r = rng.geometric(p_leave)
        runs.append(r)
        states.append((np.arange(m) + state) % 2)
        total += int(r.sum())
        state = (state + m) % 2
    vals = np.repeat(np.concatenate(states), np.concatenate(runs))[:length]
    return BinaryField([lower], vals, {"model": "markov", "a": a, "b": b})


def circulant_eigenvalues(rho: CorrelationSequence, shape) -> np.ndarray:
    """Eigenvalues of the circulant embedding of ``rho`` for a field of ``shape``."""
    if len(shape) != rho.dim:
        raise ValueError("field shape does not match the correlation dimension")
    K = rho.kmax
    M = [max(2 * max(int(n) - 1, K), 2) for n in shape]
    M = [m + (m % 2) for m in M]
    axes = [np.where(np.arange(m) <= m // 2, np.arange(m), np.arange(m) - m) for m in M]
    grid = np.meshgrid(*axes, indexing="ij")
    lags = np.stack([g.ravel() for g in grid], axis=1)
    c = rho.at(lags).reshape(M)
    return np.fft.fftn(c).real


def gaussian_field(rho: CorrelationSequence, box, seed) -> np.ndarray:
    """Stationary centred Gaussian field with correlations ``rho`` (zero beyond kmax).

    Circulant embedding on a doubled torus; eigenvalues in ``[-1e-8, 0)`` are
    clipped to zero, more negative ones reject the model.
    """
    lo, hi = _as_box(box, rho.dim)
    shape = tuple(hi - lo)
    lam = circulant_eigenvalues(rho, shape)
    if lam.min() < -EIGEN_TOL:
        raise ValueError(f"correlation model is not embeddable (eigenvalue {lam.min():.3g})")
    lam = np.clip(lam, 0.0, None)
    rng = as_seed(seed).rng()
    eps = rng.standard_normal(lam.shape) + 1j * rng.standard_normal(lam.shape)
    y = np.fft.fftn(np.sqrt(lam / lam.size) * eps).real
    return y[tuple(slice(0, n) for n in shape)]


def gaussian_threshold_field(rho: CorrelationSequence, box, seed) -> BinaryField:
    """X_k = 1{G_k >= 0} for the Gaussian field of :func:`gaussian_field`."""
    if abs(rho[(0,) * rho.dim] - 1.0) > 1e-12:
        raise ValueError("rho(0) must equal 1")
    lo, _ = _as_box(box, rho.dim)
    g = gaussian_field(rho, box, seed)
    return BinaryField(lo, g >= 0, {"model": "gaussian_threshold", "kmax": rho.kmax})


def gaussian_threshold_field_spectral(freqs, weights, box, seed) -> BinaryField:
    """Threshold field of a Gaussian process with a discrete spectral measure.

    G_k = sum_j sqrt(w_j) (A_j cos 2pi<t_j,k> + B_j sin 2pi<t_j,k>) has
    covariance sum_j w_j cos 2pi<t_j, k - l> exactly. The process is not
    ergodic; expectations are recovered by averaging replicas.
    """
    freqs = np.asarray(freqs, dtype=float)
    w = np.asarray(weights, dtype=float)
    if freqs.ndim == 1:
        freqs = freqs[:, None]
    if abs(w.sum() - 1.0) > 1e-12 or np.any(w < 0):
        raise ValueError("spectral weights must be non-negative and sum to 1")
    d = freqs.shape[1]
    lo, hi = _as_box(box, d)
    rng = as_seed(seed).rng()
    A = rng.standard_normal(len(w)) * np.sqrt(w)
    B = rng.standard_normal(len(w)) * np.sqrt(w)
    sites = lattice_box_points(lo, hi)
    g = np.empty(len(sites))
    step = max(1, (1 << 22) // max(len(w), 1))
    for s in range(0, len(sites), step):
        ph = 2.0 * np.pi * (sites[s:s + step] @ freqs.T)
        g[s:s + step] = np.cos(ph) @ A + np.sin(ph) @ B
    vals = (g >= 0).reshape(tuple(hi - lo))
    return BinaryField(lo, vals, {"model": "gaussian_threshold_spectral", "atoms": len(w)})


def lattice_box_points(lo, hi) -> np.ndarray:
    axes = [np.arange(a, b) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def nu_charfn(t, nmax: int = 6) -> np.ndarray:
    """Characteristic function prod_{n<=nmax} cos(2 pi t n^-n) of sum n^-n X_n."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    for n in range(1, nmax + 1):
        out = out * np.cos(2.0 * np.pi * t * float(n) ** (-n))
    return out


def nu_atoms(nmax: int = 6):
    """Atoms and weights of the law of ``sum_{n<=nmax} n^-n X_n``, X_n = +-1."""
    signs = 1 - 2 * ((np.arange(2 ** nmax)[:, None] >> np.arange(nmax)) & 1)
    scales = np.array([float(n) ** (-n) for n in range(1, nmax + 1)])
    return signs @ scales, np.full(2 ** nmax, 2.0 ** -nmax)


def product_field(fields: Sequence[BinaryField]) -> BinaryField:
    """X_{n_1..n_d} = A^1_{n_1} ... A^d_{n_d} from d one-dimensional fields."""
    if not fields:
        raise ValueError("need at least one field")
    if any(f.dim != 1 for f in fields):
        raise ValueError("product_field takes one-dimensional fields")
    if len({f.values.shape[0] for f in fields}) != 1:
        raise ValueError("factor fields must have equal lengths")
    vals = fields[0].values.astype(np.uint8)
    for f in fields[1:]:
        vals = np.multiply.outer(vals, f.values)
    lo = np.concatenate([f.lower for f in fields])
    return BinaryField(lo, vals, {"model": "product", "factors": [f.model for f in fields]})


def stationarize(bf: BinaryField, seed) -> PointSet:
    """Points u + k over sites with x_k = 1, u uniform on [0,1)^d."""
    u = as_seed(seed).rng().random(bf.dim)
    pts = bf.ones() + u
    return PointSet(pts, Window.box(bf.lower.astype(float), bf.upper.astype(float)))


def bernoulli_marks(p: float, seed):
    """Callable keeping each supplied site independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = as_seed(seed).rng()

    def keep(sites):
        return rng.random(len(sites)) < p

    return keep


# -- field models ------------------------------------------------------------

class FieldModel:
    """A stationary {0,1} field law with a sampler and its exact moments."""

    name = "field"
    dim = 1

    def sample(self, box, seed) -> BinaryField:
        raise NotImplementedError

    @property
    def intensity(self) -> float:
        """E X_0."""
        raise NotImplementedError

    def correlation(self, ks) -> np.ndarray:
        """E X_0 X_k for an ``(m, d)`` array of lags."""
        raise NotImplementedError

    def correlation_sequence(self, kmax: int) -> CorrelationSequence:
        return CorrelationSequence.from_function(self.correlation, kmax, self.dim)


class ConstantOne(FieldModel):
    name = "lattice"

    def __init__(self, dim=1):
        self.dim = dim

    def sample(self, box, seed=None):
        lo, hi = _as_box(box, self.dim)
        return BinaryField(lo, np.ones(tuple(hi - lo), np.uint8), {"model": "lattice"})

    @property
    def intensity(self):
        return 1.0

    def correlation(self, ks):
        return np.ones(np.asarray(ks).reshape(-1, self.dim).shape[0])


class Bernoulli(FieldModel):
    name = "bernoulli"

    def __init__(self, p, dim=1):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.p, self.dim = float(p), dim

    def sample(self, box, seed):
        return bernoulli_field(self.p, box, seed, self.dim)

    @property
    def intensity(self):
        return self.p

    def correlation(self, ks):
        ks = np.asarray(ks).reshape(-1, self.dim)
        zero = np.all(ks == 0, axis=1)
        return np.where(zero, self.p, self.p ** 2)


class Markov(FieldModel):
    name = "markov"

    def __init__(self, a, b):
        if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
            raise ValueError("transition probabilities must lie in (0, 1)")
        self.a, self.b = float(a), float(b)

    @property
    def pi1(self):
        return self.a / (self.a + self.b)

    @property
    def lam(self):
        return 1.0 - self.a - self.b

    def sample(self, box, seed):
        lo, hi = _as_box(box, 1)
        return markov_field_1d(self.a, self.b, int(hi[0] - lo[0]), seed, int(lo[0]))

    @property
    def intensity(self):
        return self.pi1

    def correlation(self, ks):
        k = np.abs(np.asarray(ks).reshape(-1))
        p = self.pi1
        return p * p + p * (1 - p) * self.lam ** k

    @property
    def transition_matrix(self):
        return np.array([[1 - self.a, self.a], [self.b, 1 - self.b]])


class GaussianThreshold(FieldModel):
    """Threshold of a Gaussian field with correlation ``rho`` (circulant sampler)."""

    name = "gaussian_threshold"

    def __init__(self, rho: CorrelationSequence):
        self.rho = rho
        self.dim = rho.dim

    def sample(self, box, seed):
        return gaussian_threshold_field(self.rho, box, seed)

    @property
    def intensity(self):
        return 0.5

    def correlation(self, ks):
        return arcsine_f(np.clip(self.rho.at(ks), -1.0, 1.0))


class SpectralThreshold(FieldModel):
    """Threshold of a Gaussian field with a discrete symmetric spectral measure."""

    name = "spectral_threshold"

    def __init__(self, freqs, weights):
        self.freqs = np.asarray(freqs, dtype=float).reshape(len(weights), -1)
        self.weights = np.asarray(weights, dtype=float)
        self.dim = self.freqs.shape[1]

    def sample(self, box, seed):
        return gaussian_threshold_field_spectral(self.freqs, self.weights, box, seed)

    @property
    def intensity(self):
        return 0.5

    def correlation(self, ks):
        ks = np.asarray(ks, dtype=float).reshape(-1, self.dim)
        rho = np.cos(2.0 * np.pi * ks @ self.freqs.T) @ self.weights
        return arcsine_f(np.clip(rho, -1.0, 1.0))


class Product(FieldModel):
    name = "product"

    def __init__(self, factors: Sequence[FieldModel]):
        if any(f.dim != 1 for f in factors):
            raise ValueError("product factors must be one-dimensional")
        self.factors = list(factors)
        self.dim = len(self.factors)

    def sample(self, box, seed):
        lo, hi = _as_box(box, self.dim)
        seed = as_seed(seed)
        return product_field([f.sample(([lo[i]], [hi[i]]), seed.child(i))
                              for i, f in enumerate(self.factors)])

    @property
    def intensity(self):
        return float(np.prod([f.intensity for f in self.factors]))

    def correlation(self, ks):
        ks = np.asarray(ks).reshape(-1, self.dim)
        out = np.ones(ks.shape[0])
        for i, f in enumerate(self.factors):
            out *= f.correlation(ks[:, i:i + 1])
        return out


def palm_sample_lattice(model: FieldModel, box, seed, max_attempts: int = 10_000):
    """Field conditioned on X_0 = 1, by rejection; returns ``(field, E X_0)``."""
    lo, hi = _as_box(box, model.dim)
    if np.any(lo > 0) or np.any(hi <= 0):
        raise ValueError("box must contain the origin")
    seed = as_seed(seed)
    origin = tuple(-lo)
    for attempt in range(max_attempts):
        f = model.sample((lo, hi), seed.child(attempt))
        if f.values[origin] == 1:
            return f, model.intensity
    raise RuntimeError(f"no realization with X_0 = 1 after {max_attempts} attempts")
