"""Finite point configurations, observation windows and pair differences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .measure import AtomicMeasure, DEFAULT_MERGE_TOL, DimensionError

_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class Window:
    """A closed ball or a half-open box ``[lower, upper)`` in R^d."""

    kind: str
    lower: np.ndarray = None
    upper: np.ndarray = None
    center: np.ndarray = None
    radius: float = None

    def __post_init__(self):
        if self.kind == "box":
            lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
            hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
            if lo.shape != hi.shape or not np.all(lo < hi):
                raise ValueError("box needs lower < upper componentwise")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        elif self.kind == "ball":
            c = np.atleast_1d(np.asarray(self.center, dtype=float))
            if not self.radius > 0:
                raise ValueError("ball radius must be positive")
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "radius", float(self.radius))
        else:
            raise ValueError(f"unknown window kind {self.kind!r}")

    @classmethod
    def box(cls, lower, upper):
        return cls("box", lower=lower, upper=upper)

    @classmethod
    def ball(cls, center, radius):
        return cls("ball", center=center, radius=radius)

    @property
    def dim(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center)

    def volume(self) -> float:
        if self.kind == "box":
            return float(np.prod(self.upper - self.lower))
        d = self.dim
        if d == 1:
            return 2.0 * self.radius
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius ** d

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        if pts.shape[1] != self.dim:
            raise DimensionError("window and points differ in dimension")
        if self.kind == "box":
            return np.all((pts >= self.lower) & (pts < self.upper), axis=1)
        return ((pts - self.center) ** 2).sum(axis=1) <= self.radius ** 2

    def bounds(self):
        """Axis-aligned bounding box ``(lo, hi)``."""
        if self.kind == "box":
            return self.lower, self.upper
        return self.center - self.radius, self.center + self.radius

    def corners(self) -> np.ndarray:
        lo, hi = self.bounds()
        d = len(lo)
        sel = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1
        return np.where(sel == 1, hi, lo)

    def translate(self, t) -> "Window":
        """Window shifted by ``-t`` (same convention as point translation)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "box":
            return Window.box(self.lower - t, self.upper - t)
        return Window.ball(self.center - t, self.radius)

    def covers(self, other: "Window", tol=_EPS) -> bool:
        """True if ``other`` lies inside this window (boundaries up to ``tol``)."""
        if self.kind == "box":
            lo, hi = other.bounds()
            return bool(np.all(lo >= self.lower - tol) and np.all(hi <= self.upper + tol))
        if other.kind == "ball":
            gap = np.linalg.norm(other.center - self.center) + other.radius
            return bool(gap <= self.radius + tol)
        far = np.sqrt(((other.corners() - self.center) ** 2).sum(axis=1)).max()
        return bool(far <= self.radius + tol)

    def minkowski_box(self, other: "Window") -> "Window":
        """Box containing the Minkowski sum of the two windows."""
        lo1, hi1 = self.bounds()
        lo2, hi2 = other.bounds()
        return Window.box(lo1 + lo2, hi1 + hi2)

    def to_dict(self) -> dict:
        if self.kind == "box":
            return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "Window":
        if d["kind"] == "box":
            return cls.box(d["lower"], d["upper"])
        return cls.ball(d["center"], d["radius"])


@dataclass(frozen=True, eq=False)
class PointSet:
    """Points observed on ``window``; every point lies in the window."""

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        d = self.window.dim
        if pts.size == 0:
            pts = pts.reshape(0, d)
        elif pts.ndim == 1:
            pts = pts[:, None] if d == 1 else pts[None, :]
        if pts.shape[1] != d:
            raise DimensionError("points and window differ in dimension")
        if len(pts) and not np.all(self.window.contains(pts)):
            raise ValueError("points outside the observation window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.window.dim

    def __len__(self):
        return self.points.shape[0]


def count_in(ps: PointSet, A: Window) -> int:
    """N_A: number of points of ``ps`` inside ``A``."""
    if A.dim != ps.dim:
        raise DimensionError("window and point set differ in dimension")
    if len(ps) == 0:
        return 0
    return int(np.count_nonzero(A.contains(ps.points)))


def translate(ps: PointSet, t) -> PointSet:
    """T_t: every point x becomes x - t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (ps.dim,):
        raise DimensionError("translation vector has wrong dimension")
    return PointSet(ps.points - t, ps.window.translate(t))


def restrict(ps: PointSet, A: Window) -> PointSet:
    """Points of ``ps`` inside ``A``, observed on ``A``."""
    if A.dim != ps.dim:
        raise DimensionError("window and point set differ in dimension")
    keep = A.contains(ps.points) if len(ps) else np.zeros(0, bool)
    return PointSet(ps.points[keep], A)


def _check_cutoff(cutoff):
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")


def pair_differences(ps: PointSet, cutoff: float, merge_tol=DEFAULT_MERGE_TOL,
                     backend=None) -> AtomicMeasure:
    """Atoms at y - x over ordered pairs (diagonal included) with |y - x| <= cutoff.

    Uses a cell list of side ``cutoff``; ``cutoff=inf`` keeps every pair.
    """
    _check_cutoff(cutoff)
    if len(ps) == 0:
        return AtomicMeasure.zero(ps.dim, merge_tol)
    diffs = _kernels.pair_differences_raw(ps.points, ps.points, cutoff, backend)
    return AtomicMeasure(diffs, np.ones(len(diffs)), merge_tol)


def pair_differences_bruteforce(ps: PointSet, cutoff: float,
                                merge_tol=DEFAULT_MERGE_TOL) -> AtomicMeasure:
    """Quadratic double loop; reference for :func:`pair_differences`."""
    _check_cutoff(cutoff)
    if len(ps) == 0:
        return AtomicMeasure.zero(ps.dim, merge_tol)
    diffs = _kernels.pair_differences_bruteforce(ps.points, ps.points, cutoff)
    return AtomicMeasure(diffs, np.ones(len(diffs)), merge_tol)


def cross_differences(src, dst, cutoff, backend=None) -> np.ndarray:
    """Raw vectors dst_j - src_i with norm <= cutoff, lexicographically sorted."""
    _check_cutoff(cutoff)
    return _kernels.pair_differences_raw(src, dst, cutoff, backend)
