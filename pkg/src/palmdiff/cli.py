"""Command-line pipeline: generate, estimate, verify, cutproject, report.

Runs are driven by a TOML config with one table per subcommand; flags
``--seed``, ``--out`` and ``--threads`` override the top-level keys. Every
output directory receives ``config.resolved.json`` with the fully resolved
configuration and the tool version.

Exit codes: 0 success / all checks pass, 1 verification failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import cutproject as cp
from . import io
from . import verify as vf
from ._version import __version__
from .estimators import (CoverageError, autocorrelation, bernoulli_spectral_model,
                         comb_spectral_model, convergence_study,
                         correlation_estimate, diffraction_coefficients, find_peaks_1d,
                         lattice_autocorrelation, palm_intensity, periodogram_grid,
                         periodogram_line)
from .generators import (Seed, SpectralThreshold, bernoulli_field, bernoulli_marks, binomial,
                         gaussian_threshold_field, markov_field_1d, nu_atoms, poisson)
from .measure import AtomicMeasure, CorrelationSequence
from .pointset import PointSet, Window

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

COMMANDS = ("generate", "estimate", "verify", "cutproject", "report")
TOP_KEYS = {"seed", "threads", "out"} | set(COMMANDS)


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


_REQUIRED = object()


# -- value converters --------------------------------------------------------

def _float(lo=None, hi=None, open_lo=False, open_hi=False):
    def conv(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError("expected a number")
        v = float(v)
        if not math.isfinite(v):
            raise ValueError("expected a finite number")
        if lo is not None and (v < lo or (open_lo and v == lo)):
            raise ValueError(f"must be {'>' if open_lo else '>='} {lo}")
        if hi is not None and (v > hi or (open_hi and v == hi)):
            raise ValueError(f"must be {'<' if open_hi else '<='} {hi}")
        return v
    return conv


def _int(lo=None):
    def conv(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("expected an integer")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}")
        return v
    return conv


def _choice(*options):
    def conv(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return conv


def _float_list(min_len=1):
    def conv(v):
        if not isinstance(v, list) or len(v) < min_len:
            raise ValueError(f"expected a list of at least {min_len} numbers")
        return [_float()(x) for x in v]
    return conv


def _size(v):
    if isinstance(v, list):
        return [_int(2)(x) for x in v]
    return _int(2)(v)


def _intervals(v):
    """``[[lo, hi], ...]`` (d = 1) or ``[[[lo...], [hi...]], ...]``."""
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty list of [lower, upper] pairs")
    out = []
    for item in v:
        if not isinstance(item, list) or len(item) != 2:
            raise ValueError("each test set is a [lower, upper] pair")
        lo, hi = item
        lo = [_float()(x) for x in (lo if isinstance(lo, list) else [lo])]
        hi = [_float()(x) for x in (hi if isinstance(hi, list) else [hi])]
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("test sets need lower < upper componentwise")
        out.append([lo, hi])
    return out


def _quadratic(v):
    if isinstance(v, list):
        if len(v) not in (3, 4) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
            raise ValueError("quadratic surd is [p, q, r] or [p, q, r, s] with integers")
        return cp.QuadraticIrrational(*v)
    if isinstance(v, (int, str)) and not isinstance(v, bool):
        return cp.QuadraticIrrational.parse(v)
    raise ValueError("coordinates are integers, rational strings like '3/2', or [p, q, r, s]")


def _rational(v):
    if isinstance(v, bool) or not isinstance(v, (int, str, float)):
        raise ValueError("expected a rational number")
    return float(Fraction(str(v)))


def _path(v):
    if not isinstance(v, str) or not v:
        raise ValueError("expected a path")
    return v


def _str(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _jsonable(v):
    if isinstance(v, cp.QuadraticIrrational):
        return [v.p, v.q, v.r, v.s]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


class _Section:
    """Reads typed keys from one config table and rejects the leftovers."""

    def __init__(self, name, raw):
        if not isinstance(raw, dict):
            raise ConfigError(f"[{name}] must be a table")
        self.name, self.raw, self.resolved = name, raw, {}

    def get(self, key, conv, default=_REQUIRED):
        if key in self.raw:
            try:
                val = conv(self.raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"[{self.name}] {key}: {exc}") from None
        elif default is _REQUIRED:
            raise ConfigError(f"[{self.name}] missing required key '{key}'")
        else:
            val = default
        self.resolved[key] = _jsonable(val)
        return val

    def done(self):
        extra = sorted(set(self.raw) - set(self.resolved))
        if extra:
            raise ConfigError(f"[{self.name}] unknown key(s): {', '.join(extra)}")
        return self.resolved


# -- per-command config parsing ---------------------------------------------

def _parse_generate(sec):
    model = sec.get("model", _choice("poisson", "binomial", "bernoulli", "markov", "gaussian", "nu"))
    if model in ("poisson", "binomial"):
        if model == "poisson":
            sec.get("intensity", _float(0, open_lo=True), 1.0)
        else:
            sec.get("n", _int(0))
        sec.get("dim", _int(1), 1)
        sec.get("radius", _float(0, open_lo=True))
    elif model == "bernoulli":
        sec.get("p", _float(0, 1))
        sec.get("size", _size)
        sec.get("dim", _int(1), 1)
    elif model == "markov":
        sec.get("a", _float(0, 1, True, True))
        sec.get("b", _float(0, 1, True, True))
        sec.get("size", _int(2))
    elif model == "gaussian":
        rho = sec.get("rho", _float_list(1))
        if abs(rho[0] - 1.0) > 1e-12:
            raise ConfigError("[generate] rho: rho[0] must be 1")
        sec.get("size", _int(2))
    else:
        sec.get("nmax", _int(1), 6)
        sec.get("size", _int(2))
    return sec.done()


def _parse_estimate(sec):
    sec.get("input", _path)
    sec.get("radius", _float(0, open_lo=True), None)
    sec.get("test_sets", _intervals, [[[-0.1], [0.1]], [[-1.0], [1.0]], [[1.0], [2.0]]])
    sec.get("palm_half_width", _float(0, open_lo=True), None)
    sec.get("freq_start", _float(), 0.0)
    sec.get("freq_stop", _float(), 1.0)
    sec.get("freq_num", _int(0), 1001)
    sec.get("radii", _float_list(1), [])
    sec.get("kmax", _int(0), 5)
    sec.get("grid", _int(0), 0)
    return sec.done()


_VERIFY_MODELS = ("poisson", "bernoulli", "markov", "gaussian", "nu", "fibonacci", "binomial")


def _parse_verify(sec):
    model = sec.get("model", _choice(*_VERIFY_MODELS))
    if model == "poisson":
        sec.get("intensity", _float(0, open_lo=True), 1.0)
        sec.get("dim", _int(1), 1)
        sec.get("radius", _float(0, open_lo=True), 1e4)
        sec.get("test_sets", _intervals, [[[-0.1], [0.1]], [[-1.0], [1.0]], [[1.0], [2.0]]])
        sec.get("replicas", _int(2), 32)
        sec.get("n_sigma", _float(0), 3.0)
        sec.get("rel_tol", _float(0), 0.05)
    elif model == "bernoulli":
        sec.get("p", _float(0, 1))
        sec.get("size", _size, 1 << 20)
        sec.get("dim", _int(1), 1)
        sec.get("kmax", _int(0), 5)
        sec.get("tol", _float(0), 0.005)
        sec.get("coef_tol", _float(0), 0.01)
        sec.get("grid", _int(0), 0)
    elif model == "markov":
        sec.get("a", _float(0, 1, True, True), 0.25)
        sec.get("b", _float(0, 1, True, True), 0.25)
        sec.get("size", _int(2), 1 << 16)
        sec.get("kmax", _int(0), 8)
        sec.get("replicas", _int(2), 16)
        sec.get("n_sigma", _float(0), 3.0)
    elif model == "gaussian":
        rho = sec.get("rho", _float_list(1), [1.0, 0.5])
        if abs(rho[0] - 1.0) > 1e-12:
            raise ConfigError("[verify] rho: rho[0] must be 1")
        sec.get("size", _int(2), 1 << 20)
        sec.get("kmax", _int(0), 1)
        sec.get("replicas", _int(1), 1)
        sec.get("tol", _float(0), 0.005)
    elif model == "nu":
        sec.get("nmax", _int(1), 6)
        sec.get("size", _int(2), 1 << 10)
        sec.get("kmax", _int(0), 5)
        sec.get("replicas", _int(2), 400)
        sec.get("n_sigma", _float(0), 3.0)
    elif model == "fibonacci":
        sec.get("length", _float(0, open_lo=True), 1e4)
        sec.get("n_peaks", _int(1), 10)
        sec.get("freq_min", _float(), 0.0)
        sec.get("freq_max", _float(), 4.0)
        sec.get("reps", _int(1), 30)
        sec.get("position_tol", _float(0), 1e-3)
        sec.get("intensity_rel_tol", _float(0), 0.05)
        sec.get("mark_p", _float(0, 1, True), None)
        sec.get("mark_replicas", _int(1), 4)
        sec.get("mark_min_rel_weight", _float(0), 0.1)
        sec.get("mark_rel_tol", _float(0), 0.1)
    return sec.done()


def _parse_cutproject(sec):
    sec.get("E", lambda v: [_quadratic(x) for x in _list(v)],
            [cp.QuadraticIrrational(1, 0, 0), cp.QuadraticIrrational(1, 1, 5, 2)])
    sec.get("F", lambda v: [[_quadratic(x) for x in _list(row)] for row in _list(v)], None)
    sec.get("window", _window_spec, "shadow")
    sec.get("length", _float(0, open_lo=True), 1e4)
    sec.get("shift", _float_list(1), None)
    sec.get("mark_p", _float(0, 1), None)
    sec.get("freq_min", _float(), 0.0)
    sec.get("freq_max", _float(), 4.0)
    sec.get("n_peaks", _int(0), 10)
    sec.get("reps", _int(1), 30)
    sec.get("freq_num", _int(0), 0)
    return sec.done()


def _list(v):
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty list")
    return v


def _window_spec(v):
    if v == "shadow":
        return v
    if isinstance(v, dict) and set(v) == {"lower", "upper"}:
        lo = [_rational(x) for x in _list(v["lower"])]
        hi = [_rational(x) for x in _list(v["upper"])]
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("window needs lower < upper componentwise")
        return {"lower": lo, "upper": hi}
    raise ValueError("window is 'shadow' or a table with lower/upper lists")


def _parse_report(sec):
    sec.get("input", _path)
    return sec.done()


_PARSERS = {"generate": _parse_generate, "estimate": _parse_estimate,
            "verify": _parse_verify, "cutproject": _parse_cutproject, "report": _parse_report}


def resolve_config(raw: dict, command: str, seed=None, out=None, threads=None) -> dict:
    """Validate the whole config and return the resolved form for ``command``."""
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    top = _Section("top-level", {k: raw[k] for k in ("seed", "threads", "out") if k in raw})
    cfg = {"seed": top.get("seed", _int(0), 0),
           "threads": top.get("threads", _int(1), 1),
           "out": top.get("out", _str, None)}
    top.done()
    if seed is not None:
        cfg["seed"] = seed
    if threads is not None:
        cfg["threads"] = threads
    if out is not None:
        cfg["out"] = out
    if cfg["seed"] < 0 or cfg["seed"] >= 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg["threads"] < 1:
        raise ConfigError("threads must be positive")
    sections = {}
    for name in COMMANDS:
        if name in raw:
            sections[name] = _PARSERS[name](_Section(name, raw[name]))
    if command not in sections:
        if command == "report":
            raise ConfigError("[report] section with 'input' is required")
        raise ConfigError(f"config has no [{command}] section")
    cfg[command] = sections[command]
    if cfg["out"] is None and command != "report":
        raise ConfigError("output directory not given (--out or top-level 'out')")
    return cfg


def _write_resolved(outdir: Path, command: str, cfg: dict) -> None:
    io.write_json(outdir / "config.resolved.json",
                  {"tool": "palmdiff", "version": __version__, "command": command, "config": cfg})


# -- commands ----------------------------------------------------------------

def _box_window(radius, dim):
    return Window.box([-radius] * dim, [radius] * dim)


def _centered_int_box(size, dim):
    size = [size] * dim if isinstance(size, int) else list(size)
    lo = np.array([-(n // 2) for n in size])
    return lo, lo + np.array(size)


def cmd_generate(cfg, outdir: Path) -> int:
    g = cfg["generate"]
    seed = Seed(cfg["seed"])
    model = g["model"]
    if model in ("poisson", "binomial"):
        window = _box_window(g["radius"], g["dim"])
        if model == "poisson":
            ps = poisson(g["intensity"], window, seed)
        else:
            ps = binomial(g["n"], window, seed)
        io.write_pointset(outdir / "points.csv", ps, seed, {"model": dict(g)})
        print(f"generated {len(ps)} points -> {outdir / 'points.csv'}")
        return EXIT_OK
    if model == "bernoulli":
        bf = bernoulli_field(g["p"], _centered_int_box(g["size"], g["dim"]), seed)
    elif model == "markov":
        lo, _ = _centered_int_box(g["size"], 1)
        bf = markov_field_1d(g["a"], g["b"], g["size"], seed, int(lo[0]))
    elif model == "gaussian":
        vals = np.asarray(g["rho"], dtype=float)
        rho = CorrelationSequence(np.concatenate([vals[:0:-1], vals]))
        bf = gaussian_threshold_field(rho, _centered_int_box(g["size"], 1), seed)
    else:
        atoms, weights = nu_atoms(g["nmax"])
        bf = SpectralThreshold(atoms, weights).sample(_centered_int_box(g["size"], 1), seed)
    bf = type(bf)(bf.lower, bf.values, dict(g))
    io.write_field(outdir / "field.csv", bf, seed)
    print(f"generated field with {int(bf.values.sum())} ones on {bf.values.size} sites "
          f"-> {outdir / 'field.csv'}")
    return EXIT_OK


def _largest_centered_ball(window: Window) -> float:
    if window.kind == "box":
        return float(min(np.min(-window.lower), np.min(window.upper)))
    return float(window.radius - np.linalg.norm(window.center))


def _test_windows(spec, dim):
    out = []
    for lo, hi in spec:
        if len(lo) != dim:
            raise ConfigError("[estimate] test_sets: dimension does not match the input")
        out.append(Window.box(lo, hi))
    return out


def _estimate_points(e, ps: PointSet, outdir: Path, threads: int) -> None:
    d = ps.dim
    R = e["radius"] if e["radius"] is not None else _largest_centered_ball(ps.window)
    if not R > 0:
        raise ConfigError("[estimate] no centred ball fits in the observed window")
    tests = _test_windows(e["test_sets"], d)
    reach = max(float(np.sqrt((C.corners() ** 2).sum(axis=1)).max()) for C in tests)
    box_reach = max(float(np.abs(C.corners()).max()) for C in tests)
    half = e["palm_half_width"]
    if half is None:
        lo, hi = ps.window.bounds()
        half = float(min(np.min(-lo), np.min(hi))) - box_reach
        if not half > 0:
            raise ConfigError("[estimate] window too small for the Palm estimate")
    gamma = autocorrelation(ps, R, reach)
    io.write_measure(outdir / "autocorrelation.csv", gamma)
    palm = palm_intensity(ps, _box_window(half, d), tests)
    header = ([f"lower_{i + 1}" for i in range(d)] + [f"upper_{i + 1}" for i in range(d)]
              + ["palm", "autocorrelation"])
    cols = ([np.array([C.lower[i] for C in tests]) for i in range(d)]
            + [np.array([C.upper[i] for C in tests]) for i in range(d)]
            + [palm, np.array([gamma.mass(C) for C in tests])])
    io._write_table(outdir / "palm.csv", header, cols, [io.FLOAT_FMT] * len(header))
    if e["freq_num"] > 0:
        if d != 1:
            raise ConfigError("[estimate] frequency lines are only supported for d = 1")
        n = e["freq_num"]
        dt = (e["freq_stop"] - e["freq_start"]) / max(n - 1, 1)
        se = periodogram_line(ps, R, [e["freq_start"]], [dt], n)
        io.write_spectral_estimate(outdir / "periodogram.csv", se, {"radius": R})
    if e["radii"]:
        radii = sorted(e["radii"])
        if radii[-1] > R:
            raise ConfigError("[estimate] radii exceed the observed ball")
        rep = convergence_study(lambda s: ps, tests, radii, replicas=1, seed=0,
                                labels=[f"C{j + 1}" for j in range(len(tests))])
        io.write_convergence(outdir / "convergence.csv", rep)


def _estimate_field(e, bf, outdir: Path, threads: int) -> None:
    kmax = e["kmax"]
    corr = correlation_estimate(bf, kmax)
    io.write_measure(outdir / "correlation.csv", lattice_autocorrelation(corr))
    pts = bf.ones().astype(float)
    ps = PointSet(pts, Window.box(bf.lower.astype(float), bf.upper.astype(float)))
    R = e["radius"] if e["radius"] is not None else _largest_centered_ball(ps.window)
    n = e["grid"] or 1 << int(math.ceil(math.log2(2 * R + kmax + 1)))
    coef = diffraction_coefficients(periodogram_grid(ps, R, n, threads), kmax)
    io.write_measure(outdir / "coefficients.csv",
                     AtomicMeasure(coef.lags().astype(float), np.clip(coef.values.ravel(), 0, None)))


def cmd_estimate(cfg, outdir: Path) -> int:
    e = cfg["estimate"]
    path = Path(e["input"])
    if not path.exists() or not io.sidecar(path).exists():
        raise ConfigError(f"[estimate] input {path} or its JSON sidecar is missing")
    kind = io.read_json(io.sidecar(path)).get("kind")
    if kind == "pointset":
        _estimate_points(e, io.read_pointset(path), outdir, cfg["threads"])
    elif kind == "field":
        _estimate_field(e, io.read_field(path), outdir, cfg["threads"])
    else:
        raise ConfigError(f"[estimate] {path}: unsupported input kind {kind!r}")
    print(f"estimates written to {outdir}")
    return EXIT_OK


def run_verification(v: dict, seed: int, threads: int = 1) -> vf.ComparisonReport:
    model = v["model"]
    s = Seed(seed)
    if model == "poisson":
        tests = [Window.box(lo, hi) for lo, hi in v["test_sets"]]
        if any(C.dim != v["dim"] for C in tests):
            raise ConfigError("[verify] test_sets: dimension mismatch")
        return vf.verify_poisson(v["intensity"], v["dim"], v["radius"], tests, v["replicas"], s,
                                 v["n_sigma"], v["rel_tol"], threads)
    if model == "bernoulli":
        return vf.verify_bernoulli(v["p"], v["size"], v["dim"], v["kmax"], s, v["tol"],
                                   v["coef_tol"], v["grid"], threads)
    if model == "markov":
        return vf.verify_markov(v["a"], v["b"], v["size"], v["kmax"], v["replicas"], s,
                                v["n_sigma"])
    if model == "gaussian":
        return vf.verify_gaussian(v["rho"], v["size"], v["kmax"], v["replicas"], s, v["tol"])
    if model == "nu":
        return vf.verify_nu(v["nmax"], v["size"], v["kmax"], v["replicas"], s, v["n_sigma"])
    if model == "fibonacci":
        return vf.verify_fibonacci(v["length"], v["n_peaks"], v["freq_min"], v["freq_max"],
                                   v["reps"], s, v["position_tol"], v["intensity_rel_tol"],
                                   v["mark_p"], v["mark_replicas"], v["mark_min_rel_weight"],
                                   v["mark_rel_tol"])
    raise ConfigError(f"[verify] no oracle: model {model!r} has no closed-form theory in scope")


def _write_report(outdir: Path, rep: vf.ComparisonReport) -> None:
    rows = rep.rows
    with open(outdir / "report.csv", "w", newline="") as fh:
        fh.write("label,empirical,theoretical,tolerance,pass\n")
        for r in rows:
            fh.write(f"{r.label},{io.FLOAT_FMT % r.empirical},{io.FLOAT_FMT % r.theoretical},"
                     f"{io.FLOAT_FMT % r.tolerance},{int(r.passed)}\n")
    io.write_json(outdir / "report.json", rep.to_dict())


def cmd_verify(cfg, outdir: Path) -> int:
    rep = run_verification(cfg["verify"], cfg["seed"], cfg["threads"])
    _write_report(outdir, rep)
    print(rep.format())
    return EXIT_OK if rep.passed else EXIT_FAIL


def _splitter_from(c):
    E = np.array([[float(_quadratic(x)) for x in c["E"]]])
    d = E.shape[1]
    F = None
    if c["F"] is not None:
        F = np.array([[float(_quadratic(x)) for x in row] for row in c["F"]])
        if F.shape[1] != d:
            raise ConfigError("[cutproject] F vectors must have the dimension of E")
    try:
        sp = cp.Splitter.from_spans(E, F)
    except ValueError as exc:
        raise ConfigError(f"[cutproject] {exc}") from None
    if c["window"] == "shadow":
        if sp.dim_F != 1:
            raise ConfigError("[cutproject] window 'shadow' needs a one-dimensional F")
        # F-coordinates of the unit cube's vertices span its projection
        half = 0.5 * float(np.abs(sp.basis_F[0]).sum())
        W = Window.box([-half], [half])
    else:
        W = Window.box(c["window"]["lower"], c["window"]["upper"])
        if W.dim != sp.dim_F:
            raise ConfigError("[cutproject] window dimension differs from dim F")
    return sp, W


def cmd_cutproject(cfg, outdir: Path) -> int:
    c = cfg["cutproject"]
    sp, W = _splitter_from(c)
    if sp.dim_E != 1:
        raise ConfigError("[cutproject] E must be one-dimensional")
    try:
        independent = cp.direction_independent([_quadratic(x) for x in c["E"]])
    except ValueError:
        independent = None
    R = c["length"] / 2.0
    extent = Window.box([-R], [R])
    shift = c["shift"]
    if shift is not None and len(shift) != sp.dim:
        raise ConfigError("[cutproject] shift dimension differs from d")
    seed = Seed(cfg["seed"])
    keep = bernoulli_marks(c["mark_p"], seed.child(0)) if c["mark_p"] is not None else None
    full, _ = cp.model_set(sp, W, extent, shift)
    ps, _ = cp.model_set(sp, W, extent, shift, keep)
    _, xs = cp.lattice_points_in_slab(sp, W, extent, shift)
    lo = xs.min(axis=0) - 1 if len(xs) else np.zeros(sp.dim)
    slab = PointSet(xs, Window.box(lo, (xs.max(axis=0) if len(xs) else lo) + 1))
    injective, _ = cp.check_injectivity(slab, sp, W)
    io.write_pointset(outdir / "points.csv", ps, seed,
                      {"alpha": sp.alpha, "window_F": W.to_dict(),
                       "direction_independent": independent, "injective": injective,
                       "lattice_points_in_slab": int(len(full))})
    region = Window.box([c["freq_min"]], [np.nextafter(c["freq_max"], np.inf)])
    model = (comb_spectral_model(sp.dim) if c["mark_p"] is None
             else bernoulli_spectral_model(c["mark_p"], sp.dim))
    table = cp.bragg_peak_table(model, sp, W, region, c["reps"])
    io.write_bragg_table(outdir / "bragg.csv", table)
    if c["n_peaks"] > 0 and len(ps) > 0:
        pos, hts = find_peaks_1d(ps, R, c["freq_min"], c["freq_max"], c["n_peaks"])
        io._write_table(outdir / "peaks.csv", ["position", "height"], [pos, hts / (2 * R)],
                        [io.FLOAT_FMT] * 2)
    if c["freq_num"] > 0:
        n = c["freq_num"]
        dt = (c["freq_max"] - c["freq_min"]) / max(n - 1, 1)
        se = periodogram_line(ps, R, [c["freq_min"]], [dt], n)
        io.write_spectral_estimate(outdir / "periodogram.csv", se, {"radius": R})
    print(f"alpha={sp.alpha:.12g} |W|={W.volume():.12g} points={len(ps)} "
          f"injective={injective} direction_independent={independent}")
    return EXIT_OK


def cmd_report(cfg, outdir) -> int:
    src = Path(cfg["report"]["input"])
    path = src / "report.json" if src.is_dir() else src
    if not path.exists():
        raise ConfigError(f"[report] {path} not found")
    data = io.read_json(path)
    rep = vf.ComparisonReport(data["title"])
    for r in data["rows"]:
        rep.add(r["label"], r["empirical"], r["theoretical"], r["tolerance"])
    text = rep.format()
    print(text)
    if outdir is not None:
        (outdir / "report.txt").write_text(text + "\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


_COMMANDS = {"generate": cmd_generate, "estimate": cmd_estimate, "verify": cmd_verify,
             "cutproject": cmd_cutproject, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="palmdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"palmdiff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="worker thread bound")
        if name == "report":
            p.add_argument("input", nargs="?", help="verify output directory or report.json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        raw = {}
        if args.config:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        if args.command == "report" and getattr(args, "input", None):
            raw = dict(raw)
            raw["report"] = {"input": args.input}
        cfg = resolve_config(raw, args.command, args.seed, args.out, args.threads)
        outdir = Path(cfg["out"]) if cfg["out"] is not None else None
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            _write_resolved(outdir, args.command, cfg)
        return _COMMANDS[args.command](cfg, outdir)
    except (ConfigError, CoverageError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"palmdiff: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"palmdiff: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
