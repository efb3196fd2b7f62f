"""CSV + JSON-sidecar serialization of measures, point sets, fields and estimates.

Floats are written with ``%.17g`` so files round-trip exactly and identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .estimators import ConvergenceReport, SpectralEstimate
from .generators import BinaryField
from .measure import AtomicMeasure, DEFAULT_MERGE_TOL
from .pointset import PointSet, Window

FLOAT_FMT = "%.17g"


def sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _write_table(path, header, columns, fmts) -> None:
    n = len(columns[0]) if columns else 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(f % c[i] for f, c in zip(fmts, columns)) + "\n")


def _read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return header, data


def _columns(data):
    return [data[:, j] for j in range(data.shape[1])]


def _check_header(path, header, expected):
    if header != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}")


# -- measures ----------------------------------------------------------------

def write_measure(path, m: AtomicMeasure) -> None:
    d = m.dim
    header = [f"loc_{i + 1}" for i in range(d)] + ["weight"]
    cols = _columns(m.locations) + [m.weights]
    _write_table(path, header, cols, [FLOAT_FMT] * (d + 1))


def read_measure(path, merge_tol=DEFAULT_MERGE_TOL) -> AtomicMeasure:
    header, data = _read_table(path)
    d = len(header) - 1
    _check_header(path, header, [f"loc_{i + 1}" for i in range(d)] + ["weight"])
    return AtomicMeasure(data[:, :d], data[:, d], merge_tol)


# -- point sets --------------------------------------------------------------

def write_pointset(path, ps: PointSet, seed=None, meta=None) -> None:
    d = ps.dim
    _write_table(path, [f"x_{i + 1}" for i in range(d)], _columns(ps.points), [FLOAT_FMT] * d)
    info = {"kind": "pointset", "dim": d, "window": ps.window.to_dict(),
            "seed": None if seed is None else seed.to_dict()}
    info.update(meta or {})
    write_json(sidecar(path), info)


def read_pointset(path) -> PointSet:
    info = read_json(sidecar(path))
    if info.get("kind") != "pointset":
        raise ValueError(f"{path}: sidecar does not describe a point set")
    header, data = _read_table(path)
    _check_header(path, header, [f"x_{i + 1}" for i in range(info["dim"])])
    return PointSet(data, Window.from_dict(info["window"]))


# -- binary fields -----------------------------------------------------------

def write_field(path, bf: BinaryField, seed=None) -> None:
    d = bf.dim
    sites = np.indices(bf.values.shape).reshape(d, -1).T + bf.lower
    header = [f"k_{i + 1}" for i in range(d)] + ["value"]
    cols = _columns(sites) + [bf.values.ravel()]
    _write_table(path, header, cols, ["%d"] * (d + 1))
    write_json(sidecar(path), {"kind": "field", "dim": d, "lower": bf.lower.tolist(),
                               "shape": list(bf.values.shape), "model": bf.model,
                               "seed": None if seed is None else seed.to_dict()})


def read_field(path) -> BinaryField:
    info = read_json(sidecar(path))
    if info.get("kind") != "field":
        raise ValueError(f"{path}: sidecar does not describe a binary field")
    header, data = _read_table(path)
    d = info["dim"]
    _check_header(path, header, [f"k_{i + 1}" for i in range(d)] + ["value"])
    lower = np.asarray(info["lower"], dtype=np.int64)
    shape = tuple(info["shape"])
    values = np.zeros(shape, dtype=np.uint8)
    idx = data[:, :d].astype(np.int64) - lower
    values[tuple(idx.T)] = data[:, d].astype(np.uint8)
    return BinaryField(lower, values, info.get("model", {}))


# -- estimates ---------------------------------------------------------------

def write_spectral_estimate(path, se: SpectralEstimate, meta=None) -> None:
    d = se.freqs.shape[1]
    header = ["frequency"] if d == 1 else [f"frequency_{i + 1}" for i in range(d)]
    _write_table(path, header + ["value"], _columns(se.freqs) + [se.values], [FLOAT_FMT] * (d + 1))
    info = {"kind": "periodogram", "norm": se.norm}
    info.update(meta or {})
    write_json(sidecar(path), info)


def read_spectral_estimate(path) -> SpectralEstimate:
    info = read_json(sidecar(path))
    _, data = _read_table(path)
    return SpectralEstimate(data[:, :-1], data[:, -1], info["norm"])


def write_convergence(path, rep: ConvergenceReport) -> None:
    n_c = rep.estimates.shape[1]
    labels = list(rep.labels) or [f"C{j + 1}" for j in range(n_c)]
    header = ["radius"] + [f"estimate_{l}" for l in labels] + [f"stderr_{l}" for l in labels]
    cols = [rep.radii] + _columns(rep.estimates) + _columns(rep.spread)
    _write_table(path, header, cols, [FLOAT_FMT] * len(header))
    write_json(sidecar(path), {"kind": "convergence", "labels": labels,
                               "cauchy_gap": np.asarray(rep.cauchy_gap).tolist(),
                               "expected_gap": np.asarray(rep.expected_gap).tolist(),
                               "converged": rep.converged})


def write_bragg_table(path, table) -> None:
    e = table.positions.shape[1]
    d = table.ks.shape[1]
    header = (["position"] if e == 1 else [f"position_{i + 1}" for i in range(e)])
    header += ["weight"] + [f"k_{i + 1}" for i in range(d)]
    cols = _columns(table.positions) + [table.weights] + _columns(table.ks)
    _write_table(path, header, cols, [FLOAT_FMT] * (e + 1) + ["%d"] * d)
