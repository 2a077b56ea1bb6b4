"""CSV/JSON readers and writers with atomic writes and lossless floats."""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .errors import ConfigError
from .solution import SolutionGrid

FLOAT_FMT = "%.17g"


def fmt(x):
    return FLOAT_FMT % float(x)


def atomic_write_text(path, text):
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _clean(obj):
    # numpy scalars/arrays to plain JSON; floats keep 17 digits via repr
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        return x
    return obj


def write_json(path, obj):
    return atomic_write_text(path, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------- solutions

def write_solution(path, sol, h_hash=None, u0_hash=None):
    """SolutionGrid CSV (q1[,q2],value) plus a JSON sidecar ``path + '.json'``."""
    names = [f"q{i + 1}" for i in range(sol.dim)]
    P = sol.points().reshape(-1, sol.dim)
    rows = [list(map(float, p)) + [float(v)] for p, v in zip(P, sol.values.reshape(-1))]
    atomic_write_text(path, _csv_text(names + ["value"], rows))
    side = {"t": sol.t, "solver": sol.provenance, "H_spec_hash": h_hash, "u0_spec_hash": u0_hash,
            "shape": list(sol.values.shape),
            "meta": {k: v for k, v in sol.meta.items() if not isinstance(v, np.ndarray)}}
    write_json(os.fspath(path) + ".json", side)
    return path


def read_solution(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        data = np.array([[float(x) for x in r] for r in rd])
    side = read_json(os.fspath(path) + ".json")
    dim = len(header) - 1
    if header[-1] != "value" or dim not in (1, 2):
        raise ConfigError(f"{path}: not a solution CSV")
    shape = tuple(side["shape"])
    vals = data[:, -1].reshape(shape)
    P = data[:, :dim].reshape(shape + (dim,))
    if dim == 1:
        axes = (P[:, 0],)
    else:
        axes = (P[:, 0, 0], P[0, :, 1])
    return SolutionGrid(float(side["t"]), axes, vals, side["solver"], side.get("meta") or {})


# ---------------------------------------------------------------- fronts

def front_rows(front):
    pts = front.points()
    q = np.asarray(pts["q"]).reshape(len(pts["S"]), -1)
    p = np.asarray(pts["p"]).reshape(len(pts["S"]), -1)
    q0 = np.asarray(pts["q0"]).reshape(len(pts["S"]), -1)
    rows = []
    for i in range(len(pts["S"])):
        par = pts["param"][i]
        rows.append([float(front.t)] + list(map(float, q[i])) + [float(pts["S"][i])]
                    + list(map(float, p[i])) + list(map(float, q0[i]))
                    + [str(pts["source"][i]), "" if not np.isfinite(par) else float(par)])
    return rows


def front_header(dim):
    if dim == 1:
        return ["t", "q1", "S", "p1", "q0_1", "source", "param"]
    return ["t", "q1", "q2", "S", "p1", "p2", "q0_1", "q0_2", "source", "param"]


def write_front(path, front):
    return atomic_write_text(path, _csv_text(front_header(front.dim), front_rows(front)))


def read_front(path):
    """Front CSV as a dict of columns (numeric columns as float arrays)."""
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        rows = list(rd)
    if not rows:
        raise ConfigError(f"{path}: empty front file")
    out = {}
    for k in rows[0]:
        col = [r[k] for r in rows]
        if k == "source":
            out[k] = np.array(col, dtype=object)
        else:
            out[k] = np.array([float(x) if x != "" else np.nan for x in col])
    return out


def write_section(path, section, q):
    S, br, _ = section.evaluate(q)
    src = section.sources(br)
    rows = [[float(a), float(b), int(c), s] for a, b, c, s in zip(q, S, br, src)]
    return atomic_write_text(path, _csv_text(["q", "S", "branch", "source"], rows))


def read_section(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {"q": np.array([float(r["q"]) for r in rows]), "S": np.array([float(r["S"]) for r in rows]),
            "branch": np.array([int(r["branch"]) for r in rows]),
            "source": np.array([r["source"] for r in rows], dtype=object)}


def write_points(path, X):
    """PointSet CSV: one point per row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return atomic_write_text(path, _csv_text([f"x{i + 1}" for i in range(X.shape[1])], X.tolist()))


def read_points(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
