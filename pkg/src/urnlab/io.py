"""File formats: trajectory CSV/JSON, phase tables, provenance sidecars, matrix files.

Every float is written with 17 significant digits so values round-trip
exactly. Files are written to a temporary name in the target directory and
renamed into place.
"""

from __future__ import annotations

import json
import math
import os
import platform
import sys
import tempfile
from pathlib import Path

import numpy as np

from .urn import ModelSpec, TrajectoryRecord, UrnState

FLOAT_FORMAT = ".17g"
PROVENANCE_SUFFIX = ".provenance.json"


class MatrixFileError(ValueError):
    """Malformed interaction-matrix file; the message names the row and column."""


def fmt_float(x):
    s = format(float(x), FLOAT_FORMAT)
    # keep integral values recognisable as floats
    if math.isfinite(x) and not any(c in s for c in ".en"):
        s += ".0"
    return s


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``.

    The parent directory must already exist; nothing is left behind on failure.
    """
    path = Path(path)
    parent = path.parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")
    fd, tmp = tempfile.mkstemp(dir=parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


# ---------------------------------------------------------------- JSON


def _to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        # short lists of scalars stay on one line
        if all(not isinstance(v, (list, dict)) for v in obj):
            parts = []
            for v in obj:
                _emit(v, indent, level + 1, parts)
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for k, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for k, (key, v) in enumerate(items):
            out.append(pad + json.dumps(key, ensure_ascii=False) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(end + "}")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float printed to 17 significant digits (non-finite as null)."""
    out = []
    _emit(_to_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def write_json(path, obj):
    return atomic_write(path, dumps(obj))


# ---------------------------------------------------------------- trajectories


def trajectory_csv(rec: TrajectoryRecord):
    d = rec.points.shape[1]
    lines = ["step," + ",".join(f"x{i + 1}" for i in range(d))]
    for t, x in zip(rec.times, rec.points):
        lines.append(str(int(t)) + "," + ",".join(fmt_float(v) for v in x))
    return "\n".join(lines) + "\n"


def trajectory_dict(rec: TrajectoryRecord):
    return {
        "seed": rec.seed,
        "index": rec.index,
        "stream_seed": rec.seed ^ rec.index,
        "thinning": rec.thinning,
        "model": rec.model.to_dict(),
        "final_state": {
            "counts": [int(c) for c in rec.final_state.counts],
            "n0": rec.final_state.n0,
            "n": rec.final_state.n,
        },
        "times": [int(t) for t in rec.times],
        "points": rec.points,
    }


def write_trajectory(path, rec: TrajectoryRecord, fmt="csv"):
    if fmt == "csv":
        return atomic_write(path, trajectory_csv(rec))
    if fmt == "json":
        return write_json(path, trajectory_dict(rec))
    raise ValueError(f"unknown trajectory format {fmt!r}")


def read_trajectory_csv(path):
    """Return ``(steps, points)`` from a trajectory CSV."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "step":
            raise ValueError(f"{path}: expected a 'step,x1,...' header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0].astype(np.int64), data[:, 1:]


def read_trajectory_json(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    model = ModelSpec.from_dict(data["model"])
    fs = data["final_state"]
    return TrajectoryRecord(
        times=np.asarray(data["times"], dtype=np.int64),
        points=np.asarray(data["points"], dtype=float),
        seed=data["seed"],
        model=model,
        final_state=UrnState(np.asarray(fs["counts"], dtype=np.int64), fs["n0"], fs["n"]),
        thinning=data["thinning"],
        index=data["index"],
    )


# ---------------------------------------------------------------- phase tables


def phase_csv(grid):
    with_emp = bool(grid.empirical)
    lines = ["a,beta,label" + (",empirical" if with_emp else "")]
    for a, b, lab, emp in grid.rows():
        row = f"{fmt_float(a)},{fmt_float(b)},{lab}"
        if with_emp:
            row += "," + ("" if emp is None else ("agree" if emp else "disagree"))
        lines.append(row)
    return "\n".join(lines) + "\n"


def curves_csv(rows):
    lines = ["a,beta,curve_id"]
    lines.extend(f"{fmt_float(a)},{fmt_float(b)},{cid}" for a, b, cid in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- provenance


def provenance(config: dict, seeds=None, files=None):
    from . import __version__

    return {
        "tool": "urnlab",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": list(sys.argv),
        "config": config,
        "seeds": list(seeds) if seeds is not None else None,
        "files": [str(Path(f).name) for f in files] if files else [],
    }


def write_provenance(path, config: dict, seeds=None, files=None):
    """Sidecar next to ``path`` named ``<path>.provenance.json``."""
    path = Path(path)
    return write_json(path.with_name(path.name + PROVENANCE_SUFFIX), provenance(config, seeds, files))


# ---------------------------------------------------------------- matrix files


def parse_matrix(text, source="<matrix>"):
    """Parse a whitespace-separated square matrix of nonnegative finite numbers.

    Blank lines and ``#`` comments are ignored. Errors name the 1-based row
    and column of the offending entry.
    """
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        r = len(rows) + 1
        values = []
        for c, tok in enumerate(line.split(), start=1):
            try:
                v = float(tok)
            except ValueError:
                raise MatrixFileError(f"{source}: row {r}, column {c}: {tok!r} is not a number") from None
            if not math.isfinite(v):
                raise MatrixFileError(f"{source}: row {r}, column {c}: {tok!r} is not finite")
            if v < 0:
                raise MatrixFileError(f"{source}: row {r}, column {c}: negative entry {tok}")
            values.append(v)
        if rows and len(values) != len(rows[0]):
            raise MatrixFileError(f"{source}: row {r} has {len(values)} columns, expected {len(rows[0])}")
        rows.append(values)
    if not rows:
        raise MatrixFileError(f"{source}: no matrix rows found")
    if len(rows) != len(rows[0]):
        raise MatrixFileError(f"{source}: matrix is {len(rows)}x{len(rows[0])}, expected square")
    if len(rows) < 2:
        raise MatrixFileError(f"{source}: need at least two colours")
    for r, values in enumerate(rows, start=1):
        if not any(v > 0 for v in values):
            raise MatrixFileError(f"{source}: row {r} has no positive entry")
    return np.array(rows)


def read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read(), source=str(path))
