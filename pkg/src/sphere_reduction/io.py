"""CSV/JSON readers and writers. Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import column_names, dimension_from_pairs
from .geodesic import GeodesicTrajectory
from .liepoisson import ReducedTrajectory


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, dump_json(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- geodesic trajectories ---------------------------------------------------------


def geodesic_csv(traj: GeodesicTrajectory, momentum: bool = True) -> str:
    n = traj.n
    header = ["t"] + [f"x_{i}" for i in range(n)] + [f"v_{i}" for i in range(n)]
    cols = [traj.t[:, None], traj.x, traj.v]
    if momentum:
        header += column_names(n)
        cols.append(traj.momenta())
    return _csv_text(header, np.hstack(cols))


def write_geodesic_csv(path, traj: GeodesicTrajectory, momentum: bool = True) -> None:
    atomic_write(path, geodesic_csv(traj, momentum))


def _read_columns(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r], dtype=float)
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return header, data


def load_geodesic_csv(path) -> GeodesicTrajectory:
    header, data = _read_columns(path)
    xs = [k for k, h in enumerate(header) if h.startswith("x_")]
    vs = [k for k, h in enumerate(header) if h.startswith("v_")]
    if header[0] != "t" or not xs or len(xs) != len(vs):
        raise ValueError(f"{path}: not a geodesic trajectory file")
    return GeodesicTrajectory(data[:, 0], data[:, xs], data[:, vs])


# -- reduced trajectories ------------------------------------------------------------


def reduced_csv(traj: ReducedTrajectory) -> str:
    header = ["t"] + column_names(traj.n) + ["H", "l2", "plucker_max"]
    rows = np.hstack([traj.t[:, None], traj.comps, traj.H[:, None], traj.l2[:, None], traj.plucker_max[:, None]])
    return _csv_text(header, rows)


def write_reduced_csv(path, traj: ReducedTrajectory) -> None:
    atomic_write(path, reduced_csv(traj))


def load_reduced_csv(path) -> ReducedTrajectory:
    header, data = _read_columns(path)
    lk = [k for k, h in enumerate(header) if h.startswith("l_")]
    if header[0] != "t" or not lk:
        raise ValueError(f"{path}: not a reduced trajectory file")
    n = dimension_from_pairs(len(lk))
    col = {h: k for k, h in enumerate(header)}
    return ReducedTrajectory(
        n,
        data[:, 0],
        data[:, lk],
        data[:, col["H"]],
        data[:, col["l2"]],
        data[:, col["plucker_max"]],
    )


# -- scans and sections ------------------------------------------------------------------


def scan_csv(rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["e1", "e2", "e3", "type"])
    for a, b, c, t in rows:
        w.writerow([fmt(a), fmt(b), fmt(c), t])
    return buf.getvalue()


def load_scan_csv(path) -> list[tuple[float, float, float, str]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["e1", "e2", "e3", "type"]:
            raise ValueError(f"{path}: not a scan file")
        return [(float(a), float(b), float(c), t) for a, b, c, t in r]


def section_csv(section, n: int) -> str:
    header = ["t"] + column_names(n)
    return _csv_text(header, np.hstack([section.t[:, None], section.points]))


def load_section_csv(path):
    header, data = _read_columns(path)
    if header[0] != "t":
        raise ValueError(f"{path}: not a section file")
    return data[:, 0], data[:, 1:]
