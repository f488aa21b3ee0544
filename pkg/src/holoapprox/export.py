"""
Writers for solution tables, coefficient dumps and surface meshes.

Column layouts are fixed:

* core table: ``x1..xm, delta, h1..hn``
* tube table: ``x1..xm, y, z1..zk, f1_1..f1_n``

The OBJ surface is the graph ``(x, y, f1(x, y))`` over the strip
``y = delta(x) + s, |s| <= width`` with quad faces, followed by the
reference polyline ``(x, 0, x)``.
"""

import csv
import json

import numpy as np

from . import expr
from .jetmodel import Grid, as_array

__all__ = [
    "coefficient_dump",
    "core_table",
    "mesh_arrays",
    "tube_table",
    "write_csv",
    "write_json",
    "write_obj",
]


def core_table(pair, resolution):
    """Rows ``x1..xm, delta, h1..hn`` on the cube grid; returns ``(header, rows)``."""
    d = pair.dims
    grid = Grid.cube(d.m, resolution)
    x = grid.coordinates()
    shape = x[0].shape
    vals = pair(x)
    cols = list(x) + [as_array(v, shape) for v in vals]
    header = [f"x{i + 1}" for i in range(d.m)] + ["delta"] + [f"h{i + 1}" for i in range(d.n)]
    return header, np.column_stack(cols)


def tube_table(ext, resolution, width, offsets):
    """
    Rows ``x1..xm, y, z1..zk, f1_1..f1_n`` at ``(x, delta(x) + s, z)`` with
    ``s`` and every ``z_l`` on ``offsets`` points of ``[-width, width]``.
    """
    d = ext.section.dims
    grid = Grid.cube(d.m, resolution)
    x = grid.coordinates()
    axis = np.linspace(-width, width, offsets) if width > 0 else np.zeros(1)
    fiber = [g.ravel() for g in np.meshgrid(*([axis] * (1 + d.k)), indexing="ij")]
    s = fiber[0][None, :]
    z = [f[None, :] for f in fiber[1:]]
    y, vals, _ = ext.tube_jet(x, s, z)
    shape = y.shape
    cols = [np.broadcast_to(xi[:, None], shape) for xi in x] + [y]
    cols += [np.broadcast_to(t, shape) for t in z] + [vals[i] for i in range(d.n)]
    header = (
        [f"x{i + 1}" for i in range(d.m)]
        + ["y"]
        + [f"z{i + 1}" for i in range(d.k)]
        + [f"f1_{i + 1}" for i in range(d.n)]
    )
    return header, np.column_stack([c.ravel() for c in cols])


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(plain(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def plain(obj):
    """JSON-ready copy: numpy scalars and arrays unpacked, non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _poly_dict(p):
    return {
        "c0": float(np.asarray(p.c0).ravel()[0]),
        "cos": [float(np.asarray(c).ravel()[0]) for c in p.cos_],
        "sin": [float(np.asarray(c).ravel()[0]) for c in p.sin_],
    }


def coefficient_dump(section, eps, pair, samples=3):
    """
    Closed-form description of the solution: the expressions of sigma and,
    per corrugated direction, the frequency, loop parameters and the loop
    polynomials at a few sample points of the cube.  Each step is

        F <- F + (1/N) int_0^{N x_j} (gamma_x(s) - avg gamma_x) ds
    """
    d = section.dims
    dirs = []
    loops = pair.record.get("loops", {})
    for rec in pair.record.get("directions", []):
        j = rec["direction"] - 1
        entry = {
            "direction": rec["direction"],
            "N": rec["N"],
            "loop": {k: v for k, v in rec["loop"].items() if np.isscalar(v)},
            "residual": rec["residual"],
            "residual_own": rec["residual_own"],
            "residual_cross": rec["residual_cross"],
            "displacement": rec["displacement"],
            "displacement_bound": rec["displacement_bound"],
        }
        loop = loops.get(j)
        if loop is not None:
            pts = []
            axis = np.linspace(0.0, 1.0, samples)
            for x in np.array(np.meshgrid(*([axis] * d.m), indexing="ij")).reshape(d.m, -1).T:
                polys = loop.coefficients([float(v) for v in x])
                pts.append({"x": x.tolist(), "components": [_poly_dict(p) for p in polys]})
            entry["loop_samples"] = pts
        dirs.append(entry)
    return {
        "schema": "holoapprox.coefficients/1",
        "dims": {"m": d.m, "k": d.k, "n": d.n},
        "eps": float(eps),
        "f": [expr.pretty(e) for e in section.f],
        "phi": [[expr.pretty(e) for e in row] for row in section.phi],
        "step": "F <- F + (1/N) * int_0^(N x_j) (gamma_x(s) - mean gamma_x) ds",
        "loop_form": "c0 + sum_l cos[l] cos(2 pi l t) + sin[l] sin(2 pi l t); components (delta, h1..hn)",
        "directions": dirs,
    }


def mesh_arrays(ext, resolution, width, rows):
    """Vertex array ``(rows, resolution, 3)`` of the strip graph (m = k = 0, n = 1)."""
    x = np.linspace(0.0, 1.0, int(resolution))
    s = np.linspace(-width, width, int(rows)) if width > 0 and rows > 1 else np.zeros(1)
    y, vals, _ = ext.tube_jet([x], s[None, :], [])
    X = np.broadcast_to(x[:, None], y.shape)
    return np.stack([X.T, y.T, vals[0].T], axis=-1)


def write_obj(path, verts, reference=None):
    """
    OBJ with ``v`` records row by row, quad ``f`` records (or an ``l``
    polyline when the strip has one row), and an optional reference polyline.
    """
    R, C, _ = verts.shape
    with open(path, "w") as fh:
        fh.write("# graph of f1 over the strip around the deformed cube\n")
        fh.write("o f1\n")
        for v in verts.reshape(-1, 3).tolist():
            fh.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        if R > 1:
            for r in range(R - 1):
                for c in range(C - 1):
                    a = r * C + c + 1
                    fh.write(f"f {a} {a + 1} {a + C + 1} {a + C}\n")
        else:
            fh.write("l " + " ".join(str(i + 1) for i in range(C)) + "\n")
        if reference is not None:
            off = R * C
            fh.write("o reference\n")
            for v in np.asarray(reference, dtype=float).tolist():
                fh.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
            fh.write("l " + " ".join(str(off + i + 1) for i in range(len(reference))) + "\n")


def read_obj_vertices(path):
    """Vertices per object name, for checks."""
    out, name = {}, None
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "o":
                name = parts[1]
                out[name] = []
            elif parts[0] == "v":
                out.setdefault(name, []).append([float(t) for t in parts[1:4]])
    return {k: np.array(v) for k, v in out.items()}
