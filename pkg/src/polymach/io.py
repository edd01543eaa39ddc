"""Plain-text mesh and field formats, legacy ASCII VTK output, CSV helpers.

All floats are written with %.17g so that a write/read round trip is exact
for float64, which is what makes restarts and rerun comparisons bitwise.
"""

from __future__ import annotations

import csv

import numpy as np

from .mesh import Mesh, TAG_ID, mesh_from_polygons

FIELD_COLUMNS = ("rho", "wx", "wy", "rhok", "p")
_F = "%.17g"


# ---------------------------------------------------------------------------
# field checkpoints

def write_field(path, data, t=0.0, columns=FIELD_COLUMNS):
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError("field data must be (n_cells, n_columns)")
    with open(path, "w") as f:
        f.write("# polymach field v1\n")
        f.write(f"t {_F % t}\n")
        f.write("columns " + " ".join(columns) + "\n")
        f.write(f"n_cells {data.shape[0]}\n")
        for row in data:
            f.write(" ".join(_F % v for v in row) + "\n")


def read_field(path):
    with open(path) as f:
        head = f.readline()
        if "polymach field" not in head:
            raise ValueError(f"{path} is not a field file")
        t = float(f.readline().split()[1])
        columns = tuple(f.readline().split()[1:])
        n = int(f.readline().split()[1])
        data = np.loadtxt(f, ndmin=2)
    if data.shape != (n, len(columns)):
        raise ValueError(f"{path}: expected {(n, len(columns))}, got {data.shape}")
    return data, t, columns


# ---------------------------------------------------------------------------
# mesh text format

def write_mesh(path, mesh: Mesh):
    names = {v: k for k, v in TAG_ID.items()}
    with open(path, "w") as f:
        f.write("# polymach mesh v1\n")
        f.write("domain " + " ".join(_F % v for v in mesh.domain) + "\n")
        f.write(f"periodic {int(mesh.periodic[0])} {int(mesh.periodic[1])}\n")
        f.write(f"n_cells {mesh.n_cells}\n")
        for i in range(mesh.n_cells):
            poly = mesh.cell_poly(i)
            f.write(str(len(poly)) + " " +
                    " ".join(_F % v for v in poly.ravel()) + "\n")
        bnd = mesh.boundary_edges
        f.write(f"n_boundary_tags {len(bnd)}\n")
        for e in bnd:
            f.write(f"{e} {names[int(mesh.edge_tag[e])]}\n")


def read_mesh(path) -> Mesh:
    with open(path) as f:
        head = f.readline()
        if "polymach mesh" not in head:
            raise ValueError(f"{path} is not a mesh file")
        domain = tuple(float(v) for v in f.readline().split()[1:])
        periodic = tuple(bool(int(v)) for v in f.readline().split()[1:])
        nc = int(f.readline().split()[1])
        polys = []
        for _ in range(nc):
            parts = f.readline().split()
            nv = int(parts[0])
            polys.append(np.array(parts[1:], dtype=float).reshape(nv, 2))
        mesh = mesh_from_polygons(polys, domain, periodic)
        nb = int(f.readline().split()[1])
        for _ in range(nb):
            e, name = f.readline().split()
            mesh.edge_tag[int(e)] = TAG_ID[name]
    return mesh


# ---------------------------------------------------------------------------
# legacy ASCII VTK (polygon cells, duplicated ring points so periodic cells
# render in their own frame)

def write_vtk(path, mesh: Mesh, cell_data=None, title="polymach"):
    cell_data = cell_data or {}
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(title + "\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        npts = mesh.cell_vptr[-1]
        f.write(f"POINTS {npts} double\n")
        for x, y in mesh.cell_xy:
            f.write(f"{_F % x} {_F % y} 0\n")
        sizes = np.diff(mesh.cell_vptr)
        f.write(f"CELLS {mesh.n_cells} {int((sizes + 1).sum())}\n")
        for i in range(mesh.n_cells):
            ids = range(mesh.cell_vptr[i], mesh.cell_vptr[i + 1])
            f.write(str(sizes[i]) + " " + " ".join(map(str, ids)) + "\n")
        f.write(f"CELL_TYPES {mesh.n_cells}\n")
        f.write("7\n" * mesh.n_cells)
        if cell_data:
            f.write(f"CELL_DATA {mesh.n_cells}\n")
            for name, values in cell_data.items():
                values = np.asarray(values, dtype=float)
                if values.ndim == 2 and values.shape[1] == 2:
                    f.write(f"VECTORS {name} double\n")
                    for vx, vy in values:
                        f.write(f"{_F % vx} {_F % vy} 0\n")
                else:
                    f.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
                    for v in values:
                        f.write(_F % v + "\n")


def read_vtk(path):
    """Minimal reader for files produced by write_vtk: returns
    (points, polygons as index lists, {name: values})."""
    with open(path) as f:
        tokens = f.read().split()
    def grab(kw):
        return tokens.index(kw)
    i = grab("POINTS")
    npts = int(tokens[i + 1])
    vals = np.array(tokens[i + 3:i + 3 + 3 * npts], dtype=float).reshape(npts, 3)
    points = vals[:, :2]
    i = grab("CELLS")
    nc = int(tokens[i + 1])
    pos = i + 3
    polys = []
    for _ in range(nc):
        m = int(tokens[pos])
        polys.append([int(v) for v in tokens[pos + 1:pos + 1 + m]])
        pos += m + 1
    data = {}
    pos = 0
    while True:
        try:
            i = tokens.index("SCALARS", pos)
        except ValueError:
            break
        name = tokens[i + 1]
        start = i + 5                      # SCALARS name type LOOKUP_TABLE default
        data[name] = np.array(tokens[start:start + nc], dtype=float)
        pos = i + 1
    pos = 0
    while True:
        try:
            i = tokens.index("VECTORS", pos)
        except ValueError:
            break
        name = tokens[i + 1]
        vals = np.array(tokens[i + 3:i + 3 + 3 * nc], dtype=float).reshape(nc, 3)
        data[name] = vals[:, :2]
        pos = i + 1
    return points, polys, data


# ---------------------------------------------------------------------------
# CSV helpers

def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_F % v if isinstance(v, float) else v for v in row])


def read_csv(path):
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.array(rows)
