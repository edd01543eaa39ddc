"""Error norms, solution sampling, and benchmark artifacts.

Everything here measures or exports a finished solution: L2/Linf norms
against an exact evaluator on the mesh's volume quadrature, point sampling
of the reconstruction for 1D cuts, VTK field dumps, mesh-refinement studies,
and small signal helpers (jump locations, vorticity peaks) used by the shock
and shear benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .. import io
from ..convective import RHO, WX, WY, RK, P
from ..mesh import Mesh
from ..timeloop import Solver, run_case

VARIABLES = ("rho", "u", "v", "p")


# ---------------------------------------------------------------------------
# point location

class CellLocator:
    """Maps points to the Voronoi cells containing them.

    Candidate cells come from a barycenter KD-tree (with periodic images when
    the mesh wraps); the winner is confirmed by an exact point-in-polygon
    test on the convex cell, falling back to the nearest barycenter for
    points that graze the boundary between cells.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        xmin, xmax, ymin, ymax = mesh.domain
        sx = [0.0, xmax - xmin, xmin - xmax] if mesh.periodic[0] else [0.0]
        sy = [0.0, ymax - ymin, ymin - ymax] if mesh.periodic[1] else [0.0]
        self.shifts = np.array([(dx, dy) for dx in sx for dy in sy])
        pts = np.concatenate([mesh.cell_bary + s for s in self.shifts])
        self.tree = cKDTree(pts)
        self._polys = [mesh.cell_poly(i) for i in range(mesh.n_cells)]

    def _inside(self, cell: int, q) -> bool:
        v = self._polys[cell]
        tol = 1e-9 * self.mesh.cell_h[cell] ** 2
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * (q[1] - v[:, 1]) - e[:, 1] * (q[0] - v[:, 0])
        return bool(np.all(cross >= -tol))

    def locate(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(12, self.tree.n)
        _, idx = self.tree.query(points, k=k)
        idx = np.atleast_2d(idx)
        nc = self.mesh.n_cells
        out = np.empty(len(points), dtype=int)
        for i, q in enumerate(points):
            found = -1
            for j in idx[i]:
                cell = int(j) % nc
                if self._inside(cell, q - self.shifts[int(j) // nc]):
                    found = cell
                    break
            out[i] = found if found >= 0 else int(idx[i][0]) % nc
        return out


def primitives_at(solver: Solver, fields, points, cells=None) -> np.ndarray:
    """Reconstructed (rho, u, v, p) at arbitrary points (n, 2)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if cells is None:
        cells = CellLocator(solver.mesh).locate(points)
    coeffs = solver.recon.reconstruct(np.asarray(fields, dtype=float))
    vals = solver.recon.eval_cells(coeffs, cells, points)
    out = np.empty((len(points), 4))
    out[:, 0] = vals[:, RHO]
    out[:, 1] = vals[:, WX] / vals[:, RHO]
    out[:, 2] = vals[:, WY] / vals[:, RHO]
    out[:, 3] = vals[:, P]
    return out


# ---------------------------------------------------------------------------
# error norms

@dataclass
class ErrorNorms:
    """Absolute norms per primitive variable (keys rho, u, v, p)."""
    l2: dict
    linf: dict

    def __str__(self):
        return "  ".join(f"{v}: L2 {self.l2[v]:.4e} Linf {self.linf[v]:.4e}"
                         for v in VARIABLES)


def _quad_primitives(solver: Solver, fields) -> np.ndarray:
    coeffs = solver.recon.reconstruct(np.asarray(fields, dtype=float))
    vals = solver.recon.volume_values(coeffs)
    out = np.empty((len(vals), 4))
    out[:, 0] = vals[:, RHO]
    out[:, 1] = vals[:, WX] / vals[:, RHO]
    out[:, 2] = vals[:, WY] / vals[:, RHO]
    out[:, 3] = vals[:, P]
    return out


def error_norms(solver: Solver, fields, exact, t: float) -> ErrorNorms:
    """L2 and Linf of (reconstruction - exact) over the volume quadrature.

    The L2 norm is absolute: sqrt(sum_q w_q diff_q^2) over the whole domain.
    `exact` is any object with evaluate(points, t) -> (n, 4) primitives.
    """
    mesh = solver.mesh
    num = _quad_primitives(solver, fields)
    ex = exact.evaluate(mesh.vol_qx, t)
    diff = num - ex
    w = mesh.vol_qw
    l2 = {v: float(np.sqrt(w @ diff[:, c] ** 2))
          for c, v in enumerate(VARIABLES)}
    linf = {v: float(np.max(np.abs(diff[:, c])))
            for c, v in enumerate(VARIABLES)}
    return ErrorNorms(l2=l2, linf=linf)


def exact_cell_means(mesh: Mesh, exact, t: float) -> np.ndarray:
    """Quadrature cell means (n_cells, 4) of an exact primitive field."""
    vals = exact.evaluate(mesh.vol_qx, t)
    sums = np.add.reduceat(vals * mesh.vol_qw[:, None],
                           mesh.vol_qptr[:-1], axis=0)
    return sums / mesh.cell_area[:, None]


def l1_cell_error(solver: Solver, fields, exact, t: float,
                  variable: str = "rho") -> float:
    """Area-weighted L1 distance between cell means and exact cell means."""
    c = VARIABLES.index(variable)
    mesh = solver.mesh
    Q = np.asarray(fields, dtype=float)
    num = {"rho": Q[:, RHO], "u": Q[:, WX] / Q[:, RHO],
           "v": Q[:, WY] / Q[:, RHO], "p": Q[:, P]}[variable]
    ex = exact_cell_means(mesh, exact, t)[:, c]
    return float(mesh.cell_area @ np.abs(num - ex))


# ---------------------------------------------------------------------------
# mesh-refinement studies

@dataclass
class ConvergenceTable:
    """Errors and observed orders over a mesh sequence (coarse to fine)."""
    h: list
    l2: dict            # variable -> list of errors
    rates: dict         # variable -> list of len(h) - 1 observed orders
    norms: list         # full ErrorNorms per mesh

    def write_csv(self, path):
        header = ["h"]
        for v in VARIABLES:
            header += [f"l2_{v}", f"rate_{v}"]
        rows = []
        for i, h in enumerate(self.h):
            row = [h]
            for v in VARIABLES:
                row += [self.l2[v][i],
                        self.rates[v][i - 1] if i else float("nan")]
            rows.append(row)
        io.write_csv(path, header, rows)

    def __str__(self):
        lines = ["      h  " + "  ".join(f"{v:>10s} (rate)" for v in VARIABLES)]
        for i, h in enumerate(self.h):
            cells = []
            for v in VARIABLES:
                r = f"{self.rates[v][i - 1]:5.2f}" if i else "  -  "
                cells.append(f"{self.l2[v][i]:10.4e} ({r})")
            lines.append(f"{h:7.4f}  " + "  ".join(cells))
        return "\n".join(lines)


def observed_rates(h, errors):
    """log(e1/e2) / log(h1/h2) between successive meshes."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))


def convergence_study(builder, nx_values, csv_path=None,
                      **builder_kw) -> ConvergenceTable:
    """Run one case on a refinement sequence and tabulate L2 errors/orders.

    builder(nx=..., **builder_kw) must return a CaseConfig carrying an exact
    solution; the mesh label is h = 1/nx.
    """
    hs, norms = [], []
    for nx in nx_values:
        cfg = builder(nx=nx, **builder_kw)
        if cfg.exact is None:
            raise ValueError(f"case {cfg.name} has no exact solution")
        solver, fields0, controls, pair = cfg.build()
        art = run_case(solver, fields0, controls, pair)
        if not art.completed:
            raise RuntimeError(f"{cfg.name} at nx = {nx} stopped early "
                               f"(t = {art.t[-1]:.6g})")
        norms.append(error_norms(solver, art.field, cfg.exact,
                                 float(art.t[-1])))
        hs.append(1.0 / nx)
    l2 = {v: [n.l2[v] for n in norms] for v in VARIABLES}
    rates = {v: observed_rates(hs, l2[v]) for v in VARIABLES}
    table = ConvergenceTable(h=hs, l2=l2, rates=rates, norms=norms)
    if csv_path is not None:
        table.write_csv(csv_path)
    return table


# ---------------------------------------------------------------------------
# artifacts

def export_vtk(fields, target, path):
    """Legacy-ASCII VTK dump of cell data (density, velocity, pressure,
    kinetic energy); `target` is a Solver or a Mesh."""
    mesh = target.mesh if hasattr(target, "mesh") else target
    Q = np.asarray(fields, dtype=float)
    io.write_vtk(path, mesh, cell_data={
        "rho": Q[:, RHO],
        "velocity": Q[:, WX:WY + 1] / Q[:, [RHO]],
        "pressure": Q[:, P],
        "kinetic_energy": Q[:, RK],
    })
    return Path(path)


def sample_cut(fields, solver: Solver, start, end, n: int = 200):
    """(points, primitives) on n equidistant points from start to end."""
    if n < 2:
        raise ValueError("a cut needs at least 2 points")
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    s = np.linspace(0.0, 1.0, n)[:, None]
    points = (1.0 - s) * start + s * end
    return points, primitives_at(solver, fields, points)


def export_cut(fields, solver: Solver, start, end, n, path):
    """CSV of the reconstruction sampled on a straight line (columns x, y,
    rho, u, v, p; exactly n rows)."""
    points, prims = sample_cut(fields, solver, start, end, n)
    io.write_csv(path, ("x", "y", "rho", "u", "v", "p"),
                 np.hstack([points, prims]))
    return Path(path)


# ---------------------------------------------------------------------------
# signal helpers for shock and shear diagnostics

def first_crossing(x, f, level, rising=None) -> float:
    """Linearly interpolated first x where f crosses `level`."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    d = f - level
    for i in range(len(x) - 1):
        if d[i] == 0.0:
            return float(x[i])
        if d[i] * d[i + 1] < 0.0:
            if rising is not None and (d[i + 1] > d[i]) != rising:
                continue
            return float(x[i] - d[i] * (x[i + 1] - x[i]) / (d[i + 1] - d[i]))
    raise ValueError(f"no crossing of {level} found")


def steepest_point(x, f) -> float:
    """Midpoint of the interval with the largest |df/dx| (shock locator)."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    slope = np.abs(np.diff(f) / np.diff(x))
    i = int(np.argmax(slope))
    return float(0.5 * (x[i] + x[i + 1]))


def cell_vorticity(solver: Solver, fields) -> np.ndarray:
    """Vorticity dv/dx - du/dy of the reconstructed velocity at barycenters."""
    Q = np.asarray(fields, dtype=float)
    mesh = solver.mesh
    coeffs = solver.recon.reconstruct(Q[:, [RHO, WX, WY]])
    out = np.empty(mesh.n_cells)
    basis = solver.recon.basis
    for i in range(mesh.n_cells):
        xy = mesh.cell_bary[i][None, :]
        vals = basis.eval(i, xy)[0] @ coeffs[i]          # (3,)
        grads = np.einsum("lg,lf->fg", basis.eval_gradient(i, xy)[0],
                          coeffs[i])                     # (3, 2)
        rho, wx, wy = vals
        gr, gwx, gwy = grads
        dudy = (gwx[1] - (wx / rho) * gr[1]) / rho
        dvdx = (gwy[0] - (wy / rho) * gr[0]) / rho
        out[i] = dvdx - dudy
    return out


def peak_cells(mesh: Mesh, values, fraction: float = 0.5,
               min_sep: float = 0.2) -> list:
    """Barycenters of well-separated |value| peaks above fraction * max."""
    v = np.abs(np.asarray(values, dtype=float))
    order = np.argsort(v)[::-1]
    cut = fraction * v[order[0]]
    peaks = []
    for i in order:
        if v[i] < cut:
            break
        q = mesh.cell_bary[i]
        if all(np.hypot(*(q - p)) >= min_sep for p in peaks):
            peaks.append(q)
    return peaks
