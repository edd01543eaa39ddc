"""Polygonal Voronoi tessellations of rectangular domains.

Cells are built by clipping half-planes (perpendicular bisectors) against the
domain rectangle, with a KD-tree limiting the candidate set.  Periodic axes are
handled by seed images: a cell near a periodic boundary extends past the chart
rectangle and the crossing edge is stored once, as an ordinary two-sided edge
carrying the translation that maps owner-frame coordinates into the neighbor's
frame.  The union of cells always tiles one fundamental domain.

Geometry conventions: polygons are CCW, edge normals point outward from the
owner cell, and the characteristic cell size is h_i = 2|P_i| / perimeter.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.spatial import cKDTree

# boundary tag codes; edges with neighbor >= 0 are two-sided regardless of tag
TAGS = ("interior", "periodic", "dirichlet", "wall_noslip", "wall_slip",
        "wall_moving", "inflow", "outflow")
TAG_ID = {name: i for i, name in enumerate(TAGS)}

# Gauss-Lobatto nodes/weights on [-1, 1]; exact for polynomials of degree 2n-3
_GLL = {
    2: (np.array([-1.0, 1.0]), np.array([1.0, 1.0])),
    3: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, 4.0, 1.0]) / 3.0),
    4: (np.array([-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0]),
        np.array([1.0, 5.0, 5.0, 1.0]) / 6.0),
    5: (np.array([-1.0, -np.sqrt(3.0 / 7.0), 0.0, np.sqrt(3.0 / 7.0), 1.0]),
        np.array([0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1])),
}


def gauss_lobatto(n: int):
    """Nodes and weights on [-1, 1] for n points (2 <= n <= 5)."""
    if n not in _GLL:
        raise ValueError(f"Gauss-Lobatto rule with {n} points not tabulated")
    return _GLL[n]


def edge_gl_rule(p0, p1, n):
    """GL points (n,2) and weights (n,) on the segment p0-p1; weights sum to its length."""
    x, w = gauss_lobatto(n)
    t = 0.5 * (x + 1.0)
    pts = p0[None, :] * (1.0 - t[:, None]) + p1[None, :] * t[:, None]
    L = float(np.hypot(*(p1 - p0)))
    return pts, 0.5 * L * w


# ---------------------------------------------------------------------------
# elementary polygon geometry

def polygon_area(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def cell_metrics(xy):
    """(area, barycenter, char_size) of a simple polygon.

    CW input is reversed with a warning; char_size = 2*area / perimeter.
    """
    xy = np.asarray(xy, dtype=float)
    a = polygon_area(xy)
    if a < 0:
        warnings.warn("CW polygon reversed to CCW")
        xy = xy[::-1]
        a = -a
    if a < 1e-14:
        raise ValueError("degenerate polygon (area below 1e-14)")
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    cx = np.sum((x + xn) * cr) / (6.0 * a)
    cy = np.sum((y + yn) * cr) / (6.0 * a)
    per = np.sum(np.hypot(xn - x, yn - y))
    return a, np.array([cx, cy]), 2.0 * a / per


def clip_halfplane(poly, point, normal, tol=1e-14):
    """Clip CCW polygon to the side {x : (x - point).normal <= 0}."""
    if len(poly) == 0:
        return poly
    d = (poly - point) @ normal
    scale = max(1.0, float(np.max(np.abs(d))))
    inside = d <= tol * scale
    if inside.all():
        return poly
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        if inside[i]:
            out.append(poly[i])
            if not inside[j]:
                t = d[i] / (d[i] - d[j])
                out.append(poly[i] + t * (poly[j] - poly[i]))
        elif inside[j]:
            t = d[i] / (d[i] - d[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    if not out:
        return np.zeros((0, 2))
    return np.array(out)


def _dedupe_ring(poly, tol):
    """Drop consecutive near-duplicate vertices (closed ring)."""
    if len(poly) < 3:
        return poly
    keep = []
    for i in range(len(poly)):
        j = (i + 1) % len(poly)
        if np.hypot(*(poly[j] - poly[i])) > tol:
            keep.append(i)
    return poly[keep] if len(keep) >= 3 else np.zeros((0, 2))


# ---------------------------------------------------------------------------
# volume quadrature: barycenter fan + collapsed Gauss rule per triangle

def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(a, b, c, degree):
    """Quadrature on triangle (a,b,c) exact for bivariate degree <= degree."""
    nu = (degree + 3) // 2   # extra power from the collapse Jacobian
    nv = (degree + 2) // 2
    u, wu = _gauss01(max(nu, 1))
    v, wv = _gauss01(max(nv, 1))
    U, V = np.meshgrid(u, v, indexing="ij")
    xi = U * (1.0 - V)
    eta = U * V
    pts = a[None, :] + np.outer(xi.ravel(), b - a) + np.outer(eta.ravel(), c - a)
    area2 = abs(polygon_area(np.array([a, b, c]))) * 2.0
    w = area2 * (np.outer(wu * u, wv)).ravel()
    return pts, w


def volume_quadrature(xy, degree):
    """Rule on a CCW polygon exact for polynomials up to `degree`.

    Fan sub-triangulation from the barycenter; weights sum to the area.
    """
    xy = np.asarray(xy, dtype=float)
    _, bc, _ = cell_metrics(xy)
    pts, wts = [], []
    n = len(xy)
    for i in range(n):
        p, w = triangle_rule(bc, xy[i], xy[(i + 1) % n], degree)
        pts.append(p)
        wts.append(w)
    return np.vstack(pts), np.concatenate(wts)


# ---------------------------------------------------------------------------
# mesh container

class Mesh:
    """Immutable polygonal tessellation with flat-array storage.

    Cell polygons are stored per cell in the cell's own frame (CSR arrays
    cell_vptr / cell_xy); global vertex ids identify shared corners across
    periodic wraps.  Edge geometry lives in the owner cell's frame, and
    edge_shift maps owner-frame coordinates into the neighbor's frame.
    """

    def __init__(self, vertex_xy, cell_vptr, cell_vids, cell_xy,
                 edge_cells, edge_vids, edge_pts, edge_tag, edge_shift,
                 cell_eptr, cell_eids, cell_esign, domain, periodic,
                 domain_area, edge_side):
        self.vertex_xy = vertex_xy
        self.cell_vptr = cell_vptr
        self.cell_vids = cell_vids
        self.cell_xy = cell_xy
        self.edge_cells = edge_cells          # (NE,2) owner, neighbor (-1 boundary)
        self.edge_vids = edge_vids            # (NE,2) global ids, owner traversal order
        self.edge_pts = edge_pts              # (NE,2,2) endpoints, owner frame
        self.edge_tag = edge_tag
        self.edge_shift = edge_shift          # (NE,2) neighbor frame = owner frame + shift
        self.cell_eptr = cell_eptr
        self.cell_eids = cell_eids
        self.cell_esign = cell_esign          # +1 owner side, -1 neighbor side
        self.domain = domain                  # (xmin, xmax, ymin, ymax)
        self.periodic = periodic
        self.domain_area = domain_area
        self.edge_side = edge_side            # side label per boundary edge ('' interior)

        d = edge_pts[:, 1] - edge_pts[:, 0]
        self.edge_len = np.hypot(d[:, 0], d[:, 1])
        self.edge_normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / self.edge_len[:, None]
        self.n_cells = len(cell_vptr) - 1
        self.n_edges = len(edge_cells)
        self.n_vertices = len(vertex_xy)

        area = np.empty(self.n_cells)
        bary = np.empty((self.n_cells, 2))
        ch = np.empty(self.n_cells)
        for i in range(self.n_cells):
            area[i], bary[i], ch[i] = cell_metrics(self.cell_poly(i))
        self.cell_area = area
        self.cell_bary = bary
        self.cell_h = ch

        # quadrature caches, filled by set_quadrature
        self.vol_degree = -1
        self.n_gl = 0
        self.vol_qptr = self.vol_qx = self.vol_qw = None
        self.edge_glx = self.edge_glw = None

    def cell_poly(self, i):
        return self.cell_xy[self.cell_vptr[i]:self.cell_vptr[i + 1]]

    def cell_edges(self, i):
        s = slice(self.cell_eptr[i], self.cell_eptr[i + 1])
        return self.cell_eids[s], self.cell_esign[s]

    @property
    def interior_edges(self):
        return np.nonzero(self.edge_cells[:, 1] >= 0)[0]

    @property
    def boundary_edges(self):
        return np.nonzero(self.edge_cells[:, 1] < 0)[0]

    def set_quadrature(self, vol_degree: int, n_gl: int):
        """Cache volume rules (exact to vol_degree) and n_gl-point edge GL rules."""
        if self.vol_degree == vol_degree and self.n_gl == n_gl:
            return
        ptr = [0]
        qx, qw = [], []
        for i in range(self.n_cells):
            p, w = volume_quadrature(self.cell_poly(i), vol_degree)
            qx.append(p)
            qw.append(w)
            ptr.append(ptr[-1] + len(w))
        self.vol_qptr = np.array(ptr)
        self.vol_qx = np.vstack(qx)
        self.vol_qw = np.concatenate(qw)
        self.vol_degree = vol_degree

        xg, wg = gauss_lobatto(n_gl)
        t = 0.5 * (xg + 1.0)
        p0 = self.edge_pts[:, 0]
        p1 = self.edge_pts[:, 1]
        self.edge_glx = p0[:, None, :] * (1.0 - t)[None, :, None] + \
            p1[:, None, :] * t[None, :, None]
        self.edge_glw = 0.5 * self.edge_len[:, None] * wg[None, :]
        self.n_gl = n_gl

    def cell_quad(self, i):
        s = slice(self.vol_qptr[i], self.vol_qptr[i + 1])
        return self.vol_qx[s], self.vol_qw[s]

    def retag(self, side_map: dict):
        """Assign boundary tags by side label, e.g. {'xmin': 'dirichlet'}."""
        for e in self.boundary_edges:
            side = self.edge_side[e]
            if side in side_map:
                self.edge_tag[e] = TAG_ID[side_map[side]]

    def edge_adjacency(self):
        """(cell -> neighbor cells, shifts) lists derived from two-sided edges.

        Adding a returned shift to the neighbor's own-frame coordinates places
        its geometry next to the cell (zero except across periodic seams).
        """
        nbr = [[] for _ in range(self.n_cells)]
        shift = [[] for _ in range(self.n_cells)]
        for e in self.interior_edges:
            a, b = self.edge_cells[e]
            nbr[a].append(b)
            shift[a].append(-self.edge_shift[e])
            nbr[b].append(a)
            shift[b].append(self.edge_shift[e])
        return nbr, shift


# ---------------------------------------------------------------------------
# Voronoi construction

def lattice_seeds(domain, nx, ny=None, jitter=0.2, rng=None):
    """Jittered lattice of nx*ny seeds; spacing_x = Lx/nx, resolution label 1/nx."""
    xmin, xmax, ymin, ymax = domain
    Lx, Ly = xmax - xmin, ymax - ymin
    if ny is None:
        ny = max(1, round(nx * Ly / Lx))
    dx, dy = Lx / nx, Ly / ny
    rng = np.random.default_rng(rng)
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    px = xmin + (ix.ravel() + 0.5) * dx
    py = ymin + (iy.ravel() + 0.5) * dy
    if jitter > 0:
        px = px + rng.uniform(-jitter, jitter, px.shape) * dx
        py = py + rng.uniform(-jitter, jitter, py.shape) * dy
    # keep a safety margin so every seed stays strictly inside
    px = np.clip(px, xmin + 1e-3 * dx, xmax - 1e-3 * dx)
    py = np.clip(py, ymin + 1e-3 * dy, ymax - 1e-3 * dy)
    return np.stack([px, py], axis=1)


def _region_polygon(domain, extra_clips):
    xmin, xmax, ymin, ymax = domain
    poly = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
    for point, normal, _tag in extra_clips:
        poly = clip_halfplane(poly, np.asarray(point, float), np.asarray(normal, float))
    if len(poly) < 3:
        raise ValueError("extra clips removed the whole domain")
    return poly


def _site_images(seeds, domain, periodic):
    """All sites = seeds plus periodic images; returns (points, seed index)."""
    xmin, xmax, ymin, ymax = domain
    Lx, Ly = xmax - xmin, ymax - ymin
    sx = [0.0, -Lx, Lx] if periodic[0] else [0.0]
    sy = [0.0, -Ly, Ly] if periodic[1] else [0.0]
    pts, owner, shifts = [], [], []
    for ax in sx:
        for ay in sy:
            pts.append(seeds + np.array([ax, ay]))
            owner.append(np.arange(len(seeds)))
            shifts.append(np.tile(np.array([ax, ay]), (len(seeds), 1)))
    return np.vstack(pts), np.concatenate(owner), np.vstack(shifts)


def build_voronoi(seeds, domain, periodic=(False, False), lloyd_iters=0,
                  extra_clips=(), snap_tol=None):
    """Clipped Voronoi mesh of `seeds` in `domain` (xmin, xmax, ymin, ymax).

    periodic axes keep the crossing edges two-sided (stored once, with a
    translation); lloyd_iters > 0 relaxes seeds to cell barycenters between
    rebuilds.  extra_clips = [(point, inward_normal, tag), ...] cut the domain
    by additional half-planes (the kept side satisfies (x-point).normal <= 0
    ... normal points OUT of the kept region).
    """
    seeds = np.asarray(seeds, dtype=float)
    if len(seeds) < 4:
        raise ValueError("need at least 4 seed points")
    xmin, xmax, ymin, ymax = domain
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("domain must have positive area")
    diag = float(np.hypot(xmax - xmin, ymax - ymin))
    tree0 = cKDTree(seeds)
    pairs = tree0.query_pairs(1e-12 * diag)
    if pairs:
        raise ValueError(f"degenerate seeds (near-duplicates): {sorted(pairs)[:5]}")

    for it in range(lloyd_iters + 1):
        mesh = _voronoi_once(seeds, domain, periodic, extra_clips, snap_tol)
        if it == lloyd_iters:
            return mesh
        seeds = mesh.cell_bary.copy()
        # wrap relaxed seeds back into the chart on periodic axes
        if periodic[0]:
            seeds[:, 0] = xmin + np.mod(seeds[:, 0] - xmin, xmax - xmin)
        if periodic[1]:
            seeds[:, 1] = ymin + np.mod(seeds[:, 1] - ymin, ymax - ymin)
        seeds[:, 0] = np.clip(seeds[:, 0], xmin + 1e-12 * diag, xmax - 1e-12 * diag)
        seeds[:, 1] = np.clip(seeds[:, 1], ymin + 1e-12 * diag, ymax - 1e-12 * diag)


def _voronoi_once(seeds, domain, periodic, extra_clips, snap_tol):
    xmin, xmax, ymin, ymax = domain
    Lx, Ly = xmax - xmin, ymax - ymin
    diag = float(np.hypot(Lx, Ly))
    region = _region_polygon(domain, extra_clips)
    region_area = polygon_area(region)

    sites, site_owner, _ = _site_images(seeds, domain, periodic)
    tree = cKDTree(sites)
    n = len(seeds)

    # base polygon per seed: the full chart strip; on periodic axes the cell may
    # exceed the rectangle, so only non-periodic axes clip at the boundary
    bx0 = xmin - (Lx if periodic[0] else 0.0)
    bx1 = xmax + (Lx if periodic[0] else 0.0)
    by0 = ymin - (Ly if periodic[1] else 0.0)
    by1 = ymax + (Ly if periodic[1] else 0.0)
    base = np.array([[bx0, by0], [bx1, by0], [bx1, by1], [bx0, by1]])

    polys = []
    kmax = len(sites)
    for i in range(n):
        s = seeds[i]
        poly = base.copy()
        for point, normal, _t in extra_clips:
            poly = clip_halfplane(poly, np.asarray(point, float), np.asarray(normal, float))
        k = min(16, kmax)
        done = set()
        while True:
            dists, idx = tree.query(s, k=k)
            dists, idx = np.atleast_1d(dists), np.atleast_1d(idx)
            finished = False
            for d, j in zip(dists, idx):
                if d < 1e-12 * diag:      # the seed itself
                    continue
                if j in done:
                    continue
                done.add(j)
                rmax = np.max(np.hypot(*(poly - s).T)) if len(poly) else 0.0
                if 0.5 * d > rmax:
                    finished = True
                    break
                t = sites[j]
                mid = 0.5 * (s + t)
                poly = clip_halfplane(poly, mid, t - s)
                if len(poly) == 0:
                    raise ValueError(f"zero-area cell after clipping (seed {i})")
            if finished or k >= kmax:
                break
            k = min(2 * k, kmax)
        poly = _dedupe_ring(poly, 1e-10 * diag)
        if len(poly) < 3 or polygon_area(poly) <= 1e-14 * region_area:
            raise ValueError(f"zero-area cell after clipping (seed {i})")
        polys.append(poly)

    return _mesh_from_polys(polys, domain, periodic, extra_clips, region_area,
                            snap_tol or 1e-9 * diag)


def _canon_vertex(p, domain, periodic, tol):
    """Wrap a point into the chart on periodic axes (for global vertex identity)."""
    xmin, xmax, ymin, ymax = domain
    x, y = p
    if periodic[0]:
        L = xmax - xmin
        x = xmin + np.mod(x - xmin, L)
        if x > xmax - 0.5 * tol:
            x -= L
    if periodic[1]:
        L = ymax - ymin
        y = ymin + np.mod(y - ymin, L)
        if y > ymax - 0.5 * tol:
            y -= L
    return x, y


def _mesh_from_polys(polys, domain, periodic, extra_clips, region_area, tol):
    # global vertex table keyed on snapped canonical coordinates
    vkey = {}
    vxy = []

    def vid_of(p):
        cx, cy = _canon_vertex(p, domain, periodic, tol)
        key = (round(cx / tol), round(cy / tol))
        for dx in (0, 1, -1):
            for dy in (0, 1, -1):
                k = (key[0] + dx, key[1] + dy)
                if k in vkey:
                    return vkey[k]
        vkey[key] = len(vxy)
        vxy.append((cx, cy))
        return vkey[key]

    cell_vptr = [0]
    cell_vids = []
    cell_xy = []
    for poly in polys:
        for p in poly:
            cell_vids.append(vid_of(p))
            cell_xy.append(p)
        cell_vptr.append(len(cell_vids))
    cell_vptr = np.array(cell_vptr)
    cell_vids = np.array(cell_vids)
    cell_xy = np.array(cell_xy)

    # edge table: key on unordered global vertex pair
    edge_of = {}
    edge_cells = []
    edge_vids = []
    edge_pts = []
    edge_shift = []
    cell_eptr = [0]
    cell_eids = []
    cell_esign = []
    for ci, poly in enumerate(polys):
        m = len(poly)
        ids = cell_vids[cell_vptr[ci]:cell_vptr[ci + 1]]
        for a in range(m):
            b = (a + 1) % m
            va, vb = int(ids[a]), int(ids[b])
            if va == vb:
                raise ValueError(f"ring vertex snapped onto itself in cell {ci}")
            key = (min(va, vb), max(va, vb))
            if key not in edge_of:
                e = len(edge_cells)
                edge_of[key] = e
                edge_cells.append([ci, -1])
                edge_vids.append([va, vb])
                edge_pts.append([poly[a], poly[b]])
                edge_shift.append([0.0, 0.0])
                cell_eids.append(e)
                cell_esign.append(1)
            else:
                e = edge_of[key]
                if edge_cells[e][1] != -1:
                    raise ValueError(f"edge {key} shared by more than two cells")
                edge_cells[e][1] = ci
                # translation owner frame -> neighbor frame, from endpoint offset
                pa = np.asarray(edge_pts[e][0])
                if edge_vids[e][0] == va:
                    shift = poly[a] - pa
                else:
                    shift = poly[b] - pa
                edge_shift[e] = [shift[0], shift[1]]
                cell_eids.append(e)
                cell_esign.append(-1)
        cell_eptr.append(len(cell_eids))

    edge_cells = np.array(edge_cells)
    edge_vids = np.array(edge_vids)
    edge_pts = np.array(edge_pts)
    edge_shift = np.array(edge_shift)
    # snap shifts to exact multiples of the period
    xmin, xmax, ymin, ymax = domain
    for ax, L in ((0, xmax - xmin), (1, ymax - ymin)):
        if periodic[ax]:
            edge_shift[:, ax] = np.round(edge_shift[:, ax] / L) * L

    edge_tag = np.zeros(len(edge_cells), dtype=np.int64)
    edge_side = [""] * len(edge_cells)
    twosided = edge_cells[:, 1] >= 0
    edge_tag[twosided & (np.abs(edge_shift).sum(axis=1) > 0)] = TAG_ID["periodic"]

    # classify boundary edges by the line they lie on
    lines = []
    if not periodic[0]:
        lines += [("xmin", np.array([xmin, 0.0]), np.array([1.0, 0.0])),
                  ("xmax", np.array([xmax, 0.0]), np.array([1.0, 0.0]))]
    if not periodic[1]:
        lines += [("ymin", np.array([0.0, ymin]), np.array([0.0, 1.0])),
                  ("ymax", np.array([0.0, ymax]), np.array([0.0, 1.0]))]
    for ic, (point, normal, tag) in enumerate(extra_clips):
        nrm = np.asarray(normal, float)
        nrm = nrm / np.hypot(*nrm)
        lines.append((f"clip{ic}", np.asarray(point, float), nrm))
        edge_side_tag = tag
    for e in np.nonzero(~twosided)[0]:
        p0, p1 = edge_pts[e]
        for name, point, nrm in lines:
            if abs((p0 - point) @ nrm) < 100 * tol and abs((p1 - point) @ nrm) < 100 * tol:
                edge_side[e] = name
                break
        else:
            raise ValueError(f"boundary edge {e} lies on no domain line")
        edge_tag[e] = TAG_ID["dirichlet"]
        if edge_side[e].startswith("clip"):
            ic = int(edge_side[e][4:])
            edge_tag[e] = TAG_ID[extra_clips[ic][2]]

    mesh = Mesh(np.array(vxy), cell_vptr, cell_vids, cell_xy,
                edge_cells, edge_vids, edge_pts, edge_tag, edge_shift,
                np.array(cell_eptr), np.array(cell_eids), np.array(cell_esign),
                tuple(domain), tuple(periodic), region_area, edge_side)
    total = mesh.cell_area.sum()
    if abs(total - region_area) > 1e-10 * region_area:
        raise ValueError(f"cells do not tile the domain: {total} vs {region_area}")
    return mesh


def mesh_from_polygons(polys, domain, periodic=(False, False)):
    """Mesh from explicit CCW polygons (used by the text-format reader and tests)."""
    polys = [np.asarray(p, dtype=float) for p in polys]
    fixed = []
    for p in polys:
        if polygon_area(p) < 0:
            warnings.warn("CW polygon reversed to CCW")
            p = p[::-1]
        fixed.append(p)
    area = sum(polygon_area(p) for p in fixed)
    xmin, xmax, ymin, ymax = domain
    diag = float(np.hypot(xmax - xmin, ymax - ymin))
    return _mesh_from_polys(fixed, domain, periodic, (), area, 1e-9 * diag)


# ---------------------------------------------------------------------------
# regularity diagnostics

def regularity_report(mesh: Mesh, rho_bar: float = 0.05):
    """Star-shapedness and shortest-edge diagnostics per cell.

    A cell is flagged when its inradius about the barycenter or any of its
    edge lengths falls below rho_bar * h_i.  Diagnostics only, never fatal.
    """
    n = mesh.n_cells
    min_edge_ratio = np.empty(n)
    inradius_ratio = np.empty(n)
    for i in range(n):
        poly = mesh.cell_poly(i)
        bc = mesh.cell_bary[i]
        h = mesh.cell_h[i]
        p0 = poly
        p1 = np.roll(poly, -1, axis=0)
        d = p1 - p0
        lens = np.hypot(d[:, 0], d[:, 1])
        # distance from barycenter to each edge line, signed by outward normal
        nrm = np.stack([d[:, 1], -d[:, 0]], axis=1) / lens[:, None]
        dist = np.einsum("ij,ij->i", bc[None, :] - p0, nrm)
        inradius = -np.max(dist) if np.all(dist < 0) else 0.0
        min_edge_ratio[i] = lens.min() / h
        inradius_ratio[i] = inradius / h
    edge_bad = np.nonzero(min_edge_ratio < rho_bar)[0]
    star_bad = np.nonzero(inradius_ratio < rho_bar)[0]
    return {
        "min_edge_ratio": min_edge_ratio,
        "inradius_ratio": inradius_ratio,
        "edge_violations": edge_bad,
        "star_violations": star_bad,
        "min_edge_ratio_global": float(min_edge_ratio.min()),
        "min_inradius_ratio_global": float(inradius_ratio.min()),
    }
