"""Conforming virtual element space of order k on polygonal cells.

Scalar dofs per cell: values at the N_E vertices, values at the (k-1) interior
Gauss-Lobatto points of each edge, and the n_{k-2} scaled moments
(1/|P|) int_P v m_alpha.  Total k*N_E + (k-1)k/2.  Because the edge dof points
coincide with the Gauss-Lobatto quadrature nodes, every boundary integral of a
polynomial times a virtual function (degree <= 2k-1) is evaluated exactly from
dof values alone.

Per cell we build the classic matrices: D (dofs of monomials), G and B of the
elliptic projector, H and C of the L2 projector, and the gradient projectors
Hhat^{-1}E^x, Hhat^{-1}E^y obtained by integration by parts.  Polynomials are
expressed in the scaled monomial basis m_kappa = ((x-x_P)/h_P)^kappa, which
makes every matrix scale-invariant.
"""

from __future__ import annotations

import warnings

import numpy as np

from .mesh import Mesh, TAG_ID
from .reconstruct import EXPONENTS, monomials, monomial_gradients, n_dof


def dof_count(k: int, n_vertices: int) -> int:
    """Scalar dofs of one cell: k*N_E + (k-1)k/2."""
    return k * n_vertices + (k - 1) * k // 2


def _laplacian_coeffs(k, h):
    """Laplacian of each scaled monomial as a constant (valid for k <= 2)."""
    out = np.zeros(n_dof(k))
    if k >= 2:
        out[3] = 2.0 / h ** 2      # (x/h)^2
        out[5] = 2.0 / h ** 2      # (y/h)^2
    return out


def _dx_matrix(k, h, axis):
    """Coefficients of d(m_alpha)/dx_axis in the monomial basis (degree k-1)."""
    nk = n_dof(k)
    nkm = n_dof(k - 1) if k >= 1 else 0
    Dx = np.zeros((nkm, nk))
    exps = EXPONENTS[k]
    lower = {e: i for i, e in enumerate(EXPONENTS[k - 1])} if k >= 1 else {}
    for l, (a, b) in enumerate(exps):
        if axis == 0 and a > 0:
            Dx[lower[(a - 1, b)], l] = a / h
        if axis == 1 and b > 0:
            Dx[lower[(a, b - 1)], l] = b / h
    return Dx


class CellProjectors:
    """All per-cell VEM matrices, built once in VemSpace."""

    __slots__ = ("D", "G", "B", "H", "C", "PiNs", "PiN", "Pi0s", "Pi0",
                 "Gx", "Gy", "Hhat", "ndof", "Ex", "Ey")


class VemSpace:
    """Global conforming VEM space of order k over a Mesh."""

    def __init__(self, mesh: Mesh, k: int):
        if k not in (1, 2):
            raise ValueError("VEM order must be 1 or 2")
        self.mesh = mesh
        self.k = k
        self.nk = n_dof(k)
        self.nkm = n_dof(k - 1)
        self.n_moments = n_dof(k - 2) if k >= 2 else 0
        mesh.set_quadrature(max(3 * k, 2), k + 1)
        self._build_layout()
        self._build_cells()

    # -- dof layout ------------------------------------------------------

    def _build_layout(self):
        m = self.mesh
        k = self.k
        nv = m.vertex_xy.shape[0]
        ne = m.n_edges
        self.n_vertex_dofs = nv
        self.n_edge_dofs = (k - 1) * ne
        self.n_moment_dofs = self.n_moments * m.n_cells
        self.n_dofs = self.n_vertex_dofs + self.n_edge_dofs + self.n_moment_dofs

        cell_dofs = []
        for i in range(m.n_cells):
            vids = m.cell_vids[m.cell_vptr[i]:m.cell_vptr[i + 1]]
            eids, _ = m.cell_edges(i)
            ids = [vids]
            if k >= 2:
                ids.append(nv + eids)
            if self.n_moments:
                base = nv + self.n_edge_dofs + self.n_moments * i
                ids.append(np.arange(base, base + self.n_moments))
            cell_dofs.append(np.concatenate(ids).astype(np.int64))
        self.cell_dofs = cell_dofs

        counts = np.array([len(d) for d in cell_dofs])
        self._groups = []
        for c in np.unique(counts):
            cells = np.flatnonzero(counts == c)
            self._groups.append((cells, np.stack([cell_dofs[i] for i in cells])))

    def dof_points(self):
        """Physical coordinates per dof (moment dofs get the barycenter)."""
        m = self.mesh
        pts = np.zeros((self.n_dofs, 2))
        pts[:self.n_vertex_dofs] = m.vertex_xy
        if self.k >= 2:
            mid = 0.5 * (m.edge_pts[:, 0] + m.edge_pts[:, 1])
            pts[self.n_vertex_dofs:self.n_vertex_dofs + m.n_edges] = mid
        if self.n_moments:
            base = self.n_vertex_dofs + self.n_edge_dofs
            pts[base:] = np.repeat(m.cell_bary, self.n_moments, axis=0)
        return pts

    def boundary_dofs(self, tags=None):
        """Dof ids lying on boundary edges (optionally filtered by tag names)."""
        m = self.mesh
        want = None if tags is None else {TAG_ID[t] for t in tags}
        ids = set()
        for e in m.boundary_edges:
            if want is not None and m.edge_tag[e] not in want:
                continue
            ids.update(m.edge_vids[e].tolist())
            if self.k >= 2:
                ids.add(self.n_vertex_dofs + e)
        return np.array(sorted(ids), dtype=np.int64)

    # -- per-cell matrices -------------------------------------------------

    def _cell_geometry(self, i):
        """Own-frame ring, edge GL points in own frame, outward flags."""
        m = self.mesh
        ring = m.cell_poly(i)
        eids, esign = m.cell_edges(i)
        return ring, eids, esign

    def _build_cells(self):
        m = self.mesh
        k = self.k
        nk, nkm = self.nk, self.nkm
        self.cells = []
        for i in range(m.n_cells):
            ring, eids, esign = self._cell_geometry(i)
            ne_c = len(eids)
            ndof = dof_count(k, ne_c)
            h, xb, area = m.cell_h[i], m.cell_bary[i], m.cell_area[i]
            qx = m.vol_qx[m.vol_qptr[i]:m.vol_qptr[i + 1]]
            qw = m.vol_qw[m.vol_qptr[i]:m.vol_qptr[i + 1]]
            xi_q = (qx - xb) / h
            mon_q = monomials(xi_q, k)                     # (nq, nk)

            # D: dofs applied to monomials
            D = np.zeros((ndof, nk))
            xi_v = (ring - xb) / h
            D[:ne_c] = monomials(xi_v, k)
            if k >= 2:
                mids = 0.5 * (ring + np.roll(ring, -1, axis=0))
                D[ne_c:2 * ne_c] = monomials((mids - xb) / h, k)
                D[2 * ne_c] = qw @ mon_q / area            # moment dof row

            # H and Hhat
            H = np.einsum("q,qa,qb->ab", qw, mon_q, mon_q)
            Hhat = H[:nkm, :nkm]

            # boundary GL machinery: for each local edge, global GL points map
            # to local dofs (vertex, [midpoint], vertex); normals outward
            B = np.zeros((nk, ndof))
            Ex = np.zeros((nkm, ndof))
            Ey = np.zeros((nkm, ndof))
            for j in range(ne_c):
                v0, v1 = j, (j + 1) % ne_c
                p0, p1 = ring[v0], ring[v1]
                t = p1 - p0
                L = np.hypot(t[0], t[1])
                nrm = np.array([t[1], -t[0]]) / L          # outward for CCW ring
                if k == 1:
                    glx = np.stack([p0, p1])
                    glw = np.array([0.5, 0.5]) * L
                    loc = [v0, v1]
                else:
                    mid = 0.5 * (p0 + p1)
                    glx = np.stack([p0, mid, p1])
                    glw = np.array([1.0, 4.0, 1.0]) * (L / 6.0)
                    loc = [v0, ne_c + j, v1]
                gmon = monomials((glx - xb) / h, k)        # (g, nk)
                ggrad = monomial_gradients((glx - xb) / h, k) / h
                dn = ggrad[:, :, 0] * nrm[0] + ggrad[:, :, 1] * nrm[1]
                for g, ld in enumerate(loc):
                    B[:, ld] += glw[g] * dn[g]
                    Ex[:, ld] += glw[g] * gmon[g, :nkm] * nrm[0]
                    Ey[:, ld] += glw[g] * gmon[g, :nkm] * nrm[1]

            # volume parts: -int(Lap m_alpha) v and -int v m_alpha,x via moments
            if k >= 2:
                lap = _laplacian_coeffs(k, h)
                B[:, 2 * ne_c] -= lap * area               # moment dof = mean
                # m_alpha,x for alpha < nkm has degree <= k-2 = 0: constants
                Ex[:, 2 * ne_c] -= area * _dx_matrix(k, h, 0)[0, :nkm]
                Ey[:, 2 * ne_c] -= area * _dx_matrix(k, h, 1)[0, :nkm]

            # G: gradient Gram with P0 first row
            G = np.einsum("q,qad,qbd->ab",
                          qw, monomial_gradients(xi_q, k) / h,
                          monomial_gradients(xi_q, k) / h)
            if k == 1:
                G[0] = D[:ne_c].mean(axis=0)               # vertex average
                Brow0 = np.zeros(ndof)
                Brow0[:ne_c] = 1.0 / ne_c
            else:
                G[0] = qw @ mon_q / area                   # cell mean
                Brow0 = np.zeros(ndof)
                Brow0[2 * ne_c] = 1.0
            B[0] = Brow0

            try:
                PiNs = np.linalg.solve(G, B)
            except np.linalg.LinAlgError as exc:
                raise RuntimeError(f"singular G matrix on cell {i}") from exc
            if np.linalg.cond(G) > 1e12:
                warnings.warn(f"ill-conditioned G on cell {i}")
            PiN = D @ PiNs

            # C: exact moment rows, remaining rows through the projector
            C = H @ PiNs
            if self.n_moments:
                C[:self.n_moments] = 0.0
                C[:self.n_moments, 2 * ne_c] = area
            Pi0s = np.linalg.solve(H, C)
            Pi0 = D @ Pi0s

            Gx = np.linalg.solve(Hhat, Ex)
            Gy = np.linalg.solve(Hhat, Ey)

            cp = CellProjectors()
            cp.D, cp.G, cp.B, cp.H, cp.C = D, G, B, H, C
            cp.PiNs, cp.PiN, cp.Pi0s, cp.Pi0 = PiNs, PiN, Pi0s, Pi0
            cp.Gx, cp.Gy, cp.Hhat, cp.ndof = Gx, Gy, Hhat, ndof
            cp.Ex, cp.Ey = Ex, Ey
            self.cells.append(cp)

    # -- weighted matrices ---------------------------------------------------

    def weighted_h(self, cell, weight_q, degree=None):
        """H^w of one cell from pointwise weights on its volume quad points."""
        m = self.mesh
        i = cell
        qx = m.vol_qx[m.vol_qptr[i]:m.vol_qptr[i + 1]]
        qw = m.vol_qw[m.vol_qptr[i]:m.vol_qptr[i + 1]]
        nk = self.nk if degree is None else n_dof(degree)
        xi = (qx - m.cell_bary[i]) / m.cell_h[i]
        mon = monomials(xi, self.k)[:, :nk]
        return np.einsum("q,q,qa,qb->ab", qw, weight_q, mon, mon)

    def mass_matrix(self, cell, weight_q=None, wbar=None):
        """M_P = Pi0s^T H^w Pi0s + |P| wbar (I-Pi0)^T (I-Pi0)."""
        cp = self.cells[cell]
        area = self.mesh.cell_area[cell]
        if weight_q is None:
            Hw = cp.H
            wbar = 1.0 if wbar is None else wbar
        else:
            if np.any(weight_q <= 0.0):
                raise ValueError(f"nonpositive mass weight on cell {cell}")
            Hw = self.weighted_h(cell, weight_q)
            if wbar is None:
                i = cell
                qw = self.mesh.vol_qw[self.mesh.vol_qptr[i]:self.mesh.vol_qptr[i + 1]]
                wbar = qw @ weight_q / area
        if wbar <= 0.0:
            raise ValueError(f"nonpositive mean weight on cell {cell}")
        S = np.eye(cp.ndof) - cp.Pi0
        return cp.Pi0s.T @ Hw @ cp.Pi0s + area * wbar * (S.T @ S)

    def enthalpy_stiffness(self, cell, h_q, hbar=None):
        """K_P = Gx^T Hhat^h Gx + Gy^T Hhat^h Gy + hbar (I-PiN)^T (I-PiN)."""
        cp = self.cells[cell]
        if np.any(h_q <= 0.0):
            raise ValueError(f"nonpositive enthalpy on cell {cell}")
        Hh = self.weighted_h(cell, h_q, degree=self.k - 1)
        if hbar is None:
            i = cell
            qw = self.mesh.vol_qw[self.mesh.vol_qptr[i]:self.mesh.vol_qptr[i + 1]]
            hbar = qw @ h_q / self.mesh.cell_area[cell]
        S = np.eye(cp.ndof) - cp.PiN
        return cp.Gx.T @ Hh @ cp.Gx + cp.Gy.T @ Hh @ cp.Gy + hbar * (S.T @ S)

    # -- global, matrix-free -------------------------------------------------

    def interpolate(self, fn):
        """Dof vector of a callable fn(points (n,2)) -> values."""
        m = self.mesh
        out = np.zeros(self.n_dofs)
        out[:self.n_vertex_dofs] = fn(m.vertex_xy)
        if self.k >= 2:
            mid = 0.5 * (m.edge_pts[:, 0] + m.edge_pts[:, 1])
            out[self.n_vertex_dofs:self.n_vertex_dofs + m.n_edges] = fn(mid)
        if self.n_moments:
            base = self.n_vertex_dofs + self.n_edge_dofs
            for i in range(m.n_cells):
                qx, qw = m.cell_quad(i)
                out[base + i] = qw @ fn(qx) / m.cell_area[i]
        return out

    def gather(self, x, cell):
        return x[self.cell_dofs[cell]]

    def apply_blocks(self, blocks, x, out=None):
        """y += sum_cells scatter(B_cell @ gather(x)); blocks is a per-cell list."""
        if out is None:
            out = np.zeros_like(x)
        for cells, dofs in self._groups:
            bl = np.stack([blocks[c] for c in cells])
            xv = x[dofs]
            out_local = np.einsum("gij,gj->gi", bl, xv)
            np.add.at(out, dofs, out_local)
        return out

    def scatter_rhs(self, cell_vectors):
        """Accumulate per-cell rhs vectors into a global vector."""
        out = np.zeros(self.n_dofs)
        for cells, dofs in self._groups:
            vals = np.stack([cell_vectors[c] for c in cells])
            np.add.at(out, dofs, vals)
        return out

    def dump_cell(self, cell, stream):
        """Plain-text dump of the cell's projector matrices for cross-checks."""
        cp = self.cells[cell]
        for name in ("D", "G", "B", "H", "C", "PiNs", "Pi0s", "Gx", "Gy"):
            mat = getattr(cp, name)
            stream.write(f"# {name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                stream.write(" ".join(f"{v:.17e}" for v in row) + "\n")
