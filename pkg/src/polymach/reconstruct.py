"""Conservative Taylor basis on polygons and CWENO reconstruction.

Per cell the basis is beta_l = m_l - mean_P(m_l) for l >= 2 and beta_1 = 1,
with m_l the monomials scaled by the cell size, so the first reconstruction
coefficient is always the cell average (exact conservation).  The CWENO blend
combines one optimal central least-squares polynomial of degree k with
degree-1 sectorial polynomials through smoothness-indicator weights; the
central candidate is P0 = (P_opt - sum_s lam_s P_s) / lam_0 so the blend stays
conservative and attains degree k on smooth data.

All stencil geometry, least-squares pseudoinverses, oscillation-indicator
quadratic forms, and edge-trace basis tables are precomputed once per
(mesh, degree) in ReconContext; reconstruction itself is a handful of
gather / einsum / scatter passes over grouped cells.
"""

from __future__ import annotations

import warnings

import numpy as np

from .mesh import Mesh

# monomial exponents in the fixed global order used by every module
EXPONENTS = {
    0: [(0, 0)],
    1: [(0, 0), (1, 0), (0, 1)],
    2: [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)],
}


def n_dof(k: int) -> int:
    """Polynomial space dimension (k+1)(k+2)/2."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return (k + 1) * (k + 2) // 2


def monomials(xi, k):
    """Scaled monomial values at xi (n,2) -> (n, n_k)."""
    out = np.empty(xi.shape[:-1] + (n_dof(k),))
    for l, (a, b) in enumerate(EXPONENTS[k]):
        out[..., l] = xi[..., 0] ** a * xi[..., 1] ** b
    return out


def monomial_gradients(xi, k):
    """d(m_l)/d(xi) at xi (n,2) -> (n, n_k, 2); divide by h for x-derivatives."""
    out = np.zeros(xi.shape[:-1] + (n_dof(k), 2))
    for l, (a, b) in enumerate(EXPONENTS[k]):
        if a > 0:
            out[..., l, 0] = a * xi[..., 0] ** (a - 1) * xi[..., 1] ** b
        if b > 0:
            out[..., l, 1] = b * xi[..., 0] ** a * xi[..., 1] ** (b - 1)
    return out


class TaylorBasis:
    """Cell-centered conservative basis data for a whole mesh."""

    def __init__(self, mesh: Mesh, k: int):
        if k not in EXPONENTS:
            raise ValueError("reconstruction degree must be 0, 1 or 2")
        self.mesh = mesh
        self.k = k
        self.nk = n_dof(k)
        mesh.set_quadrature(max(3 * k, 2), k + 1)
        means = np.zeros((mesh.n_cells, self.nk))
        for i in range(mesh.n_cells):
            qx, qw = mesh.cell_quad(i)
            xi = (qx - mesh.cell_bary[i]) / mesh.cell_h[i]
            means[i] = qw @ monomials(xi, k) / mesh.cell_area[i]
        means[:, 0] = 0.0          # eta flag: the constant mode is not shifted
        self.means = means

    def eval(self, cell, x):
        """beta values at points x (n,2), extrapolation allowed -> (n, n_k)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = (x - self.mesh.cell_bary[cell]) / self.mesh.cell_h[cell]
        return monomials(xi, self.k) - self.means[cell]

    def eval_gradient(self, cell, x):
        """d(beta)/dx at points x -> (n, n_k, 2)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        h = self.mesh.cell_h[cell]
        xi = (x - self.mesh.cell_bary[cell]) / h
        return monomial_gradients(xi, self.k) / h


class ReconContext:
    """Precomputed CWENO machinery for one (mesh, degree) pair.

    eps regularizes the nonlinear weights; by default it scales with the
    squared mean cell size, which keeps the weights at their optimal values
    on smooth data (where the oscillation indicators are O(h^2) themselves)
    while remaining negligible against the O(1) indicators at a jump.
    """

    def __init__(self, mesh: Mesh, k: int, lam0: float = 1e5,
                 eps: float | None = None, power: int = 4):
        self.mesh = mesh
        self.k = k
        self.nk = n_dof(k)
        self.lam0 = lam0
        self.eps = float(np.mean(mesh.cell_h)) ** 2 if eps is None else eps
        self.power = power
        self.basis = TaylorBasis(mesh, k)
        self._build_edge_tables()
        if k == 0:
            return
        self._adjacency()
        self._build_central()
        self._build_sectors()
        self._build_oscillation_forms()

    # -- geometry-stage construction ------------------------------------

    def _adjacency(self):
        nbr, shift = self.mesh.edge_adjacency()
        self.nbr = [list(zip(n, [tuple(s) for s in sh]))
                    for n, sh in zip(nbr, shift)]

    def _cell_mean_rows(self, home, members):
        """Rows of mean_{P_j}(beta^home_l) for l >= 2; members = (cell, shift)."""
        m = self.mesh
        rows = np.empty((len(members), self.nk - 1))
        for r, (j, sh) in enumerate(members):
            qx, qw = m.cell_quad(j)
            vals = self.basis.eval(home, qx + np.asarray(sh))
            rows[r] = qw @ vals[:, 1:] / m.cell_area[j]
        return rows

    def _build_central(self):
        m = self.mesh
        need = 2 * self.nk
        stencils = []
        for i in range(m.n_cells):
            seen = {(i, (0.0, 0.0))}
            ring = [(i, (0.0, 0.0))]
            total = 1
            while total < need:
                nxt = []
                for c, sh in ring:
                    for j, js in self.nbr[c]:
                        key = (j, (sh[0] + js[0], sh[1] + js[1]))
                        if key not in seen:
                            seen.add(key)
                            nxt.append(key)
                if not nxt:
                    break
                ring = nxt
                total += len(nxt)
            members = [e for e in seen if e[0] != i or e[1] != (0.0, 0.0)]
            members.sort(key=lambda e: (e[0], e[1]))
            stencils.append(members)

        self.central_members = stencils
        pinvs = []
        for i, members in enumerate(stencils):
            A = self._cell_mean_rows(i, members)
            rank = np.linalg.matrix_rank(A, tol=1e-10)
            if rank < self.nk - 1:
                warnings.warn(f"rank-deficient central stencil on cell {i}; "
                              "falling back to pseudoinverse (degree reduced)")
            pinvs.append(np.linalg.pinv(A))

        # group by stencil size so reconstruction is a few batched einsums
        self.central_groups = []
        sizes = np.array([len(s) for s in stencils])
        for sz in np.unique(sizes):
            cells = np.flatnonzero(sizes == sz)
            ids = np.array([[j for j, _ in stencils[c]] for c in cells])
            P = np.stack([pinvs[c] for c in cells])
            self.central_groups.append((cells, ids, P))

    def _build_sectors(self):
        """One degree-1 polynomial per edge neighbor."""
        m = self.mesh
        sec_home, sec_pinv, sec_members = [], [], []
        for i in range(m.n_cells):
            nbrs = self.nbr[i]
            nset = {j for j, _ in nbrs}
            for j, js in nbrs:
                members = [(j, js)]
                for q, qs in self.nbr[j]:
                    tot = (js[0] + qs[0], js[1] + qs[1])
                    if q in nset and q != i:
                        # require consistency with i's own shift for q
                        for qq, qqs in nbrs:
                            if qq == q and qqs == tot:
                                members.append((q, tot))
                                break
                # thin sectors (lattice meshes have no common neighbors) keep a
                # single row; the min-norm pseudoinverse then yields the
                # classic one-sided directional slope with zero tangential part
                A = self._cell_mean_rows(i, members)[:, :2]
                sec_home.append(i)
                sec_members.append(members)
                sec_pinv.append(np.linalg.pinv(A))
        self.sector_home = np.array(sec_home, dtype=np.int64)
        self.sector_members = sec_members
        self.n_sectors = np.bincount(self.sector_home, minlength=m.n_cells)

        self.sector_groups = []
        sizes = np.array([len(s) for s in sec_members])
        for sz in np.unique(sizes):
            rows = np.flatnonzero(sizes == sz)
            ids = np.array([[j for j, _ in sec_members[s]] for s in rows])
            P = np.stack([sec_pinv[s] for s in rows])
            self.sector_groups.append((rows, ids, P))

    def _build_oscillation_forms(self):
        """S with OI(p) = c^T S c = sum_alpha h^(2|alpha|-2) int (D^alpha p)^2."""
        m = self.mesh
        k = self.k
        S = np.zeros((m.n_cells, self.nk, self.nk))
        for i in range(m.n_cells):
            qx, qw = m.cell_quad(i)
            h = m.cell_h[i]
            xi = (qx - m.cell_bary[i]) / h
            g = monomial_gradients(xi, k) / h          # (q, nk, 2)
            for d in range(2):
                S[i] += np.einsum("q,ql,qm->lm", qw, g[:, :, d], g[:, :, d])
            if k >= 2:
                # second derivatives of the scaled quadratics are constant:
                # D2 beta_4 = 2/h^2 (xx), beta_5 = 1/h^2 (xy), beta_6 = 2/h^2 (yy)
                fac = m.cell_area[i] / h ** 2     # h^(2|a|-2) * |P| * (1/h^2)^2
                S[i, 3, 3] += 4.0 * fac
                S[i, 4, 4] += 1.0 * fac
                S[i, 5, 5] += 4.0 * fac
        self.oi_forms = S

    def _build_edge_tables(self):
        """Owner/neighbor basis values and gradients at edge GL points."""
        m = self.mesh
        ngl = self.k + 1
        ne = m.n_edges
        Bo = np.zeros((ne, ngl, self.nk))
        Bn = np.zeros((ne, ngl, self.nk))
        Go = np.zeros((ne, ngl, self.nk, 2))
        Gn = np.zeros((ne, ngl, self.nk, 2))
        for e in range(ne):
            pts = m.edge_glx[e]
            own, nei = m.edge_cells[e]
            Bo[e] = self.basis.eval(own, pts)
            Go[e] = self.basis.eval_gradient(own, pts)
            if nei >= 0:
                pn = pts + m.edge_shift[e]
                Bn[e] = self.basis.eval(nei, pn)
                Gn[e] = self.basis.eval_gradient(nei, pn)
        self.edge_basis_owner = Bo
        self.edge_basis_neighbor = Bn
        self.edge_grad_owner = Go
        self.edge_grad_neighbor = Gn

    # -- reconstruction ---------------------------------------------------

    def reconstruct(self, fields, linear=False):
        """CWENO coefficients (n_cells, n_k, nf) from cell averages (n_cells, nf).

        With linear=True the nonlinear weights are skipped and the result is
        exactly the optimal central polynomial (useful for smooth problems
        and for testing the candidate algebra).
        """
        m = self.mesh
        fields = np.asarray(fields, dtype=float)
        if fields.ndim == 1:
            fields = fields[:, None]
        nc, nf = fields.shape
        if self.k == 0:
            return fields[:, None, :].copy()

        copt = np.zeros((nc, self.nk, nf))
        copt[:, 0] = fields
        for cells, ids, P in self.central_groups:
            rhs = fields[ids] - fields[cells][:, None, :]
            copt[cells, 1:] = np.einsum("gkr,grf->gkf", P, rhs)
        if linear:
            return copt

        ns = len(self.sector_home)
        csec = np.zeros((ns, 3, nf))
        csec[:, 0] = fields[self.sector_home]
        for rows, ids, P in self.sector_groups:
            home = self.sector_home[rows]
            rhs = fields[ids] - fields[home][:, None, :]
            csec[rows, 1:] = np.einsum("gkr,grf->gkf", P, rhs)

        return self._blend(fields, copt, csec)

    def _blend(self, fields, copt, csec):
        m = self.mesh
        nc, nf = fields.shape
        home = self.sector_home
        nsec = self.n_sectors
        lam_tot = self.lam0 + nsec                       # per cell
        lam0 = self.lam0 / lam_tot                       # (nc,)
        lam_s = 1.0 / lam_tot[home]                      # (ns,)

        # central candidate P0 = (P_opt - sum lam_s P_s) / lam0
        sec_pad = np.zeros((len(home), self.nk, nf))
        sec_pad[:, :3] = csec
        sum_sec = np.zeros((nc, self.nk, nf))
        np.add.at(sum_sec, home, lam_s[:, None, None] * sec_pad)
        p0 = (copt - sum_sec) / lam0[:, None, None]

        # oscillation indicators and nonlinear weights
        S = self.oi_forms
        oi0 = np.einsum("clf,clm,cmf->cf", p0, S, p0)
        S2 = S[home][:, 1:3, 1:3]
        ois = np.einsum("slf,slm,smf->sf", csec[:, 1:], S2, csec[:, 1:])
        w0 = lam0[:, None] / (self.eps + oi0) ** self.power
        ws = lam_s[:, None] / (self.eps + ois) ** self.power
        wsum = w0.copy()
        np.add.at(wsum, home, ws)

        out = w0[:, None, :] * p0
        np.add.at(out, home, ws[:, None, :] * sec_pad)
        out /= wsum[:, None, :]
        out[:, 0] = fields                                # exact conservation
        return out

    # -- positivity --------------------------------------------------------

    def _build_min_tables(self):
        """Per-cell evaluation matrix over its volume and edge quadrature points."""
        m = self.mesh
        mats = []
        for i in range(m.n_cells):
            blocks = [self.basis.eval(i, m.vol_qx[m.vol_qptr[i]:m.vol_qptr[i + 1]])]
            eids, _ = m.cell_edges(i)
            for e in eids:
                own = m.edge_cells[e, 0] == i
                blocks.append(self.edge_basis_owner[e] if own
                              else self.edge_basis_neighbor[e])
            mats.append(np.vstack(blocks))
        groups = []
        sizes = np.array([a.shape[0] for a in mats])
        for sz in np.unique(sizes):
            cells = np.flatnonzero(sizes == sz)
            groups.append((cells, np.stack([mats[c] for c in cells])))
        self._min_groups = groups

    def positivity_scale(self, coeffs, columns, floor=1e-10):
        """Scale deviations toward the mean so listed columns stay >= floor.

        Conservative (cell means untouched) and inactive wherever the cell
        polynomial already stays above the floor at every quadrature point.
        Returns the number of limited cells.
        """
        if self.k == 0:
            return 0
        if not hasattr(self, "_min_groups"):
            self._build_min_tables()
        columns = list(columns)
        limited = 0
        for cells, M in self._min_groups:
            vals = np.einsum("grk,gkf->grf", M, coeffs[cells][:, :, columns])
            mn = vals.min(axis=1)                       # (g, len(columns))
            avg = coeffs[cells, 0][:, columns]
            bad = mn < floor
            if not bad.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                theta = (avg - floor) / (avg - mn)
            theta = np.where(bad, np.clip(theta, 0.0, 1.0), 1.0)
            rows = np.nonzero(bad.any(axis=1))[0]
            limited += len(rows)
            for f, col in enumerate(columns):
                coeffs[cells, 1:, col] *= theta[:, None, f]
        return limited

    # -- evaluation helpers ------------------------------------------------

    def edge_traces(self, coeffs):
        """(owner, neighbor) point values at all edge GL points -> 2x(ne,ngl,nf)."""
        own = self.mesh.edge_cells[:, 0]
        nei = self.mesh.edge_cells[:, 1]
        to = np.einsum("egl,elf->egf", self.edge_basis_owner, coeffs[own])
        tn = np.einsum("egl,elf->egf", self.edge_basis_neighbor,
                       coeffs[np.maximum(nei, 0)])
        return to, tn

    def edge_gradients(self, coeffs):
        """Trace gradients, same layout -> 2x(ne,ngl,nf,2)."""
        own = self.mesh.edge_cells[:, 0]
        nei = self.mesh.edge_cells[:, 1]
        go = np.einsum("egld,elf->egfd", self.edge_grad_owner, coeffs[own])
        gn = np.einsum("egld,elf->egfd", self.edge_grad_neighbor,
                       coeffs[np.maximum(nei, 0)])
        return go, gn

    def edge_trace(self, coeffs, edge, side):
        """Values of one polynomial at one edge's GL points; side in {'owner','neighbor'}."""
        if side == "owner":
            return self.edge_basis_owner[edge] @ coeffs[self.mesh.edge_cells[edge, 0]]
        nei = self.mesh.edge_cells[edge, 1]
        if nei < 0:
            raise ValueError("boundary edge has no neighbor side")
        return self.edge_basis_neighbor[edge] @ coeffs[nei]

    def eval_cells(self, coeffs, cells, pts):
        """Evaluate each cell's polynomial at its own points (n,2) -> (n,nf)."""
        vals = np.empty((len(pts), coeffs.shape[2]))
        for c in np.unique(cells):
            sel = cells == c
            vals[sel] = self.basis.eval(c, pts[sel]) @ coeffs[c]
        return vals

    def volume_values(self, coeffs):
        """Polynomial values at all cached volume quadrature points (nq_total, nf)."""
        m = self.mesh
        out = np.empty((len(self.mesh.vol_qw), coeffs.shape[2]))
        for i in range(m.n_cells):
            s = slice(m.vol_qptr[i], m.vol_qptr[i + 1])
            out[s] = self.basis.eval(i, m.vol_qx[s]) @ coeffs[i]
        return out
