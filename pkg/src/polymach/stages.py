"""Implicit viscous and pressure stages on the VEM space, plus the transfer
operators between the FV reconstruction space and the VEM dof space.

Layout conventions: FV polynomial coefficients live in the conservative
(mean-shifted) Taylor basis of reconstruct.py; VEM polynomial algebra uses raw
scaled monomials.  The per-cell conversion is a rank-one update of the
constant coefficient (matrices T / T^{-1} below).

All per-cell tensors are stacked by dof count so stage assembly is a handful
of batched einsum contractions; the Krylov solves apply one global sparse
matrix assembled per solve from the stacked blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy import sparse

from .convective import EosParams, BoundaryConditions
from .krylov import KrylovConfig, cg_solve, gmres_solve
from .mesh import Mesh, TAG_ID
from .reconstruct import ReconContext, monomials
from .vem import VemSpace


# ---------------------------------------------------------------------------
# FV <-> VEM transfers

@dataclass
class TransferOps:
    """Per-cell maps: V (FV coefficients -> dof values of that polynomial) and
    C (dof vector -> FV coefficients of the cell's L2 projection)."""
    V: list
    C: list
    multiplicity: np.ndarray


def build_transfers(space: VemSpace, ctx: ReconContext) -> TransferOps:
    means = ctx.basis.means
    V, C = [], []
    for i, cp in enumerate(space.cells):
        nk = space.nk
        T = np.eye(nk)
        T[0, 1:] = -means[i, 1:]            # shifted -> raw monomial coeffs
        Tinv = np.eye(nk)
        Tinv[0, 1:] = means[i, 1:]
        V.append(cp.D @ T)
        C.append(Tinv @ cp.Pi0s)
    mult = np.zeros(space.n_dofs)
    for dofs in space.cell_dofs:
        np.add.at(mult, dofs, 1.0)
    return TransferOps(V, C, mult)


def fv_to_vem(space: VemSpace, ops: TransferOps, coeffs):
    """Conforming dof field from per-cell FV polynomials (shared dofs averaged).

    coeffs: (n_cells, n_k) or (n_cells, n_k, nf) -> (n_dofs,) or (n_dofs, nf).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    squeeze = coeffs.ndim == 2
    if squeeze:
        coeffs = coeffs[:, :, None]
    out = np.zeros((space.n_dofs, coeffs.shape[2]))
    for i, dofs in enumerate(space.cell_dofs):
        np.add.at(out, dofs, ops.V[i] @ coeffs[i])
    out /= ops.multiplicity[:, None]
    return out[:, 0] if squeeze else out


def vem_to_fv(space: VemSpace, ops: TransferOps, dofs):
    """Per-cell FV (shifted-basis) coefficients of the L2 projection of a dof field."""
    dofs = np.asarray(dofs, dtype=float)
    squeeze = dofs.ndim == 1
    if squeeze:
        dofs = dofs[:, None]
    out = np.empty((len(space.cells), space.nk, dofs.shape[1]))
    for i, ids in enumerate(space.cell_dofs):
        out[i] = ops.C[i] @ dofs[ids]
    return out[:, :, 0] if squeeze else out


# ---------------------------------------------------------------------------
# stacked per-cell tensors for fast stage assembly

class StageContext:
    """Grouped, stacked per-cell data shared by the implicit stages."""

    def __init__(self, mesh: Mesh, space: VemSpace, ctx: ReconContext):
        self.mesh = mesh
        self.space = space
        self.ctx = ctx
        self.ops = build_transfers(space, ctx)
        k = space.k
        self.groups = []
        for cells, dofs in space._groups:
            cp = [space.cells[c] for c in cells]
            area = mesh.cell_area[cells]
            g = dict(
                cells=cells, dofs=dofs, area=area,
                D_low=np.stack([c.D[:, :space.nkm] for c in cp]),
                GX=np.stack([c.Gx for c in cp]),
                GY=np.stack([c.Gy for c in cp]),
                PI0=np.stack([c.Pi0s for c in cp]),
                C=np.stack([c.C for c in cp]),
                KX=np.stack([c.Gx.T @ c.H[:space.nkm, :] @ c.Pi0s for c in cp]),
                KY=np.stack([c.Gy.T @ c.H[:space.nkm, :] @ c.Pi0s for c in cp]),
                STM=np.stack([(np.eye(c.ndof) - c.Pi0).T @
                              (np.eye(c.ndof) - c.Pi0) for c in cp]),
                STK=np.stack([(np.eye(c.ndof) - c.PiN).T @
                              (np.eye(c.ndof) - c.PiN) for c in cp]),
            )
            # volume quadrature tables (cells in one group share dof count but
            # not necessarily quad count; sub-group by it)
            qn = mesh.vol_qptr[cells + 1] - mesh.vol_qptr[cells]
            subs = []
            for q in np.unique(qn):
                sel = np.flatnonzero(qn == q)
                cc = cells[sel]
                idx = mesh.vol_qptr[cc][:, None] + np.arange(q)[None, :]
                xi = ((mesh.vol_qx[idx] - mesh.cell_bary[cc][:, None, :])
                      / mesh.cell_h[cc][:, None, None])
                subs.append(dict(sel=sel, cells=cc, idx=idx,
                                 qw=mesh.vol_qw[idx],
                                 mon=monomials(xi, k)))
            g["subs"] = subs
            self.groups.append(g)

        # edge GL dof map: GL point g of edge e is dof gl_dofs[e, g]
        ngl = k + 1
        nv = space.n_vertex_dofs
        gl = np.empty((mesh.n_edges, ngl), dtype=np.int64)
        gl[:, 0] = mesh.edge_vids[:, 0]
        gl[:, -1] = mesh.edge_vids[:, 1]
        if k == 2:
            gl[:, 1] = nv + np.arange(mesh.n_edges)
        self.gl_dofs = gl

    # -- pointwise fields at volume quadrature points ---------------------

    def raw_coeffs(self, coeffs):
        """Shifted-basis FV coefficients -> raw monomial coefficients."""
        a = np.array(coeffs, dtype=float)
        if a.ndim == 2:
            a = a[:, :, None]
        means = self.ctx.basis.means
        a[:, 0, :] -= np.einsum("cl,clf->cf", means[:, 1:], a[:, 1:, :])
        return a

    def values_at_quad(self, raw):
        """Pointwise polynomial values at all volume quad points (nq, nf)."""
        out = np.empty((len(self.mesh.vol_qw), raw.shape[2]))
        for g in self.groups:
            for s in g["subs"]:
                vals = np.einsum("gqa,gaf->gqf", s["mon"], raw[s["cells"]])
                out[s["idx"]] = vals
        return out

    def moments(self, weight_q, n):
        """Per-cell weighted monomial moments sum_q w_q W(x_q) m_alpha(x_q)."""
        out = np.zeros((self.mesh.n_cells, n))
        for g in self.groups:
            for s in g["subs"]:
                wq = s["qw"] * weight_q[s["idx"]]
                out[s["cells"]] = np.einsum("gq,gqa->ga", wq, s["mon"][:, :, :n])
        return out

    def cell_block_apply(self, blocks_by_group, x, out=None):
        if out is None:
            out = np.zeros_like(x)
        for g, bl in zip(self.groups, blocks_by_group):
            y = np.einsum("gij,gj->gi", bl, x[g["dofs"]])
            np.add.at(out, g["dofs"], y)
        return out

    def block_diag(self, blocks_by_group):
        d = np.zeros(self.space.n_dofs)
        for g, bl in zip(self.groups, blocks_by_group):
            np.add.at(d, g["dofs"], np.einsum("gii->gi", bl))
        return d

    def assemble_csr(self, blocks_by_group):
        """Global sparse matrix with the same action as cell_block_apply.

        Built once per solve so each Krylov iteration is a single matvec
        instead of a per-group gather/scatter pass.
        """
        rows, cols, data = [], [], []
        for g, bl in zip(self.groups, blocks_by_group):
            d = g["dofs"]
            nd = d.shape[1]
            rows.append(np.repeat(d, nd, axis=1).ravel())
            cols.append(np.tile(d, (1, nd)).ravel())
            data.append(np.asarray(bl).ravel())
        n = self.space.n_dofs
        A = sparse.coo_matrix((np.concatenate(data),
                               (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n, n))
        return A.tocsr()

    # -- per-solve weighted blocks ----------------------------------------

    def mass_blocks(self, weight_q=None):
        """Per-group M_P with pointwise weight (default 1)."""
        out = []
        for g in self.groups:
            nk = self.space.nk
            ncell = len(g["cells"])
            Hw = np.empty((ncell, nk, nk))
            wbar = np.empty(ncell)
            for s in g["subs"]:
                wq = s["qw"] if weight_q is None else s["qw"] * weight_q[s["idx"]]
                Hw[s["sel"]] = np.einsum("gq,gqa,gqb->gab", wq,
                                         s["mon"], s["mon"])
                wbar[s["sel"]] = wq.sum(axis=1) / g["area"][s["sel"]]
            if np.any(wbar <= 0.0):
                bad = g["cells"][wbar <= 0.0]
                raise ValueError(f"nonpositive mass weight in cells {bad.tolist()}")
            M = np.einsum("gai,gab,gbj->gij", g["PI0"], Hw, g["PI0"])
            M += (g["area"] * wbar)[:, None, None] * g["STM"]
            out.append(M)
        return out

    def stiffness_blocks(self, h_q):
        """Per-group enthalpy-weighted stiffness K_P."""
        out = []
        nkm = self.space.nkm
        for g in self.groups:
            ncell = len(g["cells"])
            Hh = np.empty((ncell, nkm, nkm))
            hbar = np.empty(ncell)
            for s in g["subs"]:
                wq = s["qw"] * h_q[s["idx"]]
                mon = s["mon"][:, :, :nkm]
                Hh[s["sel"]] = np.einsum("gq,gqa,gqb->gab", wq, mon, mon)
                hbar[s["sel"]] = wq.sum(axis=1) / g["area"][s["sel"]]
            if np.any(hbar <= 0.0):
                bad = g["cells"][hbar <= 0.0]
                raise ValueError(f"nonpositive enthalpy in cells {bad.tolist()}")
            K = np.einsum("gai,gab,gbj->gij", g["GX"], Hh, g["GX"])
            K += np.einsum("gai,gab,gbj->gij", g["GY"], Hh, g["GY"])
            K += hbar[:, None, None] * g["STK"]
            out.append(K)
        return out

    def rhs_from_poly(self, raw):
        """Global rhs vector(s) int f phi_i for per-cell raw coefficients."""
        nf = raw.shape[2]
        out = np.zeros((self.space.n_dofs, nf))
        for g in self.groups:
            y = np.einsum("gan,gaf->gnf", g["C"], raw[g["cells"]])
            np.add.at(out, g["dofs"], y)
        return out[:, 0] if nf == 1 else out

    def rhs_from_moments(self, mom, projector):
        """Global rhs from per-cell moment vectors through a stacked projector
        name ('PI0' with n_k moments, or 'GX'/'GY' with n_{k-1} moments)."""
        out = np.zeros(self.space.n_dofs)
        for g in self.groups:
            y = np.einsum("gan,ga->gn", g[projector], mom[g["cells"]])
            np.add.at(out, g["dofs"], y)
        return out

    # -- stress dof pipeline -------------------------------------------------

    def stress_dofs(self, ux, uy, mu):
        """Conforming dof fields of the three stress components from velocity
        dofs: tau = mu(grad u + grad u^T - 2/3 div u I), componentwise."""
        sp = self.space
        txx = np.zeros(sp.n_dofs)
        txy = np.zeros(sp.n_dofs)
        tyy = np.zeros(sp.n_dofs)
        for g in self.groups:
            UX = ux[g["dofs"]]
            UY = uy[g["dofs"]]
            gxx = np.einsum("gan,gn->ga", g["GX"], UX)
            gyx = np.einsum("gan,gn->ga", g["GY"], UX)
            gxy = np.einsum("gan,gn->ga", g["GX"], UY)
            gyy = np.einsum("gan,gn->ga", g["GY"], UY)
            div = gxx + gyy
            cxx = mu * (2.0 * gxx - (2.0 / 3.0) * div)
            cyy = mu * (2.0 * gyy - (2.0 / 3.0) * div)
            cxy = mu * (gyx + gxy)
            np.add.at(txx, g["dofs"], np.einsum("gna,ga->gn", g["D_low"], cxx))
            np.add.at(txy, g["dofs"], np.einsum("gna,ga->gn", g["D_low"], cxy))
            np.add.at(tyy, g["dofs"], np.einsum("gna,ga->gn", g["D_low"], cyy))
        m = self.ops.multiplicity
        return txx / m, txy / m, tyy / m


# ---------------------------------------------------------------------------
# boundary conditions on dof fields

def velocity_dirichlet(space: VemSpace, mesh: Mesh, bcs: BoundaryConditions):
    """(mask, values) per component for strongly imposed velocity dofs."""
    names = {v: k for k, v in TAG_ID.items()}
    mask = np.zeros((2, space.n_dofs), dtype=bool)
    val = np.zeros((2, space.n_dofs))

    def edge_dofs(e):
        ids = list(mesh.edge_vids[e])
        if space.k >= 2:
            ids.append(space.n_vertex_dofs + e)
        return ids

    order = ("wall_slip", "wall_moving", "dirichlet", "inflow", "wall_noslip")
    rows = {e: r for r, e in enumerate(bcs.edges)}
    for name in order:
        tid = TAG_ID[name]
        for e in bcs.edges:
            if mesh.edge_tag[e] != tid:
                continue
            r = rows[e]
            ids = edge_dofs(e)
            if name == "wall_slip":
                n = mesh.edge_normal[e]
                if abs(abs(n[0]) - 1.0) < 1e-12:
                    comp = [0]
                elif abs(abs(n[1]) - 1.0) < 1e-12:
                    comp = [1]
                else:
                    raise NotImplementedError(
                        "slip walls in the viscous stage must be axis-aligned")
                u = (0.0, 0.0)
            elif name in ("wall_moving", "wall_noslip"):
                comp = [0, 1]
                u = bcs.wall_velocity[r]
            else:
                comp = [0, 1]
                u = bcs.state[r, 1:3]
            for c in comp:
                mask[c, ids] = True
                val[c, ids] = u[c]
    return mask, val


def pressure_dirichlet(space: VemSpace, mesh: Mesh, spec):
    """(mask, values) for pressure dofs; spec maps tag name -> value or callable."""
    mask = np.zeros(space.n_dofs, dtype=bool)
    val = np.zeros(space.n_dofs)
    if not spec:
        return mask, val
    pts = space.dof_points()
    for name, entry in spec.items():
        tid = TAG_ID[name]
        for e in mesh.boundary_edges:
            if mesh.edge_tag[e] != tid:
                continue
            ids = list(mesh.edge_vids[e])
            if space.k >= 2:
                ids.append(space.n_vertex_dofs + e)
            for i in ids:
                mask[i] = True
                val[i] = entry(pts[i]) if callable(entry) else entry
    return mask, val


# ---------------------------------------------------------------------------
# viscous stage

@dataclass
class ViscousResult:
    ux: np.ndarray
    uy: np.ndarray
    txx: np.ndarray
    txy: np.ndarray
    tyy: np.ndarray
    iterations: int
    history: np.ndarray


def solve_viscous(stage: StageContext, w_dstar_raw, rho_q, dt, eos: EosParams,
                  vel_mask=None, vel_val=None,
                  cfg: KrylovConfig | None = None) -> ViscousResult:
    """Solve M^rho u* + dt K tau(u*) = int w** phi for the conforming u*.

    w_dstar_raw: per-cell raw coefficients (nc, nk, 2) of the reconstructed
    intermediate momentum; rho_q: pointwise stage density at volume quadrature
    points.  mu = 0 degenerates to the weighted mass solve.
    """
    sp = stage.space
    n = sp.n_dofs
    cfg = cfg or KrylovConfig()
    Mb = stage.mass_blocks(rho_q)
    rhs = stage.rhs_from_poly(w_dstar_raw)            # (n, 2)
    mu = eos.mu

    if vel_mask is None:
        vel_mask = np.zeros((2, n), dtype=bool)
        vel_val = np.zeros((2, n))
    free = ~vel_mask

    Mcsr = stage.assemble_csr(Mb)
    if mu > 0.0:
        # stress pipeline as sparse factors: dof-gradient maps, K scatter
        DGX = stage.assemble_csr(
            [np.einsum("gna,gam->gnm", g["D_low"], g["GX"])
             for g in stage.groups])
        DGY = stage.assemble_csr(
            [np.einsum("gna,gam->gnm", g["D_low"], g["GY"])
             for g in stage.groups])
        KXm = stage.assemble_csr([g["KX"] for g in stage.groups])
        KYm = stage.assemble_csr([g["KY"] for g in stage.groups])
        minv = 1.0 / stage.ops.multiplicity

    def full_apply(ux, uy):
        ax = Mcsr @ ux
        ay = Mcsr @ uy
        if mu > 0.0:
            gxx = DGX @ ux
            gyx = DGY @ ux
            gxy = DGX @ uy
            gyy = DGY @ uy
            div = gxx + gyy
            txx = mu * minv * (2.0 * gxx - (2.0 / 3.0) * div)
            tyy = mu * minv * (2.0 * gyy - (2.0 / 3.0) * div)
            txy = mu * minv * (gyx + gxy)
            ax = ax + dt * (KXm @ txx + KYm @ txy)
            ay = ay + dt * (KXm @ txy + KYm @ tyy)
        return ax, ay

    ubc = np.where(vel_mask, vel_val, 0.0)
    bx, by = full_apply(ubc[0], ubc[1])
    b = np.concatenate([(rhs[:, 0] - bx)[free[0]], (rhs[:, 1] - by)[free[1]]])
    nx = int(free[0].sum())

    def op(v):
        ux = np.zeros(n)
        uy = np.zeros(n)
        ux[free[0]] = v[:nx]
        uy[free[1]] = v[nx:]
        ax, ay = full_apply(ux, uy)
        return np.concatenate([ax[free[0]], ay[free[1]]])

    diagM = stage.block_diag(Mb)
    diag = np.concatenate([diagM[free[0]], diagM[free[1]]])
    if mu == 0.0:
        res = cg_solve(op, b, cfg, diag=diag)
    else:
        res = gmres_solve(op, b, cfg, diag=diag)
    ux = ubc[0].copy()
    uy = ubc[1].copy()
    ux[free[0]] = res.x[:nx]
    uy[free[1]] = res.x[nx:]
    txx, txy, tyy = stage.stress_dofs(ux, uy, mu) if mu > 0.0 else \
        (np.zeros(n), np.zeros(n), np.zeros(n))
    return ViscousResult(ux, uy, txx, txy, tyy, res.iterations, res.history)


# ---------------------------------------------------------------------------
# flux-form cell updates (exactly telescoping on interior edges)

def _edge_flux_updates(stage: StageContext, fx_gl, fy_gl=None):
    """Cell updates (1/|P|) closed-boundary integral of a single-valued edge
    field; returns (per-cell update, boundary tally).

    fx_gl (ne, ngl) [, fy_gl]: GL values of the flux vector components; the
    integrand is f.n with the owner's outward normal.
    """
    m = stage.mesh
    nrm = m.edge_normal
    if fy_gl is None:
        fn = fx_gl                                 # caller pre-dotted with n
    else:
        fn = fx_gl * nrm[:, None, 0] + fy_gl * nrm[:, None, 1]
    edge_int = np.einsum("eg,eg->e", m.edge_glw, fn)
    upd = np.zeros(m.n_cells)
    own, nei = m.edge_cells[:, 0], m.edge_cells[:, 1]
    np.add.at(upd, own, edge_int)
    interior = nei >= 0
    np.add.at(upd, nei[interior], -edge_int[interior])
    return upd / m.cell_area, edge_int[~interior].sum()


def viscous_momentum_update(stage: StageContext, w_dstar, vis: ViscousResult,
                            dt):
    """w* = w** + dt/|P| closed-integral of tau.n; returns (w_star, tally)."""
    gl = stage.gl_dofs
    txx, txy, tyy = vis.txx[gl], vis.txy[gl], vis.tyy[gl]
    ux_upd, tx_b = _edge_flux_updates(stage, txx, txy)
    uy_upd, ty_b = _edge_flux_updates(stage, txy, tyy)
    w_star = np.array(w_dstar, dtype=float)
    w_star[:, 0] += dt * ux_upd
    w_star[:, 1] += dt * uy_upd
    return w_star, dt * np.array([tx_b, ty_b])


def viscous_work_update(stage: StageContext, ek_dstar, vis: ViscousResult,
                        dt):
    """p* = (rho k)** + dt/|P| closed-integral of (tau u*).n; (p_star, tally)."""
    gl = stage.gl_dofs
    ux, uy = vis.ux[gl], vis.uy[gl]
    vx = vis.txx[gl] * ux + vis.txy[gl] * uy
    vy = vis.txy[gl] * ux + vis.tyy[gl] * uy
    upd, tally = _edge_flux_updates(stage, vx, vy)
    return np.asarray(ek_dstar, dtype=float) + dt * upd, dt * tally


def momentum_correction(stage: StageContext, w_star, p_tilde, dt):
    """w^{n+1} = w* - dt/|P| closed-integral of p n; returns (w_new, tally)."""
    gl = stage.gl_dofs
    pgl = p_tilde[gl]
    # x-component uses f.n with f=(p,0): integrand p*n_x; similarly y
    fx_upd, bx = _edge_flux_updates(stage, pgl, np.zeros_like(pgl))
    fy_upd, by = _edge_flux_updates(stage, np.zeros_like(pgl), pgl)
    w_new = np.array(w_star, dtype=float)
    w_new[:, 0] -= dt * fx_upd
    w_new[:, 1] -= dt * fy_upd
    return w_new, -dt * np.array([bx, by])


# ---------------------------------------------------------------------------
# pressure stage

@dataclass
class PressureResult:
    p_dofs: np.ndarray
    iterations: int
    residual: float
    history: np.ndarray


def solve_pressure(stage: StageContext, blocks, rhs, p_mask=None, p_val=None,
                   x0=None, cfg: KrylovConfig | None = None) -> PressureResult:
    """CG solve of the assembled symmetric pressure system."""
    cfg = cfg or KrylovConfig()
    A = stage.assemble_csr(blocks)
    if p_mask is None or not p_mask.any():
        diag = stage.block_diag(blocks)
        res = cg_solve(lambda v: A @ v, rhs, cfg, x0=x0, diag=diag)
        return PressureResult(res.x, res.iterations, res.residual, res.history)
    free = ~p_mask
    pbc = np.where(p_mask, p_val, 0.0)
    b = (rhs - A @ pbc)[free]
    Aff = A[free][:, free].tocsr()
    diag = stage.block_diag(blocks)[free]
    x0f = None if x0 is None else x0[free]
    res = cg_solve(lambda v: Aff @ v, b, cfg, x0=x0f, diag=diag)
    full = pbc.copy()
    full[free] = res.x
    return PressureResult(full, res.iterations, res.residual, res.history)


def pressure_blocks(stage: StageContext, h_q, dt, gamma):
    """Per-group blocks of (1/(gamma-1)) M + dt^2 K with enthalpy weight."""
    Mb = stage.mass_blocks()
    Kb = stage.stiffness_blocks(h_q)
    return [m / (gamma - 1.0) + dt * dt * k for m, k in zip(Mb, Kb)]


def pressure_rhs(stage: StageContext, p_base_raw, p_star_raw, kin_q,
                 hw_x_q, hw_y_q, dt, gamma):
    """F_p = int (p^n/(gamma-1) + p* - kin) phi + dt int h w* . grad phi.

    p_base_raw, p_star_raw: per-cell raw coefficient arrays (nc, nk, 1);
    kin_q: pointwise kinetic energy at volume quad points; hw_*_q: pointwise
    enthalpy-weighted momentum components at volume quad points.
    """
    nk = stage.space.nk
    nkm = stage.space.nkm
    rhs = stage.rhs_from_poly(p_base_raw / (gamma - 1.0) + p_star_raw)
    rhs -= stage.rhs_from_moments(stage.moments(kin_q, nk), "PI0")
    rhs += dt * stage.rhs_from_moments(stage.moments(hw_x_q, nkm), "GX")
    rhs += dt * stage.rhs_from_moments(stage.moments(hw_y_q, nkm), "GY")
    return rhs


def kinetic_cell_means(stage: StageContext, kin_q):
    """(1/|P|) sum_q w_q kin(x_q): must match the rhs quadrature exactly."""
    mom = stage.moments(kin_q, 1)[:, 0]
    return mom / stage.mesh.cell_area
