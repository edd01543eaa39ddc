"""Explicit finite-volume stage: convection of mass, momentum and kinetic
energy with Rusanov fluxes whose dissipation knows nothing about the sound
speed.

The momentum flux carries only rho*u (x) u; pressure belongs to the implicit
stages.  The numerical dissipation speed on an edge is
max(|u^-.n|, |u^+.n|) + c_alpha, so acoustics do not constrain the time step.
The kinetic-energy flux also transports the heat flux q = -lambda grad(theta),
evaluated by centrally averaging the one-sided reconstructed gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh, TAG_ID
from .reconstruct import ReconContext

# column layout of the cell-average field array used across the solver
RHO, WX, WY, RK, P = 0, 1, 2, 3, 4
NFIELDS = 5


class PositivityError(RuntimeError):
    """Raised when a density update would go nonpositive."""

    def __init__(self, cells, values, hint=""):
        self.cells = np.atleast_1d(cells)
        self.values = np.atleast_1d(values)
        msg = (f"nonpositive density in cells {self.cells.tolist()} "
               f"(min {self.values.min():.3e})")
        if hint:
            msg += "; " + hint
        super().__init__(msg)


@dataclass(frozen=True)
class EosParams:
    """Ideal-gas and transport constants plus the artificial viscosity speed."""
    gamma: float = 1.4
    R: float = 1.0
    mu: float = 0.0
    lam: float = 0.0
    c_alpha: float = 0.0

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if self.R <= 0.0:
            raise ValueError("R must be positive")
        if self.c_alpha < 0.0:
            raise ValueError("c_alpha must be nonnegative")

    @property
    def c_v(self) -> float:
        return self.R / (self.gamma - 1.0)

    @property
    def c_p(self) -> float:
        return self.gamma * self.R / (self.gamma - 1.0)


@dataclass
class ConservedField:
    """Cell-average snapshot: density, momentum, kinetic energy, pressure."""
    data: np.ndarray                      # (n_cells, 5) in RHO..P order

    @classmethod
    def from_primitives(cls, rho, ux, uy, p):
        rho = np.asarray(rho, dtype=float)
        d = np.empty((rho.size, NFIELDS))
        d[:, RHO] = rho
        d[:, WX] = rho * ux
        d[:, WY] = rho * uy
        d[:, RK] = 0.5 * rho * (np.asarray(ux) ** 2 + np.asarray(uy) ** 2)
        d[:, P] = p
        return cls(d)

    @property
    def rho(self):
        return self.data[:, RHO]

    @property
    def w(self):
        return self.data[:, WX:WY + 1]

    @property
    def rho_k(self):
        return self.data[:, RK]

    @property
    def p(self):
        return self.data[:, P]

    def rho_E(self, gamma: float):
        return self.data[:, P] / (gamma - 1.0) + self.data[:, RK]

    def velocity(self):
        return self.w / self.rho[:, None]


def enthalpy(p, rho, gamma):
    """Specific enthalpy gamma*p/((gamma-1)*rho); c^2 = (gamma-1)*h."""
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0) or np.any(p <= 0.0):
        raise ValueError("enthalpy needs positive pressure and density")
    return gamma * p / ((gamma - 1.0) * rho)


def heat_flux(grad_theta, lam):
    """Fourier law q = -lambda grad(theta)."""
    return -lam * np.asarray(grad_theta, dtype=float)


@dataclass
class BoundaryConditions:
    """Per-boundary-edge ghost-state data resolved from edge tags.

    state: prescribed primitives (rho, ux, uy, p) for dirichlet/inflow edges;
    wall_velocity: tangential lid velocity for moving walls.  Rows follow
    mesh.boundary_edges order.
    """
    edges: np.ndarray
    tags: np.ndarray
    state: np.ndarray
    wall_velocity: np.ndarray


def resolve_boundary(mesh: Mesh, spec=None) -> BoundaryConditions:
    """Build BoundaryConditions; spec maps tag name -> constant dict or
    callable(midpoint) -> dict with keys among rho, u, p, wall_velocity."""
    edges = mesh.boundary_edges
    tags = mesh.edge_tag[edges]
    state = np.zeros((len(edges), 4))
    wall_v = np.zeros((len(edges), 2))
    spec = spec or {}
    names = {v: k for k, v in TAG_ID.items()}
    for r, e in enumerate(edges):
        name = names[mesh.edge_tag[e]]
        entry = spec.get(name)
        if callable(entry):
            entry = entry(mesh.edge_pts[e].mean(axis=0))
        if entry is None:
            entry = {}
        if name in ("dirichlet", "inflow"):
            if not {"rho", "u", "p"} <= set(entry):
                raise ValueError(f"{name} edges need rho, u, p in the BC spec")
            state[r, 0] = entry["rho"]
            state[r, 1:3] = entry["u"]
            state[r, 3] = entry["p"]
        if "wall_velocity" in entry:
            wall_v[r] = entry["wall_velocity"]
    return BoundaryConditions(edges, tags, state, wall_v)


def rusanov_flux(minus, plus, normal, eos: EosParams, qn=None):
    """Pointwise Rusanov flux of (rho, w, rho_k) through a unit normal.

    minus/plus: (..., 5) traces; normal: (..., 2); qn: optional heat flux
    normal component added to the kinetic-energy flux without dissipation.
    Returns (..., 4) fluxes for (rho, w_x, w_y, rho_k).
    """
    minus = np.asarray(minus, dtype=float)
    plus = np.asarray(plus, dtype=float)
    un_m = (minus[..., WX] * normal[..., 0] + minus[..., WY] * normal[..., 1]) \
        / minus[..., RHO]
    un_p = (plus[..., WX] * normal[..., 0] + plus[..., WY] * normal[..., 1]) \
        / plus[..., RHO]
    s = np.maximum(np.abs(un_m), np.abs(un_p)) + eos.c_alpha

    out = np.empty(minus.shape[:-1] + (4,))
    for c, comp in enumerate((RHO, WX, WY, RK)):
        fm = minus[..., comp] * un_m
        fp = plus[..., comp] * un_p
        out[..., c] = 0.5 * (fm + fp) - 0.5 * s * (plus[..., comp]
                                                   - minus[..., comp])
    if qn is not None:
        out[..., 3] += qn
    return out


def _ghost_traces(mesh, bcs, to, go, eos):
    """Plus-side traces (and gradients) on boundary edges from ghost rules."""
    e = bcs.edges
    tm = to[e]                                   # owner traces (nb, ngl, 5)
    tp = tm.copy()
    gp = None if go is None else go[e].copy()
    n = mesh.edge_normal[e][:, None, :]

    for name, tid in TAG_ID.items():
        sel = bcs.tags == tid
        if not sel.any():
            continue
        if name in ("dirichlet", "inflow"):
            st = bcs.state[sel]
            rho = st[:, 0][:, None]
            tp[sel, :, RHO] = rho
            tp[sel, :, WX] = rho * st[:, 1][:, None]
            tp[sel, :, WY] = rho * st[:, 2][:, None]
            tp[sel, :, RK] = 0.5 * rho * (st[:, 1] ** 2 + st[:, 2] ** 2)[:, None]
            tp[sel, :, P] = st[:, 3][:, None]
            if gp is not None:
                gp[sel] = 0.0
        elif name == "wall_slip":
            wn = tm[sel, :, WX] * n[sel, :, 0] + tm[sel, :, WY] * n[sel, :, 1]
            tp[sel, :, WX] = tm[sel, :, WX] - 2.0 * wn * n[sel, :, 0]
            tp[sel, :, WY] = tm[sel, :, WY] - 2.0 * wn * n[sel, :, 1]
            if gp is not None:
                gp[sel] = _mirror_gradient(go[e][sel], n[sel])
        elif name in ("wall_noslip", "wall_moving"):
            wv = bcs.wall_velocity[sel][:, None, :]
            rho = tm[sel, :, RHO]
            tp[sel, :, WX] = 2.0 * rho * wv[..., 0] - tm[sel, :, WX]
            tp[sel, :, WY] = 2.0 * rho * wv[..., 1] - tm[sel, :, WY]
            tp[sel, :, RK] = 0.5 * (tp[sel, :, WX] ** 2
                                    + tp[sel, :, WY] ** 2) / rho
            if gp is not None:
                gp[sel] = _mirror_gradient(go[e][sel], n[sel])
        # outflow: ghost equals the owner trace, nothing to change
    return tp, gp


def _mirror_gradient(g, n):
    """Reflect per-field gradients so the averaged normal component vanishes
    (adiabatic wall)."""
    nn = n[:, :, None, :]                          # (nb, 1, 1, 2)
    dot = (g * nn).sum(axis=-1, keepdims=True)
    return g - 2.0 * dot * nn


@dataclass
class ConvectiveResult:
    rho: np.ndarray
    w: np.ndarray
    rho_k: np.ndarray
    boundary_flux: np.ndarray        # time-integrated (mass, w_x, w_y, rho_k)
    n_limited: int
    max_speed: float


def convective_update(mesh: Mesh, ctx: ReconContext, eos: EosParams,
                      fields, dt, bcs: BoundaryConditions | None = None,
                      positivity_floor=1e-10,
                      rho_min=1e-12, base=None) -> ConvectiveResult:
    """One explicit convective step on cell averages (n_cells, 5).

    Returns the new density together with the intermediate momentum w** and
    kinetic energy (rho k)**; the pressure column is only read (heat flux).
    Interior fluxes are evaluated once per edge and scatter-added with
    opposite signs, so conservation is exact up to roundoff.  Fluxes are
    always evaluated from `fields`; `base` (default: `fields`) is the state
    the flux divergence is added to, which is what multi-stage IMEX schemes
    need.
    """
    fields = np.asarray(fields, dtype=float)
    coeffs = ctx.reconstruct(fields)
    n_limited = ctx.positivity_scale(coeffs, [RHO, P], floor=positivity_floor)

    to, tn = ctx.edge_traces(coeffs)
    need_q = eos.lam > 0.0
    go = gn = None
    if need_q:
        go, gn = ctx.edge_gradients(coeffs)

    if bcs is None:
        bcs = resolve_boundary(mesh)
    if len(bcs.edges):
        tp_b, gp_b = _ghost_traces(mesh, bcs, to, go, eos)
        tn[bcs.edges] = tp_b
        if need_q and gp_b is not None:
            gn[bcs.edges] = gp_b

    nrm = mesh.edge_normal[:, None, :]
    qn = None
    if need_q:
        # grad(theta) = (rho grad p - p grad rho) / (rho^2 R), averaged sides
        def gtheta(t, g):
            rho = t[..., RHO, None]
            p = t[..., P, None]
            return (rho * g[..., P, :] - p * g[..., RHO, :]) / (rho ** 2 * eos.R)
        gq = 0.5 * (gtheta(to, go) + gtheta(tn, gn))
        qvec = heat_flux(gq, eos.lam)
        qn = qvec[..., 0] * nrm[..., 0] + qvec[..., 1] * nrm[..., 1]

    flux = rusanov_flux(to, tn, nrm, eos, qn=qn)          # (ne, ngl, 4)
    un_m = (to[..., WX] * nrm[..., 0] + to[..., WY] * nrm[..., 1]) / to[..., RHO]
    un_p = (tn[..., WX] * nrm[..., 0] + tn[..., WY] * nrm[..., 1]) / tn[..., RHO]
    max_speed = float(np.max(np.maximum(np.abs(un_m), np.abs(un_p)), initial=0.0))

    edge_int = np.einsum("eg,egc->ec", mesh.edge_glw, flux)   # (ne, 4)

    upd = np.zeros((mesh.n_cells, 4))
    own = mesh.edge_cells[:, 0]
    nei = mesh.edge_cells[:, 1]
    np.add.at(upd, own, -edge_int)
    interior = nei >= 0
    np.add.at(upd, nei[interior], edge_int[interior])
    upd *= dt / mesh.cell_area[:, None]

    if base is None:
        base = fields
    out = np.asarray(base, dtype=float)[:, (RHO, WX, WY, RK)] + upd
    if out[:, 0].min() <= rho_min:
        bad = np.nonzero(out[:, 0] <= rho_min)[0]
        raise PositivityError(bad, out[bad, 0],
                              hint="reduce CFL or increase c_alpha")

    bflux = dt * edge_int[~interior].sum(axis=0) if (~interior).any() \
        else np.zeros(4)
    return ConvectiveResult(out[:, 0], out[:, 1:3], out[:, 3], bflux,
                            n_limited, max_speed)
