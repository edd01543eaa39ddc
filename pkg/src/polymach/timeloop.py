"""Time integration: CFL control, the first-order semi-implicit step, and
IMEX Runge-Kutta orchestration in state (Q) form.

One step runs three stages on the cell-average state Q = (rho, wx, wy, rhok, p):
explicit convection gives rho^{n+1}, w**, (rho k)**; the implicit viscous solve
turns those into w*, p*; two implicit pressure solves give the pressure flux
p-tilde (driving the momentum correction) and the pressure state p^{n+1}.  The
kinetic energy in the second solve's right-hand side is re-evaluated from
w^{n+1} with the same quadrature that defines (rho k)^{n+1}, which is what
makes the total energy sum telescope to roundoff.

IMEX stage combinations act on states, not fluxes: each stage solves one
semi-implicit step with a stage-specific explicit state Q_E and implicit base,
and the stage increment is recovered as (Q_I - base)/(a_ii dt).  Stiffly
accurate pairs return the last implicit stage directly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .convective import (RHO, WX, WY, RK, P, EosParams, convective_update,
                         resolve_boundary)
from .krylov import KrylovConfig
from .mesh import Mesh
from .reconstruct import ReconContext
from .stages import (StageContext, fv_to_vem, vem_to_fv, solve_viscous,
                     viscous_momentum_update, viscous_work_update,
                     solve_pressure, pressure_blocks, pressure_rhs,
                     kinetic_cell_means, momentum_correction,
                     velocity_dirichlet, pressure_dirichlet)
from .vem import VemSpace


# ---------------------------------------------------------------------------
# Butcher tableaux

@dataclass
class ButcherPair:
    """Paired explicit (zero-diagonal) and diagonally implicit tableaux.

    tol is the row-sum / weight-sum validation tolerance: exact-algebra pairs
    use 1e-14, pairs stored at printed 6-figure precision need 2e-6.
    """
    name: str
    a_exp: np.ndarray
    b_exp: np.ndarray
    c_exp: np.ndarray
    a_imp: np.ndarray
    b_imp: np.ndarray
    c_imp: np.ndarray
    tol: float = 1e-14

    def __post_init__(self):
        for f in ("a_exp", "b_exp", "c_exp", "a_imp", "b_imp", "c_imp"):
            setattr(self, f, np.asarray(getattr(self, f), dtype=float))
        self.validate()

    @property
    def stages(self) -> int:
        return len(self.b_imp)

    @property
    def stiffly_accurate(self) -> bool:
        return bool(np.max(np.abs(self.a_imp[-1] - self.b_imp)) <= self.tol)

    def validate(self):
        s = self.stages
        shapes = (self.a_exp.shape == (s, s) and self.a_imp.shape == (s, s)
                  and self.b_exp.shape == (s,) and self.c_exp.shape == (s,)
                  and self.c_imp.shape == (s,))
        if not shapes:
            raise ValueError(f"tableau {self.name}: inconsistent shapes")
        if np.any(np.abs(np.triu(self.a_exp)) > 0.0):
            raise ValueError(f"tableau {self.name}: explicit part must be "
                             "strictly lower triangular")
        if np.any(np.abs(np.triu(self.a_imp, 1)) > 0.0):
            raise ValueError(f"tableau {self.name}: implicit part must be "
                             "lower triangular")
        if np.any(np.diag(self.a_imp) <= 0.0):
            raise ValueError(f"tableau {self.name}: implicit diagonal must be "
                             "positive")
        checks = [
            ("sum b_exp", abs(self.b_exp.sum() - 1.0)),
            ("sum b_imp", abs(self.b_imp.sum() - 1.0)),
            ("row sums exp", np.max(np.abs(self.a_exp.sum(1) - self.c_exp))),
            ("row sums imp", np.max(np.abs(self.a_imp.sum(1) - self.c_imp))),
        ]
        for what, err in checks:
            if err > self.tol:
                raise ValueError(
                    f"tableau {self.name}: {what} off by {err:.2e} "
                    f"(tolerance {self.tol:.0e})")


def butcher_pair(name: str) -> ButcherPair:
    """Shipped pairs: 'euler' (1 stage), 'lsdirk2' (order 2), 'dirk343'
    (order 3, 4 stages, stored at the 6-figure printed precision)."""
    if name == "euler":
        return ButcherPair("euler",
                           a_exp=[[0.0]], b_exp=[1.0], c_exp=[0.0],
                           a_imp=[[1.0]], b_imp=[1.0], c_imp=[1.0])
    if name == "lsdirk2":
        g = 1.0 - 1.0 / np.sqrt(2.0)
        beta = 1.0 / (2.0 * g)
        return ButcherPair("lsdirk2",
                           a_exp=[[0.0, 0.0], [beta, 0.0]],
                           b_exp=[1.0 - g, g], c_exp=[0.0, beta],
                           a_imp=[[g, 0.0], [1.0 - g, g]],
                           b_imp=[1.0 - g, g], c_imp=[g, 1.0])
    if name == "dirk343":
        g = 0.435866
        return ButcherPair(
            "dirk343",
            a_exp=[[0.0, 0.0, 0.0, 0.0],
                   [g, 0.0, 0.0, 0.0],
                   [1.437745, -0.719812, 0.0, 0.0],
                   [0.916993, 0.5, -0.416993, 0.0]],
            b_exp=[0.0, 1.208496, -0.644363, g],
            c_exp=[0.0, g, 0.717933, 1.0],
            a_imp=[[g, 0.0, 0.0, 0.0],
                   [0.0, g, 0.0, 0.0],
                   [0.0, 0.282066, g, 0.0],
                   [0.0, 1.208496, -0.644363, g]],
            b_imp=[0.0, 1.208496, -0.644363, g],
            c_imp=[g, g, 0.717933, 1.0],
            tol=2e-6)
    raise ValueError(f"unknown tableau '{name}' "
                     "(choose euler, lsdirk2 or dirk343)")


# ---------------------------------------------------------------------------
# controls and solver bundle

@dataclass
class TimeControls:
    """Step-size policy.  c_alpha here feeds the CFL formula and should match
    the EOS value used by the convective fluxes.  dt_fixed is the fallback
    step used only when the field is everywhere at rest with c_alpha = 0 (an
    impulsive start, say); dt_max, when set, caps the CFL step uniformly."""
    t_final: float
    cfl: float = 0.5
    c_alpha: float = 0.0
    max_steps: int = 1_000_000
    dt_fixed: float | None = None
    dt_max: float | None = None

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError("CFL must lie in (0, 1]")
        if self.t_final < 0.0:
            raise ValueError("t_final must be nonnegative")
        for name in ("dt_fixed", "dt_max"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive, got {v}")


class Solver:
    """All per-mesh machinery one step needs: reconstruction context, VEM
    space, stacked stage tensors, resolved boundary conditions."""

    def __init__(self, mesh: Mesh, k: int, eos: EosParams, bc=None,
                 pressure_bc=None, conservative=True, positivity_floor=1e-10,
                 cg: KrylovConfig | None = None,
                 gmres: KrylovConfig | None = None):
        self.mesh = mesh
        self.k = k
        self.eos = eos
        self.recon = ReconContext(mesh, k)
        self.space = VemSpace(mesh, k)
        self.stage = StageContext(mesh, self.space, self.recon)
        self.bcs = resolve_boundary(mesh, bc)
        if eos.mu > 0.0:
            self.vel_mask, self.vel_val = velocity_dirichlet(self.space, mesh,
                                                             self.bcs)
        else:
            # inviscid: stage 2 is skipped, so no strong velocity dofs (and
            # no axis-alignment demand on slip walls)
            self.vel_mask = np.zeros((2, self.space.n_dofs), dtype=bool)
            self.vel_val = np.zeros((2, self.space.n_dofs))
        self.p_mask, self.p_val = pressure_dirichlet(self.space, mesh,
                                                     pressure_bc or {})
        self.conservative = conservative
        self.positivity_floor = positivity_floor
        self.cg_cfg = cg or KrylovConfig(rel_tol=1e-13)
        self.gmres_cfg = gmres or KrylovConfig(rel_tol=1e-12)

    def pointwise(self, cell_fields, positive_columns=()):
        """Reconstruct cell averages and evaluate at volume quad points."""
        arr = np.asarray(cell_fields, dtype=float)
        squeeze = arr.ndim == 1
        if squeeze:
            arr = arr[:, None]
        coeffs = self.recon.reconstruct(arr)
        if positive_columns:
            self.recon.positivity_scale(coeffs, list(positive_columns),
                                        floor=self.positivity_floor)
        vals = self.stage.values_at_quad(self.stage.raw_coeffs(coeffs))
        return (coeffs, vals[:, 0] if squeeze else vals)


@dataclass
class StepDiag:
    """Per-step solver bookkeeping."""
    n_limited: int = 0
    max_speed: float = 0.0
    viscous_iters: int = 0
    pressure_iters: tuple = (0, 0)
    boundary_convective: np.ndarray = field(
        default_factory=lambda: np.zeros(4))
    boundary_viscous: np.ndarray = field(default_factory=lambda: np.zeros(2))
    boundary_work: float = 0.0
    boundary_pressure: np.ndarray = field(default_factory=lambda: np.zeros(2))


# ---------------------------------------------------------------------------
# one semi-implicit step

def semi_implicit_step(solver: Solver, fields, dt, base=None):
    """Advance cell averages (n_cells, 5) by one first-order semi-implicit
    step of size dt.  `fields` supplies every explicitly evaluated quantity
    (convective fluxes, heat flux, enthalpy weight); `base` (default: fields)
    is the state the increments are applied to, as IMEX stages require.

    Returns (new_fields, StepDiag).
    """
    eos = solver.eos
    st = solver.stage
    Q_E = np.asarray(fields, dtype=float)
    Q_base = Q_E if base is None else np.asarray(base, dtype=float)
    diag = StepDiag()

    # stage 1: explicit convection (+ heat flux) in conservative flux form
    conv = convective_update(solver.mesh, solver.recon, eos, Q_E, dt,
                             bcs=solver.bcs,
                             positivity_floor=solver.positivity_floor,
                             base=Q_base)
    rho_new = conv.rho
    diag.n_limited = conv.n_limited
    diag.max_speed = conv.max_speed
    diag.boundary_convective = conv.boundary_flux

    _, rho_q = solver.pointwise(rho_new, positive_columns=(0,))
    if rho_q.min() <= 0.0:
        raise ValueError("pointwise stage density nonpositive after limiting")

    # stage 2: implicit viscous solve and flux-form momentum/work updates
    if eos.mu > 0.0:
        cw = solver.recon.reconstruct(conv.w)
        vis = solve_viscous(st, st.raw_coeffs(cw), rho_q, dt, eos,
                            solver.vel_mask, solver.vel_val, solver.gmres_cfg)
        diag.viscous_iters = vis.iterations
        w_star, diag.boundary_viscous = viscous_momentum_update(
            st, conv.w, vis, dt)
        p_star, diag.boundary_work = viscous_work_update(
            st, conv.rho_k, vis, dt)
    else:
        w_star = conv.w
        p_star = conv.rho_k

    # stage 3: two pressure solves sharing one operator
    gam = eos.gamma
    _, ep_q = solver.pointwise(Q_E[:, [RHO, P]], positive_columns=(0, 1))
    h_q = gam * ep_q[:, 1] / ((gam - 1.0) * ep_q[:, 0])

    cws, ws_q = solver.pointwise(w_star)
    kin_flux_q = 0.5 * (ws_q[:, 0] ** 2 + ws_q[:, 1] ** 2) / rho_q
    hw_x_q = h_q * ws_q[:, 0]
    hw_y_q = h_q * ws_q[:, 1]

    blocks = pressure_blocks(st, h_q, dt, gam)
    cpb = solver.recon.reconstruct(Q_base[:, P][:, None])
    p_base_raw = st.raw_coeffs(cpb)
    p_star_raw = st.raw_coeffs(solver.recon.reconstruct(p_star[:, None]))
    x0 = fv_to_vem(solver.space, st.ops, cpb[:, :, 0])

    rhs_flux = pressure_rhs(st, p_base_raw, p_star_raw, kin_flux_q,
                            hw_x_q, hw_y_q, dt, gam)
    sol_flux = solve_pressure(st, blocks, rhs_flux, solver.p_mask,
                              solver.p_val, x0, solver.cg_cfg)

    w_new, diag.boundary_pressure = momentum_correction(
        st, w_star, sol_flux.p_dofs, dt)

    _, wn_q = solver.pointwise(w_new)
    kin_state_q = 0.5 * (wn_q[:, 0] ** 2 + wn_q[:, 1] ** 2) / rho_q
    if solver.conservative:
        rhs_state = pressure_rhs(st, p_base_raw, p_star_raw, kin_state_q,
                                 hw_x_q, hw_y_q, dt, gam)
        sol_state = solve_pressure(st, blocks, rhs_state, solver.p_mask,
                                   solver.p_val, sol_flux.p_dofs,
                                   solver.cg_cfg)
        p_dofs = sol_state.p_dofs
        diag.pressure_iters = (sol_flux.iterations, sol_state.iterations)
    else:
        p_dofs = sol_flux.p_dofs
        diag.pressure_iters = (sol_flux.iterations, 0)

    out = np.empty_like(Q_E)
    out[:, RHO] = rho_new
    out[:, WX:WY + 1] = w_new
    out[:, RK] = kinetic_cell_means(st, kin_state_q)
    out[:, P] = vem_to_fv(solver.space, st.ops, p_dofs)[:, 0]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after semi-implicit step")
    return out, diag


# ---------------------------------------------------------------------------
# IMEX orchestration

@dataclass
class ImexState:
    """Stage bookkeeping of one IMEX step (state form)."""
    q_explicit: list
    q_implicit: list
    increments: list
    field: np.ndarray
    pressure: np.ndarray
    diags: list


def imex_step(solver, fields, dt, pair: ButcherPair, stage_solver=None):
    """One IMEX step.  stage_solver(Q_E, Q_base, dt_stage) -> (Q, diag)
    defaults to the PDE semi-implicit step bound to `solver`; tests inject
    scalar ODE solvers here to measure the tableau's temporal order."""
    if stage_solver is None:
        def stage_solver(qe, qb, d):
            return semi_implicit_step(solver, qe, d, base=qb)
    Q = np.asarray(fields, dtype=float)
    qes, qis, ks, diags = [], [], [], []
    for i in range(pair.stages):
        qe = Q.copy()
        qb = Q.copy()
        for j in range(i):
            if pair.a_exp[i, j] != 0.0:
                qe += (dt * pair.a_exp[i, j]) * ks[j]
            if pair.a_imp[i, j] != 0.0:
                qb += (dt * pair.a_imp[i, j]) * ks[j]
        a_ii = pair.a_imp[i, i]
        qi, diag = stage_solver(qe, qb, a_ii * dt)
        ks.append((qi - qb) / (a_ii * dt))
        qes.append(qe)
        qis.append(qi)
        diags.append(diag)
    if pair.stiffly_accurate:
        out = qis[-1]
    else:
        out = Q.copy()
        for b, k in zip(pair.b_imp, ks):
            if b != 0.0:
                out += (dt * b) * k
    p_snap = out[:, P].copy() if out.ndim == 2 and out.shape[1] > P else None
    return out, ImexState(qes, qis, ks, out, p_snap, diags)


# ---------------------------------------------------------------------------
# step control and the run loop

def compute_dt(fields, mesh: Mesh, controls: TimeControls) -> float:
    """dt = CFL min_i h_i/(|u_i| + c_alpha), capped by dt_max when set.  A
    field everywhere at rest with c_alpha = 0 has no CFL scale and falls back
    to dt_fixed, which must then be set."""
    Q = np.asarray(fields, dtype=float)
    speed = np.hypot(Q[:, WX], Q[:, WY]) / Q[:, RHO] + controls.c_alpha
    if speed.max() <= 0.0:
        if controls.dt_fixed is None:
            raise ValueError("field at rest with c_alpha = 0: CFL rule gives "
                             "no time step; set dt_fixed")
        return float(controls.dt_fixed)
    dt = controls.cfl * float(np.min(
        np.where(speed > 0.0, mesh.cell_h / np.maximum(speed, 1e-300),
                 np.inf)))
    if controls.dt_max is not None:
        dt = min(dt, float(controls.dt_max))
    if not np.isfinite(dt) or dt <= 0.0:
        raise ValueError(f"computed dt = {dt}")
    return dt


def global_balances(mesh: Mesh, fields, gamma: float):
    """(mass, momentum_x, momentum_y, total energy) as area-weighted sums."""
    Q = np.asarray(fields, dtype=float)
    a = mesh.cell_area
    return (float(a @ Q[:, RHO]), float(a @ Q[:, WX]), float(a @ Q[:, WY]),
            float(a @ (Q[:, P] / (gamma - 1.0) + Q[:, RK])))


@dataclass
class RunArtifacts:
    """Per-step conservation series plus the final state."""
    steps: int
    t: np.ndarray
    dt: np.ndarray
    mass: np.ndarray
    momentum_x: np.ndarray
    momentum_y: np.ndarray
    energy: np.ndarray
    field: np.ndarray
    completed: bool
    wall_time: float
    conservation_path: Path | None = None
    checkpoints: list = field(default_factory=list)

    def energy_drift(self) -> float:
        return energy_audit(self.energy)


def energy_audit(energy_series) -> float:
    """max_t |E(t) - E(0)| / |E(0)| (absolute drift if E(0) = 0)."""
    e = np.asarray(energy_series, dtype=float)
    drift = float(np.max(np.abs(e - e[0])))
    return drift / abs(e[0]) if e[0] != 0.0 else drift


def run_case(solver, fields0=None, controls: TimeControls | None = None,
             pair: ButcherPair | None = None, output_dir=None,
             checkpoint_every: int = 0, on_step=None) -> RunArtifacts:
    """Advance fields0 to t_final (last step clipped), recording global mass,
    momentum and energy each step; optional conservation CSV, checkpoint
    dumps every `checkpoint_every` steps, and a per-step callback
    on_step(step, t, fields, imex_state).

    The first argument may instead be a case configuration exposing
    build() -> (solver, fields0, controls, pair); its write_outputs(solver,
    artifacts, outdir) hook, if present, runs after the loop whenever
    output_dir is given."""
    case = None
    if hasattr(solver, "build"):
        case = solver
        solver, fields0, controls, pair = case.build()
    pair = pair or butcher_pair("euler")
    mesh = solver.mesh
    gam = solver.eos.gamma
    Q = np.array(fields0, dtype=float)
    outdir = None
    if output_dir is not None:
        outdir = Path(output_dir)
        outdir.mkdir(parents=True, exist_ok=True)

    rows = [(0, 0.0, 0.0) + global_balances(mesh, Q, gam)]
    checkpoints = []
    t = 0.0
    step = 0
    tiny = 1e-12 * max(controls.t_final, 1.0)
    t0 = time.perf_counter()
    while t < controls.t_final - tiny and step < controls.max_steps:
        dt = min(compute_dt(Q, mesh, controls), controls.t_final - t)
        try:
            Q, state = imex_step(solver, Q, dt, pair)
        except Exception as exc:
            raise RuntimeError(
                f"run aborted at step {step + 1}, t = {t:.8g}, dt = {dt:.3e}: "
                f"{exc}") from exc
        t += dt
        step += 1
        rows.append((step, t, dt) + global_balances(mesh, Q, gam))
        if on_step is not None:
            on_step(step, t, Q, state)
        if outdir and checkpoint_every and step % checkpoint_every == 0:
            path = outdir / f"checkpoint_{step:06d}.txt"
            io.write_field(path, Q, t=t)
            checkpoints.append(path)

    arr = np.array(rows, dtype=float)
    cons_path = None
    if outdir:
        cons_path = outdir / "conservation.csv"
        io.write_csv(cons_path, ("step", "t", "dt", "mass", "momentum_x",
                                 "momentum_y", "energy"), rows)
        io.write_field(outdir / "final.txt", Q, t=t)
    artifacts = RunArtifacts(
        steps=step, t=arr[:, 1], dt=arr[:, 2], mass=arr[:, 3],
        momentum_x=arr[:, 4], momentum_y=arr[:, 5], energy=arr[:, 6],
        field=Q, completed=bool(t >= controls.t_final - tiny),
        wall_time=time.perf_counter() - t0,
        conservation_path=cons_path, checkpoints=checkpoints)
    if case is not None and outdir and hasattr(case, "write_outputs"):
        case.write_outputs(solver, artifacts, outdir)
    return artifacts
