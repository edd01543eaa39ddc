"""Benchmark case library.

Every case is a self-contained CaseConfig: domain, mesh recipe, boundary
map, gas constants, initial condition, scheme order, and time horizon, plus
an exact solution or independent reference oracle where one exists.  A config
builds its own solver, so `run_case(config)` needs nothing out of band.

Conventions shared by all cases: gamma = 1.4, R = 1, CFL = 0.5, and the mesh
resolution label is 1/nx with nx the number of seed columns (cell spacing is
Lx/nx).  Scheme order 2 means degree-1 reconstruction with the two-stage
second-order tableau; order 3 means degree-2 with the four-stage third-order
tableau.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import erf

from .. import io
from ..convective import EosParams
from ..krylov import KrylovConfig
from ..mesh import Mesh, build_voronoi, lattice_seeds
from ..timeloop import ButcherPair, Solver, TimeControls, butcher_pair
from .becker import BeckerProfile
from .radial import radial_reference
from .riemann import exact_riemann

GAMMA = 1.4

_ORDER = {2: (1, "lsdirk2"), 3: (2, "dirk343")}


def _scheme(order: int) -> tuple[int, str]:
    if order not in _ORDER:
        raise ValueError(f"scheme order must be one of {sorted(_ORDER)}")
    return _ORDER[order]


# ---------------------------------------------------------------------------
# configuration containers

@dataclass(frozen=True)
class ExactSolution:
    """Deterministic primitive-variable evaluator (rho, u, v, p).

    fn(x, y, t) takes flat coordinate arrays and returns four arrays (or
    scalars, which are broadcast).  t_min marks the validity boundary of
    self-similar solutions that are singular at t = 0.
    """
    fn: object
    domain: tuple | None = None
    note: str = ""
    t_min: float = 0.0

    def evaluate(self, points, t: float) -> np.ndarray:
        if t < self.t_min:
            raise ValueError(f"exact solution valid for t >= {self.t_min}")
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        vals = self.fn(pts[:, 0], pts[:, 1], t)
        out = np.empty((len(pts), 4))
        for c, v in enumerate(vals):
            out[:, c] = v
        return out

    def __call__(self, points, t: float) -> np.ndarray:
        return self.evaluate(points, t)


@dataclass(frozen=True)
class MeshSpec:
    """Voronoi mesh recipe: jittered nx-by-ny seed lattice (ny defaults to
    the domain aspect ratio), optional Lloyd smoothing, optional half-plane
    cuts, or an imported mesh file that overrides everything else."""
    nx: int = 8
    ny: int | None = None
    jitter: float = 0.2
    seed: int = 0
    lloyd_iters: int = 2
    periodic: tuple = (False, False)
    extra_clips: tuple = ()
    seed_filter: object = None
    mesh_file: str | None = None

    def build(self, domain) -> Mesh:
        if self.mesh_file is not None:
            return io.read_mesh(self.mesh_file)
        rng = np.random.default_rng(self.seed)
        seeds = lattice_seeds(domain, self.nx, self.ny, self.jitter, rng)
        if self.seed_filter is not None:
            seeds = seeds[self.seed_filter(seeds)]
        return build_voronoi(seeds, domain, periodic=self.periodic,
                             lloyd_iters=self.lloyd_iters,
                             extra_clips=self.extra_clips)


@dataclass(frozen=True)
class CutSpec:
    """Straight sampling line for CSV output."""
    start: tuple
    end: tuple
    n: int = 200
    name: str = "cut"


@dataclass(frozen=True)
class OutputSpec:
    vtk: bool = True
    vtk_every: int = 0                 # 0 = final state only
    cuts: tuple = ()


@dataclass
class CaseConfig:
    """Complete description of one benchmark run."""
    name: str
    domain: tuple
    mesh: MeshSpec
    ic: object                          # (x, y) -> (rho, u, v, p)
    t_final: float
    bc: dict | None = None
    pressure_bc: dict | None = None
    eos: EosParams = field(default_factory=EosParams)
    degree: int = 1
    tableau: str = "lsdirk2"
    cfl: float = 0.5
    dt_fixed: float | None = None
    dt_max: float | None = None
    max_steps: int = 1_000_000
    krylov: KrylovConfig | None = None          # pressure CG
    krylov_viscous: KrylovConfig | None = None  # viscous GMRES
    retag: dict | None = None
    exact: ExactSolution | None = None
    reference: object = None            # case-specific oracle data/callable
    output: OutputSpec = field(default_factory=OutputSpec)
    notes: str = ""

    def __post_init__(self):
        xmin, xmax, ymin, ymax = self.domain
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("domain rectangle is empty")
        if self.t_final < 0.0:
            raise ValueError("t_final must be nonnegative")
        butcher_pair(self.tableau)      # fail early on unknown names

    def build_mesh(self) -> Mesh:
        mesh = self.mesh.build(self.domain)
        if self.retag:
            mesh.retag(self.retag)
        return mesh

    def controls(self) -> TimeControls:
        return TimeControls(t_final=self.t_final, cfl=self.cfl,
                            c_alpha=self.eos.c_alpha,
                            max_steps=self.max_steps,
                            dt_fixed=self.dt_fixed, dt_max=self.dt_max)

    def build(self) -> tuple[Solver, np.ndarray, TimeControls, ButcherPair]:
        """(solver, initial cell averages, controls, tableau pair)."""
        mesh = self.build_mesh()
        solver = Solver(mesh, self.degree, self.eos, bc=self.bc,
                        pressure_bc=self.pressure_bc,
                        cg=self.krylov, gmres=self.krylov_viscous)
        fields0 = field_from_primitives(mesh, self.ic)
        return solver, fields0, self.controls(), butcher_pair(self.tableau)

    def with_mesh(self, **mesh_kw) -> "CaseConfig":
        return replace(self, mesh=replace(self.mesh, **mesh_kw))

    def write_outputs(self, solver: Solver, artifacts, outdir):
        """Final-state VTK and cut CSVs per the output spec; called by
        run_case when an output directory is given."""
        from . import norms
        outdir = Path(outdir)
        if self.output.vtk:
            norms.export_vtk(artifacts.field, solver,
                             outdir / f"{self.name}_final.vtk")
        for cut in self.output.cuts:
            norms.export_cut(artifacts.field, solver, cut.start, cut.end,
                             cut.n, outdir / f"{self.name}_{cut.name}.csv")


def field_from_primitives(mesh: Mesh, fn) -> np.ndarray:
    """Cell averages (n_cells, 5) of a primitive-variable field, using the
    mesh's cached volume quadrature (so kinetic energy is the quadrature mean
    of 0.5*rho*|u|^2, consistent with how the solver measures it)."""
    if mesh.vol_qx is None:
        raise ValueError("mesh quadrature not set; build the solver first")
    x, y = mesh.vol_qx[:, 0], mesh.vol_qx[:, 1]
    rho, u, v, p = (np.broadcast_to(np.asarray(a, dtype=float), x.shape)
                    for a in fn(x, y))
    vals = np.stack([rho, rho * u, rho * v,
                     0.5 * rho * (u * u + v * v), p], axis=1)
    sums = np.add.reduceat(vals * mesh.vol_qw[:, None],
                           mesh.vol_qptr[:-1], axis=0)
    return sums / mesh.cell_area[:, None]


# ---------------------------------------------------------------------------
# stationary isentropic vortex (all Mach numbers)

VORTEX_EPS = 5.0
VORTEX_CENTER = (5.0, 5.0)


def vortex_delta_theta(r2, gamma: float = GAMMA, eps: float = VORTEX_EPS):
    """Temperature perturbation of the vortex at squared radius r2."""
    k = (gamma - 1.0) * eps ** 2 / (8.0 * gamma * np.pi ** 2)
    return -k * np.exp(1.0 - np.asarray(r2, dtype=float))


def vortex_primitives(x, y, p0: float, gamma: float = GAMMA,
                      eps: float = VORTEX_EPS):
    """Stationary vortex fields.  Velocity is a divergence-free swirl,
    density follows the isentrope of the temperature dip, and the pressure
    is the p0 = 1 isentropic profile shifted by the constant p0 - 1, which
    keeps radial momentum balance exact for every p0 (only the pressure
    gradient enters, and the gradient of the shift is zero)."""
    dx = np.asarray(x, dtype=float) - VORTEX_CENTER[0]
    dy = np.asarray(y, dtype=float) - VORTEX_CENTER[1]
    r2 = dx * dx + dy * dy
    dth = vortex_delta_theta(r2, gamma, eps)
    f = eps / (2.0 * np.pi) * np.exp(0.5 * (1.0 - r2))
    rho = (1.0 + dth) ** (1.0 / (gamma - 1.0))
    p = p0 + ((1.0 + dth) ** (gamma / (gamma - 1.0)) - 1.0)
    return rho, -f * dy, f * dx, p


def vortex_peak_mach(p0: float, gamma: float = GAMMA,
                     eps: float = VORTEX_EPS, n: int = 4001) -> float:
    """Peak pointwise Mach number of the initial field, by dense radial
    sampling (the fields are radial, so a 1D sweep is dense sampling)."""
    r = np.linspace(0.0, 6.0, n)
    rho, u, v, p = vortex_primitives(r + VORTEX_CENTER[0], VORTEX_CENTER[1],
                                     p0, gamma, eps)
    if np.min(p) <= 0.0:
        raise ValueError(f"vortex pressure nonpositive at p0 = {p0}")
    q = np.hypot(u, v)
    return float(np.max(q / np.sqrt(gamma * p / rho)))


def vortex_p0(M_target: float, gamma: float = GAMMA,
              eps: float = VORTEX_EPS) -> float:
    """Mean pressure giving the requested peak Mach number, by bisection.

    The peak Mach decreases monotonically in p0.  The reachable range is
    bounded above by the positivity limit p0 -> pmin where the core pressure
    vanishes (peak Mach ~ 1.02 for eps = 5), so targets up to sonic resolve
    and hypersonic targets raise.
    """
    if M_target <= 0.0:
        raise ValueError("M_target must be positive")
    k = (gamma - 1.0) * eps ** 2 / (8.0 * gamma * np.pi ** 2)
    pmin = 1.0 - (1.0 - k * np.e) ** (gamma / (gamma - 1.0))
    lo = pmin * (1.0 + 1e-9)
    if vortex_peak_mach(lo, gamma, eps) < M_target:
        raise ValueError(
            f"M_target = {M_target} exceeds the vortex positivity bound")
    hi = max(2.0, 2.0 * lo)
    while vortex_peak_mach(hi, gamma, eps) >= M_target:
        hi *= 2.0
        if hi > 1e30:
            raise ValueError("p0 bisection bracket exploded")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if vortex_peak_mach(mid, gamma, eps) >= M_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def case_isentropic_vortex(M_target: float = 1.0, nx: int = 8,
                           order: int = 2, seed: int = 0,
                           jitter: float = 0.2, lloyd_iters: int = 40,
                           t_final: float = 0.1) -> CaseConfig:
    """Stationary vortex on the periodic box [0,10]^2.

    The mean pressure is calibrated so the peak initial Mach number equals
    M_target; velocity and density do not change with the target, so the low
    Mach regime is reached by raising the background pressure alone.

    The step size comes from the convective CFL alone, which allows t_final
    in very few steps; the L-stable integrator then damps the acoustic
    transient excited by the initial projection instead of resolving it.
    """
    degree, tableau = _scheme(order)
    p0 = vortex_p0(M_target)

    def ic(x, y):
        return vortex_primitives(x, y, p0)

    exact = ExactSolution(
        fn=lambda x, y, t: vortex_primitives(x, y, p0),
        domain=(0.0, 10.0, 0.0, 10.0),
        note=(f"stationary vortex, p0 = {p0:.17g} calibrated by bisection "
              f"on the peak Mach number {M_target:g}"))
    return CaseConfig(
        name=f"vortex_M{M_target:g}",
        domain=(0.0, 10.0, 0.0, 10.0),
        mesh=MeshSpec(nx=nx, jitter=jitter, seed=seed,
                      lloyd_iters=lloyd_iters, periodic=(True, True)),
        ic=ic, t_final=t_final,
        eos=EosParams(gamma=GAMMA, R=1.0),
        degree=degree, tableau=tableau,
        exact=exact,
        notes=f"peak Mach {M_target:g}, p0 = {p0:.6g}")


# ---------------------------------------------------------------------------
# 1D Riemann problems on a thin periodic strip

RIEMANN_STATES = {
    "RP1": dict(left=(1.0, 0.0, 1.0), right=(0.125, 0.0, 0.1),
                x0=0.0, t_final=0.2),
    "RP2": dict(left=(1.0, -1.0, 0.4), right=(1.0, 1.0, 0.4),
                x0=0.0, t_final=0.15),
    "RP3": dict(left=(0.445, 0.698, 3.528), right=(0.5, 0.0, 0.571),
                x0=0.0, t_final=0.14),
    "RP4": dict(left=(1.0, -19.59745, 1000.0), right=(1.0, -19.59745, 0.01),
                x0=0.3, t_final=0.012),
}


def exact_riemann_solver(left, right, gamma: float = GAMMA, xi=0.0):
    """Sample the self-similar exact solution at xi = (x - x0)/t.

    left/right are (rho, u, p) triples; returns (rho, u, p) at xi.
    """
    return exact_riemann(left, right, gamma=gamma).sample(xi)


def case_riemann(rp_id: str, nx: int = 200, seed: int = 0,
                 jitter: float = 0.2) -> CaseConfig:
    """Riemann problem on [-0.5,0.5] x [-0.05,0.05], periodic in y, far-field
    Dirichlet in x; degree-2 space with first-order time stepping.

    RP1 starts at rest, so the first step uses the fallback dt and a cap
    keeps the step bounded while the flow is still developing.
    """
    rp_id = rp_id.upper()
    if rp_id not in RIEMANN_STATES:
        raise ValueError(f"unknown Riemann problem '{rp_id}' "
                         f"(choose {'/'.join(RIEMANN_STATES)})")
    data = RIEMANN_STATES[rp_id]
    (rl, ul, pl), (rr, ur, pr) = data["left"], data["right"]
    x0 = data["x0"]

    def ic(x, y):
        left_side = x < x0
        return (np.where(left_side, rl, rr), np.where(left_side, ul, ur),
                np.zeros_like(x), np.where(left_side, pl, pr))

    def bc_state(mid):
        rho, u, p = data["left"] if mid[0] < x0 else data["right"]
        return dict(rho=rho, u=(u, 0.0), p=p)

    sol = exact_riemann(data["left"], data["right"], gamma=GAMMA)

    def exact_fn(x, y, t):
        rho, u, p = sol.sample((x - x0) / t)
        return rho, u, np.zeros_like(x), p

    # spacing h = 1/nx; rest start needs a fallback step, capped near the
    # developed-flow CFL value
    h = 1.0 / nx
    at_rest = max(abs(ul), abs(ur)) == 0.0
    umax = max(abs(ul), abs(ur), abs(sol.u_star)) or 1.0
    dt_cfl = 0.5 * (0.5 * h) / umax
    return CaseConfig(
        name=rp_id.lower(),
        domain=(-0.5, 0.5, -0.05, 0.05),
        mesh=MeshSpec(nx=nx, jitter=jitter, seed=seed, lloyd_iters=1,
                      periodic=(False, True)),
        ic=ic, t_final=data["t_final"],
        bc={"dirichlet": bc_state},
        eos=EosParams(gamma=GAMMA, R=1.0),
        degree=2, tableau="euler",
        dt_fixed=dt_cfl if at_rest else None,
        dt_max=1.2 * dt_cfl if at_rest else None,
        exact=ExactSolution(fn=exact_fn, t_min=1e-12,
                            note=f"exact Riemann solution, p* = {sol.p_star:.6g}, "
                                 f"u* = {sol.u_star:.6g}"),
        reference=sol,
        output=OutputSpec(cuts=(CutSpec((-0.5, 0.0), (0.5, 0.0), 200,
                                        "centerline"),)),
        notes=f"{rp_id}: L = {data['left']}, R = {data['right']}")


# ---------------------------------------------------------------------------
# cylindrical explosion

def case_explosion(nx: int = 160, seed: int = 0, order: int = 3,
                   t_final: float = 0.25) -> CaseConfig:
    """Cylindrical Sod-like explosion on [-1,1]^2: dense hot disk of radius
    0.5 in a quiescent ambient, far-field Dirichlet everywhere.  The
    reference is a 1D radial solver with geometric source terms."""
    degree, tableau = _scheme(order)
    inner, outer = (1.0, 0.0, 1.0), (0.125, 0.0, 0.1)
    r0 = 0.5

    def ic(x, y):
        inside = np.hypot(x, y) <= r0
        return (np.where(inside, inner[0], outer[0]), np.zeros_like(x),
                np.zeros_like(x), np.where(inside, inner[2], outer[2]))

    def bc_state(mid):
        rho, u, p = inner if np.hypot(*mid) <= r0 else outer
        return dict(rho=rho, u=(u, 0.0), p=p)

    def reference(t: float = t_final):
        return radial_reference(inner, outer, r0, t, gamma=GAMMA)

    h = 2.0 / nx
    dt_cap = 0.5 * (0.5 * h) / 1.0      # developed speeds are order one
    return CaseConfig(
        name="explosion",
        domain=(-1.0, 1.0, -1.0, 1.0),
        mesh=MeshSpec(nx=nx, seed=seed, lloyd_iters=1),
        ic=ic, t_final=t_final,
        bc={"dirichlet": bc_state},
        eos=EosParams(gamma=GAMMA, R=1.0),
        degree=degree, tableau=tableau,
        dt_fixed=0.25 * dt_cap, dt_max=dt_cap,
        reference=reference,
        output=OutputSpec(cuts=(CutSpec((0.0, 0.0), (1.0, 0.0), 200,
                                        "radial"),)),
        notes="radial dam-break; reference via 1D radial solver")


# ---------------------------------------------------------------------------
# double Mach reflection over a ramp

def case_dmr(nx: int = 50, seed: int = 0, t_final: float = 0.2) -> CaseConfig:
    """Mach-10 shock on [-0.25,3] x [0,2] hitting a 30-degree ramp whose foot
    sits at the origin; inflow left, outflow right, slip walls elsewhere.
    The vertical incident shock starts at x = 0 and travels at speed 10, so
    it stands at x = 2 at t = 0.2.  Default resolution is a coarse desk-scale
    mesh; raise nx toward 400 to approach the reference resolution."""
    alpha = np.pi / 6.0
    post = dict(rho=8.0, u=(8.25, 0.0), p=116.5)   # Mach 10 jump into 1.4/0/1
    pre = dict(rho=1.4, u=(0.0, 0.0), p=1.0)

    def ic(x, y):
        left_side = x < 0.0
        return (np.where(left_side, post["rho"], pre["rho"]),
                np.where(left_side, post["u"][0], pre["u"][0]),
                np.zeros_like(x),
                np.where(left_side, post["p"], pre["p"]))

    sin_a, cos_a = np.sin(alpha), np.cos(alpha)
    spacing = 3.25 / nx

    def above_ramp(seeds):
        # drop seeds inside (or hugging) the removed wedge below the ramp
        s = seeds[:, 0] * sin_a - seeds[:, 1] * cos_a
        return s <= -0.35 * spacing

    return CaseConfig(
        name="dmr",
        domain=(-0.25, 3.0, 0.0, 2.0),
        mesh=MeshSpec(nx=nx, seed=seed, lloyd_iters=0,
                      extra_clips=(((0.0, 0.0), (sin_a, -cos_a),
                                    "wall_slip"),),
                      seed_filter=above_ramp),
        ic=ic, t_final=t_final,
        bc={"inflow": post},
        retag={"xmin": "inflow", "xmax": "outflow",
               "ymin": "wall_slip", "ymax": "wall_slip"},
        eos=EosParams(gamma=GAMMA, R=1.0, c_alpha=1e-3),
        degree=1, tableau="lsdirk2",
        output=OutputSpec(cuts=(CutSpec((-0.25, 1.6), (3.0, 1.6), 400,
                                        "shock_line"),)),
        notes="incident shock speed 10; expected position x = 2 at t = 0.2")


# ---------------------------------------------------------------------------
# decaying Taylor-Green vortex in a box

def case_taylor_green(nu: float = 1e-2, p0: float = 1e2, nx: int = 8,
                      order: int = 2, seed: int = 0,
                      t_final: float = 0.2) -> CaseConfig:
    """Viscous vortex array on [0,2pi]^2 with free-slip walls.

    The reference fields are the incompressible decaying solution with a
    large pressure offset p0/(gamma-1) that pushes the flow toward the low
    Mach regime.  On the box faces the exact normal velocity, tangential
    viscous stress, and normal pressure gradient all vanish, so stress-free
    slip walls represent the solution exactly.
    """

    def fields(x, y, t):
        decay = np.exp(-2.0 * nu * t)
        u = np.sin(x) * np.cos(y) * decay
        v = -np.cos(x) * np.sin(y) * decay
        p = p0 / (GAMMA - 1.0) + 0.25 * (np.cos(2 * x) + np.cos(2 * y)) \
            * decay * decay
        return np.ones_like(x), u, v, p

    two_pi = 2.0 * np.pi
    return CaseConfig(
        name="taylor_green",
        domain=(0.0, two_pi, 0.0, two_pi),
        mesh=MeshSpec(nx=nx, seed=seed, lloyd_iters=2),
        ic=lambda x, y: fields(x, y, 0.0),
        t_final=t_final,
        retag={"xmin": "wall_slip", "xmax": "wall_slip",
               "ymin": "wall_slip", "ymax": "wall_slip"},
        eos=EosParams(gamma=GAMMA, R=1.0, mu=nu),
        degree=_scheme(order)[0], tableau=_scheme(order)[1],
        exact=ExactSolution(fn=fields, domain=(0.0, two_pi, 0.0, two_pi),
                            note=f"decaying vortex array, nu = {nu:g}"),
        notes=f"nu = {nu:g}, background pressure {p0:g}/(gamma-1)")


# ---------------------------------------------------------------------------
# first problem of Stokes (impulsive shear)

def case_stokes(mu: float = 1e-2, nx: int = 100, ny: int = 10, seed: int = 0,
                t_final: float = 1.0) -> CaseConfig:
    """Counter-moving half-planes on [-0.5,0.5] x [-0.2,0.2]: v jumps from
    -0.1 to +0.1 across x = 0 and diffuses as 0.1 erf(x / (2 sqrt(mu t)));
    periodic in y, far states held on the x boundaries."""

    def ic(x, y):
        v = np.where(x <= 0.0, -0.1, 0.1)
        return np.ones_like(x), np.zeros_like(x), v, np.full_like(x, 1 / GAMMA)

    def exact_fn(x, y, t):
        v = 0.1 * erf(x / (2.0 * np.sqrt(mu * t)))
        return np.ones_like(x), np.zeros_like(x), v, np.full_like(x, 1 / GAMMA)

    def bc_state(mid):
        return dict(rho=1.0, u=(0.0, -0.1 if mid[0] < 0.0 else 0.1),
                    p=1 / GAMMA)

    # the flow starts shearing instantly; |v| = 0.1 sets the step scale
    h = 1.0 / nx
    dt_cap = 0.5 * (0.5 * h) / 0.1
    return CaseConfig(
        name="stokes",
        domain=(-0.5, 0.5, -0.2, 0.2),
        mesh=MeshSpec(nx=nx, ny=ny, seed=seed, lloyd_iters=1,
                      periodic=(False, True)),
        ic=ic, t_final=t_final,
        bc={"dirichlet": bc_state},
        eos=EosParams(gamma=GAMMA, R=1.0, mu=mu),
        degree=1, tableau="lsdirk2",
        dt_max=dt_cap,
        exact=ExactSolution(fn=exact_fn, t_min=1e-12,
                            note=f"diffusing shear step, mu = {mu:g}"),
        output=OutputSpec(cuts=(CutSpec((-0.5, 0.0), (0.5, 0.0), 200,
                                        "profile"),)),
        notes=f"mu = {mu:g}")


# ---------------------------------------------------------------------------
# viscous shock profile (Prandtl 3/4)

def case_viscous_shock(nx: int = 200, ny: int = 16, seed: int = 0,
                       t_final: float = 0.2) -> CaseConfig:
    """Traveling Mach-2 viscous shock on [0,1] x [0,0.4] with Pr = 0.75, for
    which the stationary profile solves a closed-form ODE.  The profile
    starts at x = 0.25 and moves right at speed 2; the x boundaries hold the
    saturated far states and y is periodic."""
    profile = BeckerProfile(mach=2.0, gamma=GAMMA, c_v=2.5, mu=2e-2,
                            rho0=1.0, x_shock=0.25)

    def ic(x, y):
        rho, u, p = profile.evaluate(x, 0.0)
        return rho, u, np.zeros_like(x), p

    def exact_fn(x, y, t):
        rho, u, p = profile.evaluate(x, t)
        return rho, u, np.zeros_like(x), p

    def bc_state(mid):
        rho, u, p = (float(a) for a in profile.evaluate(
            np.array([mid[0]]), 0.0))
        return dict(rho=rho, u=(u, 0.0), p=p)

    return CaseConfig(
        name="viscous_shock",
        domain=(0.0, 1.0, 0.0, 0.4),
        mesh=MeshSpec(nx=nx, ny=ny, seed=seed, lloyd_iters=1,
                      periodic=(False, True)),
        ic=ic, t_final=t_final,
        bc={"dirichlet": bc_state},
        eos=EosParams(gamma=GAMMA, R=1.0, mu=2e-2, lam=profile.lam),
        degree=1, tableau="lsdirk2",
        exact=ExactSolution(fn=exact_fn,
                            note="shock-profile ODE solution, Mach 2, "
                                 "Pr = 0.75"),
        reference=profile,
        output=OutputSpec(cuts=(CutSpec((0.0, 0.2), (1.0, 0.2), 200,
                                        "profile"),)),
        notes="mu = 2e-2, lambda = c_p mu / 0.75")


# ---------------------------------------------------------------------------
# perturbed double shear layer

def case_shear_layer(nx: int = 200, seed: int = 0,
                     t_final: float = 1.8) -> CaseConfig:
    """Doubly periodic shear layers at y = 0.25 and 0.75 with a sinusoidal
    transverse kick; high background pressure keeps the flow near the
    incompressible regime.  No exact solution: the run is judged by its
    vortex rollup and by exact conservation on the periodic box."""
    theta, delta = 30.0, 0.05
    p_bg = 1e4 / GAMMA

    def ic(x, y):
        u = np.where(y <= 0.5, np.tanh(theta * (y - 0.25)),
                     np.tanh(theta * (0.75 - y)))
        v = delta * np.sin(2.0 * np.pi * x)
        return np.ones_like(x), u, v, np.full_like(x, p_bg)

    return CaseConfig(
        name="shear_layer",
        domain=(0.0, 1.0, 0.0, 1.0),
        mesh=MeshSpec(nx=nx, seed=seed, lloyd_iters=1, periodic=(True, True)),
        ic=ic, t_final=t_final,
        eos=EosParams(gamma=GAMMA, R=1.0, mu=2e-4),
        degree=1, tableau="lsdirk2",
        notes="layer steepness 30, kick amplitude 0.05, mu = 2e-4")


# ---------------------------------------------------------------------------
# lid-driven cavity

def case_cavity(Re: float = 100.0, nx: int = 80, seed: int = 0,
                t_final: float = 40.0) -> CaseConfig:
    """Unit cavity [-0.5,0.5]^2 with unit lid speed and mu = 1/Re, started
    from rest at high background pressure (lid Mach about 1e-2) and run to a
    fixed horizon where the flow is effectively steady."""
    if Re <= 0.0:
        raise ValueError("Re must be positive")

    def ic(x, y):
        return (np.ones_like(x), np.zeros_like(x), np.zeros_like(x),
                np.full_like(x, 1e4 / GAMMA))

    h = 1.0 / nx
    dt_cap = 0.5 * (0.5 * h) / 1.0      # lid speed bounds the flow speed
    return CaseConfig(
        name=f"cavity_re{Re:g}",
        domain=(-0.5, 0.5, -0.5, 0.5),
        mesh=MeshSpec(nx=nx, seed=seed, lloyd_iters=2),
        ic=ic, t_final=t_final,
        bc={"wall_moving": {"wall_velocity": (1.0, 0.0)}},
        retag={"xmin": "wall_noslip", "xmax": "wall_noslip",
               "ymin": "wall_noslip", "ymax": "wall_moving"},
        eos=EosParams(gamma=GAMMA, R=1.0, mu=1.0 / Re),
        degree=1, tableau="lsdirk2",
        dt_fixed=0.5 * dt_cap, dt_max=dt_cap,
        krylov=KrylovConfig(rel_tol=1e-10, max_iter=4000),
        krylov_viscous=KrylovConfig(rel_tol=1e-9, max_iter=2000),
        reference=ghia_reference,
        output=OutputSpec(cuts=(
            CutSpec((0.0, -0.5), (0.0, 0.5), 200, "vertical"),
            CutSpec((-0.5, 0.0), (0.5, 0.0), 200, "horizontal"))),
        notes=f"Re = {Re:g}, lid velocity (1, 0)")


_GHIA_PATH = Path(__file__).parent / "data" / "ghia_cavity.csv"


def ghia_reference(Re: float = 100.0) -> dict:
    """Shipped cavity centerline data: arrays y_u (y, u on the vertical
    centerline) and x_v (x, v on the horizontal centerline), in this
    package's cavity coordinates (centered box, lid at y = +0.5)."""
    rows = {"u": [], "v": []}
    with open(_GHIA_PATH, newline="") as f:
        for rec in csv.DictReader(row for row in f
                                  if not row.startswith("#")):
            if float(rec["Re"]) == Re:
                rows[rec["profile"]].append((float(rec["coord"]) - 0.5,
                                             float(rec["value"])))
    if not rows["u"] or not rows["v"]:
        raise ValueError(f"no shipped cavity reference data for Re = {Re:g}")
    return {"y_u": np.array(sorted(rows["u"])),
            "x_v": np.array(sorted(rows["v"]))}


# ---------------------------------------------------------------------------
# registry (CLI and convergence drivers look cases up here)

def _rp_builder(rp_id):
    def build(**kw):
        return case_riemann(rp_id, **kw)
    build.__name__ = f"case_{rp_id.lower()}"
    build.__doc__ = f"Riemann problem {rp_id}; see case_riemann."
    return build


CASE_BUILDERS = {
    "vortex": case_isentropic_vortex,
    "rp1": _rp_builder("RP1"),
    "rp2": _rp_builder("RP2"),
    "rp3": _rp_builder("RP3"),
    "rp4": _rp_builder("RP4"),
    "explosion": case_explosion,
    "dmr": case_dmr,
    "taylor_green": case_taylor_green,
    "stokes": case_stokes,
    "viscous_shock": case_viscous_shock,
    "shear_layer": case_shear_layer,
    "cavity": case_cavity,
}
