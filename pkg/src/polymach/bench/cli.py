"""Command-line front end for the benchmark suite.

Config file format
------------------
Plain text, one ``key = value`` assignment per line; ``#`` starts a comment
and blank lines are ignored.  ``case`` selects a builder from the registry
(vortex, rp1..rp4, explosion, dmr, taylor_green, stokes, viscous_shock,
shear_layer, cavity); every other key is either a keyword argument of that
builder (nx, seed, order, t_final, ...; see each builder's signature) or one
of the run options below.  Values are parsed as bool/int/float when they look
like one, comma-separated lists become tuples, anything else stays a string.

Run options:
    output_dir        where artifacts land (the --output-dir flag wins)
    vtk_every         dump a VTK snapshot every N steps (run only)
    checkpoint_every  write a restartable field file every N steps (run only)
    nx_list           mesh sequence for the convergence command, e.g. 8,15,30

Subcommands:
    run <config>          build the case, advance it to t_final, write the
                          conservation log, final field, VTK dump and cuts
    convergence <config>  run the case on the nx_list sequence against its
                          exact solution; print and save the error/rate table
    mesh <config>         build only the mesh; print stats, write mesh VTK
    oracle <case>         tabulate the case's reference solution (no solver)

Exit codes: 0 success, 1 runtime failure, 2 bad usage/config.
"""

from __future__ import annotations

import argparse
import inspect
import os
import sys
from pathlib import Path


class ConfigError(Exception):
    """Malformed config file or unknown case/key."""


# ---------------------------------------------------------------------------
# config parsing

def parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(parse_value(part) for part in text.split(",") if part.strip())
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text.strip("\"'")


def parse_config(path) -> dict:
    """Read a key = value file into a dict (keys lowered, values coerced)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                              f"got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        out[key] = parse_value(value)
    return out


RUN_KEYS = ("output_dir", "vtk_every", "checkpoint_every", "nx_list")


def split_config(config: dict, args):
    """-> (builder, builder kwargs, run options); validates every key."""
    from . import cases

    if "case" not in config:
        raise ConfigError("config is missing the 'case' key "
                          f"(choose from {', '.join(cases.CASE_BUILDERS)})")
    name = str(config["case"]).lower()
    if name not in cases.CASE_BUILDERS:
        raise ConfigError(f"unknown case '{name}' "
                          f"(choose from {', '.join(cases.CASE_BUILDERS)})")
    builder = cases.CASE_BUILDERS[name]
    params = inspect.signature(builder).parameters
    lowered = {p.lower(): p for p in params}

    kwargs, options = {}, {}
    for key, value in config.items():
        if key == "case":
            continue
        if key in RUN_KEYS:
            options[key] = value
        elif key in lowered:
            kwargs[lowered[key]] = value
        else:
            raise ConfigError(
                f"unknown key '{key}' for case '{name}' (builder accepts "
                f"{', '.join(params)}; run options are {', '.join(RUN_KEYS)})")
    if args.seed is not None and "seed" in lowered:
        kwargs["seed"] = args.seed
    return builder, kwargs, options


def build_case(builder, kwargs):
    try:
        return builder(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def resolve_outdir(args, options, default: str) -> Path:
    out = args.output_dir or options.get("output_dir") or default
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(args) -> int:
    from . import norms
    from ..timeloop import run_case

    builder, kwargs, options = split_config(parse_config(args.config), args)
    case = build_case(builder, kwargs)
    outdir = resolve_outdir(args, options, f"{case.name}_out")

    solver, fields0, controls, pair = case.build()
    print(f"case {case.name}: {solver.mesh.n_cells} cells, degree "
          f"{case.degree}, tableau {case.tableau}, t_final {controls.t_final}")

    on_step = None
    every = int(options.get("vtk_every", 0))
    if every > 0:
        def on_step(step, t, Q, state):
            if step % every == 0:
                norms.export_vtk(Q, solver, outdir / f"{case.name}_{step:06d}.vtk")

    art = run_case(solver, fields0, controls, pair, output_dir=outdir,
                   checkpoint_every=int(options.get("checkpoint_every", 0)),
                   on_step=on_step)
    case.write_outputs(solver, art, outdir)
    print(f"{art.steps} steps to t = {art.t[-1]:.6g} "
          f"in {art.wall_time:.1f} s; energy drift {art.energy_drift():.3e}")
    if case.exact is not None:
        print(norms.error_norms(solver, art.field, case.exact,
                                float(art.t[-1])))
    print(f"artifacts in {outdir}")
    return 0


def cmd_convergence(args) -> int:
    from . import norms

    builder, kwargs, options = split_config(parse_config(args.config), args)
    nx_list = options.get("nx_list")
    if nx_list is None:
        raise ConfigError("convergence needs nx_list, e.g. nx_list = 8,15,30")
    if not isinstance(nx_list, tuple):
        nx_list = (nx_list,)
    kwargs.pop("nx", None)
    name = build_case(builder, dict(kwargs, nx=int(nx_list[0]))).name
    outdir = resolve_outdir(args, options, f"{name}_out")
    table = norms.convergence_study(builder, [int(n) for n in nx_list],
                                    csv_path=outdir / f"{name}_convergence.csv",
                                    **kwargs)
    print(table)
    print(f"table written to {outdir / f'{name}_convergence.csv'}")
    return 0


def cmd_mesh(args) -> int:
    import numpy as np

    from .. import io

    builder, kwargs, options = split_config(parse_config(args.config), args)
    case = build_case(builder, kwargs)
    mesh = case.build_mesh()
    outdir = resolve_outdir(args, options, f"{case.name}_out")
    path = outdir / f"{case.name}_mesh.vtk"
    io.write_vtk(path, mesh, cell_data={"area": mesh.cell_area,
                                        "diameter": mesh.cell_h})
    edges = np.bincount(mesh.cell_vptr[1:] - mesh.cell_vptr[:-1])
    sides = ", ".join(f"{n}-gons: {c}" for n, c in enumerate(edges) if c)
    print(f"case {case.name}: {mesh.n_cells} cells on domain {mesh.domain}")
    print(f"cell diameter min {mesh.cell_h.min():.4g} "
          f"mean {mesh.cell_h.mean():.4g} max {mesh.cell_h.max():.4g}")
    print(sides)
    print(f"total area {mesh.cell_area.sum():.12g}; mesh written to {path}")
    return 0


def _oracle_table(name: str, case_kwargs):
    """-> (header, rows) of the case's reference solution."""
    import numpy as np

    from . import cases

    if name == "cavity":
        ref = cases.ghia_reference(**case_kwargs)
        rows = [("u", y, u) for y, u in ref["y_u"]]
        rows += [("v", x, v) for x, v in ref["x_v"]]
        return ("profile", "coord", "value"), rows

    if name == "explosion":
        case = build_case(cases.CASE_BUILDERS[name], case_kwargs)
        r, rho, u, p = case.reference()
        return ("r", "rho", "u_r", "p"), np.column_stack([r, rho, u, p])

    lines = {
        "vortex": ((5.0, 5.0), (11.0, 5.0)),
        "rp1": ((-0.5, 0.0), (0.5, 0.0)),
        "rp2": ((-0.5, 0.0), (0.5, 0.0)),
        "rp3": ((-0.5, 0.0), (0.5, 0.0)),
        "rp4": ((-0.5, 0.0), (0.5, 0.0)),
        "stokes": ((-0.5, 0.0), (0.5, 0.0)),
        "viscous_shock": ((0.0, 0.2), (1.0, 0.2)),
        "taylor_green": ((0.0, 1.0), (2.0 * np.pi, 1.0)),
    }
    if name not in lines:
        raise ConfigError(f"case '{name}' has no closed-form reference")
    case = build_case(cases.CASE_BUILDERS[name], case_kwargs)
    start, end = np.asarray(lines[name][0]), np.asarray(lines[name][1])
    s = np.linspace(0.0, 1.0, 200)[:, None]
    pts = (1.0 - s) * start + s * end
    prims = case.exact.evaluate(pts, case.t_final)
    return (("x", "y", "rho", "u", "v", "p"),
            np.column_stack([pts, prims]))


def cmd_oracle(args) -> int:
    from . import cases
    from .. import io

    name = args.case.lower()
    if name not in cases.CASE_BUILDERS:
        raise ConfigError(f"unknown case '{name}' "
                          f"(choose from {', '.join(cases.CASE_BUILDERS)})")
    kwargs = {}
    if args.seed is not None and name != "cavity":
        kwargs["seed"] = args.seed
    header, rows = _oracle_table(name, kwargs)
    outdir = resolve_outdir(args, {}, f"{name}_out")
    path = outdir / f"{name}_oracle.csv"
    io.write_csv(path, header, rows)
    print(f"{len(rows)} reference rows written to {path}")
    return 0


# ---------------------------------------------------------------------------
# entry points

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polymach",
        description="All-Mach polygonal flow solver benchmark driver.")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the mesh seed of the selected case")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap the BLAS/LAPACK worker pool")
    parser.add_argument("--output-dir", default=None,
                        help="artifact directory (default <case>_out)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="advance a case to t_final")
    p.add_argument("config", help="key = value config file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="mesh-refinement error study")
    p.add_argument("config", help="config file with an nx_list key")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("mesh", help="generate and inspect the case mesh")
    p.add_argument("config", help="key = value config file")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("oracle", help="tabulate a case's exact reference")
    p.add_argument("case", help="case name, e.g. rp1 or viscous_shock")
    p.set_defaults(func=cmd_oracle)
    return parser


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 2
        # effective only for pools not yet spun up, hence the lazy imports
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver/runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
