"""Benchmark suite: case library, independent oracles, norms, and the CLI.

Submodules import lazily so the command-line entry point can configure
thread pools before numpy loads.
"""

import importlib

_EXPORTS = {
    "cases": (
        "CaseConfig", "ExactSolution", "MeshSpec", "CutSpec", "OutputSpec",
        "CASE_BUILDERS", "field_from_primitives", "exact_riemann_solver",
        "ghia_reference", "vortex_p0", "vortex_primitives",
        "vortex_peak_mach", "vortex_delta_theta", "case_isentropic_vortex",
        "case_riemann", "case_explosion", "case_dmr", "case_taylor_green",
        "case_stokes", "case_viscous_shock", "case_shear_layer",
        "case_cavity",
    ),
    "norms": (
        "ErrorNorms", "ConvergenceTable", "CellLocator", "error_norms",
        "exact_cell_means", "l1_cell_error", "convergence_study",
        "observed_rates", "primitives_at", "sample_cut", "export_vtk",
        "export_cut", "first_crossing", "steepest_point", "cell_vorticity",
        "peak_cells",
    ),
    "riemann": ("exact_riemann", "shock_from_rankine_hugoniot"),
    "becker": ("BeckerProfile",),
    "radial": ("radial_reference",),
    "cli": ("cli_main",),
}

_HOME = {name: mod for mod, names in _EXPORTS.items() for name in names}
_SUBMODULES = ("becker", "cases", "cli", "norms", "radial", "riemann")

__all__ = sorted(_HOME) + list(_SUBMODULES)


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    if name in _HOME:
        mod = importlib.import_module(f".{_HOME[name]}", __name__)
        return getattr(mod, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__
