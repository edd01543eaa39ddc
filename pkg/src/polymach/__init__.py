"""All-Mach compressible Navier-Stokes on polygonal Voronoi meshes.

Hybrid scheme: explicit CWENO finite-volume convection, implicit virtual-element
viscous and pressure stages, IMEX Runge-Kutta time stepping, and a two-solve
pressure correction that conserves total energy to solver tolerance.
"""

__version__ = "0.1.0"
