"""1D radially-symmetric Euler reference solver (cylindrical geometry).

Second-order TVD scheme: MUSCL reconstruction with minmod slopes, HLL fluxes,
two-stage Runge-Kutta in time, and the geometric source -1/r * (rho u, rho u^2,
u (E+p)) treated pointwise.  Reflective wall at r = 0, outflow at r = R.
Used only as a reference curve for the circular explosion benchmark; it shares
no code with the 2D solver.
"""

from __future__ import annotations

import numpy as np


def _prim(U, gamma):
    rho = U[:, 0]
    u = U[:, 1] / rho
    p = (gamma - 1) * (U[:, 2] - 0.5 * rho * u * u)
    return rho, u, p


def _flux(rho, u, p, gamma):
    E = p / (gamma - 1) + 0.5 * rho * u * u
    return np.stack([rho * u, rho * u * u + p, u * (E + p)], axis=1)


def _hll(UL, UR, gamma):
    rhoL, uL, pL = _prim(UL, gamma)
    rhoR, uR, pR = _prim(UR, gamma)
    aL = np.sqrt(gamma * pL / rhoL)
    aR = np.sqrt(gamma * pR / rhoR)
    sL = np.minimum(uL - aL, uR - aR)
    sR = np.maximum(uL + aL, uR + aR)
    FL = _flux(rhoL, uL, pL, gamma)
    FR = _flux(rhoR, uR, pR, gamma)
    F = np.where((sL >= 0)[:, None], FL,
                 np.where((sR <= 0)[:, None], FR,
                          (sR[:, None] * FL - sL[:, None] * FR +
                           (sL * sR)[:, None] * (UR - UL)) /
                          (sR - sL + 1e-300)[:, None]))
    return F


def _minmod(a, b):
    return np.where(a * b <= 0, 0.0, np.where(np.abs(a) < np.abs(b), a, b))


def _rhs(U, dr, r, gamma, alpha=1):
    n = len(U)
    # ghost cells: reflective at r=0, outflow at r=R
    Ug = np.empty((n + 4, 3))
    Ug[2:-2] = U
    Ug[1] = U[0] * np.array([1, -1, 1])
    Ug[0] = U[1] * np.array([1, -1, 1])
    Ug[-2] = U[-1]
    Ug[-1] = U[-1]
    dU = _minmod(Ug[1:-1] - Ug[:-2], Ug[2:] - Ug[1:-1])   # slopes, n+2 rows
    UL = Ug[1:-1] + 0.5 * dU     # right face value of each cell
    UR = Ug[1:-1] - 0.5 * dU     # left face value
    F = _hll(UL[:-1], UR[1:], gamma)                       # n+1 interfaces
    rhs = -(F[1:] - F[:-1]) / dr
    rho, u, p = _prim(U, gamma)
    E = U[:, 2]
    geo = -(alpha / r)[:, None] * np.stack(
        [rho * u, rho * u * u, u * (E + p)], axis=1)
    return rhs + geo


def radial_reference(r_inner_state, r_outer_state, r0, t_final, gamma=1.4,
                     r_max=1.5, n=3000, cfl=0.45):
    """Radial profile (r, rho, u_r, p) of a two-state explosion at t_final."""
    dr = r_max / n
    r = (np.arange(n) + 0.5) * dr
    rho = np.where(r < r0, r_inner_state[0], r_outer_state[0])
    u = np.where(r < r0, r_inner_state[1], r_outer_state[1])
    p = np.where(r < r0, r_inner_state[2], r_outer_state[2])
    U = np.stack([rho, rho * u, p / (gamma - 1) + 0.5 * rho * u * u], axis=1)

    t = 0.0
    while t < t_final - 1e-14:
        rho, u, p = _prim(U, gamma)
        a = np.sqrt(gamma * p / rho)
        dt = min(cfl * dr / np.max(np.abs(u) + a), t_final - t)
        U1 = U + dt * _rhs(U, dr, r, gamma)
        U = 0.5 * (U + U1 + dt * _rhs(U1, dr, r, gamma))
        t += dt
    rho, u, p = _prim(U, gamma)
    return r, rho, u, p
