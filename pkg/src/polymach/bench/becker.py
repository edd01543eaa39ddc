"""Stationary viscous shock profile (Becker's solution, Pr = 3/4).

At Prandtl number 3/4 the total enthalpy H = c_p*theta + u^2/2 is constant
through the shock layer, so the steady 1D Navier-Stokes system reduces to a
single ODE for the velocity in the shock frame:

    (4/3) mu du/dx = m*u + (m*R/(c_p*u)) * (H0 - u^2/2) - C2

with m the mass flux and C2 the momentum flux of the upstream state.  The
profile x(u) is obtained by quadrature of dx/du between the two Rankine-
Hugoniot roots.  Everything here is independent of the PDE solver modules.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad


class BeckerProfile:
    """Traveling viscous shock in the lab frame.

    Upstream gas at rest at (rho0, p0); the shock moves right at speed
    s = Ms * c0 and the profile is centered (u at the sonic midpoint) at
    x_shock at t = 0.
    """

    def __init__(self, mach, gamma=1.4, c_v=2.5, mu=2e-2, rho0=1.0, p0=None,
                 x_shock=0.25, n_table=2001):
        g = float(gamma)
        self.gamma = g
        self.c_v = float(c_v)
        self.R = (g - 1) * c_v
        self.c_p = g * c_v
        self.mu = float(mu)
        self.prandtl = 0.75
        self.lam = self.c_p * self.mu / self.prandtl
        self.rho0 = float(rho0)
        self.p0 = float(p0) if p0 is not None else 1.0 / g
        self.x_shock = float(x_shock)
        self.mach = float(mach)

        c0 = np.sqrt(g * self.p0 / self.rho0)
        self.speed = mach * c0
        # shock frame: inflow at u0 = s, outflow at the RH state
        u0 = self.speed
        M2 = mach * mach
        rho1 = self.rho0 * (g + 1) * M2 / ((g - 1) * M2 + 2)
        u1 = u0 * self.rho0 / rho1
        self.u0, self.u1 = u0, u1
        self.m = self.rho0 * u0
        theta0 = self.p0 / (self.rho0 * self.R)
        self.H0 = self.c_p * theta0 + 0.5 * u0 * u0
        self.C2 = self.m * u0 + self.p0

        # x(u) table between the roots; endpoints approached exponentially
        eps = 1e-7 * (u0 - u1)
        us = np.linspace(u1 + eps, u0 - eps, n_table)
        um = 0.5 * (u0 + u1)
        x = np.empty_like(us)
        for i, u in enumerate(us):
            lo, hi = (um, u) if u >= um else (u, um)
            val, _ = quad(self._dxdu, lo, hi, limit=200)
            x[i] = val if u >= um else -val
        # Quadrature ran in the flow frame (velocity falls along the flow, so
        # x(u) is decreasing).  The lab shock runs right into gas at rest, so
        # the upstream root u0 sits at xi -> +inf: flip the axis.
        self.u_table = us
        self.x_table = -x

    def _phi(self, u):
        return self.m * u + self.m * self.R / (self.c_p * u) * \
            (self.H0 - 0.5 * u * u) - self.C2

    def _dxdu(self, u):
        return (4.0 / 3.0) * self.mu / self._phi(u)

    def shock_frame_velocity(self, xi):
        """u in the shock frame at offset xi from the profile center."""
        xi = np.asarray(xi, dtype=float)
        # x_table is monotone decreasing in u; build an increasing interp
        order = np.argsort(self.x_table)
        xs = self.x_table[order]
        us = self.u_table[order]
        u = np.interp(xi, xs, us, left=us[0], right=us[-1])
        return u

    def evaluate(self, x, t):
        """(rho, u_lab, p) at lab positions x and time t (vectorized)."""
        x = np.asarray(x, dtype=float)
        xi = x - self.x_shock - self.speed * t
        usf = self.shock_frame_velocity(xi)
        rho = self.m / usf
        theta = (self.H0 - 0.5 * usf * usf) / self.c_p
        p = rho * self.R * theta
        u_lab = self.speed - usf
        return rho, u_lab, p

    def jumps(self):
        """Density, velocity, pressure jump magnitudes across the shock."""
        r0, ul0, p0 = self.evaluate(np.array([1e9]), 0.0)
        r1, ul1, p1 = self.evaluate(np.array([-1e9]), 0.0)
        return abs(r1[0] - r0[0]), abs(ul1[0] - ul0[0]), abs(p1[0] - p0[0])
