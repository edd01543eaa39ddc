"""Exact Riemann solver for the 1D Euler equations (ideal gas).

Standalone reference implementation: star-region pressure by Newton iteration
on the two-wave pressure function, with a bisection fallback used both for
robustness and as an independent cross-check of the root.  Kept free of any
solver-module imports so benchmark comparisons are against independent code.
"""

from __future__ import annotations

import numpy as np


class RiemannSolution:
    """Self-similar solution; sample at xi = x/t (vectorized)."""

    def __init__(self, left, right, gamma, p_star, u_star):
        self.left = tuple(float(v) for v in left)
        self.right = tuple(float(v) for v in right)
        self.gamma = float(gamma)
        self.p_star = float(p_star)
        self.u_star = float(u_star)

    def sample(self, xi):
        xi = np.asarray(xi, dtype=float)
        g = self.gamma
        rhoL, uL, pL = self.left
        rhoR, uR, pR = self.right
        aL = np.sqrt(g * pL / rhoL)
        aR = np.sqrt(g * pR / rhoR)
        ps, us = self.p_star, self.u_star

        rho = np.empty_like(xi)
        u = np.empty_like(xi)
        p = np.empty_like(xi)

        lef = xi <= us
        # left side of the contact
        if ps > pL:   # left shock
            rs = rhoL * ((ps / pL + (g - 1) / (g + 1)) /
                         ((g - 1) / (g + 1) * ps / pL + 1))
            sL = uL - aL * np.sqrt((g + 1) / (2 * g) * ps / pL + (g - 1) / (2 * g))
            pre = lef & (xi < sL)
            post = lef & ~pre
            rho[pre], u[pre], p[pre] = rhoL, uL, pL
            rho[post], u[post], p[post] = rs, us, ps
        else:         # left rarefaction
            rs = rhoL * (ps / pL) ** (1 / g)
            a_star = aL * (ps / pL) ** ((g - 1) / (2 * g))
            head, tail = uL - aL, us - a_star
            pre = lef & (xi < head)
            fan = lef & (xi >= head) & (xi < tail)
            post = lef & (xi >= tail)
            rho[pre], u[pre], p[pre] = rhoL, uL, pL
            rho[post], u[post], p[post] = rs, us, ps
            fac = 2 / (g + 1) + (g - 1) / ((g + 1) * aL) * (uL - xi[fan])
            rho[fan] = rhoL * fac ** (2 / (g - 1))
            u[fan] = 2 / (g + 1) * (aL + (g - 1) / 2 * uL + xi[fan])
            p[fan] = pL * fac ** (2 * g / (g - 1))

        rig = ~lef
        if ps > pR:   # right shock
            rs = rhoR * ((ps / pR + (g - 1) / (g + 1)) /
                         ((g - 1) / (g + 1) * ps / pR + 1))
            sR = uR + aR * np.sqrt((g + 1) / (2 * g) * ps / pR + (g - 1) / (2 * g))
            pre = rig & (xi > sR)
            post = rig & ~pre
            rho[pre], u[pre], p[pre] = rhoR, uR, pR
            rho[post], u[post], p[post] = rs, us, ps
        else:         # right rarefaction
            rs = rhoR * (ps / pR) ** (1 / g)
            a_star = aR * (ps / pR) ** ((g - 1) / (2 * g))
            head, tail = uR + aR, us + a_star
            pre = rig & (xi > head)
            fan = rig & (xi <= head) & (xi > tail)
            post = rig & (xi <= tail)
            rho[pre], u[pre], p[pre] = rhoR, uR, pR
            rho[post], u[post], p[post] = rs, us, ps
            fac = 2 / (g + 1) - (g - 1) / ((g + 1) * aR) * (uR - xi[fan])
            rho[fan] = rhoR * fac ** (2 / (g - 1))
            u[fan] = 2 / (g + 1) * (-aR + (g - 1) / 2 * uR + xi[fan])
            p[fan] = pR * fac ** (2 * g / (g - 1))

        return rho, u, p

    def wave_speeds(self):
        """(left head, left tail, contact, right wave) characteristic speeds."""
        g = self.gamma
        rhoL, uL, pL = self.left
        rhoR, uR, pR = self.right
        aL = np.sqrt(g * pL / rhoL)
        aR = np.sqrt(g * pR / rhoR)
        ps, us = self.p_star, self.u_star
        if ps > pL:
            lh = lt = uL - aL * np.sqrt((g + 1) / (2 * g) * ps / pL + (g - 1) / (2 * g))
        else:
            lh = uL - aL
            lt = us - aL * (ps / pL) ** ((g - 1) / (2 * g))
        if ps > pR:
            rw = uR + aR * np.sqrt((g + 1) / (2 * g) * ps / pR + (g - 1) / (2 * g))
        else:
            rw = uR + aR
        return lh, lt, us, rw


def _fK(p, rho_k, p_k, a_k, g):
    """Toro's f_K and its derivative."""
    if p > p_k:
        A = 2.0 / ((g + 1) * rho_k)
        B = (g - 1) / (g + 1) * p_k
        f = (p - p_k) * np.sqrt(A / (p + B))
        df = np.sqrt(A / (p + B)) * (1 - (p - p_k) / (2 * (p + B)))
    else:
        f = 2 * a_k / (g - 1) * ((p / p_k) ** ((g - 1) / (2 * g)) - 1)
        df = (p / p_k) ** (-(g + 1) / (2 * g)) / (rho_k * a_k)
    return f, df


def _pressure_fn(p, left, right, g):
    rhoL, uL, pL = left
    rhoR, uR, pR = right
    aL = np.sqrt(g * pL / rhoL)
    aR = np.sqrt(g * pR / rhoR)
    fL, dL = _fK(p, rhoL, pL, aL, g)
    fR, dR = _fK(p, rhoR, pR, aR, g)
    return fL + fR + (uR - uL), dL + dR


def solve_star_bisection(left, right, gamma, tol=1e-14, itmax=200):
    """Star pressure by plain bisection; the independent cross-check."""
    lo, hi = 1e-14, 1.0
    while _pressure_fn(hi, left, right, gamma)[0] < 0:
        hi *= 10
        if hi > 1e12:
            raise RuntimeError("bisection bracket failed")
    for _ in range(itmax):
        mid = 0.5 * (lo + hi)
        if _pressure_fn(mid, left, right, gamma)[0] > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol * hi:
            break
    return 0.5 * (lo + hi)


def exact_riemann(left, right, gamma=1.4, tol=1e-13):
    """Solve the Riemann problem; states are (rho, u, p) tuples.

    Raises on vacuum or vacuum-generating data.
    """
    rhoL, uL, pL = left
    rhoR, uR, pR = right
    g = float(gamma)
    if min(rhoL, rhoR, pL, pR) <= 0:
        raise ValueError("nonpositive density or pressure")
    aL = np.sqrt(g * pL / rhoL)
    aR = np.sqrt(g * pR / rhoR)
    if 2 * (aL + aR) / (g - 1) <= uR - uL:
        raise ValueError("vacuum generation: pressure positivity violated")

    # two-rarefaction initial guess, clipped away from zero
    z = (g - 1) / (2 * g)
    p0 = ((aL + aR - 0.5 * (g - 1) * (uR - uL)) /
          (aL / pL ** z + aR / pR ** z)) ** (1 / z)
    p = max(p0, 1e-10 * min(pL, pR))
    for _ in range(100):
        f, df = _pressure_fn(p, left, right, g)
        dp = f / df
        pn = p - dp
        if pn <= 0:
            pn = 0.5 * p
        if abs(pn - p) < tol * pn:
            p = pn
            break
        p = pn
    else:
        p = solve_star_bisection(left, right, g)
    fL, _ = _fK(p, rhoL, pL, aL, g)
    fR, _ = _fK(p, rhoR, pR, aR, g)
    u = 0.5 * (uL + uR) + 0.5 * (fR - fL)
    return RiemannSolution(left, right, g, p, u)


def shock_from_rankine_hugoniot(right_state, mach, gamma=1.4):
    """Post-shock state of a right-moving shock hitting `right_state`.

    Returns (left_post_state, shock_speed) satisfying the jump conditions;
    used to build known-answer inputs for the Riemann solver tests.
    """
    g = gamma
    rho0, u0, p0 = right_state
    a0 = np.sqrt(g * p0 / rho0)
    s = u0 + mach * a0
    M2 = mach * mach
    rho1 = rho0 * (g + 1) * M2 / ((g - 1) * M2 + 2)
    p1 = p0 * (1 + 2 * g / (g + 1) * (M2 - 1))
    u1 = s - (s - u0) * rho0 / rho1
    return (rho1, u1, p1), s
