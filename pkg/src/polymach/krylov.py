"""Matrix-free Krylov solvers: conjugate gradients and restarted GMRES.

Both take the operator as a callable and stop on the relative residual
||b - Ax|| / ||b||.  Tolerances default tight (1e-12) because downstream
conservation checks need near-machine solves.  An optional diagonal
(Jacobi) preconditioner and a residual history are supported; the history
can be dumped as a two-column CSV for convergence audits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class KrylovError(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg + f" (last residual {history[-1]:.3e}, "
                         f"{len(history) - 1} iterations)")
        self.history = history


@dataclass
class KrylovConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 0.0
    max_iter: int = 2000
    restart: int = 60

    def __post_init__(self):
        if self.rel_tol <= 0.0 and self.abs_tol <= 0.0:
            raise ValueError("need a positive tolerance")


@dataclass
class KrylovResult:
    x: np.ndarray
    iterations: int
    residual: float
    history: list

    def write_history(self, path):
        with open(path, "w") as f:
            f.write("iteration,residual\n")
            for i, r in enumerate(self.history):
                f.write(f"{i},{r:.17e}\n")


def _target(b, cfg):
    nb = np.linalg.norm(b)
    return max(cfg.rel_tol * nb, cfg.abs_tol), nb


def cg_solve(op, b, cfg: KrylovConfig | None = None, x0=None,
             diag=None) -> KrylovResult:
    """Conjugate gradients for symmetric positive definite operators."""
    cfg = cfg or KrylovConfig()
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - op(x) if x.any() else b.copy()
    target, nb = _target(b, cfg)
    if nb == 0.0:
        return KrylovResult(np.zeros_like(b), 0, 0.0, [0.0])
    minv = None if diag is None else 1.0 / np.asarray(diag, dtype=float)
    z = r if minv is None else minv * r
    p = z.copy()
    rz = r @ z
    hist = [np.linalg.norm(r)]
    if hist[0] <= target:
        return KrylovResult(x, 0, hist[0], hist)
    for it in range(1, cfg.max_iter + 1):
        Ap = op(p)
        pAp = p @ Ap
        if pAp <= 0.0:
            raise KrylovError("CG detected a non-positive-definite operator",
                              hist)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r)
        hist.append(res)
        if res <= target:
            return KrylovResult(x, it, res, hist)
        z = r if minv is None else minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise KrylovError("CG failed to converge", hist)


def gmres_solve(op, b, cfg: KrylovConfig | None = None, x0=None,
                diag=None) -> KrylovResult:
    """Restarted GMRES with modified Gram-Schmidt Arnoldi."""
    cfg = cfg or KrylovConfig()
    b = np.asarray(b, dtype=float)
    n = b.size
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    minv = None if diag is None else 1.0 / np.asarray(diag, dtype=float)

    def prec(v):
        return v if minv is None else minv * v

    target, nb = _target(prec(b), cfg)
    if nb == 0.0:
        return KrylovResult(np.zeros_like(b), 0, 0.0, [0.0])

    hist = []
    total_it = 0
    while True:
        r = prec(b - op(x))
        beta = np.linalg.norm(r)
        if not hist:
            hist.append(beta)
        if beta <= target:
            return KrylovResult(x, total_it, beta, hist)
        m = min(cfg.restart, cfg.max_iter - total_it)
        if m <= 0:
            raise KrylovError("GMRES failed to converge", hist)
        Q = np.zeros((m + 1, n))
        Hm = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        Q[0] = r / beta
        g[0] = beta
        k_done = 0
        for k in range(m):
            # own the buffer: op may hand back its argument (e.g. identity)
            wv = np.array(prec(op(Q[k])), dtype=float)
            for j in range(k + 1):
                Hm[j, k] = wv @ Q[j]
                wv -= Hm[j, k] * Q[j]
            Hm[k + 1, k] = np.linalg.norm(wv)
            if Hm[k + 1, k] > 1e-300:
                Q[k + 1] = wv / Hm[k + 1, k]
            # apply stored Givens rotations, then create a new one
            for j in range(k):
                t = cs[j] * Hm[j, k] + sn[j] * Hm[j + 1, k]
                Hm[j + 1, k] = -sn[j] * Hm[j, k] + cs[j] * Hm[j + 1, k]
                Hm[j, k] = t
            denom = np.hypot(Hm[k, k], Hm[k + 1, k])
            cs[k] = Hm[k, k] / denom
            sn[k] = Hm[k + 1, k] / denom
            Hm[k, k] = denom
            Hm[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            total_it += 1
            k_done = k + 1
            hist.append(abs(g[k + 1]))
            if abs(g[k + 1]) <= target or total_it >= cfg.max_iter:
                break
        y = np.linalg.solve(np.triu(Hm[:k_done, :k_done]), g[:k_done])
        x = x + y @ Q[:k_done]
        res = np.linalg.norm(prec(b - op(x)))
        if res <= target:
            return KrylovResult(x, total_it, res, hist)
        if total_it >= cfg.max_iter:
            raise KrylovError("GMRES failed to converge", hist)
