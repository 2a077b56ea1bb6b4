"""Integrable Hamiltonian flow, action, validity horizon and classical
solutions by the method of characteristics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, HorizonExceeded, NoConvergence


@dataclass(frozen=True)
class PhaseState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ConfigError("phase state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class Characteristic:
    """Straight line t ↦ (q0 + t∇H(p0), p0) with its action."""

    H: object
    start: PhaseState

    def at(self, t):
        return flow(self.H, t, self.start)

    def action(self, t):
        return action(self.H, t, self.start.p)


def flow(H, t, state):
    """φ^t(q, p) = (q + t∇H(p), p)."""
    return PhaseState(state.q + t * H.grad(state.p), state.p)


def action(H, t, p):
    """t (p·∇H(p) - H(p)), vectorised over leading axes of p."""
    P = np.asarray(p, dtype=float)
    if H.dim == 1 and (P.ndim == 0 or P.shape[-1] != 1):
        P = P[..., None]
    return t * (np.sum(P * H.grad(P), axis=-1) - H.value(P))


def validity_time(B, C):
    """T = 1/(B C)."""
    if not (B > 0 and C > 0):
        raise ConfigError("B and C must be positive")
    return 1.0 / (B * C)


def horizon(H, u0):
    """Horizon 1/(B C_L) where C_L bounds the Hessian on the ball ‖p‖ <= L.

    Infinite for B = 0.  The momenta of the front never leave that ball,
    so the local bound is the one that matters (never above ``c_bound``).
    """
    if u0.B <= 0:
        return np.inf
    return validity_time(u0.B, H.curvature_bound(u0.L))


def padding(H, u0, t):
    """t · max‖∇H‖ over ‖p‖ <= L + 1."""
    return t * H.grad_bound(u0.L + 1.0)


@dataclass(frozen=True)
class ClassicalSolution:
    value: np.ndarray
    q0: np.ndarray
    p: np.ndarray


def _landing(H, u0, t, Q0):
    return Q0 + t * H.grad(u0.grad(Q0))


def classical_solve(H, u0, t, q, check_horizon=True, seed=None):
    """Classical solution of the HJ equation at time t and points q.

    Solves q0 + t∇H(du0(q0)) = q.  In 1D by bracketed bisection then
    Newton; in 2D by damped Newton with a 16-point multistart fallback.
    ``seed`` optionally supplies starting points q0 (2D).
    """
    if t < 0:
        raise ConfigError("t must be non-negative")
    if check_horizon and t > 0 and t >= horizon(H, u0):
        raise HorizonExceeded(f"t={t} is beyond the classical horizon {horizon(H, u0):.6g}")
    if u0.dim == 1:
        Q = np.asarray(q, dtype=float)
        shape = Q.shape
        Q0 = _solve_1d(H, u0, t, Q.ravel()).reshape(shape)
        Q0 = Q0[..., None]
        Qp = Q[..., None]
    else:
        Qp = np.asarray(q, dtype=float)
        Q0 = _solve_nd(H, u0, t, Qp, seed)
    p = u0.grad(Q0)
    P = p
    value = u0.value(Q0) + action(H, t, P)
    if u0.dim == 1:
        return ClassicalSolution(value, Q0[..., 0], p[..., 0])
    return ClassicalSolution(value, Q0, p)


def _solve_1d(H, u0, t, q):
    if t == 0:
        return q.copy()
    pad = t * H.grad_bound(u0.L + 1.0) + 1e-9
    lo, hi = q - pad, q + pad
    F = lambda x: x + t * H.dh(u0.du(x)) - q

    flo, fhi = F(lo), F(hi)
    if np.any(flo > 0) or np.any(fhi < 0):
        raise NoConvergence("root not bracketed; point outside the padded box")
    # bisection to width 1e-6
    while np.max(hi - lo) > 1e-6:
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        left = fm > 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
    x = 0.5 * (lo + hi)
    for _ in range(50):
        fx = F(x)
        d = 1.0 + t * H.d2h(u0.du(x)) * u0.d2u(x)
        step = fx / d
        x_new = np.clip(x - step, lo, hi)
        # fall back to bisection on the bracket if Newton stalls
        if np.all(np.abs(x_new - x) <= 1e-12 * np.maximum(1.0, np.abs(x))):
            x = x_new
            break
        x = x_new
    if np.max(np.abs(F(x))) > 1e-10:
        raise NoConvergence("1D Newton polish failed")
    return x


def _newton_nd(H, u0, t, Q, Q0, iters=60):
    d = Q.shape[-1]
    eye = np.eye(d)
    for _ in range(iters):
        P = u0.grad(Q0)
        res = Q0 + t * H.grad(P) - Q
        J = eye + t * np.einsum("...ij,...jk->...ik", H.hess(P), u0.hess(Q0))
        step = np.linalg.solve(J, res[..., None])[..., 0]
        lam = np.ones(Q0.shape[:-1])
        r0 = np.linalg.norm(res, axis=-1)
        # damping: halve until the residual does not grow
        for _ in range(8):
            cand = Q0 - lam[..., None] * step
            rc = np.linalg.norm(cand + t * H.grad(u0.grad(cand)) - Q, axis=-1)
            bad = rc > r0
            if not np.any(bad):
                break
            lam = np.where(bad, 0.5 * lam, lam)
        Q0 = Q0 - lam[..., None] * step
        if np.max(r0) < 1e-13:
            break
    res = np.linalg.norm(Q0 + t * H.grad(u0.grad(Q0)) - Q, axis=-1)
    return Q0, res


def _solve_nd(H, u0, t, Q, seed=None):
    if t == 0:
        return Q.copy()
    Q0 = Q - t * H.grad(u0.grad(Q)) if seed is None else np.array(seed, dtype=float)
    Q0, res = _newton_nd(H, u0, t, Q, Q0)
    bad = res > 1e-10
    if np.any(bad):
        pad = t * H.grad_bound(u0.L + 1.0)
        offs = np.linspace(-pad, pad, 4)
        starts = np.stack(np.meshgrid(offs, offs, indexing="ij"), -1).reshape(-1, 2)
        Qb = Q[bad]
        best, bres = Q0[bad], res[bad]
        for s in starts:
            cand, r = _newton_nd(H, u0, t, Qb, Qb + s)
            take = r < bres
            best[take], bres[take] = cand[take], r[take]
        Q0[bad], res[bad] = best, bres
    if np.max(res) > 1e-10:
        raise NoConvergence(f"landing equation residual {np.max(res):.3g} after multistart")
    return Q0
