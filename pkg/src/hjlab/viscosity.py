"""Viscosity solutions: Lax-Friedrichs grid scheme, Lax-Oleinik formula for
convex H, shock verdicts and test-function residuals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CFLViolation, ConfigError, NotConvex, UnstableDetected
from .hamiltonian import affine_transform, check_entropy_condition, check_lax_condition, \
    classify_convexity, reduce
from .initial_data import lift_profile, transform_condition
from .solution import SolutionGrid, grid_points

THETA_FACTOR = 1.1
BLOWUP = 1e6


@dataclass(frozen=True)
class GridScheme:
    """Uniform grid over the reported window plus ``pad`` ghost-free cells
    per side, explicit steps of size ``dt``."""

    axes: tuple                 # reported window nodes per axis
    dx: tuple
    theta: tuple
    dt: float
    n_steps: int
    pad: tuple                  # padding cells per axis
    t: float                    # requested time
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self):
        return len(self.axes)

    @property
    def cfl(self):
        return self.dt * sum(th / h for th, h in zip(self.theta, self.dx))

    @property
    def snapped_t(self):
        return self.n_steps * self.dt

    def full_axes(self):
        return tuple(a[0] + h * np.arange(-p, len(a) + p)
                     for a, h, p in zip(self.axes, self.dx, self.pad))

    def metadata(self):
        return {"dx": list(self.dx), "dt": self.dt, "theta": list(self.theta), "cfl": self.cfl,
                "snapped_t": self.snapped_t, "n_steps": self.n_steps, "pad": list(self.pad),
                "backend": _kernels.BACKEND}


def _uniform_step(a):
    a = np.asarray(a, dtype=float)
    if a.size < 2:
        raise ConfigError("grid axes need at least two nodes")
    d = np.diff(a)
    h = float(d.mean())
    if h <= 0 or np.max(np.abs(d - h)) > 1e-9 * max(1.0, abs(h)):
        raise ConfigError("grid axes must be uniform and increasing")
    return h


def required_theta(H, u0):
    """θ_i = 1.1 · max |∂H/∂p_i| over ‖p‖ <= L + 1."""
    return tuple(float(THETA_FACTOR * b) for b in H.partial_bounds(u0.L + 1.0))


def make_scheme(H, u0, t, axes, cfl=0.9, theta=None, dt=None, pad=None):
    """Scheme for the window spanned by ``axes`` (an axis or a tuple of axes).

    ``pad`` (cells per axis) defaults to t·max‖∇H‖/dx plus 10 cells.  The
    step is the largest dt <= cfl/Σ(θ/dx) dividing t evenly, unless ``dt``
    is given, in which case t is snapped to a multiple of it.
    """
    if isinstance(axes, np.ndarray) and axes.ndim == 1:
        axes = (axes,)
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    if len(axes) != H.dim or len(axes) != u0.dim:
        raise ConfigError("grid, Hamiltonian and data dimensions differ")
    if t < 0:
        raise ConfigError("t must be non-negative")
    dx = tuple(_uniform_step(a) for a in axes)
    need = required_theta(H, u0)
    if theta is None:
        theta = need
    theta = tuple(float(x) for x in np.broadcast_to(np.asarray(theta, dtype=float), (len(axes),)))
    if any(th < nd * (1 - 1e-12) for th, nd in zip(theta, need)):
        raise CFLViolation(f"theta {theta} below the monotonicity bound {need}")
    rate = sum(th / h for th, h in zip(theta, dx))
    if dt is None:
        dt_max = cfl / rate if rate > 0 else np.inf
        n = 0 if t == 0 else max(1, math.ceil(t / dt_max - 1e-12))
        dt = t / n if n else 0.0
    else:
        if dt <= 0:
            raise ConfigError("dt must be positive")
        n = int(round(t / dt))
    if dt * rate > 1.0 + 1e-12:
        raise CFLViolation(f"dt·Σθ/dx = {dt * rate:.4g} > 1")
    if pad is None:
        reach = t * H.grad_bound(u0.L + 1.0)
        pad = tuple(int(math.ceil(reach / h)) + 10 for h in dx)
    pad = tuple(int(p) for p in np.broadcast_to(np.asarray(pad), (len(axes),)))
    return GridScheme(axes, dx, theta, float(dt), int(n), pad, float(t))


def _march(H, u, scheme, kern):
    dt, th = scheme.dt, scheme.theta
    for step in range(scheme.n_steps):
        if u.ndim == 1:
            pm, pp = kern.lf_diffs_1d(u, scheme.dx[0])
            hv = H.h(0.5 * (pm + pp))
            u = kern.lf_update_1d(u, hv, pm, pp, th[0], dt)
        else:
            p1m, p1p, p2m, p2p = kern.lf_diffs_2d(u, scheme.dx[0], scheme.dx[1])
            P = np.stack([0.5 * (p1m + p1p), 0.5 * (p2m + p2p)], axis=-1)
            hv = H.value(P)
            u = kern.lf_update_2d(u, hv, p1m, p1p, p2m, p2p, th[0], th[1], dt)
        if step % 50 == 49 and not np.all(np.abs(u) < BLOWUP):
            raise UnstableDetected(f"values exceed {BLOWUP:g} after {step + 1} steps")
    if not np.all(np.abs(u) < BLOWUP):
        raise UnstableDetected(f"values exceed {BLOWUP:g}")
    return u


def viscosity_solve(H, u0, t, grid, backend=None, u_init=None):
    """Lax-Friedrichs solution on the scheme's window.

    Ĥ(p⁻, p⁺) = H((p⁻+p⁺)/2) - Σ θ_i (p_i⁺ - p_i⁻)/2 with one-sided
    differences and linearly extrapolated ends.  ``grid`` is a GridScheme
    or window axes (a scheme is then built with defaults).
    """
    scheme = grid if isinstance(grid, GridScheme) else make_scheme(H, u0, t, grid)
    kern = _kernels.backend(backend)
    full = scheme.full_axes()
    if u_init is None:
        Q = grid_points(full)
        u = u0.value(Q if scheme.dim > 1 else Q[..., 0])
    else:
        u = np.asarray(u_init, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    u = _march(H, u, scheme, kern)
    sl = tuple(slice(p, p + len(a)) for p, a in zip(scheme.pad, scheme.axes))
    meta = scheme.metadata()
    meta["snap_error_bound"] = abs(scheme.snapped_t - t) * float(
        np.max(np.abs(H.value(H.sample_box(u0.L + 1.0)))))
    return SolutionGrid(scheme.snapped_t, scheme.axes, u[sl].copy(), "viscosity", meta)


# ---------------------------------------------------------------- conjugate pairs

def affine_pair_solve(H, u0, T, t, axes, cfl=0.9):
    """Both sides of the affine conjugation on matched grids (diagonal A, n = 0).

    With grid steps |a_i|dx_i, θ̄_i = |a_i|θ_i/λ and dt̄ = λ dt the scheme for
    (H̄, u0) reproduces the scheme for (H, v0) node by node.
    """
    A = np.asarray(T.A, dtype=float)
    if np.any(np.abs(A - np.diag(np.diag(A))) > 0) or np.any(T.n != 0) or T.lam <= 0:
        raise ConfigError("viscosity conjugation needs diagonal A, n = 0 and lambda > 0")
    a = np.diag(A)
    Hbar = affine_transform(H, T)
    v0 = transform_condition(u0, A, T.b)
    axes = tuple(np.asarray(x, dtype=float) for x in axes)
    need_v = np.asarray(required_theta(H, v0))
    need_u = np.asarray(required_theta(Hbar, u0))
    theta = np.maximum(need_v, T.lam * need_u / np.abs(a))
    sv = make_scheme(H, v0, t, axes, cfl, theta=theta)
    lhs = viscosity_solve(H, v0, t, sv)
    # mapped grid, reversed along axes with a_i < 0
    u_axes = tuple(np.sort(ai * x) for ai, x in zip(a, axes))
    su = GridScheme(u_axes, tuple(abs(ai) * h for ai, h in zip(a, sv.dx)),
                    tuple(abs(ai) * th / T.lam for ai, th in zip(a, sv.theta)),
                    T.lam * sv.dt, sv.n_steps, sv.pad, T.lam * t)
    full_v = grid_points(sv.full_axes())
    Qv = full_v.reshape(-1, len(axes))
    u_init = u0.value(Qv @ A if len(axes) > 1 else (Qv @ A)[:, 0]).reshape(full_v.shape[:-1])
    for i, ai in enumerate(a):
        if ai < 0:
            u_init = np.flip(u_init, axis=i)
    rhs = viscosity_solve(Hbar, u0, T.lam * t, su, u_init=u_init).values
    for i, ai in enumerate(a):
        if ai < 0:
            rhs = np.flip(rhs, axis=i)
    Q = grid_points(axes).reshape(-1, len(axes))
    rhs = rhs.reshape(-1) + Q @ T.b + T.alpha * T.lam * sv.snapped_t
    return lhs.values.reshape(-1), rhs


def reduction_pair_solve(H, u0, p2, t, axes, cfl=0.9):
    """Both sides of the reduction identity, the 1D run sharing θ1 and dt."""
    axes = tuple(np.asarray(x, dtype=float) for x in axes)
    v0 = lift_profile(u0, p2)
    Hbar = reduce(H, [1], [p2])
    s2 = make_scheme(H, v0, t, axes, cfl)
    lhs = viscosity_solve(H, v0, t, s2)
    s1 = GridScheme((axes[0],), (s2.dx[0],), (s2.theta[0],), s2.dt, s2.n_steps, (s2.pad[0],), t)
    rhs = viscosity_solve(Hbar, u0, t, s1).values
    Q = grid_points(axes)
    return lhs.values.reshape(-1), (rhs[:, None] + p2 * Q[..., 1]).reshape(-1)


# ---------------------------------------------------------------- Lax-Oleinik

@dataclass(frozen=True)
class LegendreTable:
    """H* on a uniform velocity grid, from a dense momentum grid."""

    P: np.ndarray
    V: np.ndarray        # H'(P), nondecreasing
    v0: float
    dv: float
    values: np.ndarray

    def bracket(self, v):
        """Momentum cell [P_k, P_k+1] whose velocities bracket v."""
        k = np.clip(np.searchsorted(self.V, v) - 1, 0, len(self.P) - 2)
        return self.P[k], self.P[k + 1]

    def exact(self, H, v, iters=60):
        """H*(v) with the maximiser found by bisection on H'(p) = v."""
        v = np.asarray(v, dtype=float)
        lo, hi = self.bracket(v)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            right = H.dh(mid) < v
            lo = np.where(right, mid, lo)
            hi = np.where(right, hi, mid)
        p = 0.5 * (lo + hi)
        out = p * v - H.h(p)
        return np.where((v >= self.V[0]) & (v <= self.V[-1]), out, np.inf)


def legendre_table(H, L, n=8193):
    """Dense Legendre transform over momenta [-L-2, L+2]."""
    P = np.linspace(-L - 2.0, L + 2.0, n)
    V = np.maximum.accumulate(H.dh(P))
    v = np.linspace(V[0], V[-1], n)
    tab = LegendreTable(P, V, float(v[0]), float(v[1] - v[0]), np.empty(0))
    vals = tab.exact(H, v)
    return LegendreTable(P, V, float(v[0]), float(v[1] - v[0]), vals)


def lax_oleinik(H, u0, t, q_grid, backend=None, refine=True):
    """min_y u0(y) + t H*((q - y)/t) for convex 1D H."""
    if H.dim != 1 or u0.dim != 1:
        raise ConfigError("lax_oleinik is implemented for d = 1")
    if t <= 0:
        raise ConfigError("lax_oleinik needs t > 0")
    verdict = classify_convexity(H, [(-u0.L - 2.0, u0.L + 2.0)], n_samples=2001)
    if verdict.kind != "Convex":
        raise NotConvex(f"H is {verdict.kind} on the sampled range")
    q = np.asarray(q_grid, dtype=float)
    tab = legendre_table(H, u0.L)
    reach = t * float(np.max(np.abs(tab.V))) + 1e-9
    dq = float(np.min(np.diff(q))) if q.size > 1 else 1e-3
    fine = np.arange(q.min() - reach, q.max() + reach + dq / 8, dq / 4)
    y = np.union1d(fine, q)
    kern = _kernels.backend(backend)
    vals, idx = kern.minplus_argmin(u0.u(y), y, q, float(t), tab.v0, tab.dv, tab.values)
    if refine:
        lo = y[np.clip(idx - 1, 0, len(y) - 1)]
        hi = y[np.clip(idx + 1, 0, len(y) - 1)]
        obj = lambda yy: u0.u(yy) + t * tab.exact(H, (q - yy) / t)
        # vectorised golden-section search on each bracket
        g = (math.sqrt(5) - 1) / 2
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        fc, fd = obj(c), obj(d)
        for _ in range(80):
            left = fc < fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            c_new = hi - g * (hi - lo)
            d_new = lo + g * (hi - lo)
            c, d = c_new, d_new
            fc, fd = obj(c), obj(d)
        cand = np.minimum(np.minimum(fc, fd), obj(y[idx]))
        vals = np.minimum(vals, cand)
    return SolutionGrid(t, (q,), vals, "lax_oleinik", {"n_momenta": len(tab.P)})


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class ShockVerdict:
    is_viscosity: bool
    entropy_margin: float
    lax_margin: float


def shock_viscosity_verdict(H, shock, n_samples=2001):
    """Entropy condition between the one-sided momenta of a min-type shock."""
    e = check_entropy_condition(H, shock.p_left, shock.p_right, n_samples)
    lax = check_lax_condition(H, min(shock.p_left, shock.p_right), max(shock.p_left, shock.p_right))
    return ShockVerdict(bool(e.holds), float(e.margin), float(lax.margin))


def subsolution_residual(H, dt_phi, dq_phi):
    """∂tφ + H(∂qφ); positive at a local max of u - φ breaks the subsolution test."""
    return np.asarray(dt_phi, dtype=float) + H.value(np.asarray(dq_phi, dtype=float))


def saddle_test_residual(a, b, t, q1):
    """Closed-form residual ½(a-b)²((a+b)t + q1) of φ = (u_a + u_b)/2."""
    return 0.5 * (a - b) ** 2 * ((a + b) * t + np.asarray(q1, dtype=float))
