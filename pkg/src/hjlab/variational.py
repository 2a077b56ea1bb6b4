"""Variational operator R^t: minimal sections, envelope families, the saddle
closed form, operator-axiom checks and conjugation identities."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import wavefront as wf
from .characteristics import action, classical_solve, horizon
from .errors import ConfigError, DomainViolation, HorizonExceeded
from .hamiltonian import AffineTransformParams, affine_transform, reduce
from .initial_data import (KinkedProfile1D, LiftedProfile, MinOfSmooth, Piece,
                           SmoothCondition, lift_profile, min_of_quadratics,
                           transform_condition)
from .solution import SolutionGrid, grid_points

ENVELOPE_SAMPLES = 10_001


def _axes(q_grid):
    if isinstance(q_grid, (tuple, list)) and len(q_grid) and np.ndim(q_grid[0]) == 1:
        return tuple(np.asarray(a, dtype=float) for a in q_grid)
    return (np.asarray(q_grid, dtype=float),)


def _require_horizon(H, u0, t):
    T = horizon(H, u0)
    if t > 0 and t >= T:
        raise HorizonExceeded(f"t={t} is beyond the horizon {T:.6g}")


def _front_domain(H, u0, t, q):
    pad = t * H.grad_bound(u0.L + 1.0) + 1e-3
    return float(np.min(q)) - pad, float(np.max(q)) + pad


def variational_values(H, u0, t, Q):
    """R^t u0 at arbitrary points (1D array or (N, 2) array)."""
    if t < 0:
        raise ConfigError("t must be non-negative")
    _require_horizon(H, u0, t)
    if u0.dim == 1:
        q = np.asarray(Q, dtype=float).reshape(-1)
        if t == 0:
            return u0.u(q)
        front = wf.build_front_1d(H, u0, t, _front_domain(H, u0, t, q))
        curves = wf.resolve_curves(front)
        vals, covered = wf._curve_values(curves, q)
        if not np.all(covered):
            raise wf.EmptyFiber(f"{int(np.sum(~covered))} points have no front point above them")
        return vals.min(axis=0)
    return wf.minimal_values_2d(H, u0, t, Q)


def variational_solve(H, u0, t, q_grid):
    """Minimal section of the front on a grid (1D array or pair of axes)."""
    axes = _axes(q_grid)
    if t < 0:
        raise ConfigError("t must be non-negative")
    _require_horizon(H, u0, t)
    if len(axes) == 1:
        q = axes[0]
        if t == 0:
            return SolutionGrid(0.0, axes, u0.u(q), "variational")
        front = wf.build_front_1d(H, u0, t, _front_domain(H, u0, t, q))
        return wf.minimal_section(front, q)
    return wf.minimal_section_2d(H, u0, t, axes)


# ---------------------------------------------------------------- envelope

@dataclass(frozen=True)
class EnvelopeFamily:
    """Members (1-λ) f_i + λ f_j for each pair (i, j), λ on a uniform grid.

    A finite list of functions is the case i = j with ``n`` = 1.  Members
    are indexed pair-major, so the tie-break toward smaller index prefers
    earlier pairs and smaller λ.
    """

    dim: int
    pieces: tuple = field(repr=False)
    pairs: tuple
    n: int
    L: float
    B: float
    label: object = field(default=None, repr=False)    # (pair, lam) -> reported parameter

    @property
    def size(self):
        return len(self.pairs) * self.n

    def lam(self, k):
        k = np.asarray(k)
        return (k % self.n) / max(self.n - 1, 1)

    def pair_of(self, k):
        return np.asarray(k) // self.n

    def parameter(self, k):
        pair, lam = int(self.pair_of(k)), float(self.lam(k))
        return self.label(pair, lam) if self.label else (pair, lam)

    def _eval(self, pair, lam, Q, what):
        i, j = self.pairs[pair]
        a = getattr(self.pieces[i], what)(Q)
        if i == j:
            return a
        b = getattr(self.pieces[j], what)(Q)
        w = np.asarray(lam, dtype=float).reshape(lam.shape + (1,) * (a.ndim - np.ndim(lam)))
        return (1.0 - w) * a + w * b

    def member(self, k):
        """Member k as a single-piece initial condition."""
        pair, lam = int(self.pair_of(k)), np.asarray(float(self.lam(k)))
        pc = Piece(lambda Q: self._eval(pair, np.broadcast_to(lam, Q.shape[:-1]), Q, "value"),
                   lambda Q: self._eval(pair, np.broadcast_to(lam, Q.shape[:-1]), Q, "grad"),
                   lambda Q: self._eval(pair, np.broadcast_to(lam, Q.shape[:-1]), Q, "hess"))
        box = ((-10.0, 10.0),) * self.dim
        return SmoothCondition(self.dim, pc, self.L, self.B, box[0] if self.dim == 1 else box,
                               f"member({k})")

    def envelope(self, Q):
        """min over sampled members (computed exactly: members are affine in λ)."""
        Q = np.asarray(Q, dtype=float)
        used = sorted({i for p in self.pairs for i in p})
        return np.min([self.pieces[i].value(Q) for i in used], axis=0)


def family_from_condition(u0, n=ENVELOPE_SAMPLES, check=True):
    """Envelope family realising u0 and its Clarke graph.

    Smooth data give a one-member family; kinked data give the convex
    combinations of the two pieces meeting at each kink (interface).
    """
    if isinstance(u0, SmoothCondition):
        return EnvelopeFamily(u0.dim, (u0.piece,), ((0, 0),), 1, u0.L, u0.B)
    if isinstance(u0, KinkedProfile1D):
        pairs = tuple((k, k + 1) for k in range(len(u0.kinks)))
        fam = EnvelopeFamily(1, tuple(u0.pieces), pairs, n, u0.L, u0.B)
    elif isinstance(u0, (MinOfSmooth, LiftedProfile)):
        pairs = tuple((f.i, f.j) for f in u0.interfaces)
        fam = EnvelopeFamily(u0.dim, tuple(u0.pieces), pairs, n, u0.L, u0.B)
    else:
        raise ConfigError(f"no envelope family for {type(u0).__name__}")
    if check:
        box = np.asarray(u0.domain, dtype=float).reshape(u0.dim, 2)
        axes = [np.linspace(lo, hi, 2001 if u0.dim == 1 else 201) for lo, hi in box]
        Q = grid_points(axes).reshape(-1, u0.dim)
        err = np.max(np.abs(fam.envelope(Q) - u0.value(Q)))
        if err > 1e-10:
            raise ConfigError(f"pieces do not realise u0 as a minimum (error {err:.3g})")
    return fam


def saddle_family(a, b, width=3.0, n=ENVELOPE_SAMPLES):
    """Family c(f(q1) - q2), c in [a, b], for the saddle example."""
    u0 = min_of_quadratics(a, b, width)
    fam = family_from_condition(u0, n, check=False)
    return EnvelopeFamily(2, fam.pieces, fam.pairs, n, u0.L, u0.B,
                          label=lambda pair, lam: a + lam * (b - a))


def _member_newton(H, fam, pair, lam, t, Q, Q0, iters=30):
    d = Q.shape[-1]
    eye = np.eye(d)
    Q0 = Q0.copy()
    act = np.arange(len(Q))
    for _ in range(iters):
        X, lm = Q0[act], lam[act]
        P = fam._eval(pair, lm, X, "grad")
        res = X + t * H.grad(P) - Q[act]
        J = eye + t * np.einsum("...ij,...jk->...ik", H.hess(P), fam._eval(pair, lm, X, "hess"))
        step = np.linalg.solve(J, res[..., None])[..., 0]
        Q0[act] = X - step
        act = act[np.max(np.abs(step), axis=-1) > 1e-14 * (1.0 + np.max(np.abs(X), axis=-1))]
        if act.size == 0:
            break
    P = fam._eval(pair, lam, Q0, "grad")
    res = np.linalg.norm(Q0 + t * H.grad(P) - Q, axis=-1)
    return Q0, res


def _member_values(H, fam, pair, lam, t, Q, seed=None):
    """Classical solution of member (pair, lam[i]) at Q[i]."""
    if t == 0:
        return fam._eval(pair, lam, Q, "value"), Q
    if seed is None:
        seed = Q - t * H.grad(fam._eval(pair, lam, Q, "grad"))
    Q0, res = _member_newton(H, fam, pair, lam, t, Q, seed)
    bad = np.flatnonzero(~(res <= 1e-10))
    for lm in np.unique(lam[bad]):
        sel = bad[lam[bad] == lm]
        k = pair * fam.n + int(round(lm * (fam.n - 1)))
        mem = fam.member(k)
        pts = Q[sel, 0] if fam.dim == 1 else Q[sel]
        sol = classical_solve(H, mem, t, pts, check_horizon=False)
        Q0[sel] = sol.q0.reshape(len(sel), fam.dim)
    P = fam._eval(pair, lam, Q0, "grad")
    return fam._eval(pair, lam, Q0, "value") + action(H, t, P), Q0


def _better(v, k, bv, bk):
    # strict improvement, or equal value with smaller index
    return (v < bv) | ((v == bv) & (k < bk))


def envelope_values(H, fam, t, Q, exhaustive=False, levels=(250, 25, 5, 1), centers=2):
    """min over members of the classical solutions, with the argmin index.

    ``exhaustive`` evaluates every member.  Otherwise each λ-segment is
    scanned at stride levels[0] (endpoints included), and the best
    ``centers`` local minima of that scan are refined at the finer strides.
    """
    Q = np.asarray(Q, dtype=float)
    if fam.dim == 1:
        Q = Q.reshape(-1, 1)
    N = len(Q)
    best = np.full(N, np.inf)
    arg = np.full(N, -1, dtype=np.int64)
    n = fam.n
    lam_of = lambda idx: idx / max(n - 1, 1)

    for pair in range(len(fam.pairs)):
        base = pair * n
        if exhaustive or n <= 2 * levels[0] + 1:
            for i in range(n):
                v, _ = _member_values(H, fam, pair, np.full(N, lam_of(i)), t, Q)
                k = np.full(N, base + i)
                m = _better(v, k, best, arg)
                best[m], arg[m] = v[m], k[m]
            continue
        stride = levels[0]
        coarse = np.unique(np.append(np.arange(0, n, stride), n - 1))
        # streaming scan keeping the best ``centers`` local minima
        cv = np.full((centers, N), np.inf)
        ci = np.zeros((centers, N), dtype=np.int64)
        prev2 = np.full(N, np.inf)
        prev = np.full(N, np.inf)
        seed = None
        for pos, i in enumerate(list(coarse) + [None]):
            if i is None:
                cur = np.full(N, np.inf)
            else:
                cur, seed = _member_values(H, fam, pair, np.full(N, lam_of(i)), t, Q, seed)
            if pos >= 1:
                j = coarse[pos - 1]
                is_min = (prev < prev2) & (prev <= cur)
                for c in range(centers):
                    take = is_min & (prev < cv[c])
                    for c2 in range(centers - 1, c, -1):
                        cv[c2] = np.where(take, cv[c2 - 1], cv[c2])
                        ci[c2] = np.where(take, ci[c2 - 1], ci[c2])
                    cv[c] = np.where(take, prev, cv[c])
                    ci[c] = np.where(take, j, ci[c])
                    is_min = is_min & ~take
            prev2, prev = prev, cur
        for c in range(centers):
            valid = np.isfinite(cv[c])
            center = ci[c].copy()
            cand_v, cand_i = cv[c].copy(), center.copy()
            for lvl in range(1, len(levels)):
                span, step = levels[lvl - 1], levels[lvl]
                lv, li = cand_v.copy(), cand_i.copy()
                for off in range(-span, span + 1, step):
                    if off == 0:
                        continue
                    idx = center + off
                    sel = np.flatnonzero(valid & (idx >= 0) & (idx < n))
                    if sel.size == 0:
                        continue
                    v, _ = _member_values(H, fam, pair, lam_of(idx[sel]).astype(float), t, Q[sel])
                    m = _better(v, idx[sel], lv[sel], li[sel])
                    lv[sel[m]], li[sel[m]] = v[m], idx[sel][m]
                center, cand_v, cand_i = li, lv, li
            k = base + cand_i
            m = valid & _better(cand_v, k, best, arg)
            best[m], arg[m] = cand_v[m], k[m]
    return best, arg


def envelope_solve(H, fam, t, q_grid, exhaustive=False):
    """Pointwise min over the family of classical member solutions."""
    axes = _axes(q_grid)
    if t < 0:
        raise ConfigError("t must be non-negative")
    if fam.B > 0 and t > 0:
        T = 1.0 / (fam.B * H.curvature_bound(fam.L))
        if t >= T:
            raise HorizonExceeded(f"t={t} is beyond the members' horizon {T:.6g}")
    Q = grid_points(axes).reshape(-1, len(axes))
    vals, arg = envelope_values(H, fam, t, Q, exhaustive)
    shape = tuple(len(a) for a in axes)
    return SolutionGrid(t, axes, vals.reshape(shape), "envelope",
                        {"argmin": arg.reshape(shape)})


def saddle_closed_form(a, b, t, q1, q2, tol=1e-12):
    """min(a((q1+at)²-q2), b((q1+bt)²-q2)) on -1 <= q1 <= -(3b/2)t."""
    if not (b > a > 0):
        raise ConfigError("need b > a > 0")
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if np.any(q1 < -1.0 - tol) or np.any(q1 > -1.5 * b * t + tol):
        raise DomainViolation(f"q1 must lie in [-1, {-1.5 * b * t:.6g}]")
    return np.minimum(a * ((q1 + a * t) ** 2 - q2), b * ((q1 + b * t) ** 2 - q2))


# ---------------------------------------------------------------- checks

@dataclass
class AxiomReport:
    monotonicity: float = 0.0       # max of R u - R v over pairs with u <= v
    additivity: float = 0.0         # max |R(u+c) - R u - c|
    nonexpansive: float = 0.0       # max of ‖Ru - Rv‖ - ‖u - v‖
    variational: float | None = None  # max distance of outputs to the front (1D)
    violations: list = field(default_factory=list)

    def passed(self, tol=1e-8):
        return not self.violations and max(self.monotonicity, self.additivity,
                                           self.nonexpansive, self.variational or 0.0) <= tol


def _sup_diff(u, v, axes, pad=1.0, n=2001):
    box = [np.linspace(a[0] - pad, a[-1] + pad, n if len(axes) == 1 else 201) for a in axes]
    Q = grid_points(box).reshape(-1, len(axes))
    return float(np.max(np.abs(u.value(Q) - v.value(Q))))


def check_operator_axioms(solver, H, fixtures, constants=(5.0,), tol=1e-8, pad=1.0):
    """Monotonicity, additivity and nonexpansiveness of ``solver`` on fixtures.

    ``solver(u0)`` returns a SolutionGrid; ``fixtures`` is a sequence of
    pairs (u, v) with u <= v.  The variational property is checked for 1D
    variational outputs by measuring the distance from each value to the
    S-values of the front above the same q.
    """
    from .initial_data import add_constant

    rep = AxiomReport()
    for n, (u, v) in enumerate(fixtures):
        Ru, Rv = solver(u), solver(v)
        Ru.require_same_axes(Rv)
        mono = float(np.max(Ru.values - Rv.values))
        rep.monotonicity = max(rep.monotonicity, mono)
        if mono > tol:
            rep.violations.append(("monotonicity", n, mono))
        gap = float(np.max(np.abs(Ru.values - Rv.values))) - _sup_diff(u, v, Ru.axes, pad)
        rep.nonexpansive = max(rep.nonexpansive, gap)
        if gap > tol:
            rep.violations.append(("nonexpansive", n, gap))
        for c in constants:
            Rc = solver(add_constant(u, c))
            err = float(np.max(np.abs(Rc.values - Ru.values - c)))
            rep.additivity = max(rep.additivity, err)
            if err > tol:
                rep.violations.append(("additivity", n, err))
        if Ru.provenance == "variational" and Ru.dim == 1 and Ru.t > 0:
            q = Ru.axes[0]
            front = wf.build_front_1d(H, u, Ru.t, _front_domain(H, u, Ru.t, q))
            S, _ = wf._curve_values(wf.resolve_curves(front), q)
            dist = float(np.max(np.min(np.abs(S - Ru.values[None, :]), axis=0)))
            rep.variational = max(rep.variational or 0.0, dist)
            if dist > tol:
                rep.violations.append(("variational", n, dist))
    return rep


def _ball_samples(dim, radius):
    if dim == 1:
        return np.linspace(-radius, radius, 4001)[:, None]
    ax = np.linspace(-radius, radius, 201)
    P = grid_points([ax] * dim).reshape(-1, dim)
    return P[np.linalg.norm(P, axis=-1) <= radius]


def check_local_estimate(H1, H2, u0, t, q_grid, solver=None):
    """t·sup_{‖p‖<=L}|H1 - H2| - ‖R_{H1} u0 - R_{H2} u0‖∞ on the grid."""
    solver = solver or variational_solve
    R1 = solver(H1, u0, t, q_grid)
    R2 = solver(H2, u0, t, q_grid)
    P = _ball_samples(u0.dim, u0.L)
    bound = t * float(np.max(np.abs(H1.value(P) - H2.value(P))))
    return bound - float(np.max(np.abs(R1.values - R2.values)))


@dataclass(frozen=True)
class Reduction:
    """Pin momenta ``indices`` (0-based) at ``values``; data lifted by p2·q2."""

    indices: tuple
    values: tuple


def conjugation_check(H, u0, T, t, grid, solver="variational", scheme_kw=None):
    """Max residual of the affine or reduction conjugation identity.

    Affine (T an AffineTransformParams, λ > 0):
        R^t_H v0(q) = R^{λt}_{H̄} u0(Aᵀq + λtn) + b·q + αλt,  v0 = u0(Aᵀ·) + b·.
    Reduction (T a Reduction, 1D base data u0):
        R^t_H v0(q1, q2) = R^t_{H̄} u0(q1) + p2·q2,  v0 = u0(q1) + p2·q2.
    ``grid`` is the q-grid of the left-hand side (an axis or a pair of axes).
    The viscosity variant uses matched schemes so that both sides are
    discretely equivalent (see ``viscosity.affine_pair_solve``).
    """
    axes = _axes(grid)
    if isinstance(T, AffineTransformParams):
        if T.lam <= 0:
            raise ConfigError("affine conjugation needs lambda > 0 (forward time)")
        Hbar = affine_transform(H, T)
        v0 = transform_condition(u0, T.A, T.b)
        if u0.B > 0 and t > 0:
            Tmax = 1.0 / (np.linalg.norm(T.A, 2) ** 2 * u0.B * H.curvature_bound(v0.L))
            if t >= Tmax:
                raise HorizonExceeded(f"t={t} is beyond the conjugation horizon {Tmax:.6g}")
        if solver == "variational":
            Q = grid_points(axes).reshape(-1, len(axes))
            lhs = variational_values(H, v0, t, Q if len(axes) > 1 else Q[:, 0])
            Qt = Q @ T.A + T.lam * t * T.n
            rhs = variational_values(Hbar, u0, T.lam * t, Qt if len(axes) > 1 else Qt[:, 0])
            rhs = rhs + Q @ T.b + T.alpha * T.lam * t
            return float(np.max(np.abs(lhs - rhs)))
        from .viscosity import affine_pair_solve
        lhs, rhs = affine_pair_solve(H, u0, T, t, axes, **(scheme_kw or {}))
        return float(np.max(np.abs(lhs - rhs)))
    if isinstance(T, Reduction):
        if u0.dim != 1 or len(T.indices) != 1 or H.dim != 2:
            raise ConfigError("reduction check supports 2D H with a 1D base condition")
        idx, p2 = int(T.indices[0]), float(T.values[0])
        if idx != 1:
            raise ConfigError("reduction check pins the second momentum")
        Hbar = reduce(H, [idx], [p2])
        v0 = lift_profile(u0, p2)
        if solver == "variational":
            _require_horizon(H, v0, t)
            Q = grid_points(axes).reshape(-1, 2)
            lhs = variational_values(H, v0, t, Q)
            rhs = variational_values(Hbar, u0, t, Q[:, 0]) + p2 * Q[:, 1]
            return float(np.max(np.abs(lhs - rhs)))
        from .viscosity import reduction_pair_solve
        lhs, rhs = reduction_pair_solve(H, u0, p2, t, axes, **(scheme_kw or {}))
        return float(np.max(np.abs(lhs - rhs)))
    raise ConfigError("T must be an AffineTransformParams or a Reduction")
