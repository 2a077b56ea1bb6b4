"""Generalized wavefronts, their 1D branches, continuous sections and
minimal sections."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .characteristics import action, horizon
from .errors import (ConfigError, DegenerateParam, EmptyFiber, HorizonExceeded,
                     ResolutionTooCoarse, UnsupportedBranch)
from .initial_data import KinkedProfile1D, SmoothCondition
from .solution import SolutionGrid, grid_points

FAN_SAMPLES = 2049
PIECE_SAMPLES = 2049
MAX_SECTIONS = 64
S_TOL = 1e-9


# ---------------------------------------------------------------- 1D branches

@dataclass(frozen=True)
class FrontBranch:
    """One labelled branch of a 1D front.

    ``kind`` is "piece" (parameter q0 over a smooth piece) or "fan"
    (parameter p over the Clarke interval of a kink).  In reduced mode both
    coordinates are measured from ``center`` and divided by t.
    """

    kind: str
    index: int
    t: float
    a: float
    b: float
    H: object = field(repr=False)
    u0: object = field(repr=False)
    reduced: bool = False
    center: tuple = (0.0, 0.0)

    @property
    def source(self):
        if self.kind == "fan":
            return f"kink_fan({self.index})"
        if self.index == 0:
            return "left_piece(0)"
        return f"right_piece({self.index - 1})"

    def _piece(self):
        u = self.u0
        if isinstance(u, KinkedProfile1D):
            return u.pieces[self.index]
        return u.piece

    def maps(self, s):
        """(q, S, p, q0) at parameters s."""
        s = np.asarray(s, dtype=float)
        H, t = self.H, self.t
        if self.kind == "piece":
            pc = self._piece()
            q0 = s
            p = pc.grad(s[..., None])[..., 0]
            base = pc.value(s[..., None])
        else:
            k = float(self.u0.kinks[self.index])
            q0 = np.full_like(s, k)
            p = s
            base = np.full_like(s, float(self.u0.pieces[self.index + 1].value(np.array([k]))))
        dH = H.dh(p)
        act = p * dH - H.h(p)
        if self.reduced:
            cq, cS = self.center
            q = (q0 - cq) / t + dH
            S = (base - cS) / t + act
        else:
            q = q0 + t * dH
            S = base + t * act
        return q, S, p, q0

    def dx(self, s):
        """x'(s), the parameter derivative of the q-coordinate."""
        s = np.asarray(s, dtype=float)
        if self.kind == "piece":
            pc = self._piece()
            p = pc.grad(s[..., None])[..., 0]
            d2u = pc.hess(s[..., None])[..., 0, 0]
            scale = 1.0 / self.t if self.reduced else 1.0
            return scale + (1.0 if self.reduced else self.t) * self.H.d2h(p) * d2u
        return (1.0 if self.reduced else self.t) * self.H.d2h(s)

    def samples(self, n=None):
        n = n or (FAN_SAMPLES if self.kind == "fan" else PIECE_SAMPLES)
        s = np.linspace(self.a, self.b, n)
        if self.kind == "fan":
            s = np.union1d(s, self.folds())
        return s

    def folds(self):
        """Parameters where x' changes sign (H'' = 0 on fans)."""
        s = np.linspace(self.a, self.b, (FAN_SAMPLES if self.kind == "fan" else PIECE_SAMPLES) * 4)
        d = self.dx(s)
        out = []
        for j in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0):
            out.append(brentq(lambda x: float(self.dx(np.array(x))), s[j], s[j + 1], xtol=1e-15))
        return np.array(out)


@dataclass(frozen=True)
class Front:
    """Time-t front: branches (1D) or a sampled cloud (2D)."""

    t: float
    dim: int
    branches: tuple = ()
    cloud: dict | None = None
    reduced: bool = False

    def points(self):
        """All sampled points as a dict of arrays (q, S, p, q0, source, param)."""
        if self.cloud is not None:
            return self.cloud
        qs, Ss, ps, q0s, src, par = [], [], [], [], [], []
        for br in self.branches:
            s = br.samples()
            q, S, p, q0 = br.maps(s)
            qs.append(q), Ss.append(S), ps.append(p), q0s.append(q0)
            src.append(np.full(s.shape, br.source, dtype=object)), par.append(s)
        cat = np.concatenate
        return {"q": cat(qs)[:, None], "S": cat(Ss), "p": cat(ps)[:, None], "q0": cat(q0s)[:, None],
                "source": cat(src), "param": cat(par)}


def _piece_ranges(u0, domain):
    lo, hi = domain
    edges = np.concatenate([[lo], np.asarray(u0.kinks, dtype=float), [hi]])
    return [(max(edges[i], lo), min(edges[i + 1], hi)) for i in range(len(edges) - 1)]


def build_front_1d(H, u0, t, domain=None, reduced=False, center=None):
    """Front of a 1D piecewise-C² profile: one branch per piece, one fan per kink."""
    if u0.dim != 1 or H.dim != 1:
        raise ConfigError("build_front_1d needs 1D data")
    if t < 0:
        raise ConfigError("t must be non-negative")
    domain = tuple(domain or u0.domain)
    kinks = np.asarray(u0.kinks, dtype=float)
    if reduced:
        if t <= 0:
            raise ConfigError("reduced front needs t > 0")
        if center is None:
            k0 = float(kinks[0]) if kinks.size else 0.0
            center = (k0, float(u0.u(np.array(k0))))
    br = []
    for i, (a, b) in enumerate(_piece_ranges(u0, domain)):
        if b > a:
            br.append(FrontBranch("piece", i, t, a, b, H, u0, reduced, center or (0.0, 0.0)))
    for k in range(kinks.size):
        if not (domain[0] <= kinks[k] <= domain[1]):
            continue
        pl, pr = u0.one_sided(k)
        br.append(FrontBranch("fan", k, t, min(pl, pr), max(pl, pr), H, u0, reduced, center or (0.0, 0.0)))
    return Front(t, 1, tuple(br), None, reduced)


def reduced_front(H, u0, t, domain=None):
    """Front with coordinates measured from the first kink and divided by t."""
    if t <= 0:
        raise ConfigError("reduced front needs t > 0")
    return build_front_1d(H, u0, t, domain, reduced=True)


def membership_residuals(H, u0, t, pts):
    """Max residuals of the membership test for sampled front points.

    Returns (clarke, landing, action) residuals: distance of p to the Clarke
    set at q0, |q0 + t∇H(p) - q| and |S - u0(q0) - action|.
    """
    q, S, p, q0 = (np.asarray(pts[k], dtype=float) for k in ("q", "S", "p", "q0"))
    land = np.linalg.norm(q0 + t * H.grad(p) - q, axis=-1)
    act = np.abs(S - u0.value(q0) - action(H, t, p))
    cl = np.empty(len(S))
    for i in range(len(S)):
        v = u0.clarke(q0[i]).vertices
        cl[i] = _dist_to_hull(p[i], v)
    return float(cl.max()), float(land.max()), float(act.max())


def _dist_to_hull(x, V):
    if len(V) == 1:
        return float(np.linalg.norm(x - V[0]))
    # segments suffice for the interfaces used here (two active pieces)
    best = np.inf
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            a, b = V[i], V[j]
            ab = b - a
            lam = np.clip(np.dot(x - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
            best = min(best, float(np.linalg.norm(x - a - lam * ab)))
    return best


def branch_slope(branch, param):
    """dS/dq along a branch: p on fans, u0'(q0) on pieces."""
    d = float(branch.dx(np.array(param)))
    if abs(d) < 1e-12:
        raise DegenerateParam(f"x'({param}) = 0 on {branch.source}")
    return float(branch.maps(np.array(param))[2])


def branch_convexity_sign(branch, param, tol=1e-12):
    """Sign of u0'' at the parameter of a piece branch (x' > 0 assumed)."""
    if branch.kind != "piece":
        raise UnsupportedBranch("convexity sign is only defined on piece branches")
    d2u = float(branch._piece().hess(np.array([[param]]))[0, 0, 0])
    return 0 if abs(d2u) <= tol else int(np.sign(d2u))


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class Curve:
    """Monotone sub-branch: q ↦ S single valued on [xlo, xhi]."""

    branch: int
    br: FrontBranch = field(repr=False)
    sa: float
    sb: float
    xlo: float
    xhi: float
    increasing: bool

    def eval(self, q, iters=80):
        """(S, p, s) at q (clipped into the curve's range)."""
        q = np.clip(np.asarray(q, dtype=float), self.xlo, self.xhi)
        lo = np.full(q.shape, self.sa)
        hi = np.full(q.shape, self.sb)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            x = self.br.maps(mid)[0]
            right = (x < q) if self.increasing else (x > q)
            lo = np.where(right, mid, lo)
            hi = np.where(right, hi, mid)
            if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(lo))):
                break
        s = 0.5 * (lo + hi)
        _, S, p, _ = self.br.maps(s)
        return S, p, s

    def covers(self, q, tol=0.0):
        return (q >= self.xlo - tol) & (q <= self.xhi + tol)


def resolve_curves(front):
    """Split every branch at its folds into monotone curves."""
    curves = []
    for bi, br in enumerate(front.branches):
        cuts = np.concatenate([[br.a], br.folds(), [br.b]])
        for sa, sb in zip(cuts[:-1], cuts[1:]):
            if sb - sa <= 1e-14:
                continue
            mid = 0.5 * (sa + sb)
            d = float(br.dx(np.array(mid)))
            if d == 0.0:
                continue          # collapsed fan (t = 0)
            xa, xb = br.maps(np.array([sa, sb]))[0]
            if xa == xb:
                continue
            curves.append(Curve(bi, br, float(sa), float(sb), float(min(xa, xb)), float(max(xa, xb)), bool(xb > xa)))
    return curves


# ---------------------------------------------------------------- sections

@dataclass(frozen=True)
class ShockPoint:
    q: float
    t: float
    p_left: float
    p_right: float
    source_left: str
    source_right: str

    def __post_init__(self):
        if abs(self.p_left - self.p_right) <= 1e-8:
            raise ConfigError("shock needs distinct one-sided momenta")


@dataclass(frozen=True)
class Switch:
    q: float
    S: float
    left: int        # curve index before the switch
    right: int       # curve index after the switch
    p_left: float
    p_right: float


@dataclass(frozen=True)
class Section:
    """Continuous selection: consecutive curve segments joined at switches."""

    t: float
    curves: tuple = field(repr=False)
    segments: tuple          # ((curve index, x_start, x_end), ...)
    switches: tuple

    def evaluate(self, q):
        """(S, branch id, param) along the section."""
        q = np.asarray(q, dtype=float)
        S = np.full(q.shape, np.nan)
        br = np.full(q.shape, -1, dtype=int)
        par = np.full(q.shape, np.nan)
        for n, (ci, xa, xb) in enumerate(self.segments):
            last = n == len(self.segments) - 1
            m = (q >= xa) & ((q <= xb) if last else (q < xb))
            if np.any(m):
                c = self.curves[ci]
                s_val, _, s_par = c.eval(q[m])
                S[m], br[m], par[m] = s_val, c.branch, s_par
        return S, br, par

    def values(self, q):
        return self.evaluate(q)[0]

    def sources(self, branch_ids):
        lab = {c.branch: c.br.source for c in self.curves}
        return [lab.get(int(b), "") for b in branch_ids]

    def max_jump(self):
        jumps = [0.0]
        for sw in self.switches:
            a = self.curves[sw.left].eval(np.array(sw.q))[0]
            b = self.curves[sw.right].eval(np.array(sw.q))[0]
            jumps.append(abs(float(a) - float(b)))
        return max(jumps)


def _pair_events(A, B, q_grid, tol):
    """Points where curves A and B meet (crossings and endpoint junctions)."""
    lo, hi = max(A.xlo, B.xlo), min(A.xhi, B.xhi)
    if hi < lo - 1e-12:
        return []
    if hi - lo <= 1e-12:
        xs = np.array([lo])
    else:
        inner = q_grid[(q_grid > lo) & (q_grid < hi)]
        xs = np.concatenate([[lo], inner, [hi]])
    SA, pA, _ = A.eval(xs)
    SB, pB, _ = B.eval(xs)
    d = SA - SB
    events = [float(x) for x in xs[np.abs(d) <= tol]]
    f = lambda x: float(A.eval(np.array(x))[0] - B.eval(np.array(x))[0])
    for j in range(len(xs) - 1):
        if abs(d[j]) <= tol or abs(d[j + 1]) <= tol:
            continue
        if d[j] * d[j + 1] < 0:
            events.append(brentq(f, xs[j], xs[j + 1], xtol=1e-14, rtol=1e-15))
        else:
            # two roots inside one cell: the cubic Hermite model changes sign twice
            h = xs[j + 1] - xs[j]
            dp0, dp1 = pA[j] - pB[j], pA[j + 1] - pB[j + 1]
            if np.sign(dp0) != np.sign(dp1) and np.sign(dp0) == -np.sign(d[j]):
                u = np.linspace(0, 1, 33)
                h00, h10 = 2 * u**3 - 3 * u**2 + 1, u**3 - 2 * u**2 + u
                h01, h11 = -2 * u**3 + 3 * u**2, u**3 - u**2
                model = h00 * d[j] + h10 * h * dp0 + h01 * d[j + 1] + h11 * h * dp1
                if np.any(np.sign(model) != np.sign(d[j])):
                    raise ResolutionTooCoarse(
                        f"possible double crossing in cell [{xs[j]:.6g}, {xs[j + 1]:.6g}]")
    events.sort()
    out = []
    for x in events:
        if not out or x - out[-1] > 1e-12:
            out.append(x)
    return out


def _section_events(curves, q_grid, tol):
    ev = {i: [] for i in range(len(curves))}
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            for x in _pair_events(curves[i], curves[j], q_grid, tol):
                ev[i].append((x, j))
                ev[j].append((x, i))
    for i in ev:
        ev[i].sort()
    return ev


def enumerate_continuous_sections(front, q_grid, max_sections=MAX_SECTIONS, tol=S_TOL):
    """All continuous single-valued selections of a 1D front over q_grid."""
    if front.dim != 1:
        raise ConfigError("section enumeration is 1D only")
    q_grid = np.asarray(q_grid, dtype=float)
    qmin, qmax = float(q_grid[0]), float(q_grid[-1])
    curves = resolve_curves(front)
    ev = _section_events(curves, q_grid, tol)
    found = []
    seen = []
    probe = q_grid

    def finish(segs, sws):
        sec = Section(front.t, tuple(curves), tuple(segs), tuple(sws))
        vals = sec.values(probe)
        for v in seen:
            if np.max(np.abs(v - vals)) <= 1e-9:
                return
        seen.append(vals)
        found.append(sec)

    budget = [20000]

    def extend(ci, x_from, segs, sws):
        if len(found) >= max_sections or budget[0] <= 0:
            return
        budget[0] -= 1
        c = curves[ci]
        for x, cj in ev[ci]:
            if x <= x_from + 1e-12 or x >= qmax:
                continue
            other = curves[cj]
            if other.xhi <= x + 1e-12:
                continue
            Sl, pl, _ = c.eval(np.array(x))
            Sr, pr, _ = other.eval(np.array(x))
            extend(cj, x, segs + [(ci, x_from, x)],
                   sws + [Switch(x, float(Sl), ci, cj, float(pl), float(pr))])
        if c.xhi >= qmax - 1e-12:
            finish(segs + [(ci, x_from, qmax)], sws)

    for ci, c in enumerate(curves):
        if c.xlo <= qmin + 1e-12 and c.xhi > qmin:
            extend(ci, qmin, [], [])
    return found


def _lowest_changes(curves, lo, hi, ia, ib, depth=5, n=17):
    """Cells where the lowest curve changes, refined until each holds one switch."""
    if ia == ib:
        return []
    if depth == 0 or hi - lo <= 1e-13:
        return [(lo, hi, ia, ib)]
    x = np.linspace(lo, hi, n)
    vals, _ = _curve_values(curves, x)
    arg = np.argmin(vals, axis=0)
    arg[0], arg[-1] = ia, ib
    out = []
    for j in np.flatnonzero(arg[1:] != arg[:-1]):
        out += _lowest_changes(curves, x[j], x[j + 1], int(arg[j]), int(arg[j + 1]), depth - 1, n)
    return out


def lowest_section(front, q_grid):
    """Section following the pointwise-lowest curve, switches refined.

    Cells of ``q_grid`` where the lowest curve changes are subdivided, so a
    curve that is lowest only strictly between two nodes is not skipped.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    curves = resolve_curves(front)
    vals, _ = _curve_values(curves, q_grid)
    arg = np.argmin(vals, axis=0)
    changes = []
    for j in np.flatnonzero(arg[1:] != arg[:-1]):
        changes += _lowest_changes(curves, q_grid[j], q_grid[j + 1], int(arg[j]), int(arg[j + 1]))
    segs, sws = [], []
    start = float(q_grid[0])
    for lo, hi, ia, ib in changes:
        a, b = curves[ia], curves[ib]
        f = lambda x: float(a.eval(np.array(x))[0] - b.eval(np.array(x))[0])
        if a.covers(lo) and a.covers(hi) and b.covers(lo) and b.covers(hi) and f(lo) * f(hi) < 0:
            x = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
        else:
            x = min(a.xhi, hi) if a.xhi < hi else max(b.xlo, lo)
        Sl, pl, _ = a.eval(np.array(x))
        _, pr, _ = b.eval(np.array(x))
        segs.append((ia, start, x))
        sws.append(Switch(x, float(Sl), ia, ib, float(pl), float(pr)))
        start = x
    segs.append((int(arg[-1]), start, float(q_grid[-1])))
    return Section(front.t, tuple(curves), tuple(segs), tuple(sws))


def _curve_values(curves, q_grid):
    vals = np.full((len(curves), q_grid.size), np.inf)
    for i, c in enumerate(curves):
        m = c.covers(q_grid)
        if np.any(m):
            vals[i, m] = c.eval(q_grid[m])[0]
    return vals, np.isfinite(vals).any(axis=0)


def find_shocks(section, tol=1e-8):
    """Branch switches with a momentum jump, left and right momenta attached."""
    out = []
    for sw in section.switches:
        if abs(sw.p_left - sw.p_right) > tol:
            out.append(ShockPoint(sw.q, section.t, sw.p_left, sw.p_right,
                                  section.curves[sw.left].br.source,
                                  section.curves[sw.right].br.source))
    return out


# ---------------------------------------------------------------- 2D cloud

def _pieces_of(u0):
    return u0.pieces if hasattr(u0, "pieces") else (u0.piece,)


def _interfaces_of(u0):
    return getattr(u0, "interfaces", ())


def _active_mask(u0, Q0, i, tol=1e-12):
    if isinstance(u0, SmoothCondition):
        return np.ones(Q0.shape[:-1], dtype=bool)
    if hasattr(u0, "base"):          # lifted profile: strips in q1
        return u0.active(Q0) == i
    vals = np.stack([p.value(Q0) for p in u0.pieces])
    return vals[i] <= vals.min(axis=0) + tol * np.maximum(1.0, np.abs(vals.min(axis=0)))


def build_front_cloud(H, u0, t, q0_axes, n_fan=65, s_axis=None):
    """Push sampled points of graph(∂u0) through the flow (d = 2).

    ``q0_axes`` is a pair of 1D arrays spanning the sampled base points;
    interfaces are sampled at ``s_axis`` (default: 8 points per q0 node
    over the interface's parameter range) with
    ``n_fan`` convex weights per point.
    """
    if u0.dim != 2 or H.dim != 2:
        raise ConfigError("cloud fronts are built for d = 2")
    Q0 = grid_points(q0_axes).reshape(-1, 2)
    parts = []
    for i, pc in enumerate(_pieces_of(u0)):
        m = _active_mask(u0, Q0, i)
        q0 = Q0[m]
        p = pc.grad(q0)
        parts.append((q0, p, pc.value(q0), f"piece({i})", np.full(len(q0), np.nan),
                      np.full(len(q0), np.nan)))
    lam = np.linspace(0.0, 1.0, n_fan)
    for k, itf in enumerate(_interfaces_of(u0)):
        if s_axis is None:
            s = np.linspace(itf.s_range[0], itf.s_range[1], 8 * len(q0_axes[0]))
        else:
            s = np.asarray(s_axis, dtype=float)
        s = s[(s >= itf.s_range[0]) & (s <= itf.s_range[1])]
        g = itf.curve(s)
        box = [(a.min(), a.max()) for a in q0_axes]
        inside = (g[:, 0] >= box[0][0]) & (g[:, 0] <= box[0][1]) & (g[:, 1] >= box[1][0]) & (g[:, 1] <= box[1][1])
        g, s = g[inside], s[inside]
        pcs = _pieces_of(u0)
        gi, gj = pcs[itf.i].grad(g), pcs[itf.j].grad(g)
        L = np.repeat(lam[None, :], len(g), axis=0).ravel()
        q0 = np.repeat(g, n_fan, axis=0)
        p = (1 - L)[:, None] * np.repeat(gi, n_fan, axis=0) + L[:, None] * np.repeat(gj, n_fan, axis=0)
        parts.append((q0, p, u0.value(q0), f"kink_fan({k})", L, np.repeat(s, n_fan)))
    q0 = np.concatenate([x[0] for x in parts])
    p = np.concatenate([x[1] for x in parts])
    base = np.concatenate([x[2] for x in parts])
    src = np.concatenate([np.full(len(x[0]), x[3], dtype=object) for x in parts])
    par = np.concatenate([x[4] for x in parts])
    curve_s = np.concatenate([x[5] for x in parts])
    q = q0 + t * H.grad(p)
    S = base + action(H, t, p)
    return Front(t, 2, (), {"q": q, "S": S, "p": p, "q0": q0, "source": src, "param": par,
                           "s": curve_s})


def _newton_piece(H, pc, t, Q, Q0, iters=40):
    eye = np.eye(2)
    Q0 = Q0.copy()
    act = np.arange(len(Q))
    for _ in range(iters):
        X, Y = Q0[act], Q[act]
        P = pc.grad(X)
        res = X + t * H.grad(P) - Y
        J = eye + t * np.einsum("...ij,...jk->...ik", H.hess(P), pc.hess(X))
        step = np.linalg.solve(J, res[..., None])[..., 0]
        Q0[act] = X - step
        act = act[np.max(np.abs(step), axis=-1) > 1e-15 * (1.0 + np.max(np.abs(X), axis=-1))]
        if act.size == 0:
            break
    res = np.linalg.norm(Q0 + t * H.grad(pc.grad(Q0)) - Q, axis=-1)
    return Q0, res


def _newton_fan(H, pi, pj, itf, t, Q, s, lam, iters=40):
    s, lam = s.copy(), lam.copy()
    act = np.arange(len(Q))
    for _ in range(iters):
        sa, la = s[act], lam[act]
        g, dg = itf.curve(sa), itf.dcurve(sa)
        gi, gj = pi.grad(g), pj.grad(g)
        P = (1 - la)[:, None] * gi + la[:, None] * gj
        res = g + t * H.grad(P) - Q[act]
        Hh = H.hess(P)
        dPds = ((1 - la)[:, None, None] * pi.hess(g) + la[:, None, None] * pj.hess(g)) @ dg[..., None]
        col_s = dg + t * (Hh @ dPds)[..., 0]
        col_l = t * (Hh @ (gj - gi)[..., None])[..., 0]
        J = np.stack([col_s, col_l], axis=-1)
        ok = np.abs(np.linalg.det(J)) > 1e-300
        step = np.zeros_like(res)
        step[ok] = np.linalg.solve(J[ok], res[ok][..., None])[..., 0]
        s[act] = sa - step[:, 0]
        lam[act] = la - step[:, 1]
        moving = ok & (np.max(np.abs(step), axis=-1) > 1e-15 * (1.0 + np.abs(sa)))
        act = act[moving]
        if act.size == 0:
            break
    g = itf.curve(s)
    P = (1 - lam)[:, None] * pi.grad(g) + lam[:, None] * pj.grad(g)
    res = np.linalg.norm(g + t * H.grad(P) - Q, axis=-1)
    return s, lam, res


def minimal_section_2d(H, u0, t, axes, front=None, k_seeds=(2, 4), tol=1e-10, check_horizon=True):
    """min S over front points above each node of a 2D grid."""
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    Q = grid_points(axes).reshape(-1, 2)
    n = [int(min(301, max(41, len(a)))) for a in axes]
    vals = minimal_values_2d(H, u0, t, Q, front, k_seeds, tol, check_horizon, n)
    return SolutionGrid(t, axes, vals.reshape(len(axes[0]), len(axes[1])), "variational")


def minimal_values_2d(H, u0, t, Q, front=None, k_seeds=(2, 4), tol=1e-10, check_horizon=True,
                      n_cloud=None):
    """Minimal section at arbitrary points Q (shape (N, 2)).

    Seeds come from the nearest cloud points of every source (``k_seeds``
    for pieces and fans); each seed is polished by Newton on the landing
    equation and accepted when the residual is below ``tol`` and the
    parameters are admissible.
    """
    if check_horizon and t > 0 and t >= horizon(H, u0):
        raise HorizonExceeded(f"t={t} is beyond the horizon {horizon(H, u0):.6g}")
    Q = np.asarray(Q, dtype=float).reshape(-1, 2)
    if t == 0:
        return u0.value(Q)
    if front is None:
        pad = t * H.grad_bound(u0.L + 1.0) + 0.05
        lo, hi = Q.min(axis=0) - pad, Q.max(axis=0) + pad
        n = n_cloud or [int(min(301, max(41, np.sqrt(len(Q)))))] * 2
        q0_axes = [np.linspace(lo[i], hi[i], n[i]) for i in range(2)]
        front = build_front_cloud(H, u0, t, q0_axes, n_fan=33)
    cl = front.cloud
    best = np.full(len(Q), np.inf)
    pcs = _pieces_of(u0)
    for src in np.unique(cl["source"]):
        m = cl["source"] == src
        tree = cKDTree(cl["q"][m])
        kind, idx = src.split("(")
        idx = int(idx[:-1])
        k = min(k_seeds[0] if kind == "piece" else k_seeds[1], int(m.sum()))
        _, nb = tree.query(Q, k=k)
        nb = np.atleast_2d(nb.T).reshape(k, -1)
        q0s, pars, ss = cl["q0"][m], cl["param"][m], cl["s"][m]
        for r in range(k):
            seed = nb[r]
            if kind == "piece":
                pc = pcs[idx]
                Q0, res = _newton_piece(H, pc, t, Q, q0s[seed].copy())
                ok = (res <= tol) & _active_mask(u0, Q0, idx, tol=1e-9)
                P = pc.grad(Q0)
                S = pc.value(Q0) + action(H, t, P)
            else:
                itf = _interfaces_of(u0)[idx]
                s, lam, res = _newton_fan(H, pcs[itf.i], pcs[itf.j], itf, t, Q, ss[seed], pars[seed])
                ok = (res <= tol) & (lam >= -1e-9) & (lam <= 1 + 1e-9) & (s >= itf.s_range[0]) & (s <= itf.s_range[1])
                g = itf.curve(s)
                lam_c = np.clip(lam, 0.0, 1.0)
                P = (1 - lam_c)[:, None] * pcs[itf.i].grad(g) + lam_c[:, None] * pcs[itf.j].grad(g)
                S = u0.value(g) + action(H, t, P)
            cand = np.where(ok, S, np.inf)
            best = np.minimum(best, cand)
    if not np.all(np.isfinite(best)):
        raise EmptyFiber(f"{int(np.sum(~np.isfinite(best)))} grid nodes have no front point above them")
    return best


def minimal_section(front, q_grid, H=None, u0=None):
    """Variational solution as the minimal section of the front.

    1D: exact branch-resolved minimum on ``q_grid``.  2D: pass ``H`` and
    ``u0`` and a pair of axes; see :func:`minimal_section_2d`.
    """
    if front.dim == 2:
        if H is None or u0 is None:
            raise ConfigError("2D minimal section needs H and u0")
        return minimal_section_2d(H, u0, front.t, q_grid, front=front)
    q_grid = np.asarray(q_grid, dtype=float)
    curves = resolve_curves(front)
    if not curves:
        raise EmptyFiber("front has no regular curves")
    vals, covered = _curve_values(curves, q_grid)
    # isolated fan points (t = 0) are covered by the adjacent piece branches
    if not np.all(covered):
        raise EmptyFiber(f"{int(np.sum(~covered))} grid nodes have no front point above them")
    return SolutionGrid(front.t, (q_grid,), vals.min(axis=0), "variational")
