"""Lipschitz piecewise-C² initial data, Clarke fans, mollification and
Hausdorff distances between point sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from . import _kernels
from ._smooth import poly_eval, quintic_hermite, smoothstep
from .errors import ConfigError, EmptyInput, OutsideDomain

KINK_TOL = 1e-10


@dataclass(frozen=True)
class Piece:
    """A C² function on R^d given by value/grad/hess over arrays (..., d)."""

    value: Callable
    grad: Callable
    hess: Callable


def piece_1d(f, df, d2f):
    """Piece from scalar callables of one variable."""
    return Piece(lambda Q: f(Q[..., 0]),
                 lambda Q: df(Q[..., 0])[..., None],
                 lambda Q: d2f(Q[..., 0])[..., None, None])


def _pts(q, dim):
    q = np.asarray(q, dtype=float)
    if dim == 1 and (q.ndim == 0 or q.shape[-1] != 1):
        q = q[..., None]
    return q


@dataclass(frozen=True)
class ClarkeFan:
    """Clarke derivative at q: an interval [lo, hi] in 1D, a vertex list in 2D."""

    q: np.ndarray
    vertices: np.ndarray   # (m, d) momenta whose convex hull is the fan

    @property
    def diameter(self):
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1))) if len(v) > 1 else 0.0

    @property
    def interval(self):
        v = self.vertices[:, 0]
        return float(v.min()), float(v.max())


@dataclass(frozen=True)
class Interface:
    """Kink curve s ↦ gamma(s) (2D) separating pieces ``i`` and ``j``."""

    i: int
    j: int
    curve: Callable          # s -> (..., 2)
    dcurve: Callable         # s -> (..., 2)
    s_range: tuple


class InitialCondition:
    """Common interface: dim, L, B, domain, value/grad/hess, clarke."""

    dim: int
    L: float
    B: float
    domain: tuple
    name: str = "u0"
    spec: dict | None = None

    # scalar 1D helpers
    def u(self, q):
        return self.value(np.asarray(q, dtype=float)[..., None])

    def du(self, q):
        return self.grad(np.asarray(q, dtype=float)[..., None])[..., 0]

    def d2u(self, q):
        return self.hess(np.asarray(q, dtype=float)[..., None])[..., 0, 0]

    def check_domain(self, q):
        q = _pts(q, self.dim)
        box = np.asarray(self.domain, dtype=float).reshape(self.dim, 2)
        if np.any(q < box[:, 0] - 1e-12) or np.any(q > box[:, 1] + 1e-12):
            raise OutsideDomain(f"point outside the declared domain {self.domain}")
        return q


@dataclass(frozen=True)
class SmoothCondition(InitialCondition):
    """Single C² piece."""

    dim: int
    piece: Piece = field(repr=False)
    L: float
    B: float
    domain: tuple
    name: str = "smooth"
    spec: dict | None = field(default=None, compare=False)

    def value(self, q):
        return self.piece.value(_pts(q, self.dim))

    def grad(self, q):
        return self.piece.grad(_pts(q, self.dim))

    def hess(self, q):
        return self.piece.hess(_pts(q, self.dim))

    def clarke(self, q):
        q = self.check_domain(q)
        return ClarkeFan(q, np.atleast_2d(self.grad(q)))

    @property
    def kinks(self):
        return np.empty(0)


@dataclass(frozen=True)
class KinkedProfile1D(InitialCondition):
    """1D profile equal to ``pieces[i]`` on [kinks[i-1], kinks[i]].

    Pieces are globally defined C² functions (extensions beyond their
    interval are used by envelope families and branch maps).
    """

    pieces: tuple = field(repr=False)
    kinks: np.ndarray
    L: float
    B: float
    domain: tuple
    name: str = "kinked"
    spec: dict | None = field(default=None, compare=False)
    dim: int = 1

    def __post_init__(self):
        k = np.asarray(self.kinks, dtype=float)
        object.__setattr__(self, "kinks", k)
        if len(self.pieces) != len(k) + 1:
            raise ConfigError("need exactly one more piece than kinks")
        if np.any(np.diff(k) <= 0):
            raise ConfigError("kinks must be strictly increasing")
        for i, x in enumerate(k):
            a = self.pieces[i].value(np.array([x]))
            b = self.pieces[i + 1].value(np.array([x]))
            if abs(a - b) > KINK_TOL * max(1.0, abs(a)):
                raise ConfigError(f"pieces disagree at kink {x}")

    def active(self, Q):
        return np.searchsorted(self.kinks, np.asarray(Q)[..., 0], side="right")

    def _dispatch(self, Q, attr, shape):
        Q = _pts(Q, 1)
        idx = self.active(Q)
        out = np.empty(Q.shape[:-1] + shape)
        for i, pc in enumerate(self.pieces):
            m = idx == i
            if np.any(m):
                out[m] = getattr(pc, attr)(Q[m])
        return out

    def value(self, q):
        return self._dispatch(q, "value", ())

    def grad(self, q):
        return self._dispatch(q, "grad", (1,))

    def hess(self, q):
        return self._dispatch(q, "hess", (1, 1))

    def one_sided(self, k):
        """(left, right) derivatives at kink k."""
        x = np.array([self.kinks[k]])
        return float(self.pieces[k].grad(x)[0]), float(self.pieces[k + 1].grad(x)[0])

    def clarke(self, q):
        Q = self.check_domain(q).reshape(1)
        x = Q[0]
        hit = np.flatnonzero(np.abs(self.kinks - x) <= KINK_TOL * max(1.0, abs(x)))
        if hit.size:
            a, b = self.one_sided(int(hit[0]))
            return ClarkeFan(Q, np.array([[min(a, b)], [max(a, b)]]))
        return ClarkeFan(Q, self.grad(Q).reshape(1, 1))


@dataclass(frozen=True)
class MinOfSmooth(InitialCondition):
    """u0 = min_i pieces[i] with explicit kink interfaces (2D)."""

    dim: int
    pieces: tuple = field(repr=False)
    interfaces: tuple = field(repr=False)
    L: float
    B: float
    domain: tuple
    name: str = "min_of_smooth"
    spec: dict | None = field(default=None, compare=False)

    def _all(self, Q, attr):
        return np.stack([getattr(p, attr)(Q) for p in self.pieces], axis=0)

    def active(self, Q):
        return np.argmin(self._all(_pts(Q, self.dim), "value"), axis=0)

    def value(self, q):
        return self._all(_pts(q, self.dim), "value").min(axis=0)

    def _pick(self, q, attr):
        Q = _pts(q, self.dim)
        idx = self.active(Q)
        vals = self._all(Q, attr)
        return np.take_along_axis(vals, _expand(idx, vals.ndim - 1), axis=0)[0]

    def grad(self, q):
        return self._pick(q, "grad")

    def hess(self, q):
        return self._pick(q, "hess")

    def clarke(self, q, tol=KINK_TOL):
        Q = self.check_domain(q).reshape(self.dim)
        vals = np.array([p.value(Q) for p in self.pieces])
        act = np.flatnonzero(vals <= vals.min() + tol * max(1.0, abs(vals.min())))
        return ClarkeFan(Q, np.array([self.pieces[i].grad(Q) for i in act]))


def _expand(idx, ndim):
    # index array shaped for take_along_axis over a leading piece axis
    out = idx[None]
    while out.ndim < ndim + 1:
        out = out[..., None]
    return out


@dataclass(frozen=True)
class LiftedProfile(InitialCondition):
    """v0(q1, q2) = u0(q1) + p2*q2 for a 1D profile u0 (reduction data)."""

    base: KinkedProfile1D
    p2: float
    L: float
    B: float
    domain: tuple
    name: str = "lifted"
    spec: dict | None = field(default=None, compare=False)
    dim: int = 2

    @property
    def pieces(self):
        p2 = self.p2
        return tuple(Piece(lambda Q, pc=pc: pc.value(Q[..., :1]) + p2 * Q[..., 1],
                           lambda Q, pc=pc: np.concatenate(
                               [pc.grad(Q[..., :1]), np.full(Q.shape[:-1] + (1,), p2)], axis=-1),
                           lambda Q, pc=pc: _pad_hess(pc.hess(Q[..., :1])))
                     for pc in self.base.pieces)

    @property
    def interfaces(self):
        lo, hi = self.domain[1]
        out = []
        for k, x in enumerate(self.base.kinks):
            out.append(Interface(k, k + 1,
                                 lambda s, x=x: np.stack([np.full_like(np.asarray(s, float), x), s], axis=-1),
                                 lambda s: np.stack([np.zeros_like(np.asarray(s, float)),
                                                     np.ones_like(np.asarray(s, float))], axis=-1),
                                 (lo, hi)))
        return tuple(out)

    def active(self, Q):
        return self.base.active(_pts(Q, 2)[..., :1])

    def value(self, q):
        Q = _pts(q, 2)
        return self.base.value(Q[..., :1]) + self.p2 * Q[..., 1]

    def grad(self, q):
        Q = _pts(q, 2)
        g = self.base.grad(Q[..., :1])
        return np.concatenate([g, np.full_like(g, self.p2)], axis=-1)

    def hess(self, q):
        return _pad_hess(self.base.hess(_pts(q, 2)[..., :1]))

    def clarke(self, q):
        Q = self.check_domain(q).reshape(2)
        fan = self.base.clarke(Q[:1])
        v = np.concatenate([fan.vertices, np.full((len(fan.vertices), 1), self.p2)], axis=1)
        return ClarkeFan(Q, v)


def _pad_hess(h1):
    out = np.zeros(h1.shape[:-2] + (2, 2))
    out[..., 0, 0] = h1[..., 0, 0]
    return out


def lift_profile(u0, p2, q2_range=(-10.0, 10.0)):
    """Reduction data v0(q1, q2) = u0(q1) + p2 q2."""
    dom = (tuple(u0.domain[0]) if np.ndim(u0.domain[0]) else tuple(u0.domain), tuple(q2_range))
    return LiftedProfile(u0, float(p2), float(np.hypot(u0.L, p2)), u0.B, dom,
                         f"lift({u0.name})",
                         None if u0.spec is None else {"kind": "lift", "base": u0.spec, "p2": float(p2)})


# ---------------------------------------------------------------- builtins

def _even_from_half(fpos):
    """Extend q>=0 formulas (value, d1, d2) evenly to R."""
    def ev(q):
        q = np.asarray(q, dtype=float)
        a = np.abs(q)
        v, d1, d2 = fpos(a)
        return v, np.sign(q) * d1, d2
    return ev


def _quad_blend_pos(a, core=1.0, width=1.0):
    # f'' = 1 on [0,core], 1 - s((a-core)/width) on [core, core+width], 0 after
    x = np.clip((a - core) / width, 0.0, 1.0)
    s, _, _ = smoothstep(x)
    S1 = x**6 - 3 * x**5 + 2.5 * x**4            # ∫ s
    S2 = x**7 / 7 - x**6 / 2 + x**5 / 2          # ∫∫ s
    inner = a <= core
    d2 = np.where(inner, 1.0, 1.0 - s)
    d1 = np.where(inner, a, core + width * (x - S1))
    v = np.where(inner, 0.5 * a * a, 0.5 * core**2 + width * core * x + width**2 * (0.5 * x * x - S2))
    beyond = a > core + width
    d1_end = core + width * 0.5
    v_end = 0.5 * core**2 + width * core + width**2 * (0.5 - 1.0 / 7.0)
    v = np.where(beyond, v_end + d1_end * (a - core - width), v)
    return v, d1, d2


def quad_blend(core=1.0, width=1.0):
    """Even C² function equal to q²/2 on [-core, core] with affine tails."""
    return _even_from_half(lambda a: _quad_blend_pos(a, core, width))


def compact_square(width=3.0):
    """Even C² function equal to q² on [-1, 1], quintic Hermite down to 0 on
    [1, 1+width], zero beyond (compact support)."""
    c = quintic_hermite(1.0, 1.0 + width, (1.0, 2.0, 2.0), (0.0, 0.0, 0.0))

    def fpos(a):
        v, d1, d2 = poly_eval(c, a - 1.0)
        inner = a <= 1.0
        out = a >= 1.0 + width
        v = np.where(inner, a * a, np.where(out, 0.0, v))
        d1 = np.where(inner, 2 * a, np.where(out, 0.0, d1))
        d2 = np.where(inner, 2.0, np.where(out, 0.0, d2))
        return v, d1, d2

    def value(q):
        a = np.abs(np.asarray(q, dtype=float))
        x = a - 1.0
        v = np.full(a.shape, c[-1])
        for k in c[-2::-1]:
            v = v * x + k
        return np.where(a <= 1.0, a * a, np.where(a >= 1.0 + width, 0.0, v))

    ev = _even_from_half(fpos)
    ev.value = value            # value-only path for hot loops (mollifier)
    return ev


def _sample_bounds(ev, lo, hi, n=200001):
    x = np.linspace(lo, hi, n)
    _, d1, d2 = ev(x)
    return float(np.abs(d1).max()), float(d2.max()), float(d2.min())


def abs_kink(domain=(-5.0, 5.0)):
    """u0(q) = -|q| (B = 0)."""
    pcs = (piece_1d(lambda q: q, np.ones_like, np.zeros_like),
           piece_1d(lambda q: -q, lambda q: -np.ones_like(q), np.zeros_like))
    return KinkedProfile1D(pcs, np.array([0.0]), 1.0, 0.0, tuple(domain), "abs_kink",
                           {"kind": "abs_kink", "params": {}})


def abs_kink_quad(core=1.0, width=1.0, domain=(-5.0, 5.0)):
    """u0(q) = -|q| + f(q), f = q²/2 near 0 with C² affine tails."""
    ev = quad_blend(core, width)
    f = lambda q: ev(q)[0]
    df = lambda q: ev(q)[1]
    d2f = lambda q: ev(q)[2]
    pcs = (piece_1d(lambda q: q + f(q), lambda q: 1.0 + df(q), d2f),
           piece_1d(lambda q: -q + f(q), lambda q: -1.0 + df(q), d2f))
    L = max(1.0, core + 0.5 * width - 1.0)
    return KinkedProfile1D(pcs, np.array([0.0]), float(L), 1.0, tuple(domain), "abs_kink_quad",
                           {"kind": "abs_kink", "params": {"quad": True, "core": core, "width": width}})


def min_of_quadratics(a, b, width=3.0, domain=((-10.0, 10.0), (-10.0, 10.0))):
    """u0 = min(a(f(q1) - q2), b(f(q1) - q2)) with f = q1² on [-1, 1]."""
    if not (b > a > 0):
        raise ConfigError("need b > a > 0")
    ev = compact_square(width)
    fmax1, fmax2, _ = _sample_bounds(ev, -1 - width, 1 + width)

    def make(c):
        def value(Q):
            return c * (ev.value(Q[..., 0]) - Q[..., 1])

        def grad(Q):
            return np.stack([c * ev(Q[..., 0])[1], np.full(Q.shape[:-1], -c)], axis=-1)

        def hess(Q):
            out = np.zeros(Q.shape[:-1] + (2, 2))
            out[..., 0, 0] = c * ev(Q[..., 0])[2]
            return out

        return Piece(value, grad, hess)

    curve = lambda s: np.stack([np.asarray(s, float), ev(s)[0]], axis=-1)
    dcurve = lambda s: np.stack([np.ones_like(np.asarray(s, float)), ev(s)[1]], axis=-1)
    lo, hi = domain[0]
    iface = Interface(0, 1, curve, dcurve, (float(lo), float(hi)))
    L = b * float(np.hypot(1.0, fmax1))
    B = b * max(fmax2, 0.0)
    u = MinOfSmooth(2, (make(a), make(b)), (iface,), L, B, tuple(map(tuple, domain)),
                    "min_of_quadratics",
                    {"kind": "min_of_quadratics", "params": {"a": a, "b": b, "width": width}})
    object.__setattr__(u, "profile", ev)
    return u


def smooth_1d(f, df, d2f, L, B, domain=(-5.0, 5.0), name="smooth", spec=None):
    """Single-piece 1D condition from scalar callables."""
    return SmoothCondition(1, piece_1d(f, df, d2f), float(L), float(B), tuple(domain), name, spec)


def linear(p, domain=None):
    """u0(q) = p·q."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    d = p.size
    domain = domain or tuple((-5.0, 5.0) for _ in range(d))
    if d == 1:
        domain = tuple(domain[0]) if np.ndim(domain[0]) else tuple(domain)
    pc = Piece(lambda Q: Q @ p,
               lambda Q: np.broadcast_to(p, Q.shape).copy(),
               lambda Q: np.zeros(Q.shape + (d,)))
    return SmoothCondition(d, pc, float(np.linalg.norm(p)), 0.0, domain, "linear",
                           {"kind": "linear", "params": {"p": p.tolist()}})


def custom_pieces(kinks, coeffs, domain=(-5.0, 5.0)):
    """1D profile from polynomial pieces (coefficients low to high)."""
    pcs = []
    for c in coeffs:
        c = np.asarray(c, dtype=float)
        pcs.append(piece_1d(lambda q, c=c: poly_eval(c, q)[0],
                            lambda q, c=c: poly_eval(c, q)[1],
                            lambda q, c=c: poly_eval(c, q)[2]))
    tmp = KinkedProfile1D(tuple(pcs), np.asarray(kinks, dtype=float), 1.0, 0.0, tuple(domain))
    L, B = _profile_bounds(tmp)
    return KinkedProfile1D(tuple(pcs), tmp.kinks, L, B, tuple(domain), "custom_pieces",
                           {"kind": "custom_pieces",
                            "params": {"kinks": list(map(float, kinks)),
                                       "pieces": [list(map(float, c)) for c in coeffs],
                                       "domain": list(map(float, domain))}})


def _profile_bounds(u, n=20001):
    x = np.linspace(*u.domain, n)
    L = float(np.abs(u.du(x)).max())
    B = max(float(u.d2u(x).max()), 0.0)
    for k in range(len(u.kinks)):
        a, b = u.one_sided(k)
        L = max(L, abs(a), abs(b))
        if b > a + 1e-12:
            raise ConfigError("convex kink: profile is not semiconcave")
    return L, B


def profile_from_min(pieces, domain, L=None, B=None, n=20001, name="min_profile"):
    """1D ``KinkedProfile1D`` equal to the pointwise min of global pieces."""
    x = np.linspace(*domain, n)
    vals = np.stack([p.value(x[:, None]) for p in pieces])
    idx = np.argmin(vals, axis=0)
    order, kinks = [int(idx[0])], []
    for j in np.flatnonzero(idx[1:] != idx[:-1]):
        a, b = int(idx[j]), int(idx[j + 1])
        g = lambda s: float(pieces[a].value(np.array([s])) - pieces[b].value(np.array([s])))
        kinks.append(brentq(g, x[j], x[j + 1], xtol=1e-15))
        order.append(b)
    u = KinkedProfile1D(tuple(pieces[i] for i in order), np.array(kinks), 1.0, 0.0, tuple(domain), name)
    Ls, Bs = _profile_bounds(u)
    return KinkedProfile1D(u.pieces, u.kinks, float(L if L is not None else Ls),
                           float(B if B is not None else Bs), tuple(domain), name)


def from_spec(spec):
    """Initial condition from its JSON-style dict (or a builtin name)."""
    if isinstance(spec, str):
        spec = {"abs_kink": {"kind": "abs_kink", "params": {}},
                "abs_kink_quad": {"kind": "abs_kink", "params": {"quad": True}},
                "min_of_quadratics": {"kind": "min_of_quadratics", "params": {"a": 0.75, "b": 1.0}},
                }.get(spec, {"kind": spec})
    kind = spec.get("kind")
    params = dict(spec.get("params") or {})
    try:
        if kind == "abs_kink":
            if params.get("quad"):
                return abs_kink_quad(float(params.get("core", 1.0)), float(params.get("width", 1.0)))
            return abs_kink()
        if kind == "min_of_quadratics":
            return min_of_quadratics(float(params["a"]), float(params["b"]), float(params.get("width", 3.0)))
        if kind == "custom_pieces":
            return custom_pieces(params["kinks"], params["pieces"], tuple(params.get("domain", (-5, 5))))
    except KeyError as exc:
        raise ConfigError(f"initial condition missing parameter {exc}") from None
    raise ConfigError(f"unknown initial condition kind {kind!r}")


def clarke_derivative(u0, q):
    return u0.clarke(q)


# ---------------------------------------------------------------- mollifier

def _bump(r2):
    out = np.zeros_like(r2)
    m = r2 < 1.0
    out[m] = np.exp(-1.0 / (1.0 - r2[m]))
    return out


def _bump_grad_factor(r2):
    # d/dr2 of exp(-1/(1-r2)) = -exp(...)/(1-r2)^2 ; grad = 2 y * that
    out = np.zeros_like(r2)
    m = r2 < 1.0
    out[m] = -np.exp(-1.0 / (1.0 - r2[m])) / (1.0 - r2[m]) ** 2
    return out


def _quadrature(dim, order):
    x, w = np.polynomial.legendre.leggauss(order)
    if dim == 1:
        Y = x[:, None]
        W = w
    else:
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        Y = np.stack([X1.ravel(), X2.ravel()], axis=-1)
        W = np.outer(w, w).ravel()
    r2 = np.sum(Y * Y, axis=-1)
    rho = W * _bump(r2)
    drho = W[:, None] * 2.0 * Y * _bump_grad_factor(r2)[:, None]
    keep = rho > 0
    Y, rho, drho = Y[keep], rho[keep], drho[keep]
    # normalise so constants and linear functions are reproduced exactly
    moment = -(Y.T @ drho)          # ≈ identity times the bump mass
    return Y, rho / rho.sum(), drho @ np.linalg.inv(moment)


def mollify(u0, eps, order=33, chunk=256):
    """Convolution of u0 with the normalised bump of radius eps."""
    if not eps > 0:
        raise ConfigError("eps must be positive")
    dim = u0.dim
    Y, rho, drho = _quadrature(dim, order)
    shifts = eps * Y

    def _apply(Q, fn, weights):
        Q = _pts(Q, dim)
        flat = Q.reshape(-1, dim)
        parts = []
        for lo in range(0, flat.shape[0], chunk):
            blk = flat[lo:lo + chunk]
            pts = blk[:, None, :] - shifts[None, :, :]
            parts.append(fn(pts, weights))
        out = np.concatenate(parts, axis=0) if parts else np.empty((0,))
        return out.reshape(Q.shape[:-1] + out.shape[1:])

    def value(Q):
        return _apply(Q, lambda P, w: u0.value(P) @ w, rho)

    def grad(Q):
        # derivative moved onto the kernel: no ambiguity at kinks
        return _apply(Q, lambda P, w: np.einsum("nk,kd->nd", u0.value(P), w) / eps, drho)

    def hess(Q):
        def h(P, w):
            H = np.einsum("nki,kj->nij", u0.grad(P), w) / eps
            return 0.5 * (H + np.swapaxes(H, -1, -2))
        return _apply(Q, h, drho)

    spec = None if u0.spec is None else {"kind": "mollified", "base": u0.spec, "eps": eps,
                                         "order": order}
    return SmoothCondition(dim, Piece(value, grad, hess), u0.L, u0.B, u0.domain,
                           f"mollified({u0.name})", spec)


def mollify_eval(u0, eps, Q, order=33, chunk=256):
    """(value, gradient) of the mollified data at Q from one pass over u0."""
    if not eps > 0:
        raise ConfigError("eps must be positive")
    dim = u0.dim
    Y, rho, drho = _quadrature(dim, order)
    shifts = eps * Y
    Q = _pts(Q, dim)
    flat = Q.reshape(-1, dim)
    val = np.empty(flat.shape[0])
    grad = np.empty((flat.shape[0], dim))
    for lo in range(0, flat.shape[0], chunk):
        blk = flat[lo:lo + chunk]
        U = u0.value(blk[:, None, :] - shifts[None, :, :])
        val[lo:lo + chunk] = U @ rho
        grad[lo:lo + chunk] = U @ drho / eps
    return val.reshape(Q.shape[:-1]), grad.reshape(Q.shape)


# ---------------------------------------------------------------- point sets

def as_point_set(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise EmptyInput("empty point set")
    if not np.all(np.isfinite(X)):
        raise ConfigError("point set has non-finite coordinates")
    return X


def nearest_distances(X, Y, method="auto"):
    """d(x, Y) for every row x of X (exact)."""
    X, Y = as_point_set(X), as_point_set(Y)
    if method == "auto":
        method = "kdtree" if X.shape[0] * Y.shape[0] > 4_000_000 else "brute"
    if method == "kdtree":
        d, _ = cKDTree(Y).query(X, k=1)
        return d
    return np.sqrt(_kernels.K.min_sqdist(np.ascontiguousarray(X), np.ascontiguousarray(Y)))


def directed_hausdorff(X, Y, method="auto"):
    """sup over x in X of d(x, Y)."""
    return float(nearest_distances(X, Y, method).max())


def hausdorff_distance(X, Y, method="auto"):
    """Symmetric Hausdorff distance between finite point sets."""
    return max(directed_hausdorff(X, Y, method), directed_hausdorff(Y, X, method))


def point_to_set(x, X):
    return float(nearest_distances(np.atleast_2d(np.asarray(x, float)), X, "brute")[0])


def enhanced_triangle_check(x, y, X, Y, slack=1e-12, d_h=None):
    """d(x,X) <= d(x,y) + d(y,Y) + d_H(X,Y), up to floating-point slack.

    ``d_h`` passes a precomputed d_H(X, Y) for large sets.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lhs = point_to_set(x, X)
    dh = hausdorff_distance(X, Y) if d_h is None else float(d_h)
    rhs = float(np.linalg.norm(x - y)) + point_to_set(y, Y) + dh
    return lhs <= rhs + slack * (1.0 + rhs)


def derivative_graph_1d(u0, grid, fan_samples=201):
    """Points (q, p) of graph(∂u0) on a grid plus full Clarke fans at kinks."""
    grid = np.asarray(grid, dtype=float)
    pts = [np.stack([grid, u0.du(grid)], axis=1)]
    for k, x in enumerate(getattr(u0, "kinks", ())):
        a, b = u0.one_sided(k)
        p = np.linspace(min(a, b), max(a, b), fan_samples)
        pts.append(np.stack([np.full_like(p, x), p], axis=1))
    return np.concatenate(pts)


# ---------------------------------------------------------------- transforms

def _shift_piece(pc, c):
    return Piece(lambda Q: pc.value(Q) + c, pc.grad, pc.hess)


def _affine_piece(pc, A, b):
    # v(q) = P(Aᵀq) + b·q, rows of Q are points
    return Piece(lambda Q: pc.value(Q @ A) + Q @ b,
                 lambda Q: pc.grad(Q @ A) @ A.T + b,
                 lambda Q: np.einsum("ij,...jk,lk->...il", A, pc.hess(Q @ A), A))


def add_constant(u0, c):
    """u0 + c, same representation."""
    c = float(c)
    spec = None if u0.spec is None else {"kind": "shifted", "base": u0.spec, "c": c}
    if isinstance(u0, SmoothCondition):
        return SmoothCondition(u0.dim, _shift_piece(u0.piece, c), u0.L, u0.B, u0.domain,
                               u0.name, spec)
    if isinstance(u0, KinkedProfile1D):
        return KinkedProfile1D(tuple(_shift_piece(p, c) for p in u0.pieces), u0.kinks,
                               u0.L, u0.B, u0.domain, u0.name, spec)
    if isinstance(u0, MinOfSmooth):
        out = MinOfSmooth(u0.dim, tuple(_shift_piece(p, c) for p in u0.pieces), u0.interfaces,
                          u0.L, u0.B, u0.domain, u0.name, spec)
        if hasattr(u0, "profile"):
            object.__setattr__(out, "profile", u0.profile)
        return out
    if isinstance(u0, LiftedProfile):
        return LiftedProfile(add_constant(u0.base, c), u0.p2, u0.L, u0.B, u0.domain, u0.name, spec)
    raise ConfigError(f"cannot shift {type(u0).__name__}")


def transform_condition(u0, A, b):
    """v0(q) = u0(Aᵀq) + b·q (the data side of an affine conjugation)."""
    d = u0.dim
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(d, d)
    b = np.atleast_1d(np.asarray(b, dtype=float)).reshape(d)
    if abs(np.linalg.det(A)) < 1e-14:
        raise ConfigError("singular transform")
    nA = float(np.linalg.norm(A, 2))
    L = nA * u0.L + float(np.linalg.norm(b))
    B = nA**2 * u0.B
    spec = None if u0.spec is None else {"kind": "pullback", "base": u0.spec,
                                         "A": A.tolist(), "b": b.tolist()}
    Ainv_T = np.linalg.inv(A).T
    box = np.asarray(u0.domain, dtype=float).reshape(d, 2)
    corners = np.stack(np.meshgrid(*box, indexing="ij"), -1).reshape(-1, d) @ Ainv_T.T
    dom = tuple((float(corners[:, i].min()), float(corners[:, i].max())) for i in range(d))
    if d == 1:
        dom = dom[0]
    if isinstance(u0, SmoothCondition):
        return SmoothCondition(d, _affine_piece(u0.piece, A, b), L, B, dom, u0.name, spec)
    if isinstance(u0, KinkedProfile1D):
        a = float(A[0, 0])
        pcs = [_affine_piece(p, A, b) for p in u0.pieces]
        kinks = u0.kinks / a
        if a < 0:
            pcs, kinks = pcs[::-1], kinks[::-1]
        return KinkedProfile1D(tuple(pcs), kinks, L, B, dom, u0.name, spec)
    if isinstance(u0, MinOfSmooth):
        itfs = tuple(Interface(f.i, f.j,
                               lambda s, f=f: f.curve(s) @ Ainv_T.T,
                               lambda s, f=f: f.dcurve(s) @ Ainv_T.T, f.s_range)
                     for f in u0.interfaces)
        return MinOfSmooth(d, tuple(_affine_piece(p, A, b) for p in u0.pieces), itfs,
                           L, B, dom, u0.name, spec)
    raise ConfigError(f"cannot transform {type(u0).__name__}")
