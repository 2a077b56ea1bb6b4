"""Integrable Hamiltonians H(p), their transformations and entropy tools."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ._smooth import smoothstep
from .errors import ConfigError, NotFound, SingularTransform, UnknownFamily

EQ_TOL = 1e-8
STRICT_TOL = 1e-12


def _as_points(p, dim):
    p = np.asarray(p, dtype=float)
    if dim == 1 and (p.ndim == 0 or p.shape[-1] != 1):
        p = p[..., None]
    if p.shape[-1] != dim:
        raise ConfigError(f"expected momenta with last axis {dim}, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class IntegrableHamiltonian:
    """H(p) with gradient, Hessian and a global bound C on the Hessian norm.

    ``value``, ``grad`` and ``hess`` take arrays of shape (..., d) and return
    shapes (...), (..., d) and (..., d, d).  For d = 1 the helpers ``h``,
    ``dh`` and ``d2h`` work directly on scalar arrays.
    """

    dim: int
    _f: Callable = field(repr=False)
    _g: Callable = field(repr=False)
    _h: Callable = field(repr=False)
    c_bound: float
    name: str = "custom"
    spec: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if not (np.isfinite(self.c_bound) and self.c_bound > 0):
            raise ConfigError("c_bound must be a positive finite number")

    def value(self, p):
        return self._f(_as_points(p, self.dim))

    def grad(self, p):
        return self._g(_as_points(p, self.dim))

    def hess(self, p):
        return self._h(_as_points(p, self.dim))

    # scalar helpers for d = 1
    def h(self, p):
        return self._f(np.asarray(p, dtype=float)[..., None])

    def dh(self, p):
        return self._g(np.asarray(p, dtype=float)[..., None])[..., 0]

    def d2h(self, p):
        return self._h(np.asarray(p, dtype=float)[..., None])[..., 0, 0]

    def sample_box(self, radius, n=None):
        """Grid of momenta covering the cube [-radius, radius]^d."""
        n = n or (4001 if self.dim == 1 else 201 if self.dim == 2 else 41)
        axes = [np.linspace(-radius, radius, n)] * self.dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)

    def curvature_bound(self, radius):
        """Hessian norm bound on the momentum ball of the given radius.

        Sampled on the enclosing cube with a 2% safety factor and never
        larger than the global ``c_bound``.
        """
        P = self.sample_box(radius)
        norms = np.linalg.norm(self.hess(P), ord=2, axis=(-2, -1))
        return float(min(self.c_bound, 1.02 * norms.max() + 1e-12))

    def grad_bound(self, radius):
        """max ‖∇H‖ sampled on the cube of the given radius."""
        P = self.sample_box(radius)
        return float(np.linalg.norm(self.grad(P), axis=-1).max())

    def partial_bounds(self, radius):
        """Per-axis max |∂H/∂p_i| sampled on the ball of the given radius."""
        P = self.sample_box(radius)
        P = P[np.linalg.norm(P, axis=-1) <= radius + 1e-12]
        return np.abs(self.grad(P)).max(axis=0)


# ---------------------------------------------------------------- builtins

def _wrap1d(f, df, d2f):
    return (lambda P: f(P[..., 0]),
            lambda P: df(P[..., 0])[..., None],
            lambda P: d2f(P[..., 0])[..., None, None])


def _saddle():
    def f(P):
        return P[..., 0] * P[..., 1]

    def g(P):
        return np.stack([P[..., 1], P[..., 0]], axis=-1)

    def h(P):
        out = np.zeros(P.shape[:-1] + (2, 2))
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = 1.0
        return out

    return IntegrableHamiltonian(2, f, g, h, 1.0, "saddle", {"family": "saddle"})


def _half_square(dim=1):
    def f(P):
        return 0.5 * np.sum(P * P, axis=-1)

    def g(P):
        return np.array(P, dtype=float, copy=True)

    def h(P):
        return np.broadcast_to(np.eye(dim), P.shape[:-1] + (dim, dim)).copy()

    return IntegrableHamiltonian(dim, f, g, h, 1.0, "half_square",
                                 {"family": "half_square", "coeffs": [dim]})


def _cubic_core(p):
    return -p**3 + p**2 + p - 1.0, -3.0 * p**2 + 2.0 * p + 1.0, -6.0 * p + 2.0


def tangent_blend(core, edge, width):
    """Wrap a 1D function so that outside [-edge, edge] it blends C² into
    its tangent lines at ±edge over ``width`` (affine beyond)."""

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        P, dP, d2P = core(p)
        out = [np.array(P, dtype=float), np.array(dP, dtype=float), np.array(d2P, dtype=float)]
        for sgn in (1.0, -1.0):
            mask = sgn * p > edge
            if not np.any(mask):
                continue
            pe = sgn * edge
            Pe, dPe, _ = core(np.float64(pe))
            pm = p[mask]
            c0, c1, c2 = P[mask], dP[mask], d2P[mask]
            lin = Pe + dPe * (pm - pe)
            s, ds, d2s = smoothstep((sgn * pm - edge) / width)
            dx = sgn / width
            out[0][mask] = (1 - s) * c0 + s * lin
            out[1][mask] = c1 + ds * dx * (lin - c0) + s * (dPe - c1)
            out[2][mask] = (1 - s) * c2 + d2s * dx * dx * (lin - c0) + 2 * ds * dx * (dPe - c1)
        return out

    return evaluate


def _sampled_c_bound(d2h, radius):
    x = np.linspace(-radius, radius, 200001)
    return float(1.02 * np.abs(d2h(x)).max())


def _cubic_wave(edge=2.0, width=1.0):
    ev = tangent_blend(_cubic_core, edge, width)
    f, df, d2f = (lambda p: ev(p)[0]), (lambda p: ev(p)[1]), (lambda p: ev(p)[2])
    C = _sampled_c_bound(d2f, edge + width + 1.0)
    return IntegrableHamiltonian(1, *_wrap1d(f, df, d2f), C, "cubic_wave",
                                 {"family": "cubic_wave", "c_bound": C})


def custom_1d(f, df, d2f, c_bound, name="custom"):
    """1D Hamiltonian from three scalar callables."""
    return IntegrableHamiltonian(1, *_wrap1d(f, df, d2f), float(c_bound), name,
                                 {"family": "custom", "name": name})


def custom_poly(terms, c_bound, box=None):
    """Polynomial Hamiltonian sum c * prod p_i^{e_i} from [[c, [e_1..e_d]], ...]."""
    terms = [(float(c), tuple(int(e) for e in ex)) for c, ex in terms]
    if not terms:
        raise ConfigError("custom_poly needs at least one term")
    dim = len(terms[0][1])
    if any(len(ex) != dim for _, ex in terms):
        raise ConfigError("inconsistent exponent lengths")
    if not all(math.isfinite(c) for c, _ in terms):
        raise ConfigError("non-finite coefficient")

    def mono(P, ex, dexp):
        # derivative multi-index dexp applied to prod p_i^ex_i
        out = np.ones(P.shape[:-1])
        for i, (e, k) in enumerate(zip(ex, dexp)):
            if k > e:
                return np.zeros(P.shape[:-1])
            coef = math.prod(range(e - k + 1, e + 1))
            out = out * coef * P[..., i] ** (e - k)
        return out

    def f(P):
        return sum(c * mono(P, ex, (0,) * dim) for c, ex in terms)

    def g(P):
        cols = []
        for i in range(dim):
            dexp = tuple(1 if j == i else 0 for j in range(dim))
            cols.append(sum(c * mono(P, ex, dexp) for c, ex in terms))
        return np.stack(cols, axis=-1)

    def h(P):
        out = np.zeros(P.shape[:-1] + (dim, dim))
        for i in range(dim):
            for j in range(dim):
                dexp = [0] * dim
                dexp[i] += 1
                dexp[j] += 1
                out[..., i, j] = sum(c * mono(P, ex, tuple(dexp)) for c, ex in terms)
        return out

    spec = {"family": "custom_poly", "coeffs": [[c, list(ex)] for c, ex in terms], "c_bound": float(c_bound)}
    if box is not None:
        spec["box"] = [list(map(float, b)) for b in box]
    return IntegrableHamiltonian(dim, f, g, h, float(c_bound), "custom_poly", spec)


def make_builtin(name, params=None):
    """Build a catalog Hamiltonian.

    Names: ``saddle`` (p1 p2), ``half_square`` (|p|^2/2, params ``dim``),
    ``cubic_wave`` (-(p+1)(1-p)^2 on [-2,2] with C² affine tails), and
    ``custom`` (params ``dim``, ``value``, ``grad``, ``hess``, ``c_bound``).
    """
    params = dict(params or {})
    for k, v in params.items():
        if isinstance(v, (int, float)) and not math.isfinite(v):
            raise ConfigError(f"non-finite parameter {k}")
    if name == "saddle":
        return _saddle()
    if name == "half_square":
        return _half_square(int(params.get("dim", 1)))
    if name == "cubic_wave":
        return _cubic_wave(float(params.get("edge", 2.0)), float(params.get("width", 1.0)))
    if name == "custom":
        try:
            return IntegrableHamiltonian(int(params["dim"]), params["value"], params["grad"],
                                         params["hess"], float(params["c_bound"]),
                                         params.get("name", "custom"), params.get("spec"))
        except KeyError as exc:
            raise ConfigError(f"custom Hamiltonian missing {exc}") from None
    raise UnknownFamily(f"unknown Hamiltonian family {name!r}")


def from_spec(spec):
    """Hamiltonian from its JSON-style dict (or a builtin name)."""
    if isinstance(spec, str):
        return make_builtin(spec)
    fam = spec.get("family")
    if fam == "custom_poly":
        if "coeffs" not in spec or "c_bound" not in spec:
            raise ConfigError("custom_poly needs coeffs and c_bound")
        return custom_poly(spec["coeffs"], spec["c_bound"], spec.get("box"))
    if fam == "half_square":
        coeffs = spec.get("coeffs") or [1]
        return make_builtin("half_square", {"dim": int(coeffs[0])})
    if fam in ("saddle", "cubic_wave"):
        return make_builtin(fam)
    raise UnknownFamily(f"unknown Hamiltonian family {fam!r}")


def spec_hash(spec):
    import hashlib
    blob = json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------- transforms

@dataclass(frozen=True)
class AffineTransformParams:
    """H̄(p) = H(Ap + b)/lam + p·n + alpha."""

    A: np.ndarray
    b: np.ndarray
    n: np.ndarray
    alpha: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        d = A.shape[0]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", np.broadcast_to(np.asarray(self.b, dtype=float), (d,)).copy())
        object.__setattr__(self, "n", np.broadcast_to(np.asarray(self.n, dtype=float), (d,)).copy())
        if A.shape != (d, d):
            raise SingularTransform("A must be square")
        if abs(np.linalg.det(A)) < 1e-14:
            raise SingularTransform("A is singular")
        if self.lam == 0 or not math.isfinite(self.lam):
            raise SingularTransform("lambda must be nonzero")

    @property
    def dim(self):
        return self.A.shape[0]

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim), np.zeros(dim), np.zeros(dim), 0.0, 1.0)


def affine_transform(H, T):
    """Apply T to H; c_bound becomes C‖A‖²/|λ|."""
    if T.dim != H.dim:
        raise ConfigError("transform dimension does not match Hamiltonian")
    A, b, n, alpha, lam = T.A, T.b, T.n, float(T.alpha), float(T.lam)

    def inner(P):
        return P @ A.T + b

    def f(P):
        return H._f(inner(P)) / lam + P @ n + alpha

    def g(P):
        return H._g(inner(P)) @ A / lam + n

    def h(P):
        return np.einsum("ki,...kl,lj->...ij", A, H._h(inner(P)), A) / lam

    C = H.c_bound * np.linalg.norm(A, 2) ** 2 / abs(lam)
    spec = None
    if H.spec is not None:
        spec = {"family": "affine", "base": H.spec, "A": A.tolist(), "b": b.tolist(),
                "n": n.tolist(), "alpha": alpha, "lam": lam}
    return IntegrableHamiltonian(H.dim, f, g, h, float(C), f"affine({H.name})", spec)


def compose_transforms(T1, T2):
    """Single transform equal to applying T1 and then T2."""
    A = T1.A @ T2.A
    b = T1.A @ T2.b + T1.b
    n = T2.A.T @ T1.n / T2.lam + T2.n
    alpha = (T2.b @ T1.n + T1.alpha) / T2.lam + T2.alpha
    return AffineTransformParams(A, b, n, float(alpha), T1.lam * T2.lam)


def reduce(H, indices, values):
    """Pin the momenta at 0-based ``indices`` to ``values``."""
    indices = [int(i) for i in np.atleast_1d(indices)]
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if len(set(indices)) != len(indices) or any(i < 0 or i >= H.dim for i in indices):
        raise ConfigError(f"invalid indices {indices} for dim {H.dim}")
    if len(values) != len(indices):
        raise ConfigError("indices and values differ in length")
    free = [i for i in range(H.dim) if i not in indices]
    if not free:
        raise ConfigError("cannot pin every coordinate")

    def full(P):
        out = np.empty(P.shape[:-1] + (H.dim,))
        out[..., free] = P
        out[..., indices] = values
        return out

    def f(P):
        return H._f(full(P))

    def g(P):
        return H._g(full(P))[..., free]

    def h(P):
        return H._h(full(P))[..., free, :][..., :, free]

    spec = None
    if H.spec is not None:
        spec = {"family": "reduced", "base": H.spec, "indices": indices, "values": values.tolist()}
    return IntegrableHamiltonian(len(free), f, g, h, H.c_bound, f"reduced({H.name})", spec)


# ---------------------------------------------------------------- diagnostics

@dataclass(frozen=True)
class ConvexityVerdict:
    kind: str                      # Convex | Concave | Neither | Indeterminate
    witnesses: tuple = ()          # momenta certifying the verdict
    eigenvalues: tuple = ()        # Hessian eigenvalues at the witnesses


def classify_convexity(H, box, n_samples=101, tol=STRICT_TOL):
    """Sample-level convexity verdict from Hessian eigenvalues on a grid."""
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    if box.shape[0] != H.dim:
        raise ConfigError("box dimension does not match Hamiltonian")
    if np.any(box[:, 1] <= box[:, 0]):
        raise ConfigError("empty box")
    if n_samples < 2:
        raise ConfigError("need at least 2 samples per axis")
    axes = [np.linspace(lo, hi, n_samples) for lo, hi in box]
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, H.dim)
    ev = np.linalg.eigvalsh(H.hess(P))
    lo, hi = ev[:, 0], ev[:, -1]
    center = box.mean(axis=1)
    dist = np.linalg.norm(P - center, axis=1)

    def closest(mask):
        idx = np.flatnonzero(mask)
        return idx[np.argmin(dist[idx])]

    indefinite = (lo < -tol) & (hi > tol)
    if indefinite.any():
        i = closest(indefinite)
        return ConvexityVerdict("Neither", (P[i],), (ev[i],))
    pos, neg = hi > tol, lo < -tol
    if pos.any() and neg.any():
        i, j = closest(pos), closest(neg)
        return ConvexityVerdict("Neither", (P[i], P[j]), (ev[i], ev[j]))
    if pos.any():
        return ConvexityVerdict("Convex")
    if neg.any():
        return ConvexityVerdict("Concave")
    return ConvexityVerdict("Indeterminate")


@dataclass(frozen=True)
class EntropyResult:
    holds: bool
    strict: bool
    margin: float


def check_entropy_condition(H, p1, p2, n_samples=2001):
    """Oleinik condition: H below its chord between p1 and p2 on a μ-grid."""
    if p1 == p2:
        raise ConfigError("p1 and p2 must differ")
    if n_samples < 3:
        raise ConfigError("need at least 3 samples")
    lo, hi = (p1, p2) if p1 < p2 else (p2, p1)
    mu = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    gap = H.h(mu * lo + (1 - mu) * hi) - (mu * H.h(lo) + (1 - mu) * H.h(hi))
    m = float(gap.max())
    return EntropyResult(m <= 0.0, m < -STRICT_TOL, -m)


@dataclass(frozen=True)
class LaxResult:
    holds: bool
    strict: bool
    left_margin: float
    right_margin: float

    @property
    def margin(self):
        return min(self.left_margin, self.right_margin)


def check_lax_condition(H, p1, p2):
    """H'(p1)(p2-p1) <= H(p2)-H(p1) <= H'(p2)(p2-p1) with both margins."""
    if p1 == p2:
        raise ConfigError("p1 and p2 must differ")
    dH = float(H.h(p2) - H.h(p1))
    left = dH - float(H.dh(p1)) * (p2 - p1)
    right = float(H.dh(p2)) * (p2 - p1) - dH
    return LaxResult(left >= 0 and right >= 0, left > STRICT_TOL and right > STRICT_TOL, left, right)


@dataclass(frozen=True)
class EntropyPair:
    """p1 < p2 with strict entropy between them and a chord tangent at p2."""

    p1: float
    p2: float
    strict: bool = True
    reflect: bool = False

    def __post_init__(self):
        if not self.p1 < self.p2:
            raise ConfigError("EntropyPair needs p1 < p2")


def _chord_slope(H, a, p):
    return (H.h(p) - H.h(a)) / (p - a)


def _pair_ok(G, p1, p2, tol=EQ_TOL):
    if not p1 < p2:
        return False
    slope = (G.h(p2) - G.h(p1)) / (p2 - p1)
    return (check_entropy_condition(G, p1, p2).strict
            and abs(G.dh(p2) - slope) <= tol
            and G.dh(p1) < G.dh(p2)
            and G.d2h(p2) < 0)


def _tangent_branch(G, p1, p2o, n):
    """Maximise the chord slope from p1 over (p1, p2o]; polish the tangency."""
    grid = np.linspace(p1, p2o, n)[1:]
    sl = _chord_slope(G, p1, grid)
    k = int(np.argmax(sl))
    if k == len(grid) - 1:
        return None
    phi = lambda p: G.dh(p) - _chord_slope(G, p1, p)
    a = grid[max(k - 1, 0)]
    b = grid[k + 1]
    if phi(a) * phi(b) > 0:
        return None
    return brentq(phi, a, b, xtol=1e-14, rtol=1e-15)


def _backtrace_branch(G, p2, lo, n):
    """Last point p1 < p2 where the tangent line at p2 meets the graph."""
    grid = np.linspace(lo, p2, n)[:-1]
    phi = lambda p: G.h(p) - G.h(p2) - G.dh(p2) * (p - p2)
    vals = phi(grid)
    # the tangent lies above the graph just left of p2 (H''(p2) < 0)
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if idx.size == 0:
        return None
    k = idx[-1]
    return brentq(phi, grid[k], grid[k + 1], xtol=1e-14, rtol=1e-15)


def find_entropy_pair(H, scan_box=(-1.0, 1.0), n_samples=4001, nudge=1e-4, retries=100):
    """Constructive pair (p1, p2) for a non-convex, non-concave 1D H.

    The seeds are the extreme points of the sampled H'' on ``scan_box``
    (default: the interval that normalisation maps the pair onto).

    If the sampled H'' peaks to the right of its minimum the problem is
    solved for H(-p) instead and ``reflect`` is set; the returned pair then
    refers to the reflected Hamiltonian.
    """
    if H.dim != 1:
        raise ConfigError("find_entropy_pair needs a 1D Hamiltonian")
    lo, hi = map(float, scan_box)
    if classify_convexity(H, [(lo, hi)], n_samples).kind != "Neither":
        raise ConfigError("Hamiltonian is not neither-convex-nor-concave on the scan box")
    grid = np.linspace(lo, hi, n_samples)
    d2 = H.d2h(grid)
    reflect = bool(grid[np.argmax(d2)] > grid[np.argmin(d2)])
    G = affine_transform(H, AffineTransformParams([[-1.0]], [0.0], [0.0])) if reflect else H
    if reflect:
        grid = -grid[::-1]
        d2 = G.d2h(grid)
    p1o, p2o = grid[np.argmax(d2)], grid[np.argmin(d2)]
    for k in range(retries + 1):
        q1, q2 = p1o + k * nudge * (k % 2), p2o - k * nudge * ((k + 1) % 2)
        if not q1 < q2 or G.d2h(q2) >= 0:
            continue
        if not check_entropy_condition(G, q1, q2).strict:
            p1, p2 = q1, _tangent_branch(G, q1, q2, n_samples)
        else:
            p1, p2 = _backtrace_branch(G, q2, lo - (hi - lo), 2 * n_samples), q2
        if p1 is None or p2 is None:
            continue
        if _pair_ok(G, p1, p2):
            return EntropyPair(float(p1), float(p2), True, reflect)
    raise NotFound("no entropy pair found at this scan resolution")


def normalizing_transform(H, pair):
    """Affine map sending the pair to ±1 with H̄(±1) = H̄'(1) = 0.

    Composes the reflection p -> -p first when ``pair.reflect`` is set.
    """
    G = affine_transform(H, AffineTransformParams([[-1.0]], [0.0], [0.0])) if pair.reflect else H
    p1, p2 = pair.p1, pair.p2
    A = 0.5 * (p2 - p1)
    b = 0.5 * (p1 + p2)
    n = -A * float(G.dh(p2))
    alpha = -float(G.h(p2)) - (b - p2) * float(G.dh(p2))
    T = AffineTransformParams([[A]], [b], [n], alpha, 1.0)
    if pair.reflect:
        T = compose_transforms(AffineTransformParams([[-1.0]], [0.0], [0.0]), T)
    return T


def is_normalized(H, tol=EQ_TOL):
    """H(-1)=H(1)=H'(1)=0, H'(-1)<0, H''(1)<0 and H<0 on (-1,1) (sampled)."""
    if H.dim != 1:
        return False
    inner = np.linspace(-1, 1, 2003)[1:-1]
    return bool(abs(H.h(-1.0)) <= tol and abs(H.h(1.0)) <= tol and abs(H.dh(1.0)) <= tol
                and H.dh(-1.0) < 0 and H.d2h(1.0) < 0 and np.all(H.h(inner) < 0))


def catalog_1d():
    """Deterministic list of 1D catalog Hamiltonians used by the property suites."""
    cw = make_builtin("cubic_wave")
    return [
        make_builtin("half_square"),
        cw,
        custom_poly([[-1.0, [2]]], 2.0),
        custom_poly([[1.0, [4]], [-2.0, [2]]], 40.0, box=[[-1.7, 1.7]]),
        affine_transform(cw, AffineTransformParams([[-0.5]], [0.3], [0.2], 0.1, 2.0)),
    ]
