"""End-to-end counterexample drivers: the 1D wave-type example, the 2D saddle
example and the smoothing argument, with machine-checkable reports."""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np
from scipy.spatial import cKDTree

from . import io as hio
from . import wavefront as wf
from .characteristics import action, classical_solve, horizon
from .errors import (AxisMismatch, ConfigError, EmptyViolationInterval, HorizonExceeded,
                     NormalizationFailed, NotFound, ShockSolverFailed, WitnessGapNonpositive)
from .hamiltonian import (AffineTransformParams, affine_transform, check_entropy_condition,
                          check_lax_condition, classify_convexity, custom_1d, find_entropy_pair,
                          is_normalized, normalizing_transform, spec_hash)
from .initial_data import (_bump, abs_kink_quad, enhanced_triangle_check, hausdorff_distance,
                           min_of_quadratics, mollify_eval)
from .solution import SolutionGrid, grid_points, uniform_axis
from .variational import (_front_domain, envelope_solve, saddle_family, variational_solve)
from .viscosity import (make_scheme, saddle_test_residual, subsolution_residual,
                        viscosity_solve)

SCHEME_TOL = 2e-2            # declared discretisation tolerance of the grid solvers
STRICT_FACTOR = 3.0          # strict-gap witness: gap > 3 × scheme tolerance
SCHEMA_VERSION = 1
EPS_SWEEP = tuple(0.1 * 2.0 ** -k for k in range(11))
SCAN_BOXES = ((-1.0, 1.0), (-2.0, 2.0), (-4.0, 4.0))   # widened until an entropy pair is found

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "scenario", "params", "t", "shock", "margins", "gaps",
                 "witness", "artifacts"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "scenario": {"enum": ["dim1", "saddle"]},
        "params": {"type": "object"},
        "t": {"type": "number", "exclusiveMinimum": 0},
        "shock": {"type": "object"},
        "margins": {
            "type": "object", "required": ["lax", "entropy"],
            "properties": {"lax": {"type": "number"}, "entropy": {"type": "number"}},
        },
        "gaps": {
            "type": "object", "required": ["sup", "min_signed", "scheme_tol"],
            "properties": {"sup": {"type": "number", "minimum": 0},
                           "min_signed": {"type": "number"},
                           "scheme_tol": {"type": "number", "exclusiveMinimum": 0}},
        },
        "witness": {
            "type": "object", "required": ["q", "R", "V", "gap", "strict"],
            "properties": {"q": {"type": "array", "items": {"type": "number"}},
                           "gap": {"type": "number"}, "strict": {"type": "boolean"}},
        },
        "artifacts": {"type": "array", "items": {"type": "string"}},
        "sweep": {"type": "array"},
        "extra": {"type": "object"},
    },
}


@dataclass
class CounterexampleReport:
    scenario: str
    params: dict
    t: float
    shock: dict
    margins: dict
    gaps: dict
    witness: dict
    artifacts: list = field(default_factory=list)
    sweep: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = hio._clean(asdict(self))
        d["schema_version"] = SCHEMA_VERSION
        validate_report(d)
        return d

    def write(self, path):
        d = self.to_json()
        hio.write_json(path, d)
        return path

    @classmethod
    def from_json(cls, d):
        validate_report(d)
        d = {k: v for k, v in d.items() if k != "schema_version"}
        return cls(**d)

    @classmethod
    def read(cls, path):
        return cls.from_json(hio.read_json(path))


def validate_report(d):
    """Schema check plus the report invariants (finite margins, files re-parse)."""
    try:
        jsonschema.validate(d, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"report does not match its schema: {exc.message}") from exc
    for k in ("lax", "entropy"):
        if d["margins"][k] is None or not math.isfinite(d["margins"][k]):
            raise ConfigError(f"margin {k} is not finite")
    for p in d["artifacts"]:
        if not os.path.exists(p):
            raise ConfigError(f"artifact {p} is missing")
    return True


# ---------------------------------------------------------------- comparisons

def compare_solutions(R, V, mask=None):
    """sup|R-V|, min(R-V) and the node maximising R-V (within ``mask``)."""
    if not R.same_axes(V):
        raise AxisMismatch("R and V live on different grids")
    D = R.values - V.values
    m = np.ones(D.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not m.any():
        raise ConfigError("witness mask is empty")
    Dm = np.where(m, D, -np.inf)
    idx = np.unravel_index(int(np.argmax(Dm)), D.shape)
    q = [float(a[i]) for a, i in zip(R.axes, idx)]
    return {"sup_abs_gap": float(np.max(np.abs(D))), "min_signed_gap": float(D.min()),
            "witness": {"q": q, "index": [int(i) for i in idx], "R": float(R.values[idx]),
                        "V": float(V.values[idx]), "gap": float(D[idx])}}


def _witness_entry(cmp, tol=SCHEME_TOL):
    w = dict(cmp["witness"])
    w["strict"] = bool(w["gap"] > STRICT_FACTOR * tol)
    w["threshold"] = STRICT_FACTOR * tol
    return w


def _gaps(cmp, tol=SCHEME_TOL):
    return {"sup": cmp["sup_abs_gap"], "min_signed": cmp["min_signed_gap"], "scheme_tol": tol,
            "min_signed_ok": bool(cmp["min_signed_gap"] >= -tol)}


def bruteforce_shock_verdict(H, shock, n_slopes=11, n_shifts=11, shift=0.05, radius=1e-4,
                             n_dirs=720, radii=(0.25, 0.5, 1.0)):
    """Viscosity test of a min-type 1D shock by explicit quadratic test functions.

    Near the shock point u = min(p_l x - H(p_l) t, p_r x - H(p_r) t) with
    p_l > p_r.  For μ on an ``n_slopes`` grid between the momenta and time
    slopes σ = chord value + δ, δ on an ``n_shifts`` grid in ±``shift``, the
    test function φ = μx + σt + x² + t² is kept when u - φ has a local max at
    the origin on a polar neighbourhood (``n_dirs`` directions at the given
    fractions of ``radius``).  The shock fails the subsolution test iff some
    kept pair has σ + H(μ) > 0.
    """
    pl, pr = float(shock.p_left), float(shock.p_right)
    if not pl > pr:
        raise ConfigError("brute-force verdict expects a min-type shock (p_left > p_right)")
    sl, sr = -float(H.h(pl)), -float(H.h(pr))
    ang = np.linspace(0.0, 2 * np.pi, n_dirs, endpoint=False)
    rad = radius * np.asarray(radii, dtype=float)
    X = (rad[:, None] * np.cos(ang)[None, :]).ravel()
    T = (rad[:, None] * np.sin(ang)[None, :]).ravel()
    U = np.minimum(pl * X + sl * T, pr * X + sr * T)
    touched = 0
    for w in np.linspace(0.0, 1.0, n_slopes):
        mu = (1 - w) * pl + w * pr
        for d in np.linspace(-shift, shift, n_shifts):
            sig = (1 - w) * sl + w * sr + d
            # u - φ vanishes at the origin
            if np.max(U - (mu * X + sig * T + X * X + T * T)) > 0.0:
                continue
            touched += 1
            if sig + float(H.h(mu)) > 1e-12:
                return False
    if touched == 0:
        raise ConfigError("no test function touched from above; refine the search grid")
    return True


# ---------------------------------------------------------------- 1D example

def normalize_hamiltonian(H):
    """(H̄, T) with H̄ = affine_transform(H, T) normalised; T is None when H
    already is."""
    if is_normalized(H):
        return H, None
    pair, last = None, None
    for box in SCAN_BOXES:
        try:
            pair = find_entropy_pair(H, box)
            break
        except (NotFound, ConfigError) as exc:
            last = exc
    if pair is None:
        raise NormalizationFailed(f"no entropy pair: {last}")
    T = normalizing_transform(H, pair)
    Hn = affine_transform(H, T)
    if not is_normalized(Hn):
        raise NormalizationFailed("affine normalisation did not produce H̄(±1) = H̄'(1) = 0")
    return Hn, T


def solve_shock_system(H, u0, t, kink=0, tol=1e-13, iters=60):
    """Newton for the 1D shock between the kink fan and the right piece.

    Unknowns: the foot x0 > kink of the right-piece characteristic and the
    fan momentum p.  Equations: both characteristics land at the same point
        x0 + tH'(u0'(x0)) = k + tH'(p),
    with equal actions
        u0(x0) + t(gH'(g) - H(g)) = u0(k) + t(pH'(p) - H(p)),  g = u0'(x0).
    Seeded from the limit front: x0 = k - tH'(p_r), p = p_l.
    """
    k = float(u0.kinks[kink])
    pl, pr = u0.one_sided(kink)
    uk = float(u0.u(np.array([k]))[0])
    h, dh, d2h = H.h, H.dh, H.d2h

    def F(z):
        x0, p = z
        g = float(u0.du(np.array([x0]))[0])
        return np.array([x0 + t * dh(g) - k - t * dh(p),
                         float(u0.u(np.array([x0]))[0]) + t * (g * dh(g) - h(g)) - uk
                         - t * (p * dh(p) - h(p))])

    z = np.array([k - t * float(dh(pr)), float(pl)])
    for _ in range(iters):
        x0, p = z
        g = float(u0.du(np.array([x0]))[0])
        g2 = float(u0.d2u(np.array([x0]))[0])
        J = np.array([[1.0 + t * d2h(g) * g2, -t * d2h(p)],
                      [g + t * g * d2h(g) * g2, -t * p * d2h(p)]], dtype=float)
        r = F(z)
        if np.max(np.abs(r)) < tol:
            break
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise ShockSolverFailed("singular shock Jacobian") from exc
        lam = 1.0
        while lam > 1e-6 and np.max(np.abs(F(z + lam * step))) >= np.max(np.abs(r)):
            lam *= 0.5
        z = z + lam * step
    r = F(z)
    if not np.all(np.isfinite(z)) or np.max(np.abs(r)) > 1e-10 or not z[0] > k:
        raise ShockSolverFailed(f"shock Newton did not converge (residual {np.max(np.abs(r)):.3g})")
    x0, p = map(float, z)
    g = float(u0.du(np.array([x0]))[0])
    return {"foot": x0, "p_fan": p, "p_piece": g, "q": k + t * float(dh(p)),
            "residual": float(np.max(np.abs(r)))}


def _check_neither(H, box=(-2.0, 2.0)):
    if H.dim != 1:
        raise ConfigError("the 1D scenario needs a 1D Hamiltonian")
    v = classify_convexity(H, [box])
    if v.kind != "Neither":
        raise ConfigError(f"Hamiltonian is {v.kind} on {box}; the scenario needs a "
                          "non-convex non-concave H")


def _dim1_artifacts(out_dir, tag, front, sec, q, R, V, h_hash, u_hash):
    if out_dir is None:
        return []
    paths = [os.path.join(out_dir, f"{tag}_front.csv"), os.path.join(out_dir, f"{tag}_section.csv"),
             os.path.join(out_dir, f"{tag}_R.csv"), os.path.join(out_dir, f"{tag}_V.csv")]
    hio.write_front(paths[0], front)
    hio.write_section(paths[1], sec, q)
    hio.write_solution(paths[2], R, h_hash, u_hash)
    hio.write_solution(paths[3], V, h_hash, u_hash)
    return paths + [paths[2] + ".json", paths[3] + ".json"]


def run_counterexample_1d(H, t_list=(0.1, 0.05, 0.025), dx=1e-3, window=(-0.5, 0.5),
                          witness_radius=0.05, cfl=0.9, tol=SCHEME_TOL, out_dir=None):
    """1D counterexample sweep: unique section, shock Newton, Lax margin, R vs V.

    Non-normalised H is first conjugated to H̄ with H̄(±1) = H̄'(1) = 0.  The
    top-level fields describe the first t of ``t_list``; every t has its own
    entry in ``sweep``.
    """
    _check_neither(H)
    Hn, T = normalize_hamiltonian(H)
    u0 = abs_kink_quad()
    if not t_list or any(t <= 0 for t in t_list):
        raise ConfigError("t_list must contain positive times")
    T_h = horizon(Hn, u0)
    if max(t_list) >= T_h:
        raise HorizonExceeded(f"t={max(t_list)} is beyond the horizon {T_h:.6g}")
    q = uniform_axis(window[0], window[1], dx)
    h_hash = spec_hash(Hn.spec) if Hn.spec else None
    u_hash = spec_hash(u0.spec) if u0.spec else None
    pl0, pr0 = u0.one_sided(0)
    sweep = []
    for t in t_list:
        front = wf.build_front_1d(Hn, u0, t, _front_domain(Hn, u0, t, q))
        n_sec = len(wf.enumerate_continuous_sections(front, q))
        sec = wf.lowest_section(front, q)
        shocks = wf.find_shocks(sec)
        sh = solve_shock_system(Hn, u0, t)
        lo, hi = sorted((sh["p_piece"], sh["p_fan"]))
        lax = check_lax_condition(Hn, lo, hi)
        ent = check_entropy_condition(Hn, sh["p_fan"], sh["p_piece"])
        R = variational_solve(Hn, u0, t, q)
        V = viscosity_solve(Hn, u0, t, make_scheme(Hn, u0, t, q, cfl))
        cmp = compare_solutions(R, V, np.abs(q - sh["q"]) <= witness_radius)
        sec_q = [s.q for s in shocks]
        near = min(sec_q, key=lambda x: abs(x - sh["q"])) if sec_q else None
        arts = _dim1_artifacts(out_dir, f"dim1_t{t:.6g}", front, sec, q, R, V, h_hash, u_hash)
        sweep.append({
            "t": t, "sections": n_sec, "unique_section": n_sec == 1,
            "section_shocks": [{"q": s.q, "p_left": s.p_left, "p_right": s.p_right,
                                "source_left": s.source_left, "source_right": s.source_right}
                               for s in shocks],
            "shock": {**sh, "section_q": near,
                      "section_mismatch": None if near is None else abs(near - sh["q"])},
            "margins": {"lax": lax.margin, "lax_left": lax.left_margin,
                        "lax_right": lax.right_margin, "entropy": ent.margin},
            "gaps": _gaps(cmp, tol), "witness": _witness_entry(cmp, tol),
            "limit": {"foot_over_t": sh["foot"] / t, "q_over_t": sh["q"] / t, "p": sh["p_fan"],
                      "expected_foot_over_t": -float(Hn.dh(pr0)), "expected_p": float(pl0)},
            "scheme": V.meta, "artifacts": arts,
        })
    # empirical δ: largest t below which every tested t shows the violation
    delta = 0.0
    for e in sorted(sweep, key=lambda e: e["t"]):
        if e["unique_section"] and e["margins"]["lax"] < 0:
            delta = e["t"]
        else:
            break
    first = sweep[0]
    params = {"H": Hn.spec, "H_input": H.spec, "u0": u0.spec, "t_list": list(t_list), "dx": dx,
              "window": list(window), "cfl": cfl, "witness_radius": witness_radius,
              "normalization": None if T is None else {
                  "A": T.A.tolist(), "b": T.b.tolist(), "n": T.n.tolist(), "alpha": T.alpha,
                  "lam": T.lam}}
    arts = [a for e in sweep for a in e["artifacts"]]
    rep = CounterexampleReport("dim1", params, first["t"], first["shock"], first["margins"],
                               first["gaps"], first["witness"], arts, sweep,
                               {"empirical_delta": delta, "horizon": T_h})
    if out_dir is not None:
        path = os.path.join(out_dir, "dim1_report.json")
        rep.write(path)
    return rep


# ---------------------------------------------------------------- saddle example

def violation_interval(a, b, t):
    """(max(-(a+b)t, -1), -(3b/2)t): where the averaged test function fails."""
    if not b > a > 0:
        raise ConfigError("need b > a > 0")
    if not a > b / 2:
        raise EmptyViolationInterval(f"a={a} <= b/2={b / 2}: -(a+b)t >= -(3b/2)t, interval empty")
    if not 0 < t < 2.0 / (3.0 * b):
        raise ConfigError(f"need 0 < t < 2/(3b) = {2 / (3 * b):.6g}")
    return max(-(a + b) * t, -1.0), -1.5 * b * t


def shock_parabola(a, b, t, q1):
    """q2 where the members with c = a and c = b agree."""
    q1 = np.asarray(q1, dtype=float)
    return q1 * q1 + 2 * (a + b) * t * q1 + t * t * (a * a + a * b + b * b)


def segment_hamiltonian(H, pa, pb):
    """μ ↦ H(pa + μ(pb - pa)) as a 1D Hamiltonian."""
    pa, pb = np.asarray(pa, dtype=float), np.asarray(pb, dtype=float)
    d = pb - pa

    def P(mu):
        mu = np.asarray(mu, dtype=float)
        return pa + mu[..., None] * d

    f = lambda mu: H.value(P(mu))
    df = lambda mu: H.grad(P(mu)) @ d
    d2f = lambda mu: np.einsum("...ij,i,j->...", H.hess(P(mu)), d, d)
    return custom_1d(f, df, d2f, H.c_bound * float(d @ d) + 1e-12, "segment")


def saddle_residual_profile(H, a, b, t, n=50, width=3.0):
    """subsolution_residual of φ = (u_a + u_b)/2 along the shock parabola.

    ∂tφ and ∂qφ come from the classical solutions of the two extreme
    members (∂t u_c = -H(∇u_c)); compared with ½(a-b)²((a+b)t + q1).
    """
    lo, hi = violation_interval(a, b, t)
    q1 = np.linspace(lo, hi, n + 2)[1:-1]
    Q = np.stack([q1, shock_parabola(a, b, t, q1)], axis=-1)
    fam = saddle_family(a, b, width)
    p = []
    for k in (0, fam.size - 1):
        sol = classical_solve(H, fam.member(k), t, Q)
        p.append(sol.p)
    dt_phi = -0.5 * (H.value(p[0]) + H.value(p[1]))
    dq_phi = 0.5 * (p[0] + p[1])
    res = subsolution_residual(H, dt_phi, dq_phi)
    formula = saddle_test_residual(a, b, t, q1)
    return {"q1": q1, "q2": Q[:, 1], "residual": res, "formula": formula,
            "max_formula_error": float(np.max(np.abs(res - formula))),
            "min_residual": float(res.min()), "p_a": p[0], "p_b": p[1]}


def run_counterexample_saddle(a=0.75, b=1.0, t=0.1, dx=2e-3, q1_range=(-1.0, -0.16),
                              q2_range=(-0.5, 0.5), width=3.0, band=0.05, cfl=0.9,
                              n_parabola=50, cross_check=True, tol=SCHEME_TOL, out_dir=None):
    """Saddle counterexample: R (envelope, minimal section), V (2D grid), residuals.

    Returns the report and the grids {"R": envelope, "R_section": minimal
    section or None, "V": viscosity}.
    """
    from .hamiltonian import make_builtin
    lo, hi = violation_interval(a, b, t)
    H = make_builtin("saddle")
    u0 = min_of_quadratics(a, b, width)
    axes = (uniform_axis(q1_range[0], q1_range[1], dx), uniform_axis(q2_range[0], q2_range[1], dx))
    fam = saddle_family(a, b, width)
    R = envelope_solve(H, fam, t, axes)
    xcheck, Rm = None, None
    if cross_check:
        Rm = wf.minimal_section_2d(H, u0, t, axes)
        xcheck = float(np.max(np.abs(Rm.values - R.values)))
    V = viscosity_solve(H, u0, t, make_scheme(H, u0, t, axes, cfl))
    Q = grid_points(axes)
    mask = ((Q[..., 0] > lo) & (Q[..., 0] < hi)
            & (np.abs(Q[..., 1] - shock_parabola(a, b, t, Q[..., 0])) <= band))
    cmp = compare_solutions(R, V, mask)
    prof = saddle_residual_profile(H, a, b, t, n_parabola, width)
    # entropy/Lax verdict along the momentum segment at the witness q1
    qw1 = cmp["witness"]["q"][0]
    Qs = np.array([[qw1, float(shock_parabola(a, b, t, qw1))]])
    pa = classical_solve(H, fam.member(0), t, Qs).p[0]
    pb = classical_solve(H, fam.member(fam.size - 1), t, Qs).p[0]
    G = segment_hamiltonian(H, pa, pb)
    ent = check_entropy_condition(G, 0.0, 1.0)
    lax = check_lax_condition(G, 0.0, 1.0)
    artifacts = []
    if out_dir is not None:
        hh, uh = spec_hash(H.spec), spec_hash(u0.spec)
        for name, S in (("saddle_R.csv", R), ("saddle_V.csv", V)):
            path = os.path.join(out_dir, name)
            if "argmin" in S.meta:
                S = SolutionGrid(S.t, S.axes, S.values, S.provenance,
                                 {"argmin_unique": sorted(set(np.unique(S.meta["argmin"]).tolist()))})
            hio.write_solution(path, S, hh, uh)
            artifacts += [path, path + ".json"]
    shock = {"kind": "parabola", "q1_interval": [lo, hi],
             "coeffs": [t * t * (a * a + a * b + b * b), 2 * (a + b) * t, 1.0],
             "p_a": pa.tolist(), "p_b": pb.tolist(), "at_q1": qw1}
    params = {"a": a, "b": b, "width": width, "dx": dx, "q1_range": list(q1_range),
              "q2_range": list(q2_range), "band": band, "cfl": cfl, "H": H.spec, "u0": u0.spec}
    extra = {"residual_profile": {k: prof[k] for k in ("q1", "residual", "formula",
                                                       "max_formula_error", "min_residual")},
             "residual_positive": bool(prof["min_residual"] > 0),
             "envelope_vs_minimal_section": xcheck, "scheme": V.meta,
             "entropy_verdict": {"holds": ent.holds, "margin": ent.margin},
             "lax_verdict": {"holds": lax.holds, "margin": lax.margin}}
    rep = CounterexampleReport("saddle", params, t, shock, {"lax": lax.margin, "entropy": ent.margin},
                               _gaps(cmp, tol), _witness_entry(cmp, tol), artifacts, [], extra)
    if out_dir is not None:
        rep.write(os.path.join(out_dir, "saddle_report.json"))
    return rep, {"R": R, "R_section": Rm, "V": V}


# ---------------------------------------------------------------- smoothing argument

@dataclass
class _CloudPlan:
    """Sampling plan for the local front: parameter boxes per source."""

    piece_boxes: list          # per piece: array (d, 2) or None
    fan_s: list                # per fan: 1D array of curve parameters (2D) or None
    h: float
    n_fan: int


def _psi(H, t, q0, p, u):
    """ψ(q0, p) = (q0 + t∇H(p), u(q0) + t(p·∇H(p) - H(p)))."""
    return np.column_stack([q0 + t * H.grad(p), u + action(H, t, p)])


def _n_fans(u0):
    return len(u0.kinks) if u0.dim == 1 else len(u0.interfaces)


def _fan_geometry(u0, k, s):
    """Base points, one-sided gradients and unit normals along fan source k."""
    if u0.dim == 1:
        x = np.array([[float(u0.kinks[k])]])
        gl, gr = u0.one_sided(k)
        return x, np.array([[gl]]), np.array([[gr]]), np.ones((1, 1))
    itf = u0.interfaces[k]
    g = itf.curve(s)
    dc = itf.dcurve(s)
    nrm = np.stack([-dc[:, 1], dc[:, 0]], axis=-1) / np.linalg.norm(dc, axis=-1, keepdims=True)
    return g, u0.pieces[itf.i].grad(g), u0.pieces[itf.j].grad(g), nrm


def _box_grid(box, h):
    axes = [lo + h * np.arange(int(np.floor((hi - lo) / h + 1e-9)) + 1) for lo, hi in box]
    return grid_points(axes).reshape(-1, len(box))


def _band_distance(u0, Q0):
    """Approximate distance from base points to the nearest kink set."""
    if u0.dim == 1:
        return np.min(np.abs(Q0[:, :1] - u0.kinks[None, :]), axis=1)
    out = np.full(len(Q0), np.inf)
    for itf in u0.interfaces:
        a, b = u0.pieces[itf.i], u0.pieces[itf.j]
        gap = np.abs(a.value(Q0) - b.value(Q0))
        out = np.minimum(out, gap / np.maximum(np.linalg.norm(a.grad(Q0) - b.grad(Q0), axis=-1),
                                               1e-300))
    return out


def _kernel_quantiles(dim, n):
    """Quantiles of the mollifier's marginal along one axis (unit radius)."""
    y = np.linspace(-1.0, 1.0, 4001)
    if dim == 1:
        m = _bump(y * y)
    else:
        z, w = np.polynomial.legendre.leggauss(64)
        half = np.sqrt(np.clip(1.0 - y * y, 0.0, None))
        m = (_bump(y[:, None] ** 2 + (half[:, None] * z[None, :]) ** 2) @ w) * half
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (m[1:] + m[:-1]) * np.diff(y))])
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return np.interp(np.linspace(0.0, 1.0, n), cdf[keep], y[keep])


def _lipschitz_cloud(H, u0, t, plan):
    """Front points of the kinked data: active pieces plus full Clarke fans."""
    q0s, ps, us, tags = [], [], [], []
    for i, box in enumerate(plan.piece_boxes):
        if box is None:
            continue
        Q0 = _box_grid(box, plan.h)
        Q0 = Q0[u0.active(Q0) == i]
        q0s.append(Q0), ps.append(u0.pieces[i].grad(Q0)), us.append(u0.pieces[i].value(Q0))
        tags.append(np.full(len(Q0), i))
    lam = np.linspace(0.0, 1.0, plan.n_fan)[:, None]
    for k, s in enumerate(plan.fan_s):
        if s is None:
            continue
        g, gi, gj, _ = _fan_geometry(u0, k, s)
        q0 = np.repeat(g, len(lam), axis=0)
        p = (np.repeat(gi, len(lam), axis=0) * np.tile(1 - lam, (len(g), 1))
             + np.repeat(gj, len(lam), axis=0) * np.tile(lam, (len(g), 1)))
        q0s.append(q0), ps.append(p), us.append(u0.value(q0)), tags.append(np.full(len(q0), -1 - k))
    q0, p, u = np.concatenate(q0s), np.concatenate(ps), np.concatenate(us)
    return {"q0": q0, "p": p, "u": u, "tag": np.concatenate(tags), "X": _psi(H, t, q0, p, u)}


def _smoothed_cloud(H, u0, t, plan, eps, band_s, order):
    """Front points of the mollified data on the same parameter grids.

    Base points within 1.5 eps of a kink are replaced by a dense band
    (curve(s) + σ ν(s), |σ| <= 1.5 eps) so that the smoothed fan is resolved.
    """
    q0s = []
    for i, box in enumerate(plan.piece_boxes):
        if box is None:
            continue
        Q0 = _box_grid(box, plan.h)
        Q0 = Q0[u0.active(Q0) == i]
        q0s.append(Q0[_band_distance(u0, Q0) > 1.5 * eps])
    # uniform offsets plus kernel quantiles (the latter space du_ε evenly)
    sig = np.unique(np.concatenate([np.linspace(-1.5, 1.5, plan.n_fan // 2 + 1),
                                    _kernel_quantiles(u0.dim, plan.n_fan)]))[:, None] * eps
    for k, s in enumerate(band_s):
        if s is None:
            continue
        g, _, _, nrm = _fan_geometry(u0, k, s)
        q0s.append(np.repeat(g, len(sig), axis=0)
                   + np.repeat(nrm, len(sig), axis=0) * np.tile(sig, (len(g), 1)))
    q0 = np.concatenate(q0s)
    u, p = mollify_eval(u0, eps, q0, order)
    return {"q0": q0, "p": p, "u": u, "uL": u0.value(q0), "X": _psi(H, t, q0, p, u)}


def _window(X, center, R):
    d = X.shape[1] - 1
    return np.all(np.abs(X[:, :d] - center[None, :]) <= R, axis=1)


def _plan_window(H, u0, t, x, coarse_h, coarse_radius, n_fan_coarse, fine_n, n_fan):
    """Coarse cloud around the witness, then fine parameter boxes covering every
    coarse point that lands near it."""
    d = u0.dim
    qw = x[:d]
    reach = t * H.grad_bound(u0.L) + coarse_radius
    base_box = np.stack([qw - reach, qw + reach], axis=1)
    s_coarse = []
    for k in range(_n_fans(u0)):
        if d == 1:
            s_coarse.append(np.zeros(1) if base_box[0, 0] <= u0.kinks[k] <= base_box[0, 1] else None)
            continue
        itf = u0.interfaces[k]
        s = np.arange(itf.s_range[0], itf.s_range[1], coarse_h / 4)
        g = itf.curve(s)
        inside = np.all((g >= base_box[:, 0]) & (g <= base_box[:, 1]), axis=1)
        s_coarse.append(s[inside] if inside.any() else None)
    coarse = _CloudPlan([base_box] * len(u0.pieces), s_coarse, coarse_h, n_fan_coarse)
    C = _lipschitz_cloud(H, u0, t, coarse)
    d0 = float(np.min(np.linalg.norm(C["X"] - x[None, :], axis=1)))
    R = 2.0 * d0 + 4.0 * coarse_h
    sel = _window(C["X"], qw, R + 3.0 * coarse_h)
    boxes = []
    for i in range(len(u0.pieces)):
        m = sel & (C["tag"] == i)
        if not m.any():
            boxes.append(None)
            continue
        Q0 = C["q0"][m]
        boxes.append(np.stack([Q0.min(axis=0) - 2 * coarse_h, Q0.max(axis=0) + 2 * coarse_h], axis=1))
    widths = [float(np.max(b[:, 1] - b[:, 0])) for b in boxes if b is not None]
    h = max(widths) / fine_n if widths else coarse_h / 10
    fan_s = []
    for k in range(_n_fans(u0)):
        m = sel & (C["tag"] == -1 - k)
        if not m.any():
            fan_s.append(None)
            continue
        if d == 1:
            fan_s.append(np.zeros(1))
            continue
        itf = u0.interfaces[k]
        # s of the selected fan points: nearest coarse curve parameter
        sk = s_coarse[k]
        g = itf.curve(sk)
        idx = cKDTree(g).query(C["q0"][m])[1]
        lo, hi = sk[idx].min() - coarse_h, sk[idx].max() + coarse_h
        speed = float(np.max(np.linalg.norm(itf.dcurve(np.linspace(lo, hi, 101)), axis=-1)))
        fan_s.append(np.arange(max(lo, itf.s_range[0]), min(hi, itf.s_range[1]), h / speed))
    return _CloudPlan(boxes, fan_s, h, n_fan), R, d0


def _band_parameters(u0, plan, eps):
    """Curve parameters whose ±1.5 eps band meets a piece box or the fan range."""
    if u0.dim == 1:
        out = []
        for k, x in enumerate(u0.kinks):
            hit = plan.fan_s[k] is not None or any(
                b is not None and b[0, 0] - 1.5 * eps <= x <= b[0, 1] + 1.5 * eps
                for b in plan.piece_boxes)
            out.append(np.zeros(1) if hit else None)
        return out
    out = []
    for k, itf in enumerate(u0.interfaces):
        boxes = [b for b in plan.piece_boxes if b is not None]
        s = np.arange(itf.s_range[0], itf.s_range[1], plan.h)
        g = itf.curve(s)
        hit = np.zeros(len(s), dtype=bool)
        for b in boxes:
            hit |= np.all((g >= b[:, 0] - 1.5 * eps) & (g <= b[:, 1] + 1.5 * eps), axis=1)
        sel = [s[hit]] if hit.any() else []
        if plan.fan_s[k] is not None:
            sel.append(plan.fan_s[k])
        out.append(np.unique(np.concatenate(sel)) if sel else None)
    return out


def _nearest(X, x):
    return float(np.min(np.linalg.norm(X - x[None, :], axis=1)))


def _report_condition(report, H):
    """(H, u_L) the report was computed for."""
    p = report.params
    if report.scenario == "saddle":
        return H, min_of_quadratics(p["a"], p["b"], p["width"])
    T = p.get("normalization")
    if T is not None:
        H = affine_transform(H, AffineTransformParams(T["A"], T["b"], T["n"], T["alpha"], T["lam"]))
    return H, abs_kink_quad()


def _report_axes(report):
    p = report.params
    if report.scenario == "saddle":
        return (uniform_axis(*p["q1_range"], p["dx"]), uniform_axis(*p["q2_range"], p["dx"]))
    return (uniform_axis(*p["window"], p["dx"]),)


def run_smoothing_argument(H, report, eps_list=EPS_SWEEP, view_radius=0.02, coarse_h=2e-3,
                           coarse_radius=0.05, fine_n=250, n_fan=257, order=17, cfl=None):
    """Distance chain of the smoothing argument at the report's witness.

    α = d((q, V u_L(q)), F_{u_L}) on a local front cloud.  For every eps the
    data are mollified, the front is rebuilt by pushing graph(du_ε) through
    ψ, V is recomputed on a padded window around the witness, and the chain
        d(y, F_ε) >= α - |Vu_ε - Vu_L|(q) - d_H(F_ε, F_L)
    is evaluated together with its enhanced-triangle form.  Returns a dict
    with α, the window data and one row per eps.
    """
    if report.witness["gap"] <= 0:
        raise WitnessGapNonpositive(f"report witness gap {report.witness['gap']:.3g} <= 0")
    Hs, uL = _report_condition(report, H)
    t = float(report.t)
    d = uL.dim
    axes = _report_axes(report)
    qw = np.asarray(report.witness["q"], dtype=float)
    cfl = report.params.get("cfl", 0.9) if cfl is None else cfl
    # viscosity window: report grid nodes within view_radius of the witness
    win = tuple(a[np.abs(a - c) <= view_radius + 1e-12] for a, c in zip(axes, qw))
    iw = tuple(int(np.argmin(np.abs(a - c))) for a, c in zip(win, qw))
    scheme = make_scheme(Hs, uL, t, win, cfl)
    full = grid_points(scheme.full_axes())
    Qfull = full.reshape(-1, d)
    VL = viscosity_solve(Hs, uL, t, scheme).values
    x = np.concatenate([qw, [VL[iw]]])
    plan, R, d0 = _plan_window(Hs, uL, t, x, coarse_h, coarse_radius, 129, fine_n, n_fan)
    L = _lipschitz_cloud(Hs, uL, t, plan)
    mX = _window(L["X"], qw, R)
    X = L["X"][mX]
    alpha = _nearest(X, x)
    if not alpha > 0:
        raise WitnessGapNonpositive(f"witness lies on the front (alpha = {alpha:.3g})")
    GX = np.column_stack([L["q0"][mX], L["p"][mX]])
    uL_full = uL.value(Qfull if d > 1 else Qfull)
    rows = []
    for eps in eps_list:
        band_s = _band_parameters(uL, plan, eps)
        E = _smoothed_cloud(Hs, uL, t, plan, eps, band_s, order)
        mY = _window(E["X"], qw, R)
        Y = E["X"][mY]
        GY = np.column_stack([E["q0"][mY], E["p"][mY]])
        ue_full, _ = mollify_eval(uL, eps, Qfull, order)
        Ve = viscosity_solve(Hs, uL, t, scheme, u_init=ue_full.reshape(full.shape[:-1])).values
        y = np.concatenate([qw, [Ve[iw]]])
        v_sup = float(np.max(np.abs(Ve - VL)))
        front_h = hausdorff_distance(X, Y)
        graph_h = hausdorff_distance(GX, GY)
        smoothed = _nearest(Y, y)
        u_sup = float(max(np.max(np.abs(ue_full - uL_full)), np.max(np.abs(E["u"] - E["uL"]))))
        # same graph pushed with u_ε and with u_L: only S moves, by |u_ε - u_L|
        XL = _psi(Hs, t, E["q0"][mY], E["p"][mY], E["uL"][mY])
        contdh = hausdorff_distance(Y, XL)
        contdh_bound = float(np.max(np.abs(E["u"][mY] - E["uL"][mY])))
        bound = alpha - v_sup - front_h
        rows.append({
            "eps": eps, "u_sup": u_sup, "graph_hausdorff": graph_h, "front_hausdorff": front_h,
            "V_sup": v_sup, "smoothed_distance": smoothed, "bound": bound,
            "bound_holds": bool(smoothed >= bound - 1e-6),
            "ete_holds": bool(enhanced_triangle_check(x, y, X, Y, d_h=front_h)),
            "contdh_hausdorff": contdh, "contdh_bound": contdh_bound,
            "contdh_holds": bool(contdh <= contdh_bound * (1 + 1e-12) + 1e-15),
            "small_enough": bool(v_sup < alpha / 4 and front_h < alpha / 2),
            "conclusion": bool(smoothed >= alpha / 4 - 1e-6),
            "window_ok": bool(smoothed < R), "n_front": int(len(Y)),
        })
    return {"alpha": alpha, "x": x, "window_radius": R, "coarse_distance": d0,
            "report_V_at_witness": report.witness["V"], "window_V_at_witness": float(VL[iw]),
            "fine_h": plan.h, "n_front": int(len(X)), "order": order, "rows": rows,
            "exists_eps": bool(any(r["small_enough"] and r["conclusion"] for r in rows)),
            "ete_all": bool(all(r["ete_holds"] for r in rows))}
