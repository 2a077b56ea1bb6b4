import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import fsolve

from hjlab.errors import (AxisMismatch, ConfigError, EmptyViolationInterval, NormalizationFailed)
from hjlab.experiments import (SCHEME_TOL, CounterexampleReport, bruteforce_shock_verdict,
                               compare_solutions, normalize_hamiltonian, segment_hamiltonian,
                               shock_parabola, solve_shock_system, validate_report,
                               violation_interval)
from hjlab.hamiltonian import is_normalized, make_builtin
from hjlab.initial_data import abs_kink_quad
from hjlab.solution import SolutionGrid
from hjlab.viscosity import shock_viscosity_verdict
from hjlab.wavefront import ShockPoint

HS = make_builtin("half_square")
CW = make_builtin("cubic_wave")
SAD = make_builtin("saddle")


def parabola_oracle():
    a, b, t, q1, q2 = sp.symbols("a b t q1 q2", real=True)
    sol = sp.solve(sp.Eq(a * ((q1 + a * t) ** 2 - q2), b * ((q1 + b * t) ** 2 - q2)), q2)
    assert len(sol) == 1
    return sp.lambdify((a, b, t, q1), sp.simplify(sol[0]))


# ---------------------------------------------------------------- saddle geometry

def test_violation_interval():
    lo, hi = violation_interval(0.75, 1.0, 0.1)
    assert (lo, hi) == pytest.approx((-0.175, -0.15), abs=1e-15)
    with pytest.raises(EmptyViolationInterval):
        violation_interval(1.0, 2.0, 0.1)
    with pytest.raises(ConfigError):
        violation_interval(0.75, 1.0, 1.0)
    with pytest.raises(ConfigError):
        violation_interval(1.0, 0.75, 0.1)


@given(st.floats(0.1, 2.0), st.floats(0.01, 1.0), st.floats(0.01, 0.3), st.floats(-2, 0))
def test_shock_parabola_symbolic(a, db, t, q1):
    f = parabola_oracle()
    b = a + db
    assert float(shock_parabola(a, b, t, q1)) == pytest.approx(f(a, b, t, q1), rel=1e-12, abs=1e-12)


def test_segment_hamiltonian(rng):
    pa, pb = np.array([0.3, -0.75]), np.array([0.2, -1.0])
    seg = segment_hamiltonian(SAD, pa, pb)
    mu = rng.uniform(0, 1, 50)
    P = pa + mu[:, None] * (pb - pa)
    np.testing.assert_allclose(seg.h(mu), SAD.value(P), atol=1e-15)
    h = 1e-6
    np.testing.assert_allclose(seg.dh(mu), (seg.h(mu + h) - seg.h(mu - h)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(seg.d2h(mu), 2 * (pb - pa)[0] * (pb - pa)[1], atol=1e-14)


def test_saddle_report(saddle_run, tmp_path):
    rep, sol = saddle_run
    ex = rep.extra
    assert ex["residual_profile"]["max_formula_error"] <= 1e-12
    assert ex["residual_positive"]
    assert ex["envelope_vs_minimal_section"] <= 1e-10
    assert rep.margins["entropy"] < 0 and rep.margins["lax"] < 0
    assert rep.gaps["min_signed"] >= -SCHEME_TOL
    assert rep.witness["gap"] > 0
    lo, hi = rep.shock["q1_interval"]
    assert lo < rep.witness["q"][0] < hi
    path = rep.write(tmp_path / "r.json")
    back = CounterexampleReport.read(path)
    assert back.to_json() == rep.to_json()
    assert set(sol) == {"R", "R_section", "V"}


# ---------------------------------------------------------------- 1D scenario

def test_shock_system_against_fsolve():
    Hn, _ = normalize_hamiltonian(CW)
    u0 = abs_kink_quad()
    for t in (0.1, 0.05, 0.025):
        sh = solve_shock_system(Hn, u0, t)
        assert sh["residual"] <= 1e-13

        def F(z):
            x0, p = z
            g = float(u0.du(np.array([x0]))[0])
            act = lambda m: t * (m * Hn.dh(m) - Hn.h(m))
            return [x0 + t * Hn.dh(g) - t * Hn.dh(p),
                    float(u0.u(np.array([x0]))[0]) + act(g) - act(p)]
        x0, p = fsolve(F, [sh["foot"] * 1.05, sh["p_fan"] * 0.99], xtol=1e-12)
        assert (x0, p) == pytest.approx((sh["foot"], sh["p_fan"]), abs=1e-9)


def test_dim1_report(dim1_run):
    rep = dim1_run
    assert [e["t"] for e in rep.sweep] == [0.1, 0.05, 0.025]
    for e in rep.sweep:
        assert e["unique_section"]
        assert e["shock"]["section_mismatch"] <= 1e-10
        assert e["margins"]["lax"] < -1e-6
        assert e["gaps"]["min_signed"] >= -SCHEME_TOL
    # limit front: p_fan -> p_l = 1 and foot/t -> -H'(p_r) = 4 as t -> 0
    p = [e["limit"]["p"] for e in rep.sweep]
    f = [e["limit"]["foot_over_t"] for e in rep.sweep]
    assert p[0] < p[1] < p[2] < 1.0 and f[0] < f[1] < f[2] < 4.0
    assert rep.extra["empirical_delta"] == 0.1


def test_normalize_hamiltonian():
    Hn, T = normalize_hamiltonian(CW)
    assert T is None and is_normalized(Hn)
    Hr = make_builtin("custom", {"dim": 1, "value": lambda P: CW.value(-P),
                                 "grad": lambda P: -CW.grad(-P), "hess": lambda P: CW.hess(-P),
                                 "c_bound": CW.c_bound})
    Hn, T = normalize_hamiltonian(Hr)
    assert T is not None and is_normalized(Hn)
    with pytest.raises(NormalizationFailed):
        normalize_hamiltonian(HS)


# ---------------------------------------------------------------- verdicts and reports

def test_bruteforce_examples():
    assert bruteforce_shock_verdict(HS, ShockPoint(0.0, 1.0, 1.0, -1.0, "l", "r"))
    assert not bruteforce_shock_verdict(CW, ShockPoint(0.0, 1.0, 1.0, -0.25, "l", "r"))
    # violation confined to slopes within 7% of p_left: invisible to an 11-point slope grid
    assert bruteforce_shock_verdict(CW, ShockPoint(0.0, 1.0, 0.93, -0.75, "l", "r"))
    with pytest.raises(ConfigError):
        bruteforce_shock_verdict(HS, ShockPoint(0.0, 1.0, -1.0, 1.0, "l", "r"))


def test_bruteforce_agrees_when_resolvable(rng):
    """Agreement wherever the violation set meets the 11-point slope grid or is empty."""
    from hjlab.hamiltonian import catalog_1d
    cat, n = catalog_1d(), 0
    mu = np.linspace(0, 1, 4003)[1:-1]
    grid = np.linspace(0, 1, 11)[1:-1]
    while n < 100:
        H = cat[rng.integers(len(cat))]
        pr, pl = np.sort(rng.uniform(-1.5, 1.5, 2))
        if pl - pr < 1e-2:
            continue
        chord = lambda m: H.h((1 - m) * pl + m * pr) - ((1 - m) * H.h(pl) + m * H.h(pr))
        if np.any(chord(mu) > 0) and not np.any(chord(grid) > 0):
            continue
        n += 1
        s = ShockPoint(0.0, 1.0, pl, pr, "l", "r")
        assert bruteforce_shock_verdict(H, s) == shock_viscosity_verdict(H, s).is_viscosity


def test_compare_solutions():
    ax = (np.linspace(0, 1, 5),)
    R = SolutionGrid(0.1, ax, np.array([0.0, 1.0, 2.0, 3.0, 4.0]), "variational")
    V = SolutionGrid(0.1, ax, np.array([0.5, 0.0, 2.0, 2.0, 4.0]), "viscosity")
    c = compare_solutions(R, V)
    assert c["sup_abs_gap"] == 1.0 and c["min_signed_gap"] == -0.5
    assert c["witness"]["index"] == [1]
    c = compare_solutions(R, V, np.array([0, 0, 0, 1, 1], dtype=bool))
    assert c["witness"]["index"] == [3]
    with pytest.raises(AxisMismatch):
        compare_solutions(R, SolutionGrid(0.1, (np.linspace(0, 2, 5),), V.values, "viscosity"))
    with pytest.raises(ConfigError):
        compare_solutions(R, V, np.zeros(5, dtype=bool))


def test_validate_report_rejects(saddle_run):
    d = json.loads(json.dumps(saddle_run[0].to_json()))
    assert validate_report(d)
    bad = dict(d)
    bad.pop("witness")
    with pytest.raises(ConfigError):
        validate_report(bad)
    bad = json.loads(json.dumps(d))
    bad["margins"]["lax"] = None
    with pytest.raises(ConfigError):
        validate_report(bad)
    bad = json.loads(json.dumps(d))
    bad["artifacts"] = ["/nonexistent/file.csv"]
    with pytest.raises(ConfigError):
        validate_report(bad)
