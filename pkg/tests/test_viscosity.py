import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from hjlab.errors import CFLViolation, ConfigError, NotConvex
from hjlab.hamiltonian import AffineTransformParams, custom_1d, make_builtin
from hjlab.initial_data import abs_kink, abs_kink_quad, linear, min_of_quadratics
from hjlab.variational import Reduction, conjugation_check, variational_solve
from hjlab.viscosity import (lax_oleinik, make_scheme, saddle_test_residual,
                             shock_viscosity_verdict, subsolution_residual, viscosity_solve)
from hjlab.wavefront import ShockPoint

HS = make_builtin("half_square")
CW = make_builtin("cubic_wave")
SAD = make_builtin("saddle")


def hopf_lax(u0, t, q, n=400001):
    y = np.linspace(-8, 8, n)
    uy = u0.u(y)
    return np.array([np.min(uy + (x - y) ** 2 / (2 * t)) for x in q])


def saddle_residual_oracle():
    """φ_t + H(∇φ) for φ = (u_a + u_b)/2, u_c = c((q1 + ct)² - q2), H = p1 p2."""
    a, b, t, q1, q2 = sp.symbols("a b t q1 q2", real=True)
    u = lambda c: c * ((q1 + c * t) ** 2 - q2)
    phi = (u(a) + u(b)) / 2
    res = sp.diff(phi, t) + sp.diff(phi, q1) * sp.diff(phi, q2)
    return sp.lambdify((a, b, t, q1, q2), sp.simplify(res))


# ---------------------------------------------------------------- convergence

def test_lf_first_order_on_concave_kink():
    t, errs = 0.5, []
    for dx in (4e-3, 2e-3, 1e-3):
        q = np.arange(-1, 1 + dx / 2, dx)
        V = viscosity_solve(HS, abs_kink(), t, q)
        errs.append(np.max(np.abs(V.values - (-np.abs(q) - t / 2))))
    assert errs[-1] <= 2e-3
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(2.0, rel=0.2)


def test_lax_oleinik_exact_and_brute_force():
    q = np.linspace(-1, 1, 81)
    np.testing.assert_allclose(lax_oleinik(HS, abs_kink(), 0.5, q).values, -np.abs(q) - 0.25,
                               atol=1e-12)
    np.testing.assert_allclose(lax_oleinik(HS, abs_kink_quad(), 0.3, q).values,
                               hopf_lax(abs_kink_quad(), 0.3, q), atol=1e-8)


def test_lax_oleinik_numpy_backend_matches():
    q = np.linspace(-1, 1, 81)
    a = lax_oleinik(HS, abs_kink_quad(), 0.3, q, backend="numpy").values
    b = lax_oleinik(HS, abs_kink_quad(), 0.3, q).values
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_lax_oleinik_errors():
    q = np.linspace(-1, 1, 11)
    with pytest.raises(NotConvex):
        lax_oleinik(CW, abs_kink(), 0.1, q)
    with pytest.raises(ConfigError):
        lax_oleinik(HS, abs_kink(), 0.0, q)


def test_viscosity_tracks_lax_oleinik_for_convex_h():
    q = np.arange(-0.5, 0.5 + 5e-4, 1e-3)
    V = viscosity_solve(HS, abs_kink_quad(), 0.3, q)
    L = lax_oleinik(HS, abs_kink_quad(), 0.3, q)
    assert np.max(np.abs(V.values - L.values)) <= 2 * 1e-3


def test_constant_hamiltonian_and_linear_data():
    Hc = custom_1d(lambda p: np.full_like(p, 0.7), np.zeros_like, np.zeros_like, 1.0)
    q = np.linspace(-1, 1, 201)
    V = viscosity_solve(Hc, linear([0.4]), 0.5, q)
    np.testing.assert_allclose(V.values, 0.4 * q - 0.35, atol=1e-13)
    V = viscosity_solve(CW, linear([0.4]), 0.5, q)
    np.testing.assert_allclose(V.values, 0.4 * q - 0.5 * float(CW.h(np.array(0.4))), atol=1e-12)
    ax = (np.linspace(-1, 1, 41), np.linspace(-1, 1, 31))
    V = viscosity_solve(SAD, linear([0.5, -0.25]), 0.3, ax)
    Q1, Q2 = np.meshgrid(*ax, indexing="ij")
    np.testing.assert_allclose(V.values, 0.5 * Q1 - 0.25 * Q2 + 0.3 * 0.125, atol=1e-12)


def test_viscosity_zero_time_is_data():
    q = np.linspace(-1, 1, 21)
    np.testing.assert_array_equal(viscosity_solve(CW, abs_kink_quad(), 0.0, q).values,
                                  abs_kink_quad().u(q))


# ---------------------------------------------------------------- scheme properties

def _scheme():
    q = np.linspace(-0.5, 0.5, 201)
    return q, make_scheme(CW, abs_kink_quad(), 0.05, q)


def _full(s, u0):
    return u0.u(s.full_axes()[0])


@given(st.floats(0.0, 0.02), st.integers(1, 6), st.floats(0, 6.28))
def test_scheme_monotone(c, k, phase):
    q, s = _scheme()
    x = s.full_axes()[0]
    base = _full(s, abs_kink_quad())
    bump = c * (1 + np.sin(k * x + phase)) / (1 + k)
    lo = viscosity_solve(CW, abs_kink_quad(), 0.05, s, u_init=base).values
    hi = viscosity_solve(CW, abs_kink_quad(), 0.05, s, u_init=base + bump).values
    assert np.all(hi >= lo - 1e-14)
    # nonexpansive in the sup norm
    assert np.max(np.abs(hi - lo)) <= np.max(np.abs(bump)) + 1e-14


@given(st.floats(-10, 10))
def test_scheme_commutes_with_constants(c):
    q, s = _scheme()
    base = _full(s, abs_kink_quad())
    a = viscosity_solve(CW, abs_kink_quad(), 0.05, s, u_init=base).values
    b = viscosity_solve(CW, abs_kink_quad(), 0.05, s, u_init=base + c).values
    np.testing.assert_allclose(b - a, c, atol=1e-12)


def test_make_scheme_errors_and_defaults():
    q = np.linspace(-0.5, 0.5, 101)
    s = make_scheme(CW, abs_kink_quad(), 0.05, q)
    assert s.dt * sum(th / h for th, h in zip(s.theta, s.dx)) <= 0.9 + 1e-12
    assert s.n_steps * s.dt == pytest.approx(0.05, abs=1e-15)
    with pytest.raises(CFLViolation):
        make_scheme(CW, abs_kink_quad(), 0.05, q, theta=0.1)
    with pytest.raises(CFLViolation):
        make_scheme(CW, abs_kink_quad(), 0.05, q, dt=0.01)
    with pytest.raises(ConfigError):
        make_scheme(CW, abs_kink_quad(), 0.05, np.array([0.0, 0.1, 0.3]))
    with pytest.raises(ConfigError):
        make_scheme(CW, abs_kink_quad(), -0.05, q)


# ---------------------------------------------------------------- verdicts and residuals

def test_shock_verdicts():
    ok = shock_viscosity_verdict(HS, ShockPoint(0.0, 0.5, 1.0, -1.0, "left_piece(0)", "right_piece(0)"))
    assert ok.is_viscosity and ok.lax_margin >= 0
    bad = shock_viscosity_verdict(CW, ShockPoint(0.0264, 0.1, 0.9303266159476301, -0.7529299304030271,
                                                 "kink_fan(0)", "right_piece(0)"))
    assert not bad.is_viscosity
    assert bad.lax_margin == pytest.approx(-0.30521809645326514, rel=1e-9)
    assert bad.entropy_margin < 0


def test_saddle_residual_example_and_symbolic_oracle(rng):
    assert float(saddle_test_residual(0.75, 1.0, 0.1, -0.16)) == pytest.approx(4.6875e-4, abs=1e-18)
    f = saddle_residual_oracle()
    for _ in range(200):
        a, b = np.sort(rng.uniform(0.1, 2.0, 2))
        t, q1, q2 = rng.uniform(0.01, 0.5), rng.uniform(-2, 0), rng.uniform(-1, 1)
        assert float(saddle_test_residual(a, b, t, q1)) == pytest.approx(f(a, b, t, q1, q2), abs=1e-12)


def test_subsolution_residual():
    assert float(subsolution_residual(HS, 0.5, np.array([1.0]))) == 1.0
    P = np.array([[1.0, 2.0], [-1.0, 3.0]])
    np.testing.assert_allclose(subsolution_residual(SAD, [0.0, 1.0], P), [2.0, -2.0])


# ---------------------------------------------------------------- conjugation

@pytest.mark.parametrize("T_,t", [
    (AffineTransformParams([[-2.0]], [0.3], [0.0], 0.1, 2.0), 0.01),
    (AffineTransformParams([[1.0]], [0.0], [0.0], -0.5, 0.5), 0.05),
])
def test_affine_conjugation_viscosity(T_, t):
    q = np.linspace(-0.5, 0.5, 201)
    assert conjugation_check(CW, abs_kink_quad(), T_, t, q, solver="viscosity") <= 1e-12


def test_affine_conjugation_viscosity_needs_diagonal_and_n_zero():
    with pytest.raises(ConfigError):
        conjugation_check(CW, abs_kink_quad(), AffineTransformParams([[1.0]], [0.0], [0.3], 0.0, 1.0),
                          0.01, np.linspace(-0.5, 0.5, 11), solver="viscosity")


def test_reduction_conjugation_viscosity():
    axes = (np.linspace(-0.5, 0.5, 101), np.linspace(-0.2, 0.2, 41))
    assert conjugation_check(SAD, abs_kink_quad(), Reduction((1,), (0.5,)), 0.05, axes,
                             solver="viscosity") <= 1e-12


def test_saddle_viscosity_below_variational():
    """On the violation strip V lies strictly below R beyond the scheme tolerance."""
    a, b, t = 0.75, 1.0, 0.1
    u0 = min_of_quadratics(a, b)
    ax = (np.arange(-0.3, -0.02 + 1e-9, 4e-3), np.arange(-0.2, 0.2 + 1e-9, 4e-3))
    V = viscosity_solve(SAD, u0, t, ax)
    R = variational_solve(SAD, u0, t, ax)
    assert np.max(R.values - V.values) > 0
    assert np.min(R.values - V.values) >= -2e-2
