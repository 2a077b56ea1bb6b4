import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjlab.errors import ConfigError, DomainViolation, HorizonExceeded
from hjlab.hamiltonian import AffineTransformParams, custom_1d, make_builtin
from hjlab.initial_data import abs_kink, abs_kink_quad, add_constant, min_of_quadratics, smooth_1d
from hjlab.variational import (Reduction, check_local_estimate, check_operator_axioms,
                               conjugation_check, envelope_solve, family_from_condition,
                               saddle_closed_form, saddle_family, variational_solve,
                               variational_values)

HS = make_builtin("half_square")
CW = make_builtin("cubic_wave")
SAD = make_builtin("saddle")
A, B, T = 0.75, 1.0, 0.1


def c_grid_oracle(a, b, t, q1, q2, n=10_000):
    c = np.linspace(a, b, n)
    return np.min(c[:, None] * ((np.atleast_1d(q1)[None, :] + c[:, None] * t) ** 2
                                - np.atleast_1d(q2)[None, :]), axis=0)


def shock_q2(a, b, t, q1):
    return q1 * q1 + 2 * (a + b) * t * q1 + t * t * (a * a + a * b + b * b)


# ---------------------------------------------------------------- saddle closed form

def test_closed_form_examples():
    assert float(saddle_closed_form(A, B, T, -0.5, 0.0)) == pytest.approx(0.13546875, abs=1e-15)
    q2 = shock_q2(A, B, T, -0.16)
    assert q2 == pytest.approx(-0.007275, abs=1e-15)
    ua = A * ((-0.16 + A * T) ** 2 - q2)
    ub = B * ((-0.16 + B * T) ** 2 - q2)
    assert ua == pytest.approx(0.010875, abs=1e-15) and ub == pytest.approx(0.010875, abs=1e-15)
    assert float(saddle_closed_form(A, B, T, -0.16, q2)) == pytest.approx(0.010875, abs=1e-15)


@given(st.floats(-1.0, -0.15), st.floats(-1.0, 1.5))
def test_closed_form_equals_c_grid(q1, q2):
    got = float(saddle_closed_form(A, B, T, q1, q2))
    assert got == pytest.approx(float(c_grid_oracle(A, B, T, q1, q2)[0]), abs=1e-13)


def test_closed_form_errors():
    with pytest.raises(DomainViolation):
        saddle_closed_form(A, B, T, -0.1, 0.0)
    with pytest.raises(DomainViolation):
        saddle_closed_form(A, B, T, -1.2, 0.0)
    with pytest.raises(ConfigError):
        saddle_closed_form(1.0, 0.75, T, -0.5, 0.0)


def test_envelope_matches_closed_form():
    q1 = np.linspace(-0.9, -0.16, 12)
    q2 = np.linspace(-0.4, 0.8, 9)
    fam = saddle_family(A, B, n=401)
    env = envelope_solve(SAD, fam, T, (q1, q2))
    Q1, Q2 = np.meshgrid(q1, q2, indexing="ij")
    np.testing.assert_allclose(env.values, saddle_closed_form(A, B, T, Q1, Q2), atol=1e-12)
    ex = envelope_solve(SAD, fam, T, (q1, q2), exhaustive=True)
    np.testing.assert_allclose(env.values, ex.values, atol=1e-14)


def test_envelope_parameter_labels():
    fam = saddle_family(A, B, n=11)
    assert fam.parameter(0) == pytest.approx(A)
    assert fam.parameter(10) == pytest.approx(B)
    assert fam.parameter(5) == pytest.approx(0.5 * (A + B))


def test_minimal_section_matches_envelope_2d(rng):
    Q = np.column_stack([rng.uniform(-0.9, -0.16, 60), rng.uniform(-0.4, 0.8, 60)])
    R = variational_values(SAD, min_of_quadratics(A, B), T, Q)
    np.testing.assert_allclose(R, saddle_closed_form(A, B, T, Q[:, 0], Q[:, 1]), atol=1e-10)


# ---------------------------------------------------------------- 1D solver

def test_family_realises_data():
    fam = family_from_condition(abs_kink_quad(), n=101)
    q = np.linspace(-4, 4, 801)[:, None]
    np.testing.assert_allclose(fam.envelope(q), abs_kink_quad().value(q), atol=1e-14)
    s = smooth_1d(np.sin, np.cos, lambda q: -np.sin(q), 1.0, 1.0)
    assert family_from_condition(s).size == 1


@pytest.mark.parametrize("t", [0.02, 0.06])
def test_1d_envelope_matches_minimal_section(t):
    q = np.linspace(-0.5, 0.5, 101)
    R = variational_solve(CW, abs_kink_quad(), t, q)
    E = envelope_solve(CW, family_from_condition(abs_kink_quad(), n=2001), t, q)
    # envelope over a λ-grid of step 5e-4 approaches the minimal section from above
    assert np.all(E.values >= R.values - 1e-12)
    assert np.max(E.values - R.values) <= 1e-5


def test_variational_solve_errors():
    q = np.linspace(-1, 1, 11)
    with pytest.raises(ConfigError):
        variational_solve(CW, abs_kink_quad(), -0.1, q)
    with pytest.raises(HorizonExceeded):
        variational_solve(CW, abs_kink_quad(), 0.2, q)
    np.testing.assert_allclose(variational_solve(CW, abs_kink_quad(), 0.0, q).values,
                               abs_kink_quad().u(q))


# ---------------------------------------------------------------- operator axioms

def _fixtures():
    u, w = abs_kink(), abs_kink_quad()
    return [(u, w), (w, add_constant(w, 0.3)), (u, add_constant(u, 1e-3))]


def test_operator_axioms_variational():
    q = np.linspace(-0.6, 0.6, 121)
    rep = check_operator_axioms(lambda u0: variational_solve(CW, u0, 0.05, q), CW, _fixtures(),
                                constants=(5.0, -2.0))
    assert rep.passed(1e-8), rep
    assert rep.variational is not None and rep.variational <= 1e-12


def test_local_estimate():
    H2 = custom_1d(lambda p: CW.h(p) + 0.01 * p * p, lambda p: CW.dh(p) + 0.02 * p,
                   lambda p: CW.d2h(p) + 0.02, CW.c_bound + 0.02)
    q = np.linspace(-0.5, 0.5, 101)
    for u0 in (abs_kink(), abs_kink_quad()):
        assert check_local_estimate(CW, H2, u0, 0.05, q) >= -1e-10


# ---------------------------------------------------------------- conjugation

@pytest.mark.parametrize("T_", [
    AffineTransformParams([[1.0]], [0.3], [0.2], 0.1, 2.0),
    AffineTransformParams([[-1.0]], [0.0], [0.0], 0.0, 1.0),
    AffineTransformParams([[0.5]], [-0.2], [0.5], -0.3, 0.5),
])
def test_affine_conjugation_variational(T_):
    q = np.linspace(-0.5, 0.5, 101)
    assert conjugation_check(CW, abs_kink_quad(), T_, 0.02, q) <= 1e-10


def test_affine_conjugation_rejects_backward_time():
    with pytest.raises(ConfigError):
        conjugation_check(CW, abs_kink_quad(), AffineTransformParams([[1.0]], [0.0], [0.0], 0.0, -1.0),
                          0.02, np.linspace(-1, 1, 11))


def test_reduction_conjugation_variational():
    axes = (np.linspace(-0.5, 0.5, 21), np.linspace(-0.5, 0.5, 11))
    assert conjugation_check(SAD, abs_kink_quad(), Reduction((1,), (0.5,)), 0.1, axes) <= 1e-10
    with pytest.raises(ConfigError):
        conjugation_check(SAD, abs_kink_quad(), Reduction((0,), (0.5,)), 0.1, axes)
