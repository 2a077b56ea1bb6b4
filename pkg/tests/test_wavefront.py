import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjlab.characteristics import classical_solve
from hjlab.errors import ConfigError, DegenerateParam, UnsupportedBranch
from hjlab.hamiltonian import make_builtin
from hjlab.initial_data import abs_kink, abs_kink_quad, min_of_quadratics, smooth_1d
from hjlab.variational import saddle_closed_form
from hjlab.wavefront import (branch_convexity_sign, branch_slope, build_front_1d,
                             build_front_cloud, enumerate_continuous_sections, find_shocks,
                             lowest_section, membership_residuals, minimal_section,
                             minimal_values_2d, reduced_front)

HS = make_builtin("half_square")
CW = make_builtin("cubic_wave")
SAD = make_builtin("saddle")


def sin_data():
    return smooth_1d(np.sin, np.cos, lambda q: -np.sin(q), 1.0, 1.0)


def hopf_lax(u0, t, q, lo=-8.0, hi=8.0, n=400001):
    """min_y u0(y) + (q - y)²/(2t) by brute force on a fine grid."""
    y = np.linspace(lo, hi, n)
    uy = u0.u(y)
    return np.array([np.min(uy + (x - y) ** 2 / (2 * t)) for x in np.atleast_1d(q)])


# ---------------------------------------------------------------- branches

def test_abs_kink_front_has_three_branches():
    fr = build_front_1d(HS, abs_kink(), 0.5)
    assert sorted(b.source for b in fr.branches) == ["kink_fan(0)", "left_piece(0)", "right_piece(0)"]
    fan = next(b for b in fr.branches if b.kind == "fan")
    assert (fan.a, fan.b) == (-1.0, 1.0)
    q, S, p, q0 = fan.maps(np.array([-1.0, 0.0, 1.0]))
    np.testing.assert_allclose(q, [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(S, [0.25, 0.0, 0.25])


def test_front_at_time_zero_is_graph():
    fr = build_front_1d(CW, abs_kink(), 0.0)
    fan = next(b for b in fr.branches if b.kind == "fan")
    q, S, _, _ = fan.maps(fan.samples())
    assert np.all(q == 0.0) and np.all(S == 0.0)
    for br in fr.branches:
        if br.kind == "piece":
            s = br.samples(101)
            q, S, _, _ = br.maps(s)
            np.testing.assert_array_equal(q, s)
            np.testing.assert_allclose(S, -np.abs(s), atol=1e-15)


def test_reduced_fan_is_time_invariant():
    u0 = abs_kink()
    pts = []
    for t in (0.1, 0.7, 3.0):
        fan = next(b for b in reduced_front(CW, u0, t).branches if b.kind == "fan")
        pts.append(np.stack(fan.maps(np.linspace(-1, 1, 51))[:2]))
    np.testing.assert_allclose(pts[0], pts[1], atol=1e-14)
    np.testing.assert_allclose(pts[0], pts[2], atol=1e-14)
    with pytest.raises(ConfigError):
        reduced_front(CW, u0, 0.0)


@pytest.mark.parametrize("H,u0,t", [(HS, abs_kink(), 0.5), (CW, abs_kink(), 0.05),
                                    (CW, abs_kink_quad(), 0.03), (HS, sin_data(), 0.3)])
def test_membership_residuals(H, u0, t):
    fr = build_front_1d(H, u0, t, domain=(-3, 3))
    res = membership_residuals(H, u0, t, fr.points())
    assert max(res) <= 1e-10


def _fd_slope_ok(br, s, h=1e-6):
    q, S, p, _ = br.maps(np.array([s - h, s, s + h]))
    return abs((S[2] - S[0]) / (q[2] - q[0]) - p[1])


def test_branch_slopes_match_finite_differences(rng):
    fr = build_front_1d(CW, abs_kink_quad(), 0.03, domain=(-3, 3))
    worst = 0.0
    for _ in range(1000):
        br = fr.branches[rng.integers(len(fr.branches))]
        s = rng.uniform(br.a + 1e-3, br.b - 1e-3)
        try:
            slope = branch_slope(br, s)
        except DegenerateParam:
            continue
        assert slope == pytest.approx(float(br.maps(np.array(s))[2]))
        worst = max(worst, _fd_slope_ok(br, s))
    assert worst <= 1e-6


def test_branch_convexity_matches_curvature(rng):
    u0 = smooth_1d(lambda q: np.sin(q) + 0.1 * q ** 2, lambda q: np.cos(q) + 0.2 * q,
                   lambda q: -np.sin(q) + 0.2, 1.6, 1.2)
    br = build_front_1d(HS, u0, 0.2, domain=(-3, 3)).branches[0]
    checked = 0
    for s in rng.uniform(-2.9, 2.9, 1000):
        sign = branch_convexity_sign(br, s)
        h = 1e-4
        q, S, _, _ = br.maps(np.array([s - h, s, s + h]))
        # second derivative of S in q along the (monotone) branch
        d1 = (S[1] - S[0]) / (q[1] - q[0])
        d2 = (S[2] - S[1]) / (q[2] - q[1])
        curv = (d2 - d1) / (0.5 * (q[2] - q[0]))
        if abs(curv) < 1e-4:
            continue
        assert sign == int(np.sign(curv))
        checked += 1
    assert checked > 900


def test_degenerate_and_unsupported():
    fr = build_front_1d(CW, abs_kink(), 0.05)
    fan = next(b for b in fr.branches if b.kind == "fan")
    with pytest.raises(DegenerateParam):
        branch_slope(fan, 1.0 / 3.0)
    with pytest.raises(UnsupportedBranch):
        branch_convexity_sign(fan, 0.0)
    with pytest.raises(ConfigError):
        build_front_1d(CW, abs_kink(), -1.0)


# ---------------------------------------------------------------- sections and shocks

def test_convex_kink_sections_and_shock():
    t = 0.5
    fr = build_front_1d(HS, abs_kink(), t, domain=(-3, 3))
    q = np.linspace(-2, 2, 401)
    secs = enumerate_continuous_sections(fr, q)
    assert len(secs) == 1
    np.testing.assert_allclose(secs[0].values(q), -np.abs(q) - t / 2, atol=1e-12)
    sh = find_shocks(lowest_section(fr, q))
    assert len(sh) == 1
    assert sh[0].q == pytest.approx(0.0, abs=1e-12)
    assert (sh[0].p_left, sh[0].p_right) == pytest.approx((1.0, -1.0))


def test_smooth_data_single_section_no_shock():
    t = 0.4
    fr = build_front_1d(HS, sin_data(), t, domain=(-4, 4))
    q = np.linspace(-2.5, 2.5, 201)
    secs = enumerate_continuous_sections(fr, q)
    assert len(secs) == 1 and not secs[0].switches
    np.testing.assert_allclose(secs[0].values(q), classical_solve(HS, sin_data(), t, q).value,
                               atol=1e-11)
    assert find_shocks(lowest_section(fr, q)) == []


def test_cubic_wave_kink_single_section():
    fr = build_front_1d(CW, abs_kink(), 0.05, domain=(-2, 2))
    q = np.linspace(-1, 1, 801)
    secs = enumerate_continuous_sections(fr, q)
    assert len(secs) == 1
    np.testing.assert_allclose(secs[0].values(q), minimal_section(fr, q).values, atol=1e-12)


@pytest.mark.parametrize("u0", [abs_kink(), abs_kink_quad()])
@pytest.mark.parametrize("t", [0.25, 0.6])
def test_minimal_section_is_hopf_lax(u0, t):
    fr = build_front_1d(HS, u0, t, domain=(-4, 4))
    q = np.linspace(-1.5, 1.5, 61)
    ms = minimal_section(fr, q).values
    # brute force on a 4e-5 grid: error of order h²/t
    np.testing.assert_allclose(ms, hopf_lax(u0, t, q), atol=1e-8)


@given(st.floats(0.05, 0.9))
def test_lowest_section_equals_minimal_section(t):
    fr = build_front_1d(CW, abs_kink_quad(), t * 0.1, domain=(-3, 3))
    q = np.linspace(-1, 1, 101)
    np.testing.assert_allclose(lowest_section(fr, q).values(q), minimal_section(fr, q).values,
                               atol=1e-12)


# ---------------------------------------------------------------- 2D cloud

def test_cloud_membership_and_sources():
    u0 = min_of_quadratics(0.75, 1.0)
    ax = [np.linspace(-1.2, 0.2, 41), np.linspace(-1.0, 1.5, 41)]
    fr = build_front_cloud(SAD, u0, 0.1, ax, n_fan=9)
    srcs = set(fr.cloud["source"])
    assert srcs == {"piece(0)", "piece(1)", "kink_fan(0)"}
    assert max(membership_residuals(SAD, u0, 0.1, fr.cloud)) <= 1e-10


def test_cloud_minimal_section_matches_closed_form(rng):
    a, b, t = 0.75, 1.0, 0.1
    u0 = min_of_quadratics(a, b)
    Q = np.column_stack([rng.uniform(-0.95, -0.16, 200), rng.uniform(-0.5, 1.0, 200)])
    got = minimal_values_2d(SAD, u0, t, Q)
    np.testing.assert_allclose(got, saddle_closed_form(a, b, t, Q[:, 0], Q[:, 1]), atol=1e-10)
