import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from thor_lab.quasistatics import (BodyGeometry, HandForce, StaticsError, expected_tilt,
                                   expected_tilt_array, fat2_reward, max_interactive_force,
                                   solve_support_reactions, solve_tilt_full, support_limited_force,
                                   torque_residual_full,
                                   zmp_location)

G = BodyGeometry()  # 35 kg, g = 9.81, |r_CoM| = 0.45, |r_h| = 1.0, phi = 0
W = 343.35


def moment_balance_zmp(weight, com_x, fx, fz_down, hand_x, hand_z):
    """Oracle: ground point about which gravity, hand force and ground reaction have zero moment."""
    def net_moment(p):
        # moments about (p, 0); counter-clockwise positive; ground reaction acts at p
        grav = -(com_x - p) * weight
        hand = (hand_x - p) * (-fz_down) - hand_z * fx
        return grav + hand
    return brentq(net_moment, -50.0, 50.0, xtol=1e-14)


def test_geometry_invariants():
    with pytest.raises(StaticsError):
        BodyGeometry(support_min=0.01)
    with pytest.raises(StaticsError):
        BodyGeometry(total_mass=0.0)
    with pytest.raises(StaticsError):
        HandForce(magnitude=-1.0)
    with pytest.raises(StaticsError):
        HandForce(10.0, ground_angle=math.pi / 2)


def test_weight():
    assert G.weight == pytest.approx(W, abs=1e-12)


class TestSupportReactions:
    def test_zero_force(self):
        sol = solve_support_reactions(G, HandForce(0.0))
        assert sol.support_force == pytest.approx(343.35)
        assert sol.friction_force == 0.0
        assert not sol.slip

    def test_slip_low_friction(self):
        sol = solve_support_reactions(BodyGeometry(friction_coeff=0.1), HandForce(50.0, 0.0, -1))
        assert abs(sol.friction_force) == pytest.approx(50.0)
        assert sol.slip  # 50 > 34.335

    def test_no_slip(self):
        sol = solve_support_reactions(BodyGeometry(friction_coeff=0.5), HandForce(50.0, 0.0, 1))
        assert sol.friction_force == pytest.approx(-50.0)
        assert not sol.slip  # 50 <= 171.675

    def test_vertical_component_adds_load(self):
        sol = solve_support_reactions(G, HandForce(100.0, math.pi / 6, 1))
        assert sol.support_force == pytest.approx(W + 50.0)

    @given(st.floats(0, 500), st.floats(0, 1.5), st.sampled_from([-1, 1]), st.floats(0.05, 1.5))
    def test_slip_flag_matches_coulomb(self, mag, ang, sign, mu):
        g = BodyGeometry(friction_coeff=mu)
        sol = solve_support_reactions(g, HandForce(mag, ang, sign))
        assert sol.support_force >= 0
        assert sol.slip == (abs(sol.friction_force) > mu * sol.support_force)


class TestZmp:
    def test_no_force_symmetric(self):
        assert zmp_location(G, HandForce(0.0), 0.0, 1.0) == 0.0

    def test_backward_pull_hand_value(self):
        x = zmp_location(G, HandForce(50.0, 0.0, -1), 0.0, 1.0)
        assert x == pytest.approx(-50.0 / 343.35, abs=1e-12)
        assert x == pytest.approx(-0.1456, abs=1e-4)

    def test_com_shift_cancels(self):
        f = HandForce(50.0, 0.0, -1)
        assert zmp_location(G, f, 50.0 / 343.35, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_rejects_nonpositive_height(self):
        with pytest.raises(StaticsError):
            zmp_location(G, HandForce(1.0), 0.0, 0.0)

    @given(st.floats(0, 300), st.floats(0, 1.4), st.sampled_from([-1, 1]),
           st.floats(-0.3, 0.3), st.floats(0.1, 1.5), st.floats(-0.5, 0.5))
    def test_matches_moment_balance_oracle(self, mag, ang, sign, com_x, h, hx):
        f = HandForce(mag, ang, sign)
        x = zmp_location(G, f, com_x, h, ee_x=hx)
        ref = moment_balance_zmp(W, com_x, f.horizontal, f.vertical_load, hx, h)
        assert x == pytest.approx(ref, abs=1e-9)

    @given(st.floats(0, 300), st.floats(0, 1.4), st.sampled_from([-1, 1]), st.floats(0.2, 1.5))
    def test_affine_in_com(self, mag, ang, sign, h):
        f = HandForce(mag, ang, sign)
        x0 = zmp_location(G, f, 0.0, h)
        x1 = zmp_location(G, f, 0.1, h)
        assert (x1 - x0) / 0.1 == pytest.approx(W / (W + f.vertical_load), rel=1e-9)


class TestExpectedTilt:
    def test_zero_force_is_upright(self):
        t = expected_tilt(G, HandForce(0.0), 0.9)
        assert t.beta == math.pi / 2
        assert not t.clamped

    def test_half_load_gives_sixty_degrees(self):
        f_exact = W * 0.45 / 2.0
        assert expected_tilt(G, HandForce(f_exact), 0.9).beta == pytest.approx(math.pi / 3, abs=1e-9)
        # the rounded 77.254 N is 2.5e-4 N above the exact value
        assert expected_tilt(G, HandForce(77.254), 0.9).beta == pytest.approx(math.pi / 3, abs=2e-6)

    def test_clamped_beyond_envelope(self):
        t = expected_tilt(G, HandForce(200.0), 0.9)
        assert t.beta == 0.9
        assert t.clamped

    def test_array_version_matches(self):
        mags = np.linspace(0, 250, 51)
        arr = expected_tilt_array(G, mags, 0.1, 0.9)
        ref = [expected_tilt(G, HandForce(m, 0.1), 0.9).beta for m in mags]
        np.testing.assert_allclose(arr, ref, rtol=0, atol=1e-15)

    @given(st.floats(0, 400), st.floats(0, 400), st.floats(0, 1.2), st.floats(0.1, 1.5))
    def test_monotone_in_force(self, a, b, ang, lim):
        lo, hi = sorted((a, b))
        assert (expected_tilt(G, HandForce(hi, ang), lim).beta
                <= expected_tilt(G, HandForce(lo, ang), lim).beta)

    @given(st.floats(10, 80), st.floats(0.2, 1.0), st.floats(0.3, 2.0), st.floats(0, 1.4),
           st.floats(0, 1.4), st.floats(0.05, 1.5))
    @settings(max_examples=200)
    def test_round_trip_with_envelope(self, mass, rc, rh, phi, alpha, lim):
        if math.cos(phi) * math.cos(alpha) < 0.1:
            return
        g = BodyGeometry(total_mass=mass, com_distance=rc, ee_distance=rh, ee_offset_angle=phi)
        fmax = max_interactive_force(g, alpha, lim)
        assert expected_tilt(g, HandForce(fmax, alpha), lim).beta == pytest.approx(lim, abs=1e-9)


class TestFat2:
    def test_match_is_one(self):
        assert fat2_reward(1.0, 1.0, 0.05) == 1.0

    def test_hand_value(self):
        assert fat2_reward(1.0, 1.1, 0.05) == pytest.approx(math.exp(-0.2), abs=1e-12)
        assert fat2_reward(1.0, 1.1, 0.05) == pytest.approx(0.81873, abs=1e-5)

    def test_decays_to_zero(self):
        gaps = np.array([0.0, 0.1, 0.5, 1.0, 5.0, 50.0])
        r = fat2_reward(np.zeros_like(gaps), gaps, 0.05)
        assert np.all(np.diff(r) < 0)
        assert r[-1] < 1e-300

    def test_bad_sigma(self):
        with pytest.raises(StaticsError):
            fat2_reward(0.0, 0.0, 0.0)

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 10))
    def test_range_and_symmetry(self, a, b, s):
        r = fat2_reward(a, b, s)
        assert 0.0 <= r <= 1.0
        assert r == fat2_reward(b, a, s)


class TestEnvelope:
    def test_default_value(self):
        assert max_interactive_force(G, 0.0, 0.9) == pytest.approx(154.5075 * math.cos(0.9), abs=1e-9)
        assert max_interactive_force(G, 0.0, 0.9) == pytest.approx(96.05, abs=0.01)

    def test_steep_force_doubles(self):
        assert max_interactive_force(G, math.pi / 3, 0.9) == pytest.approx(
            2 * max_interactive_force(G, 0.0, 0.9), rel=1e-12)

    def test_vertical_force_rejected(self):
        with pytest.raises(StaticsError):
            max_interactive_force(G, math.pi / 2, 0.9)


class TestResidual:
    def test_zero_force_upright(self):
        assert torque_residual_full(G, HandForce(0.0), math.pi / 2, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_consistent_with_tilt(self):
        f = HandForce(W * 0.45 / 2)
        beta = expected_tilt(G, f, 0.9).beta
        assert torque_residual_full(G, f, beta, 1.0, 0.0) == pytest.approx(0.0, abs=1e-9)

    def test_horizontal_offset_irrelevant_for_level_pull(self):
        f = HandForce(60.0, 0.0)
        assert (torque_residual_full(G, f, 1.1, 1.0, 0.05)
                == torque_residual_full(G, f, 1.1, 1.0, 0.0))

    @given(st.floats(0.1, 1.4), st.floats(0.0, 1.0), st.floats(0, 1.3), st.floats(0, 1.3))
    def test_residual_zero_at_expected_tilt(self, lim, u, phi, alpha):
        if math.cos(phi) * math.cos(alpha) < 0.1:
            return
        g = BodyGeometry(ee_offset_angle=phi)
        lever = g.ee_distance * math.cos(phi)
        # tilt argument inside the unclamped range [0, cos(lim)]
        arg = u * math.cos(lim)
        mag = arg * g.weight * g.com_distance / (lever * math.cos(alpha))
        f = HandForce(mag, alpha)
        beta = expected_tilt(g, f, lim).beta
        assert torque_residual_full(g, f, beta, lever, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_full_vs_simplified_tilt_grid():
    """Neglecting the horizontal hand offset moves the tilt by at most 0.05 rad."""
    lim = 0.9
    worst = 0.0
    for alpha in np.linspace(0.0, math.pi / 4, 10):
        fmax = max_interactive_force(G, alpha, lim)
        for mag in np.linspace(0.0, fmax, 25):
            for d3 in np.linspace(-0.05, 0.05, 5) * G.ee_distance:
                f = HandForce(mag, alpha)
                full = solve_tilt_full(G, f, G.ee_distance, d3)
                simple = expected_tilt(G, f, lim).beta
                assert abs(torque_residual_full(G, f, full, G.ee_distance, d3)) < 1e-9 or full in (0.0, math.pi / 2)
                worst = max(worst, abs(full - simple))
    assert worst <= 0.05


class TestSupportLimited:
    def test_default_forward(self):
        # pivot bound plus W * 0.15 / 1.0
        assert support_limited_force(G, 0.0, 0.9, 1) == pytest.approx(
            154.5075 * math.cos(0.9) + 343.35 * 0.15, abs=1e-9)

    def test_backward_uses_other_edge(self):
        assert support_limited_force(G, 0.0, 0.9, -1) == pytest.approx(
            154.5075 * math.cos(0.9) + 34.335, abs=1e-9)

    def test_point_foot_reduces_to_pivot_bound(self):
        g = BodyGeometry(support_min=-1e-12, support_max=1e-12)
        assert support_limited_force(g, 0.3, 0.9) == pytest.approx(max_interactive_force(g, 0.3, 0.9))

    @given(st.floats(0, 1.2), st.floats(0.1, 1.5), st.sampled_from([-1, 1]))
    def test_zmp_sits_on_edge(self, alpha, lim, sign):
        """At the bound, a level-equivalent pull puts the ZMP exactly on the support edge."""
        fmax = support_limited_force(G, alpha, lim, sign)
        f = HandForce(fmax, alpha, sign)
        com_x = -sign * G.com_distance * math.cos(lim)
        # neglect the vertical component as the bound does
        x = (G.weight * com_x + f.horizontal * G.ee_distance) / G.weight
        edge = G.support_max if sign > 0 else G.support_min
        assert x == pytest.approx(edge, abs=1e-9)
