import dataclasses
import math

import numpy as np
import pytest

from billiardflow import elliptic, flow, geometry as geo, melnikov as mel
from billiardflow.errors import PropertyViolation

RESONANCES = [(1, 3), (1, 4), (2, 5), (3, 7)]


class TestSummands:
    def test_tilde_vertex_values(self, table, resonant_13):
        assert abs(mel.mu1_tilde(table, resonant_13, 0.0) + table.b / table.a ** 3) <= 1e-15
        K = resonant_13.modulus.K
        assert abs(mel.mu1_tilde(table, resonant_13, K) + table.a / table.b ** 3) <= 1e-12

    def test_tilde_change_of_variables(self, table, resonant_13):
        ts = np.linspace(-6, 6, 301)
        phis = elliptic.amplitude_m(ts, resonant_13.modulus)
        assert np.max(np.abs(mel.mu1_tilde(table, resonant_13, ts)
                             - flow.mu1(table, phis))) <= 1e-12

    def test_hat_values_and_consistency(self, table):
        assert abs(mel.mu1_hat(table, 0.0)
                   - (table.a / table.b ** 3 - table.b / table.a ** 3)) <= 1e-15
        ss = np.linspace(-4, 4, 201)
        phis = np.arcsin(np.tanh(ss))
        target = flow.mu1(table, phis) - mel.mu_breve_inf(table)
        assert np.max(np.abs(mel.mu1_hat(table, ss) - target)) <= 1e-12

    def test_hat_tail_bound(self, table):
        assert abs(mel.mu1_hat(table, 10.0)) < 1e-7 * table.a / table.b ** 3
        assert abs(mel.mu1_hat(table, -10.0)) < 1e-7 * table.a / table.b ** 3

    def test_analytic_derivatives(self, table, resonant_13):
        xs = np.linspace(0.1, 2.3, 17)
        h = 1e-6
        fd = (mel.mu1_tilde(table, resonant_13, xs + h)
              - mel.mu1_tilde(table, resonant_13, xs - h)) / (2 * h)
        assert np.max(np.abs(fd - mel.mu1_tilde_prime(table, resonant_13, xs))) <= 1e-8
        fd = (mel.mu1_hat(table, xs + h) - mel.mu1_hat(table, xs - h)) / (2 * h)
        assert np.max(np.abs(fd - mel.mu1_hat_prime(table, xs))) <= 1e-8


class TestSubharmonicPotential:
    @pytest.mark.parametrize("m,n", RESONANCES)
    def test_even_and_periodic(self, table, m, n):
        res = geo.Resonance(m, n)
        ca = geo.resonant_caustic(table, res)
        ts = np.linspace(0.0, ca.zeta, 129)
        v = mel.subharmonic_potential(table, res, ts, caustic=ca)
        for shift in (ca.zeta, ca.delta, 2.0 * ca.modulus.K):
            shifted = mel.subharmonic_potential(table, res, ts + shift, caustic=ca)
            assert np.max(np.abs(shifted - v)) <= 1e-11
        mirrored = mel.subharmonic_potential(table, res, -ts, caustic=ca)
        assert np.max(np.abs(mirrored - v)) <= 1e-11

    def test_even_n_collapses_to_half_sum(self, table):
        res = geo.Resonance(1, 4)
        ca = geo.resonant_caustic(table, res)
        ts = np.linspace(-3, 3, 101)
        full = mel.subharmonic_potential(table, res, ts, caustic=ca)
        half = 4.0 * ca.lam * sum(mel.mu1_tilde(table, ca, ts + j * ca.delta)
                                  for j in range(2))
        assert np.max(np.abs(full - half)) <= 1e-11

    @pytest.mark.parametrize("m,n", RESONANCES)
    def test_profile_critical_set(self, table, m, n):
        prof = mel.subharmonic_profile(table, geo.Resonance(m, n))
        locs = sorted(c.location for c in prof.critical_points)
        assert len(locs) == 2
        assert abs(locs[0]) <= 1e-8
        assert abs(locs[1] - prof.period / 2) <= 1e-8
        # interior minimum at 0, maximum at the half period, both nondegenerate
        assert prof.critical_points[0].second_derivative > 0
        assert prof.critical_points[1].second_derivative < 0
        assert prof.nondegeneracy_margin > 0.1
        assert prof.nonconstancy_margin > 0.4

    def test_derivative_vanishes_at_zero(self, table, resonant_13):
        res = geo.Resonance(1, 3)
        assert abs(mel.subharmonic_derivative(table, res, 0.0, caustic=resonant_13)) <= 1e-11


class TestHomoclinicPotential:
    def test_even_and_periodic(self, table):
        h = geo.characteristic_exponent(table).h
        ss = np.linspace(0.0, h, 129)
        tol = 1e-12
        v = mel.homoclinic_potential(table, ss, tol=tol)
        assert np.max(np.abs(mel.homoclinic_potential(table, ss + h, tol=tol) - v)) <= 10 * tol
        assert np.max(np.abs(mel.homoclinic_potential(table, -ss, tol=tol) - v)) <= 10 * tol

    def test_truncation_is_below_tol(self, table):
        ss = np.linspace(-2.0, 5.0, 64)
        v1 = mel.homoclinic_potential(table, ss, tol=1e-12)
        v2 = mel.homoclinic_potential(table, ss, tol=1e-12 * 1e-6)    # J doubled and more
        assert np.max(np.abs(v1 - v2)) <= 1e-12

    def test_profile_critical_set(self, table):
        prof = mel.homoclinic_profile(table)
        h = geo.characteristic_exponent(table).h
        locs = sorted(c.location for c in prof.critical_points)
        assert len(locs) == 2
        assert abs(locs[0]) <= 1e-8 and abs(locs[1] - h / 2) <= 1e-8
        assert prof.critical_points[0].second_derivative > 0
        assert prof.critical_points[1].second_derivative < 0
        assert prof.nonconstancy_margin > 0.4
        assert abs(prof.period - h) <= 1e-14


class TestLaurentData:
    def alpha2_closed_form(self, table, lam):
        # eliminate the elliptic values at the half shift via the root
        # identities: alpha2 = -(a^2 - lam^2) / (4 a lam^2 b)
        return -(table.a ** 2 - lam ** 2) / (4.0 * table.a * lam ** 2 * table.b)

    @pytest.mark.parametrize("m,n", [(1, 3), (2, 5), (3, 7)])
    def test_alpha2_sign_and_closed_form(self, table, m, n):
        ca = geo.resonant_caustic(table, geo.Resonance(m, n))
        est = mel.alpha2(table, ca)
        assert est.coefficient2 < 0.0
        assert abs(est.coefficient2 - self.alpha2_closed_form(table, ca.lam)) <= 1e-12
        assert est.pole == complex(ca.zeta / 2, ca.modulus.Kprime)

    def test_pole_is_a_root_of_f(self, table, resonant_13):
        resid = mel._f_on_shifted_line(table, resonant_13, resonant_13.zeta / 2)
        assert abs(resid) <= 1e-10

    def test_fprime_against_line_differences(self, table, resonant_13):
        # derivative used for alpha2 vs a central difference of f along
        # the shifted line (the imaginary direction adds a constant only)
        u = resonant_13.zeta / 2
        sh = elliptic.jacobi_imag_shift_m(u, resonant_13.modulus)
        fp = (-2.0 * table.c ** 2 * sh.sn_shift * sh.cn_shift * sh.dn_shift).real
        eta = 1e-6
        fd = (mel._f_on_shifted_line(table, resonant_13, u + eta)
              - mel._f_on_shifted_line(table, resonant_13, u - eta)) / (2 * eta)
        assert abs(fp - fd) <= 1e-7 * max(1.0, abs(fp))

    def test_beta2_value_and_pole_residual(self, table):
        est = mel.beta2(table)
        closed = -table.c ** 2 / (4.0 * table.a * table.b ** 3)
        assert est.coefficient2 < 0.0
        assert abs(est.coefficient2 - closed) <= 1e-13
        s_plus = complex(geo.characteristic_exponent(table).h / 2, math.pi / 2)
        g = table.b ** 2 + table.c ** 2 / np.cosh(s_plus) ** 2
        assert abs(g) <= 1e-12
        assert est.pole == s_plus

    def test_beta2_complex_step_oracle(self, table):
        est = mel.beta2(table)
        s_plus = est.pole
        eta = 1e-6
        gp_fd = (table.c ** 2 / np.cosh(s_plus + eta) ** 2
                 - table.c ** 2 / np.cosh(s_plus - eta) ** 2) / (2 * eta)
        beta_fd = (-table.a * table.b / gp_fd ** 2).real
        assert abs(est.coefficient2 - beta_fd) <= 1e-8

    def test_beta2_circle_limit(self):
        tab = geo.make_table(1.0, 1.0 - 1e-6)
        assert abs(mel.beta2(tab).coefficient2) <= 1e-5

    def test_alpha2_tends_to_beta2(self, table):
        target = mel.beta2(table).coefficient2
        gaps = []
        for i in range(1, 6):
            ca = geo.caustic_from_lambda(table, table.b * (1 - 10.0 ** -i))
            gaps.append(abs(mel.alpha2(table, ca).coefficient2 - target))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] * 10.0 <= gaps[0]

    def test_subdominant_coefficients_finite(self, table, resonant_13):
        a1 = mel.alpha2(table, resonant_13).coefficient1
        b1 = mel.beta2(table).coefficient1
        assert np.isfinite(a1).all() and np.isfinite(b1).all()


class TestLimitGap:
    def test_odd_ladder_decreases(self, table):
        gaps = mel.limit_gap(table, [geo.Resonance(j, 2 * j + 1) for j in range(2, 7)])
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_even_ladder_decreases(self, table):
        gaps = mel.limit_gap(table, [geo.Resonance(2 * j - 1, 4 * j) for j in range(2, 6)])
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    @pytest.mark.parametrize("parity", ["odd", "even"])
    def test_swapped_kappa_negative_control(self, table, parity):
        if parity == "odd":
            seq = [geo.Resonance(j, 2 * j + 1) for j in range(2, 7)]
        else:
            seq = [geo.Resonance(2 * j - 1, 4 * j) for j in range(2, 6)]
        with pytest.raises(PropertyViolation):
            mel.limit_gap(table, seq, swap_kappa=True)
