import dataclasses
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from billiardflow import dynamics, elliptic, flow, geometry as geo
from billiardflow.errors import DomainError


class TestTable:
    def test_semi_focal_distance(self):
        assert abs(geo.make_table(2.0, 1.0).c - math.sqrt(3)) <= 1e-15
        assert geo.make_table(5.0, 3.0).c == 4.0

    @pytest.mark.parametrize("a,b", [(1.0, 1.0), (1.0, 2.0), (2.0, 0.0), (2.0, -1.0)])
    def test_rejects_bad_axes(self, a, b):
        with pytest.raises(DomainError):
            geo.make_table(a, b)


class TestResonance:
    def test_rejects_non_coprime_and_bad_range(self):
        with pytest.raises(DomainError):
            geo.Resonance(1, 2)        # m < n/2 is strict
        with pytest.raises(DomainError):
            geo.Resonance(2, 4)
        with pytest.raises(DomainError):
            geo.Resonance(0, 3)

    def test_accepts_valid(self):
        geo.Resonance(1, 3)
        geo.Resonance(9, 20)


class TestCaustic:
    def test_invariants(self, table, caustic_half):
        ca = caustic_half
        k2 = (table.a ** 2 - table.b ** 2) / (table.a ** 2 - ca.lam ** 2)
        assert abs(ca.modulus.k ** 2 - k2) <= 1e-13
        sn = elliptic.jacobi_m(ca.delta / 2, ca.modulus).sn
        assert abs(sn - ca.lam / table.b) <= 1e-11
        assert 0.0 < ca.delta < 2.0 * ca.modulus.K
        assert abs(ca.zeta - (2.0 * ca.modulus.K - ca.delta)) <= 1e-13
        assert 0.0 < ca.rho < 0.5

    def test_rejects_hyperbola_range(self, table):
        with pytest.raises(DomainError):
            geo.caustic_from_lambda(table, 1.5)   # in (b, a): hyperbola
        with pytest.raises(DomainError):
            geo.caustic_from_lambda(table, 0.0)

    def test_rotation_number_endpoints(self, table):
        # rho -> 0 polynomially at lambda -> 0 but only logarithmically
        # toward 1/2 at lambda -> b (rho ~ 1/2 - h/4K, K ~ log(1/(b-lam)))
        assert geo.caustic_from_lambda(table, 1e-6).rho < 1e-3
        r9 = geo.caustic_from_lambda(table, table.b * (1 - 1e-9)).rho
        r12 = geo.caustic_from_lambda(table, table.b * (1 - 1e-12)).rho
        assert 0.4 < r9 < r12 < 0.5

    def test_rotation_number_monotone(self, table):
        lams = np.linspace(0.05, 0.995, 40)
        rhos = [geo.caustic_from_lambda(table, float(l)).rho for l in lams]
        assert np.all(np.diff(rhos) > 0)

    def test_rho_against_winding_oracle(self, table, boundary0, caustic_half):
        # independent oracle: measure the winding of a long simulated orbit
        state = dynamics.state_on_caustic(boundary0, caustic_half, 0.37)
        rho = dynamics.measured_rotation_number(boundary0, state, 100_000)
        assert abs(rho - caustic_half.rho) <= 1e-4

    def test_zeta_tends_to_characteristic_exponent(self, table):
        h = geo.characteristic_exponent(table).h
        zeta = geo.caustic_from_lambda(table, table.b * (1 - 1e-7)).zeta
        assert abs(zeta - h) <= 1e-5


class TestResonantCaustic:
    @pytest.mark.parametrize("m,n", [(1, 3), (1, 4), (2, 5), (3, 7), (6, 13), (9, 20)])
    def test_resonant_condition(self, table, m, n):
        ca = geo.resonant_caustic(table, geo.Resonance(m, n))
        assert abs(n * ca.delta - 4.0 * ca.modulus.K * m) <= 1e-10
        assert abs(ca.rho - m / n) <= 1e-13

    def test_polygon_closes(self, table, resonant_13):
        # closed-polygon oracle: the tangent 3-gon returns to its start
        t0 = 0.41
        p_start = geo.point_t(table, resonant_13, t0)
        p_end = geo.point_t(table, resonant_13, t0 + 3 * resonant_13.delta)
        assert np.hypot(*(p_end - p_start)) <= 1e-9

    def test_polygon_winding(self, table):
        for (m, n) in [(1, 3), (2, 5), (3, 7)]:
            ca = geo.resonant_caustic(table, geo.Resonance(m, n))
            phis = elliptic.amplitude_m(ca.delta * np.arange(n + 1), ca.modulus)
            total = phis[-1] - phis[0]
            assert abs(total - 2.0 * math.pi * m) <= 1e-9


class TestParameterizations:
    def test_point_t_examples(self, table, caustic_half):
        assert np.allclose(geo.point_t(table, caustic_half, 0.0), [0.0, table.b])
        pK = geo.point_t(table, caustic_half, caustic_half.modulus.K)
        assert np.hypot(*(pK - [table.a, 0.0])) <= 1e-12

    def test_point_t_on_ellipse(self, table, caustic_half):
        ts = np.linspace(-10, 10, 400)
        p = geo.point_t(table, caustic_half, ts)
        on = (p[:, 0] / table.a) ** 2 + (p[:, 1] / table.b) ** 2 - 1.0
        assert np.max(np.abs(on)) <= 1e-12

    def test_point_s_examples(self, table):
        assert np.allclose(geo.point_s(table, 0.0), [0.0, table.b])
        assert np.allclose(geo.point_s(table, 1.0),
                           [2.0 * math.tanh(1.0), 1.0 / math.cosh(1.0)])
        far = geo.point_s(table, 40.0)
        assert np.hypot(*(far - [table.a, 0.0])) <= 1e-12


class TestTangency:
    def test_residual_small_on_grid(self, table, caustic_half):
        ts = np.linspace(-7, 7, 1000)
        assert np.max(np.abs(geo.tangency_residual(table, caustic_half, ts))) <= 1e-10

    def test_wrong_shift_is_detected(self, table, caustic_half):
        # nondegeneracy of the test itself: a wrong shift cannot hide
        wrong = dataclasses.replace(caustic_half, delta=caustic_half.delta + 0.1)
        ts = np.linspace(0, 4 * caustic_half.modulus.K, 400)
        assert np.min(np.abs(geo.tangency_residual(table, wrong, ts))) >= 1e-3

    def test_antiperiod_symmetry(self, table, caustic_half):
        ts = np.linspace(-2, 2, 50)
        r1 = geo.tangency_residual(table, caustic_half, ts)
        r2 = geo.tangency_residual(table, caustic_half, ts + 2 * caustic_half.modulus.K)
        assert np.max(np.abs(r1 - r2)) <= 1e-12


class TestFocal:
    def test_residual_small(self, table):
        ss = np.linspace(-5, 5, 500)
        assert np.max(geo.focal_residual(table, ss)) <= 1e-10

    def test_wrong_exponent_is_detected(self, table):
        h = geo.characteristic_exponent(table).h
        p = geo.point_s(table, 0.0)
        q = -geo.point_s(table, h + 0.1)
        d = q - p
        res = abs(d[0] * (-p[1]) - d[1] * (-table.c - p[0])) / np.hypot(*d)
        assert res >= 1e-3

    def test_degenerate_far_limit(self, table):
        # the chord tends to the major axis, through the focus trivially
        assert geo.focal_residual(table, 14.0) <= 1e-8


class TestCharacteristicExponent:
    def test_closed_form_and_oracle(self, table):
        hd = geo.characteristic_exponent(table)
        assert abs(hd.h - 2.0 * math.log(2.0 + math.sqrt(3.0))) <= 1e-14
        # independent oracle: solve sinh(h/2) = c/b by bracketing
        h_root = brentq(lambda h: math.sinh(h / 2) - table.c / table.b, 1e-9, 20.0,
                        xtol=1e-15)
        assert abs(hd.h - h_root) <= 1e-12

    def test_all_three_relations(self, table):
        hd = geo.characteristic_exponent(table)
        assert abs(math.sinh(hd.h / 2) - table.c / table.b) <= 1e-13
        assert abs(math.cosh(hd.h / 2) - table.a / table.b) <= 1e-13
        assert abs(math.tanh(hd.h / 2) - table.c / table.a) <= 1e-13
        assert abs(hd.eigenvalue - math.exp(hd.h)) <= 1e-12

    def test_circle_limit(self):
        hd = geo.characteristic_exponent(geo.make_table(1.0, 1.0 - 1e-8))
        assert hd.h < 1e-3


class TestEllipticCoords:
    def test_vertices(self, table):
        mu0 = geo.boundary_mu(table)
        mu, phi = geo.elliptic_coords(table, np.array([0.0, table.b]))
        assert abs(mu - mu0) <= 1e-13 and abs(phi) <= 1e-13
        mu, phi = geo.elliptic_coords(table, np.array([table.a, 0.0]))
        assert abs(mu - mu0) <= 1e-13 and abs(phi - math.pi / 2) <= 1e-13

    def test_round_trip_on_boundary(self, table):
        rng = np.random.default_rng(11)
        phis = rng.uniform(-math.pi, math.pi, 200)
        mu0 = geo.boundary_mu(table)
        pts = geo.point_from_elliptic(table, np.full_like(phis, mu0), phis)
        mu, phi = geo.elliptic_coords(table, pts)
        assert np.max(np.abs(mu - mu0)) <= 1e-11
        assert np.max(np.abs(geo.wrap_angle(phi - phis))) <= 1e-11

    def test_focal_segment_rejected(self, table):
        with pytest.raises(DomainError):
            geo.elliptic_coords(table, np.array([0.5, 0.0]))


class TestSeparatrixLimit:
    def test_lemma_quantities_decrease(self, table):
        h = geo.characteristic_exponent(table).h
        tgrid = np.linspace(-3.0, 3.0, 301)
        qs = geo.point_s(table, tgrid)
        qs_shift = -geo.point_s(table, tgrid - h)
        rows = []
        for i in range(1, 6):
            ca = geo.caustic_from_lambda(table, table.b * (1.0 - 10.0 ** -i))
            qt = geo.point_t(table, ca, tgrid)
            qt_shift = geo.point_t(table, ca, tgrid + ca.delta)
            rows.append((abs(ca.zeta - h),
                         abs(ca.modulus.Kprime - math.pi / 2),
                         np.max(np.hypot(*(qt - qs).T)),
                         np.max(np.hypot(*(qt_shift - qs_shift).T))))
        arr = np.asarray(rows)
        assert np.all(np.diff(arr, axis=0) < 0)            # monotone decrease
        assert np.all(arr[-1] * 10.0 <= arr[0])            # at least 10x overall
