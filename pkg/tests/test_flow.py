import math

import numpy as np
import pytest

from billiardflow import flow, geometry as geo
from billiardflow.errors import DomainError, NumericalGuard


class TestFirstOrderTerm:
    def test_values_at_vertices(self, table):
        assert flow.mu1(table, 0.0) == -table.b / table.a ** 3
        assert flow.mu1(table, math.pi / 2) == -table.a / table.b ** 3

    def test_even_and_pi_periodic(self, table):
        phis = np.linspace(-math.pi, math.pi, 257)
        v = flow.mu1(table, phis)
        assert np.max(np.abs(flow.mu1(table, -phis) - v)) <= 1e-14
        assert np.max(np.abs(flow.mu1(table, phis + math.pi) - v)) <= 1e-14

    def test_near_circle_is_nearly_constant(self):
        tab = geo.make_table(1.0, 1.0 - 1e-6)
        v = flow.mu1(tab, np.linspace(0, math.pi, 100))
        assert np.max(np.abs(v + 1.0)) <= 1e-5    # circle limit: -1/a^3

    def test_derivatives_match_finite_differences(self, table):
        phis = np.linspace(0.2, 2.9, 23)
        h = 1e-6
        fd1 = (flow.mu1(table, phis + h) - flow.mu1(table, phis - h)) / (2 * h)
        assert np.max(np.abs(fd1 - flow.mu1_prime(table, phis))) <= 1e-7
        h = 1e-4
        fd2 = (flow.mu1(table, phis + h) - 2 * flow.mu1(table, phis)
               + flow.mu1(table, phis - h)) / h ** 2
        assert np.max(np.abs(fd2 - flow.mu1_second(table, phis))) <= 1e-4


class TestCurvatureNormal:
    def test_kappa_values(self, table):
        assert flow.curvature_kappa0(table, 0.0) == table.b / table.a ** 2
        assert flow.curvature_kappa0(table, math.pi / 2) == table.a / table.b ** 2

    def test_turning_number(self, table):
        phis = np.linspace(-math.pi, math.pi, 200001)
        speed = np.sqrt((table.a * np.cos(phis)) ** 2 + (table.b * np.sin(phis)) ** 2)
        integral = np.trapezoid(flow.curvature_kappa0(table, phis) * speed, phis)
        assert abs(integral - 2.0 * math.pi) <= 1e-8

    def test_normal_examples(self, table):
        assert np.allclose(flow.normal_N0(table, 0.0), [0.0, -1.0])
        assert np.allclose(flow.normal_N0(table, math.pi / 2), [-1.0, 0.0])

    def test_normal_unit_inward_orthogonal(self, table):
        phis = np.linspace(-math.pi, math.pi, 101)
        n = flow.normal_N0(table, phis)
        q = np.stack([table.a * np.sin(phis), table.b * np.cos(phis)], axis=-1)
        dq = np.stack([table.a * np.cos(phis), -table.b * np.sin(phis)], axis=-1)
        assert np.max(np.abs(np.hypot(n[:, 0], n[:, 1]) - 1.0)) <= 1e-13
        assert np.all((n * q).sum(axis=1) < 0.0)
        assert np.max(np.abs((n * dq).sum(axis=1))) <= 1e-13

    def test_displacement_field_identity(self, table):
        # kappa0 * N0 is the first-order displacement mu1 * (b sin, a cos)
        phis = np.linspace(-math.pi, math.pi, 101)
        q1 = flow.curvature_kappa0(table, phis)[:, None] * flow.normal_N0(table, phis)
        target = flow.mu1(table, phis)[:, None] * np.stack(
            [table.b * np.sin(phis), table.a * np.cos(phis)], axis=-1)
        assert np.max(np.abs(q1 - target)) <= 1e-13


class TestPerturbedTable:
    def test_epsilon_zero_reproduces_ellipse(self, table, boundary0):
        phis = np.linspace(-math.pi, math.pi, 257)
        q = boundary0.point(phis)
        q0 = np.stack([table.a * np.sin(phis), table.b * np.cos(phis)], axis=-1)
        assert np.max(np.abs(q - q0)) <= 1e-14

    def test_first_order_consistency(self, table):
        phis = np.linspace(-math.pi, math.pi, 101)
        q0 = np.stack([table.a * np.sin(phis), table.b * np.cos(phis)], axis=-1)
        target = flow.mu1(table, phis)[:, None] * np.stack(
            [table.b * np.sin(phis), table.a * np.cos(phis)], axis=-1)
        for eps in [1e-4, 1e-5]:
            pt = flow.perturbed_table(table, eps)
            defect = np.max(np.abs((pt.point(phis) - q0) / eps - target))
            assert defect <= 10.0 * eps     # O(eps) remainder

    def test_axial_symmetries_exact(self, table):
        pt = flow.perturbed_table(table, 2e-3)
        phis = np.linspace(0.1, 3.0, 40)
        q = pt.point(phis)
        q_reflected_y = pt.point(-phis) * np.array([-1.0, 1.0])
        q_reflected_x = pt.point(math.pi - phis) * np.array([1.0, -1.0])
        assert np.max(np.abs(q - q_reflected_y)) == 0.0
        assert np.max(np.abs(q - q_reflected_x)) <= 1e-15

    def test_enclosed_area_decreases(self, table, boundary0):
        phis = np.linspace(-math.pi, math.pi, 4096, endpoint=False)

        def area(pt):
            p = pt.point(phis)
            q = np.roll(p, -1, axis=0)
            return abs(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])) / 2.0

        a0 = area(boundary0)
        assert area(flow.perturbed_table(table, 1e-3)) < a0
        assert area(flow.perturbed_table(table, 4e-3)) < a0

    def test_convexity_guard(self, table):
        flow.perturbed_table(table, 0.2)      # still convex for (2, 1)
        with pytest.raises(NumericalGuard):
            flow.perturbed_table(table, 0.3)

    def test_perturbed_point_returns_derivative(self, table):
        pt = flow.perturbed_table(table, 1e-3)
        q, dq = flow.perturbed_point(pt, 0.7)
        h = 1e-7
        fd = (pt.point(0.7 + h) - pt.point(0.7 - h)) / (2 * h)
        assert np.max(np.abs(dq - fd)) <= 1e-6
        assert np.max(np.abs(q - pt.point(0.7))) == 0.0


class TestFlowIntegrator:
    def test_shrinking_circle(self):
        n, r0 = 512, 1.0
        th = np.linspace(0, 2 * math.pi, n, endpoint=False)
        mesh = flow.CurveMesh(np.stack([r0 * np.cos(th), r0 * np.sin(th)], axis=-1))
        t_end = 0.1 * r0 ** 2
        dt = 0.2 * (float(mesh.spacings().min()) * math.sqrt(0.8)) ** 2
        steps = math.ceil(t_end / dt)
        out = flow.flow_integrate(mesh, t_end / steps, steps)
        radius = np.hypot(out.points[:, 0], out.points[:, 1])
        expected = math.sqrt(r0 ** 2 - 2 * t_end)
        assert abs(radius.mean() - expected) / expected <= 1e-3

    def test_length_strictly_decreases(self, table):
        mesh = flow.ellipse_mesh(table, 512)
        dt = 0.12 * float(mesh.spacings().min()) ** 2
        lengths = [flow.mesh_length(mesh)]
        for _ in range(5):
            mesh = flow.flow_integrate(mesh, dt, 20)
            lengths.append(flow.mesh_length(mesh))
        assert all(b < a for a, b in zip(lengths, lengths[1:]))

    def test_area_law(self, table):
        mesh = flow.ellipse_mesh(table, 1024)
        a0 = flow.mesh_area(mesh)
        t_end = 0.05
        dt = 0.12 * float(mesh.spacings().min()) ** 2
        steps = math.ceil(t_end / dt)
        out = flow.flow_integrate(mesh, t_end / steps, steps)
        lost = a0 - flow.mesh_area(out)
        assert abs(lost - 2.0 * math.pi * t_end) / (2.0 * math.pi * t_end) <= 5e-3

    def test_cfl_guard(self, table):
        mesh = flow.ellipse_mesh(table, 128)
        with pytest.raises(NumericalGuard):
            flow.flow_integrate(mesh, 1.0, 1)

    def test_degenerate_mesh_guard(self):
        th = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
        pts[1] = pts[0] + 1e-12
        with pytest.raises(NumericalGuard):
            flow.flow_integrate(flow.CurveMesh(pts), 1e-9, 1)


class TestValidateFirstOrder:
    def test_error_halves_with_epsilon(self, table):
        errs = [flow.validate_first_order(table, e, 512) for e in (4e-3, 2e-3, 1e-3)]
        for e1, e2 in zip(errs, errs[1:]):
            assert 1.4 <= e1 / e2 <= 2.6

    def test_acceptance_bound_at_fixture(self, table):
        assert flow.validate_first_order(table, 1e-3, 2048) <= 1e-2

    def test_coarse_mesh_is_worse(self, table):
        assert flow.validate_first_order(table, 2e-3, 64) \
            > flow.validate_first_order(table, 2e-3, 2048)

    def test_window_guards(self, table):
        with pytest.raises(NumericalGuard):
            flow.validate_first_order(table, 0.2, 256)
        with pytest.raises(DomainError):
            flow.validate_first_order(table, 0.0, 256)
