"""Curvature-flow deformation of the ellipse.

Two layers live here.  The model actually consumed by the Melnikov and
dynamics modules is the first-order one: the boundary written in elliptic
coordinates as mu = mu_0 + eps * mu_1(phi), with

    mu_1(phi) = -a b / (a^2 cos^2 phi + b^2 sin^2 phi)^2 ,

which is the leading deformation of the ellipse under an eps-time of the
curve shortening flow.  Separately, flow_integrate time-steps the actual
PDE  dq/dt = kappa N  on a polygonal mesh at desk scale; it exists to
validate the first-order term (validate_first_order) and for the classic
shrinking-circle / area-law checks, not for long-time evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalGuard
from .geometry import EllipseTable, boundary_mu, elliptic_coords

__all__ = [
    "PerturbedTable", "CurveMesh",
    "mu1", "mu1_prime", "mu1_second", "curvature_kappa0", "normal_N0",
    "perturbed_table", "perturbed_point", "ellipse_mesh",
    "mesh_length", "mesh_area", "flow_integrate", "validate_first_order",
]


def _axis_quad(table, phi):
    # a^2 cos^2 + b^2 sin^2 and its first two phi-derivatives
    c2 = table.c ** 2
    cos, sin = np.cos(phi), np.sin(phi)
    d = (table.a * cos) ** 2 + (table.b * sin) ** 2
    return d, -c2 * np.sin(2.0 * phi), -2.0 * c2 * np.cos(2.0 * phi)


def mu1(table: EllipseTable, phi):
    """First-order curvature-flow deformation in elliptic coordinates."""
    phi = np.asarray(phi, dtype=float)
    d, _, _ = _axis_quad(table, phi)
    out = -table.a * table.b / (d * d)
    return float(out) if out.ndim == 0 else out


def mu1_prime(table: EllipseTable, phi):
    phi = np.asarray(phi, dtype=float)
    d, dp, _ = _axis_quad(table, phi)
    out = 2.0 * table.a * table.b * dp / d ** 3
    return float(out) if out.ndim == 0 else out


def mu1_second(table: EllipseTable, phi):
    phi = np.asarray(phi, dtype=float)
    d, dp, dpp = _axis_quad(table, phi)
    out = 2.0 * table.a * table.b * (dpp * d - 3.0 * dp * dp) / d ** 4
    return float(out) if out.ndim == 0 else out


def curvature_kappa0(table: EllipseTable, phi):
    """Curvature of the unperturbed ellipse at q0(phi) = (a sin, b cos)."""
    phi = np.asarray(phi, dtype=float)
    d, _, _ = _axis_quad(table, phi)
    out = table.a * table.b / d ** 1.5
    return float(out) if out.ndim == 0 else out


def normal_N0(table: EllipseTable, phi):
    """Inward unit normal of the ellipse; shape phi.shape + (2,)."""
    phi = np.asarray(phi, dtype=float)
    d, _, _ = _axis_quad(table, phi)
    r = np.sqrt(d)
    return np.stack([-table.b * np.sin(phi) / r, -table.a * np.cos(phi) / r], axis=-1)


@dataclass(frozen=True)
class PerturbedTable:
    """Boundary mu_eps(phi) = mu_0 + eps * mu_1(phi), truncated at first order.

    This is the exact model all perturbed-billiard computations use; the
    O(eps^2) remainder of the true flow is deliberately dropped.  The
    boundary map and its first two derivatives are analytic, so the
    billiard step and Jacobians downstream never need finite differences
    of the boundary itself.
    """

    base: EllipseTable
    epsilon: float
    mu0: float

    def mu(self, phi):
        return self.mu0 + self.epsilon * mu1(self.base, phi)

    def point(self, phi):
        phi = np.asarray(phi, dtype=float)
        m = self.mu(phi)
        c = self.base.c
        return np.stack([c * np.cosh(m) * np.sin(phi),
                         c * np.sinh(m) * np.cos(phi)], axis=-1)

    def dpoint(self, phi):
        phi = np.asarray(phi, dtype=float)
        m = self.mu(phi)
        mp = self.epsilon * mu1_prime(self.base, phi)
        c = self.base.c
        ch, sh = np.cosh(m), np.sinh(m)
        sin, cos = np.sin(phi), np.cos(phi)
        return np.stack([c * (sh * mp * sin + ch * cos),
                         c * (ch * mp * cos - sh * sin)], axis=-1)

    def d2point(self, phi):
        phi = np.asarray(phi, dtype=float)
        m = self.mu(phi)
        mp = self.epsilon * mu1_prime(self.base, phi)
        mpp = self.epsilon * mu1_second(self.base, phi)
        c = self.base.c
        ch, sh = np.cosh(m), np.sinh(m)
        sin, cos = np.sin(phi), np.cos(phi)
        x2 = c * (ch * mp * mp * sin + sh * mpp * sin + 2.0 * sh * mp * cos - ch * sin)
        y2 = c * (sh * mp * mp * cos + ch * mpp * cos - 2.0 * ch * mp * sin - sh * cos)
        return np.stack([x2, y2], axis=-1)

    def curvature(self, phi):
        """Positive curvature w.r.t. the inward normal."""
        d1 = self.dpoint(phi)
        d2 = self.d2point(phi)
        cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        speed = np.hypot(d1[..., 0], d1[..., 1])
        out = -cross / speed ** 3
        return float(out) if out.ndim == 0 else out


def perturbed_table(table: EllipseTable, epsilon: float,
                    convexity_grid: int = 720) -> PerturbedTable:
    """Build the first-order deformed table, checking it stays strictly convex."""
    if epsilon < 0.0:
        raise DomainError("epsilon must be >= 0")
    pt = PerturbedTable(base=table, epsilon=float(epsilon), mu0=boundary_mu(table))
    if epsilon > 0.0:
        phi = np.linspace(-math.pi, math.pi, convexity_grid, endpoint=False)
        if np.any(pt.curvature(phi) <= 0.0):
            raise NumericalGuard(
                f"epsilon={epsilon} breaks convexity of the deformed boundary")
    return pt


def perturbed_point(ptable: PerturbedTable, phi):
    """Deformed boundary point and its phi-derivative."""
    return ptable.point(phi), ptable.dpoint(phi)


@dataclass(frozen=True)
class CurveMesh:
    """Closed polygonal curve; points[i] are consecutive, wrap implied."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 8:
            raise DomainError("mesh must be an (N, 2) array with N >= 8")
        object.__setattr__(self, "points", p)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def spacings(self) -> np.ndarray:
        d = self.points - np.roll(self.points, 1, axis=0)
        return np.hypot(d[:, 0], d[:, 1])


def ellipse_mesh(table: EllipseTable, n: int) -> CurveMesh:
    """Uniform-in-phi sampling of the exact ellipse."""
    phi = np.linspace(-math.pi, math.pi, n, endpoint=False)
    return CurveMesh(np.stack([table.a * np.sin(phi), table.b * np.cos(phi)], axis=-1))


def mesh_length(mesh: CurveMesh) -> float:
    return float(mesh.spacings().sum())


def mesh_area(mesh: CurveMesh) -> float:
    """Enclosed area by the shoelace formula (orientation-independent)."""
    p = mesh.points
    q = np.roll(p, -1, axis=0)
    return abs(float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))) / 2.0


def flow_integrate(mesh: CurveMesh, dt: float, steps: int) -> CurveMesh:
    """Explicit Euler for dq/dt = kappa N on the polygonal mesh.

    kappa N is the second arclength derivative, discretized with the
    centered chord formula; requires dt <= 0.25 * (min spacing)^2 at
    every step and adjacent points no closer than 1e-10.
    """
    p = mesh.points.copy()
    for _ in range(steps):
        d_prev = p - np.roll(p, 1, axis=0)
        d_next = np.roll(p, -1, axis=0) - p
        l_prev = np.hypot(d_prev[:, 0], d_prev[:, 1])
        l_next = np.hypot(d_next[:, 0], d_next[:, 1])
        lmin = min(l_prev.min(), l_next.min())
        if lmin < 1e-10:
            raise NumericalGuard("mesh degenerated: adjacent points closer than 1e-10")
        if dt > 0.25 * lmin * lmin:
            raise NumericalGuard(
                f"time step {dt} violates the CFL-type bound 0.25*minspacing^2={0.25*lmin*lmin:.3e}")
        kappa_n = 2.0 * (d_next / l_next[:, None] - d_prev / l_prev[:, None]) \
            / (l_prev + l_next)[:, None]
        p = p + dt * kappa_n
    return CurveMesh(p)


def validate_first_order(table: EllipseTable, epsilon: float, mesh_size: int) -> float:
    """Sup-norm defect of the first-order model against the integrated flow.

    Runs the PDE to time eps from the exact ellipse, reads the result back
    in elliptic coordinates, resamples mu(phi) onto the original phi grid
    (monotone PCHIP; the flow does not preserve the phi-parameterization),
    and returns  max | (mu_flow - mu_0)/eps - mu_1 | .
    """
    from scipy.interpolate import PchipInterpolator

    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    b3a = 0.01 * table.b ** 3 / table.a
    if epsilon > b3a:
        # beyond the empirically safe window the mesh distorts too much
        # for the convexity/CFL guards to hold through the run
        raise NumericalGuard(
            f"epsilon={epsilon} outside the validated window (0, {b3a:.3e}]")
    mesh = ellipse_mesh(table, mesh_size)
    dt_max = 0.2 * float(mesh.spacings().min()) ** 2
    steps = max(1, math.ceil(epsilon / dt_max))
    final = flow_integrate(mesh, epsilon / steps, steps)

    mu, phi = elliptic_coords(table, final.points)
    order = np.argsort(phi)
    phi_s, mu_s = phi[order], mu[order]
    # periodic pad so the interpolant covers (-pi, pi] without edge bias
    phi_ext = np.concatenate([phi_s[-3:] - 2.0 * math.pi, phi_s, phi_s[:3] + 2.0 * math.pi])
    mu_ext = np.concatenate([mu_s[-3:], mu_s, mu_s[:3]])
    interp = PchipInterpolator(phi_ext, mu_ext)

    grid = np.linspace(-math.pi, math.pi, mesh_size, endpoint=False)
    mu0 = boundary_mu(table)
    defect = (interp(grid) - mu0) / epsilon - mu1(table, grid)
    return float(np.max(np.abs(defect)))
