"""The ellipse, its confocal caustics, resonances, and natural parameterizations.

Conventions: the table is x^2/a^2 + y^2/b^2 = 1 with 0 < b < a, semi-focal
distance c = sqrt(a^2 - b^2), foci at (+-c, 0).  A convex confocal caustic
is indexed by lambda in (0, b); its tangent billiard dynamics is the rigid
shift t -> t + delta in the angular variable of (a sn t, b cn t).  The
separatrix (orbits through the foci) is parameterized by (a tanh s, b sech s)
with shift s -> s + h.

Caustics close to the separatrix are handled through the complementary
modulus kc, not lambda: as lambda -> b the interesting quantities
(zeta = 2K - delta, rho) stay well conditioned in kc while lambda itself
collapses onto b at double-precision resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import elliptic
from .elliptic import EllipticModulus
from .errors import DomainError

__all__ = [
    "EllipseTable", "CausticData", "Resonance", "HyperbolicData",
    "make_table", "caustic_from_lambda", "caustic_from_kc", "resonant_caustic",
    "point_t", "point_s", "tangency_residual", "focal_residual",
    "characteristic_exponent", "elliptic_coords", "point_from_elliptic",
    "boundary_mu", "resonant_polygon", "wrap_angle",
]


@dataclass(frozen=True)
class EllipseTable:
    """Semi-axes a > b > 0 and semi-focal distance c = sqrt(a^2 - b^2)."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class Resonance:
    """Coprime (m, n) with 1 <= m < n/2: n bounces winding m times."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or 2 * self.m >= self.n:
            raise DomainError(f"resonance requires 1 <= m < n/2, got ({self.m}, {self.n})")
        if math.gcd(self.m, self.n) != 1:
            raise DomainError(f"resonance (m, n) must be coprime, got ({self.m}, {self.n})")


@dataclass(frozen=True)
class CausticData:
    """A convex confocal caustic with its elliptic data.

    lam is the caustic parameter; for caustics extremely close to the
    separatrix it may round to b exactly, in which case ``modulus.kc``
    still carries the full information.  delta is the per-bounce shift,
    zeta = 2K - delta, rho = delta / 4K the rotation number.
    """

    lam: float
    modulus: EllipticModulus
    delta: float
    zeta: float
    rho: float

    def conic_semi_axes_sq(self, table: EllipseTable) -> tuple[float, float]:
        """(a^2 - lam^2, b^2 - lam^2), computed from the modulus for stability."""
        k, kc = self.modulus.k, self.modulus.kc
        a_sq = (table.c / k) ** 2
        return a_sq, a_sq * kc * kc


@dataclass(frozen=True)
class HyperbolicData:
    """Characteristic exponent h of the two-periodic axis orbit and e^h."""

    h: float
    eigenvalue: float


def make_table(a: float, b: float) -> EllipseTable:
    """Build the table; rejects circles and swapped axes."""
    if not (0.0 < b < a):
        raise DomainError(f"table requires 0 < b < a, got a={a}, b={b}")
    c = math.sqrt((a - b) * (a + b))
    return EllipseTable(a=float(a), b=float(b), c=c)


def _caustic_from_parts(table, lam, k, kc):
    K = elliptic.complete_K_from_kc(kc)
    Kp = elliptic.complete_K_from_kc(k)
    mod = EllipticModulus(k=k, kc=kc, K=K, Kprime=Kp)
    sin_half_delta = lam / table.b            # sn(delta/2)
    sin_half_zeta = table.c / (table.a * k)   # sn(zeta/2)
    if sin_half_delta <= sin_half_zeta:
        delta = 2.0 * elliptic.incomplete_F_m(math.asin(min(sin_half_delta, 1.0)), mod)
        zeta = 2.0 * K - delta
    else:
        zeta = 2.0 * elliptic.incomplete_F_m(math.asin(min(sin_half_zeta, 1.0)), mod)
        delta = 2.0 * K - zeta
    rho = delta / (4.0 * K)
    return CausticData(lam=lam, modulus=mod, delta=delta, zeta=zeta, rho=rho)


def caustic_from_lambda(table: EllipseTable, lam: float) -> CausticData:
    """Caustic data for an explicit parameter lambda in (0, b).

    lambda in (b, a) would be a confocal hyperbola and is rejected.
    """
    if not (0.0 < lam < table.b):
        raise DomainError(
            f"caustic parameter must lie in (0, b)=(0, {table.b}); got {lam}"
            " (values in (b, a) are hyperbola caustics, unsupported)")
    a, b, c = table.a, table.b, table.c
    k = c / math.sqrt((a - lam) * (a + lam))
    kc = math.sqrt((b - lam) * (b + lam) / ((a - lam) * (a + lam)))
    return _caustic_from_parts(table, lam, k, kc)


def caustic_from_kc(table: EllipseTable, kc: float) -> CausticData:
    """Caustic data from the complementary modulus, the stable knob near the
    separatrix.  kc ranges in (0, b/a): kc -> b/a is lambda -> 0, kc -> 0 is
    lambda -> b."""
    if not (0.0 < kc < table.b / table.a):
        raise DomainError(f"kc must lie in (0, b/a)=(0, {table.b/table.a}); got {kc}")
    k = math.sqrt((1.0 - kc) * (1.0 + kc))
    lam_sq = table.b ** 2 - (table.c * kc / k) ** 2
    lam = math.sqrt(max(lam_sq, 0.0))
    return _caustic_from_parts(table, lam, k, kc)


def resonant_caustic(table: EllipseTable, res: Resonance) -> CausticData:
    """The unique convex caustic with rotation number m/n.

    rho is a decreasing function of kc, so we bisect in log(kc); this keeps
    full precision even for m/n -> 1/2 where lambda is not resolvable in
    double precision.
    """
    target = res.m / res.n
    kc_hi = (table.b / table.a) * (1.0 - 1e-12)
    lo, hi = math.log(1e-13), math.log(kc_hi)
    # rho(kc_lo) must exceed the target; widen for resonances very near 1/2
    while _rho_of_log_kc(table, lo) <= target:
        lo -= 30.0
        if lo < -640.0:
            raise DomainError(f"resonance {res} too close to 1/2 to bracket")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if _rho_of_log_kc(table, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 4e-16 * max(1.0, abs(hi)):
            break
    return caustic_from_kc(table, math.exp(0.5 * (lo + hi)))


def _rho_of_log_kc(table, u):
    return caustic_from_kc(table, math.exp(u)).rho


def point_t(table: EllipseTable, caustic: CausticData, t) -> np.ndarray:
    """Boundary point (a sn t, b cn t) at the caustic's modulus.

    Vectorized: scalar t gives shape (2,), array t gives shape t.shape + (2,).
    """
    tr = elliptic.jacobi_m(t, caustic.modulus)
    return np.stack([table.a * np.asarray(tr.sn), table.b * np.asarray(tr.cn)], axis=-1)


def point_s(table: EllipseTable, s) -> np.ndarray:
    """Separatrix parameterization (a tanh s, b sech s) of the upper semi-ellipse."""
    s = np.asarray(s, dtype=float)
    return np.stack([table.a * np.tanh(s), table.b / np.cosh(s)], axis=-1)


def tangency_residual(table: EllipseTable, caustic: CausticData, t) -> float | np.ndarray:
    """Signed, scale-invariant tangency defect of the chord t -> t + delta.

    Zero iff the chord line is tangent to the caustic; the raw line-conic
    discriminant is divided by (chord length)^2 and the caustic scale so
    residuals are comparable across tables.
    """
    t = np.asarray(t, dtype=float)
    p1 = point_t(table, caustic, t)
    p2 = point_t(table, caustic, t + caustic.delta)
    d = p2 - p1
    nx, ny = d[..., 1], -d[..., 0]
    w = nx * p1[..., 0] + ny * p1[..., 1]
    a2, b2 = caustic.conic_semi_axes_sq(table)
    raw = a2 * nx * nx + b2 * ny * ny - w * w
    out = raw / ((d * d).sum(axis=-1) * a2)
    return float(out) if out.ndim == 0 else out


def focal_residual(table: EllipseTable, s) -> float | np.ndarray:
    """Distance from the focus (-c, 0) to the line through q(s) and -q(s+h)."""
    h = characteristic_exponent(table).h
    s = np.asarray(s, dtype=float)
    p = point_s(table, s)
    q = -point_s(table, s + h)
    d = q - p
    fx = -table.c - p[..., 0]
    fy = -p[..., 1]
    cross = d[..., 0] * fy - d[..., 1] * fx
    out = np.abs(cross) / np.hypot(d[..., 0], d[..., 1])
    return float(out) if out.ndim == 0 else out


def characteristic_exponent(table: EllipseTable) -> HyperbolicData:
    """h > 0 with sinh(h/2) = c/b, cosh(h/2) = a/b, tanh(h/2) = c/a."""
    h = 2.0 * math.log((table.a + table.c) / table.b)
    return HyperbolicData(h=h, eigenvalue=math.exp(h))


def boundary_mu(table: EllipseTable) -> float:
    """mu_0 of the boundary in elliptic coordinates: cosh(mu_0) = a/c."""
    return math.asinh(table.b / table.c)


def elliptic_coords(table: EllipseTable, p) -> tuple:
    """(mu, phi) with x = c cosh(mu) sin(phi), y = c sinh(mu) cos(phi), mu > 0.

    phi is reduced to (-pi, pi].  Points on the closed focal segment have
    mu = 0 and no well-defined phi; they raise DomainError.
    """
    p = np.asarray(p, dtype=float)
    u = p[..., 0] / table.c
    v = p[..., 1] / table.c
    q = 1.0 - u * u - v * v
    disc = np.sqrt(q * q + 4.0 * v * v)
    # sinh^2(mu), via the conjugate form when q > 0 to avoid cancellation
    denom = np.where(q > 0.0, disc + q, 1.0)
    w = np.where(q > 0.0, 2.0 * v * v / denom, 0.5 * (disc - q))
    mu = np.arcsinh(np.sqrt(w))
    if np.any(mu < 1e-8):
        raise DomainError("point lies on (or numerically on) the focal segment; "
                          "elliptic coordinates degenerate there")
    phi = np.arctan2(u / np.cosh(mu), v / np.sinh(mu))
    if mu.ndim == 0:
        return float(mu), float(phi)
    return mu, phi


def point_from_elliptic(table: EllipseTable, mu, phi) -> np.ndarray:
    """Inverse of elliptic_coords."""
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([table.c * np.cosh(mu) * np.sin(phi),
                     table.c * np.sinh(mu) * np.cos(phi)], axis=-1)


def wrap_angle(phi):
    """Reduce an angle to (-pi, pi]."""
    out = np.mod(np.asarray(phi, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    out = np.where(out == -math.pi, math.pi, out)
    return float(out) if out.ndim == 0 else out


def resonant_polygon(table: EllipseTable, caustic: CausticData, res: Resonance,
                     t0: float = 0.0) -> np.ndarray:
    """Vertices of the inscribed n-gon tangent to the resonant caustic,
    seeded at t0: shape (n, 2)."""
    ts = t0 + caustic.delta * np.arange(res.n)
    return point_t(table, caustic, ts)
