"""Direct simulation of the billiard map in exact and flow-deformed tables.

States are (phi, direction): a boundary parameter and a unit vector
pointing into the table.  The chord to the next impact is solved by
safeguarded Newton/bisection on the boundary parameter (the boundary is
strictly convex, so the forward intersection is unique), followed by
specular reflection about the tangent.

Phase-space work (Jacobians, manifolds, splitting) uses the chart
(phi, p) with p = cos(incidence) = direction . tangent_unit; the area
form there differs from the Birkhoff (arclength, p) form by the speed
|q'(phi)|, which cancels at periodic points.  A genuine arclength chart
is provided separately for the area-preservation check.

The separatrix-splitting measurement exploits the table's reversing
symmetry G(phi, p) = (-phi, p): the perturbed table keeps both axial
symmetries, so crossings of the unstable manifold with the section
phi = 0 are exact symmetric homoclinic points for every epsilon, and
the signed gap between the manifolds is measured between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import elliptic
from .errors import DomainError, NumericalGuard, PropertyViolation
from .flow import PerturbedTable
from .geometry import (CausticData, EllipseTable, Resonance,
                       characteristic_exponent, resonant_caustic, wrap_angle)

__all__ = [
    "PhaseState", "OrbitResult", "ManifoldSegment", "HyperbolicOrbit",
    "SplittingResult", "billiard_step", "billiard_step_many", "reverse_state",
    "state_from_angle", "state_on_caustic", "orbit", "measured_rotation_number",
    "conserved_caustic", "caustic_drift", "birkhoff_orbit", "birkhoff_sweep",
    "hyperbolic_orbit", "manifold_segment", "splitting_measure",
    "birkhoff_chart", "jacobian_det_birkhoff",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseState:
    """Boundary parameter and outgoing unit direction (into the table)."""

    phi: float
    direction: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class OrbitResult:
    """A finite orbit: states, impact points, total chord length, the
    residual of closing up after n bounces, and the winding number."""

    states: tuple
    points: np.ndarray
    length: float
    closure_residual: float
    winding: int


# ----------------------------------------------------------------------
# scalar boundary geometry (math-module fast path; mirrors flow.PerturbedTable)
# ----------------------------------------------------------------------

def _geom_scalar(b: PerturbedTable, phi: float):
    """(x, y, x', y') of the boundary at phi."""
    base = b.base
    a, bb, c = base.a, base.b, base.c
    cos, sin = math.cos(phi), math.sin(phi)
    d = (a * cos) ** 2 + (bb * sin) ** 2
    m = b.mu0 - b.epsilon * a * bb / (d * d)
    mp = -2.0 * b.epsilon * a * bb * c * c * math.sin(2.0 * phi) / d ** 3
    ch, sh = math.cosh(m), math.sinh(m)
    return (c * ch * sin, c * sh * cos,
            c * (sh * mp * sin + ch * cos), c * (ch * mp * cos - sh * sin))


def _tangent_unit_scalar(b, phi):
    _, _, dx, dy = _geom_scalar(b, phi)
    r = math.hypot(dx, dy)
    return dx / r, dy / r


def state_from_angle(boundary: PerturbedTable, phi: float, p: float) -> PhaseState:
    """State with cos(incidence) = p in (-1, 1) at boundary parameter phi."""
    if not -1.0 < p < 1.0:
        raise DomainError("p = cos(incidence) must lie in (-1, 1)")
    tx, ty = _tangent_unit_scalar(boundary, phi)
    s = math.sqrt(1.0 - p * p)
    # inward normal of the clockwise parameterization is the tangent rotated by -90 deg
    return PhaseState(phi=phi, direction=np.array([p * tx + s * ty, p * ty - s * tx]))


def _incidence(boundary, phi, direction):
    tx, ty = _tangent_unit_scalar(boundary, phi)
    return float(direction[0] * tx + direction[1] * ty)


def reverse_state(boundary: PerturbedTable, state: PhaseState) -> PhaseState:
    """The time-reversal involution: reflect the direction at the boundary
    and negate it; conjugates the billiard map to its inverse."""
    tx, ty = _tangent_unit_scalar(boundary, state.phi)
    d = state.direction
    dot = d[0] * tx + d[1] * ty
    return PhaseState(phi=state.phi,
                      direction=np.array([2.0 * dot * tx - d[0], 2.0 * dot * ty - d[1]]) * -1.0)


def billiard_step(boundary: PerturbedTable, state: PhaseState,
                  guess: float | None = None) -> PhaseState:
    """One bounce.  Returns the next state with phi lifted into
    (state.phi, state.phi + 2 pi), so consecutive phis wind monotonically."""
    phi0 = state.phi
    x0, y0, _, _ = _geom_scalar(boundary, phi0)
    dx, dy = float(state.direction[0]), float(state.direction[1])

    def g(phi):
        x, y, _, _ = _geom_scalar(boundary, phi)
        return dx * (y - y0) - dy * (x - x0)

    lo, hi = phi0 + 1e-6, phi0 + _TWO_PI - 1e-6
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        phi1 = lo
    elif ghi == 0.0:
        phi1 = hi
    else:
        if math.copysign(1.0, glo) == math.copysign(1.0, ghi):
            raise NumericalGuard(
                f"no sign change bracketing the next impact from phi={phi0}, "
                f"direction=({dx}, {dy}); chord shorter than the 1e-6 guard?")
        x = guess if guess is not None and lo < guess < hi else 0.5 * (lo + hi)
        for _ in range(200):
            gx = g(x)
            if gx == 0.0:
                break
            if math.copysign(1.0, gx) == math.copysign(1.0, glo):
                lo = x
            else:
                hi = x
            _, _, qx, qy = _geom_scalar(boundary, x)
            dgx = dx * qy - dy * qx
            x_new = x - gx / dgx if dgx != 0.0 else 0.5 * (lo + hi)
            if not lo <= x_new <= hi:
                x_new = 0.5 * (lo + hi)
            done = (abs(x_new - x) < 2e-15 * max(1.0, abs(x))
                    or hi - lo < 4e-16 * max(1.0, abs(hi)))
            x = x_new
            if done:
                break
        phi1 = x

    x1, y1, qx, qy = _geom_scalar(boundary, phi1)
    chord = math.hypot(x1 - x0, y1 - y0)
    if chord <= 1e-12:
        raise NumericalGuard(f"degenerate chord of length {chord} at phi={phi0}")
    r = math.hypot(qx, qy)
    tx, ty = qx / r, qy / r
    dot = dx * tx + dy * ty
    return PhaseState(phi=phi1,
                      direction=np.array([2.0 * dot * tx - dx, 2.0 * dot * ty - dy]))


def inverse_billiard_step(boundary: PerturbedTable, state: PhaseState) -> PhaseState:
    """The inverse map via the reversal conjugation R T R."""
    rev = reverse_state(boundary, state)
    stepped = billiard_step(boundary, rev)
    out = reverse_state(boundary, stepped)
    return PhaseState(phi=state.phi - (_TWO_PI - (stepped.phi - state.phi)),
                      direction=out.direction)


# ----------------------------------------------------------------------
# vectorized stepping (ensembles: manifold growth)
# ----------------------------------------------------------------------

def billiard_step_many(boundary: PerturbedTable, phis: np.ndarray,
                       dirs: np.ndarray) -> tuple:
    """Vectorized bounce for an ensemble; same semantics as billiard_step."""
    phis = np.asarray(phis, dtype=float)
    q0 = boundary.point(phis)

    def g(phi):
        q = boundary.point(phi)
        return dirs[:, 0] * (q[..., 1] - q0[..., 1]) - dirs[:, 1] * (q[..., 0] - q0[..., 0])

    lo = phis + 1e-6
    hi = phis + _TWO_PI - 1e-6
    glo = g(lo)
    if np.any(np.sign(glo) == np.sign(g(hi))):
        raise NumericalGuard("ensemble contains a state with no bracketed next impact")
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        take_lo = np.sign(gm) == np.sign(glo)
        lo = np.where(take_lo, mid, lo)
        glo = np.where(take_lo, gm, glo)
        hi = np.where(take_lo, hi, mid)
    phi1 = 0.5 * (lo + hi)
    for _ in range(3):
        q = boundary.point(phi1)
        dq = boundary.dpoint(phi1)
        gx = dirs[:, 0] * (q[..., 1] - q0[..., 1]) - dirs[:, 1] * (q[..., 0] - q0[..., 0])
        dg = dirs[:, 0] * dq[..., 1] - dirs[:, 1] * dq[..., 0]
        step = np.where(dg != 0.0, gx / np.where(dg == 0.0, 1.0, dg), 0.0)
        phi1 = np.clip(phi1 - step, lo - 1e-9, hi + 1e-9)

    dq = boundary.dpoint(phi1)
    r = np.hypot(dq[..., 0], dq[..., 1])
    tx, ty = dq[..., 0] / r, dq[..., 1] / r
    dot = dirs[:, 0] * tx + dirs[:, 1] * ty
    new_dirs = np.stack([2.0 * dot * tx - dirs[:, 0], 2.0 * dot * ty - dirs[:, 1]], axis=-1)
    return phi1, new_dirs


# ----------------------------------------------------------------------
# orbits, caustic conservation
# ----------------------------------------------------------------------

def state_on_caustic(boundary: PerturbedTable, caustic: CausticData,
                     t0: float) -> PhaseState:
    """State at phi = am(t0) aimed at phi = am(t0 + delta).  On the exact
    ellipse the chord is tangent to the caustic; on a perturbed boundary it
    seeds nearby dynamics."""
    phi0 = elliptic.amplitude_m(t0, caustic.modulus)
    phi1 = elliptic.amplitude_m(t0 + caustic.delta, caustic.modulus)
    p0 = boundary.point(phi0)
    p1 = boundary.point(phi1)
    d = p1 - p0
    return PhaseState(phi=float(phi0), direction=d / np.hypot(d[0], d[1]))


def orbit(boundary: PerturbedTable, state: PhaseState, n: int) -> OrbitResult:
    """Iterate n bounces; the closure residual compares bounce n to the start.

    Each state is rewrapped after the step so the boundary parameter never
    loses ULP resolution on long orbits; the total lift is accumulated
    separately for the winding count.
    """
    states = [state]
    cur = PhaseState(phi=float(wrap_angle(state.phi)), direction=state.direction)
    pts = [boundary.point(cur.phi)]
    guess = None
    length = 0.0
    lift = 0.0
    for _ in range(n):
        nxt = billiard_step(boundary, cur, guess=guess)
        dphi = nxt.phi - cur.phi
        lift += dphi
        guess0 = nxt.phi + dphi
        cur = PhaseState(phi=float(wrap_angle(nxt.phi)), direction=nxt.direction)
        guess = cur.phi + (guess0 - nxt.phi)
        states.append(cur)
        pts.append(boundary.point(cur.phi))
        length += float(np.hypot(*(pts[-1] - pts[-2])))
    dphi_close = wrap_angle(states[-1].phi - states[0].phi)
    dp = _incidence(boundary, states[-1].phi, states[-1].direction) \
        - _incidence(boundary, states[0].phi, states[0].direction)
    return OrbitResult(states=tuple(states), points=np.asarray(pts),
                       length=length,
                       closure_residual=float(abs(dphi_close) + abs(dp)),
                       winding=round(lift / _TWO_PI))


def measured_rotation_number(boundary: PerturbedTable, state: PhaseState,
                             n: int) -> float:
    """Winding fraction per bounce over n bounces (an O(1/n) estimator)."""
    cur = PhaseState(phi=float(wrap_angle(state.phi)), direction=state.direction)
    guess = None
    lift = 0.0
    for _ in range(n):
        nxt = billiard_step(boundary, cur, guess=guess)
        dphi = nxt.phi - cur.phi
        lift += dphi
        cur = PhaseState(phi=float(wrap_angle(nxt.phi)), direction=nxt.direction)
        guess = cur.phi + dphi
    return lift / (_TWO_PI * n)


def conserved_caustic(table: EllipseTable, p0, p1) -> float:
    """Caustic parameter of the confocal conic tangent to the chord p0 -> p1.

    Returns lambda in (0, b) for a convex caustic; values in [b, a) mark
    the hyperbola branch (chord crossing the focal segment), with exactly
    b for a focal chord.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0
    r = np.hypot(d[..., 0], d[..., 1])
    nx, ny = d[..., 1] / r, -d[..., 0] / r
    w = nx * p0[..., 0] + ny * p0[..., 1]
    lam_sq = (table.a * nx) ** 2 + (table.b * ny) ** 2 - w * w
    out = np.sqrt(np.maximum(lam_sq, 0.0))
    return float(out) if out.ndim == 0 else out


def caustic_drift(boundary: PerturbedTable, caustic: CausticData, t0: float,
                  n: int) -> np.ndarray:
    """Chord-by-chord caustic parameter along an orbit started tangent
    (on the unperturbed table) to the given caustic."""
    res = orbit(boundary, state_on_caustic(boundary, caustic, t0), n)
    pts = res.points
    return conserved_caustic(boundary.base, pts[:-1], pts[1:])


# ----------------------------------------------------------------------
# Birkhoff periodic orbits by perimeter criticality
# ----------------------------------------------------------------------

def _perimeter_gradient(boundary, phis):
    q = boundary.point(phis)
    dq = boundary.dpoint(phis)
    chords = np.roll(q, -1, axis=0) - q             # q_{i+1} - q_i
    ln = np.hypot(chords[:, 0], chords[:, 1])
    u = chords / ln[:, None]                        # unit i -> i+1
    u_prev = np.roll(u, 1, axis=0)                  # unit i-1 -> i
    return (dq * (u_prev - u)).sum(axis=1)


def birkhoff_orbit(boundary: PerturbedTable, res: Resonance, seed_phase: float,
                   caustic: CausticData | None = None) -> OrbitResult:
    """(m, n)-periodic orbit as a critical configuration of the perimeter.

    Seeds the n vertices from the unperturbed resonant polygon at the
    given phase and drives the perimeter gradient to zero
    (Levenberg-Marquardt, then Newton polish).
    """
    from scipy.optimize import least_squares

    if caustic is None:
        caustic = resonant_caustic(boundary.base, res)
    phis0 = np.asarray(elliptic.amplitude_m(
        seed_phase + caustic.delta * np.arange(res.n), caustic.modulus))

    sol = least_squares(lambda p: _perimeter_gradient(boundary, p), phis0,
                        method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    phis = sol.x
    for _ in range(8):
        gvec = _perimeter_gradient(boundary, phis)
        if np.max(np.abs(gvec)) < 1e-13:
            break
        jac = _fd_jacobian(lambda p: _perimeter_gradient(boundary, p), phis)
        try:
            phis = phis - np.linalg.solve(jac, gvec)
        except np.linalg.LinAlgError:
            phis = phis - np.linalg.lstsq(jac, gvec, rcond=None)[0]
    if np.max(np.abs(_perimeter_gradient(boundary, phis))) > 1e-11:
        raise NumericalGuard(
            f"perimeter-critical search did not converge from seed {seed_phase}")

    q = boundary.point(phis)
    chords = np.roll(q, -1, axis=0) - q
    ln = np.hypot(chords[:, 0], chords[:, 1])
    steps = np.mod(np.diff(np.append(phis, phis[0])), _TWO_PI)
    winding = round(float(steps.sum()) / _TWO_PI)
    if winding != res.m:
        raise PropertyViolation(
            f"converged configuration winds {winding} times, expected {res.m}")
    d0 = chords[0] / ln[0]
    sim = orbit(boundary, PhaseState(phi=float(phis[0]), direction=d0), res.n)
    states = tuple(PhaseState(phi=float(ph), direction=chords[i] / ln[i])
                   for i, ph in enumerate(phis))
    return OrbitResult(states=states, points=q, length=float(ln.sum()),
                       closure_residual=sim.closure_residual, winding=winding)


def _fd_jacobian(fn, x, eta=1e-7):
    n = x.size
    jac = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = eta * max(1.0, abs(x[i]))
        jac[:, i] = (fn(x + e) - fn(x - e)) / (2.0 * e[i])
    return jac


def orbit_phase(boundary: PerturbedTable, caustic: CausticData,
                result: OrbitResult) -> float:
    """Pull the vertices back to the angular variable of the unperturbed
    resonant caustic and reduce modulo zeta: the Melnikov phase of the orbit."""
    zeta = caustic.zeta
    ts = []
    for st in result.states:
        phi = wrap_angle(st.phi)
        t = elliptic.incomplete_F_m(phi, caustic.modulus)
        ts.append(math.fmod(t, zeta))
    # circular mean around the dominant anchor
    ang = np.exp(2j * math.pi * np.asarray(ts) / zeta)
    mean = np.angle(ang.mean()) / (2.0 * math.pi) * zeta
    out = float(np.mod(mean, zeta))
    return 0.0 if zeta - out < 1e-6 * zeta else out


def birkhoff_sweep(boundary: PerturbedTable, res: Resonance, n_seeds: int = 32,
                   caustic: CausticData | None = None) -> list:
    """Run birkhoff_orbit from evenly spread seed phases; cluster the
    converged configurations into distinct orbits (as vertex sets).

    Returns a list of (phase, OrbitResult), one entry per distinct orbit.
    """
    if caustic is None:
        caustic = resonant_caustic(boundary.base, res)
    reps: list = []            # (canonical vertex sets, phase, orbit)
    for seed in np.linspace(0.0, caustic.zeta, n_seeds, endpoint=False):
        try:
            ores = birkhoff_orbit(boundary, res, float(seed), caustic=caustic)
        except (NumericalGuard, PropertyViolation):
            continue
        phis = np.asarray([wrap_angle(s.phi) for s in ores.states])
        # the table is centrally symmetric, so orbits come in mirror pairs
        # (phi -> phi + pi) sharing one Melnikov phase class; identify them
        variants = (np.sort(np.mod(phis, _TWO_PI)),
                    np.sort(np.mod(phis + math.pi, _TWO_PI)))
        is_new = True
        for rvars, _, _ in reps:
            if any(_circular_sets_match(va, rvars[0]) for va in variants):
                is_new = False
                break
        if is_new:
            reps.append((variants, orbit_phase(boundary, caustic, ores), ores))
    return sorted([(ph, o) for _, ph, o in reps], key=lambda pr: pr[0])


def _circular_sets_match(a, b, tol=1e-6):
    # sorted angle multisets on the circle; a vertex at +-0 can land at
    # either end of the sorted order, so compare over cyclic rotations
    for shift in range(a.size):
        d = np.abs(np.roll(a, shift) - b)
        if np.max(np.minimum(d, _TWO_PI - d)) < tol:
            return True
    return False


# ----------------------------------------------------------------------
# hyperbolic two-periodic orbit and its invariant manifolds
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HyperbolicOrbit:
    """The axis orbit, its squared-map Jacobian in (phi, p), the per-bounce
    multiplier Lambda (so D(T^2) has spectrum {Lambda^2, Lambda^-2}), and
    the raw Jacobian determinant for the area-preservation check."""

    states: tuple
    points: np.ndarray
    jacobian: np.ndarray
    multiplier: float
    eigenvalues: tuple
    det: float


def _single_map(boundary, phi, p):
    st = billiard_step(boundary, state_from_angle(boundary, phi, p))
    return np.array([st.phi, _incidence(boundary, st.phi, st.direction)])


def _step_jacobian(boundary, phi, p, eta):
    """Central-difference Jacobian of one bounce at (phi, p).

    The lifted output parameter is continuous across the perturbations, so
    plain differences of the outputs are safe.
    """
    jac = np.empty((2, 2))
    for i, (dphi, dp) in enumerate([(eta, 0.0), (0.0, eta)]):
        fp = _single_map(boundary, phi + dphi, p + dp)
        fm = _single_map(boundary, phi - dphi, p - dp)
        jac[:, i] = (fp - fm) / (2.0 * eta)
    return jac


def _squared_map_jacobian(boundary, phi, p, eta):
    """D(T^2) as the product of two single-bounce Jacobians; keeps the
    finite-difference noise amplification at the per-bounce scale instead
    of the squared-map one."""
    mid = _single_map(boundary, phi, p)
    j1 = _step_jacobian(boundary, phi, p, eta)
    j2 = _step_jacobian(boundary, mid[0], mid[1], eta)
    return j2 @ j1


def hyperbolic_orbit(boundary: PerturbedTable, eta: float = 1e-6) -> HyperbolicOrbit:
    """The two-periodic orbit along the major axis (exact by symmetry) and
    the central-difference Jacobian of the squared map at it."""
    phi0 = 0.5 * math.pi
    jac = _squared_map_jacobian(boundary, phi0, 0.0, eta)
    eigvals = np.linalg.eigvals(jac)
    eigvals = np.sort(np.abs(eigvals))          # {Lambda^-2, Lambda^2}, both real > 0
    lam = math.sqrt(eigvals[1])
    st0 = state_from_angle(boundary, phi0, 0.0)
    st1 = billiard_step(boundary, st0)
    pts = np.stack([boundary.point(phi0), boundary.point(st1.phi)])
    return HyperbolicOrbit(states=(st0, st1), points=pts, jacobian=jac,
                           multiplier=lam,
                           eigenvalues=(lam, math.sqrt(eigvals[0])),
                           det=float(np.linalg.det(jac)))


@dataclass(frozen=True)
class ManifoldSegment:
    """Polyline of (phi, p) phase points along one manifold branch."""

    branch: str                    # 'unstable' or 'stable'
    base: tuple                    # (phi, p) of the squared-map fixed point
    points: np.ndarray = field(repr=False)
    seed_distance: float = 1e-7


def _unstable_direction(jac):
    vals, vecs = np.linalg.eig(jac)
    v = np.real(vecs[:, np.argmax(np.abs(vals))])
    return v / np.hypot(v[0], v[1]), float(np.max(np.abs(vals)))


def manifold_segment(boundary: PerturbedTable, branch: str = "unstable",
                     n_points: int = 400, n_iterates: int | None = None,
                     side: int = 0, seed_distance: float = 1e-7) -> ManifoldSegment:
    """Grow one branch of the invariant manifold of the squared map.

    Seeds n_points geometrically over one fundamental domain of the
    linearized dynamics on the eigenvector at the base fixed point
    ((pi/2, 0) for the unstable manifold, (-pi/2, 0) for the stable one,
    so both trace the same separatrix branch at epsilon = 0), then
    iterates; the stable branch uses the inverse map via reversal.
    side=+1/-1 picks the eigenvector orientation; 0 picks the side whose
    polyline reaches the symmetry window around phi = 0 with p > 0.
    """
    if branch not in ("unstable", "stable"):
        raise DomainError("branch must be 'unstable' or 'stable'")
    forward = branch == "unstable"
    base_phi = 0.5 * math.pi if forward else -0.5 * math.pi

    jac = _squared_map_jacobian(boundary, base_phi, 0.0, 1e-6)
    if not forward:
        jac = np.linalg.inv(jac)    # expanding direction of the inverse map
    v, mult = _unstable_direction(jac)
    if n_iterates is None:
        # enough squared-map applications for the innermost seed to cross
        # the whole O(1) excursion, whatever the table's multiplier
        n_iterates = max(3, math.ceil(math.log(3.0 / seed_distance) / math.log(mult)) + 1)

    sides = [side] if side in (1, -1) else [1, -1]
    best = None
    for sgn in sides:
        pts = _grow(boundary, base_phi, sgn * v, mult, n_points, n_iterates,
                    seed_distance, forward)
        w = pts[(np.abs(wrap_angle(pts[:, 0])) < 1.5) & (pts[:, 1] > 0.05)]
        if best is None or w.shape[0] > best[1]:
            best = (pts, w.shape[0], sgn)
    pts = best[0]
    return ManifoldSegment(branch=branch, base=(base_phi, 0.0), points=pts,
                           seed_distance=seed_distance)


def _grow(boundary, base_phi, v, mult, n_points, n_iterates, d0, forward):
    # one fundamental domain of the linearization, outermost seed at d0:
    # seeding further out would leave the linear eigenspace's accuracy range
    rad = d0 * mult ** np.linspace(-1.0, 0.0, n_points, endpoint=False)
    phis = base_phi + rad * v[0]
    ps = rad * v[1]
    dirs = np.stack([state_from_angle(boundary, ph, p).direction
                     for ph, p in zip(phis, ps)])
    if not forward:
        phis, dirs = _reverse_many(boundary, phis, dirs)
    blocks = [np.stack([phis, _p_many(boundary, phis, dirs)], axis=-1)]
    for _ in range(n_iterates):
        # drop near-grazing states; they are far past the symmetry window
        keep = np.abs(_p_many(boundary, phis, dirs)) < 0.99
        if keep.sum() < 8:
            break
        phis, dirs = phis[keep], dirs[keep]
        phis, dirs = billiard_step_many(boundary, phis, dirs)
        phis, dirs = billiard_step_many(boundary, phis, dirs)
        blocks.append(np.stack([phis, _p_many(boundary, phis, dirs)], axis=-1))
    pts = np.concatenate(blocks, axis=0)
    if not forward:
        # stored states follow the inverse flow; report them as forward states
        pts[:, 1] = pts[:, 1] * -1.0
    return pts


def _p_many(boundary, phis, dirs):
    dq = boundary.dpoint(phis)
    r = np.hypot(dq[..., 0], dq[..., 1])
    return (dirs[:, 0] * dq[..., 0] + dirs[:, 1] * dq[..., 1]) / r


def _reverse_many(boundary, phis, dirs):
    dq = boundary.dpoint(phis)
    r = np.hypot(dq[..., 0], dq[..., 1])
    tx, ty = dq[..., 0] / r, dq[..., 1] / r
    dot = dirs[:, 0] * tx + dirs[:, 1] * ty
    return phis, -np.stack([2.0 * dot * tx - dirs[:, 0],
                            2.0 * dot * ty - dirs[:, 1]], axis=-1)


# ----------------------------------------------------------------------
# separatrix splitting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingResult:
    """Signed manifold gap on the symmetry window.

    signed_gap is p_unstable - p_stable at the extremum between the two
    primary homoclinic crossings to the right of phi = 0; by the
    reversing symmetry the crossing at phi = 0 itself is exact for all
    epsilon, so the gap lives strictly between the primaries.
    """

    transversal: bool
    signed_gap: float
    crossings: tuple               # phi locations of the two primary zeros
    grid: np.ndarray = field(repr=False)
    gap_profile: np.ndarray = field(repr=False)
    noise_floor: float = 0.0


def _graph_window(points, window):
    phi = wrap_angle(points[:, 0])
    sel = (np.abs(phi) < window) & (points[:, 1] > 0.05)
    phi, p = phi[sel], points[sel, 1]
    if phi.size == 0:
        return phi, p
    order = np.argsort(phi)
    phi, p = phi[order], p[order]
    keep = np.concatenate([[True], np.diff(phi) > 1e-12])
    return phi[keep], p[keep]


def splitting_measure(boundary: PerturbedTable, n_points: int = 600,
                      n_iterates: int | None = None, window: float | None = None,
                      noise_floor: float = 3e-8) -> SplittingResult:
    """Measure the separatrix splitting on the symmetry window around phi=0.

    Grows the unstable manifold of (pi/2, 0) and the stable manifold of
    (-pi/2, 0), interpolates both as graphs p(phi) over the window, and
    returns the signed extremum of p_u - p_s between the primary
    homoclinic crossings (the symmetric one at phi = 0 and the next one
    near phi = arcsin(c/a)).  Positive gap means the unstable branch
    passes above the stable one on that interval; to first order that is
    the sign of (homoclinic potential at half period) - (at zero).
    """
    from scipy.interpolate import CubicSpline

    # the second primary crossing sits near arcsin(c/a): window follows it
    phi_star = math.asin(boundary.base.c / boundary.base.a)
    if window is None:
        window = min(phi_star + 0.22, 0.5 * math.pi - 0.03)
    wu = manifold_segment(boundary, "unstable", n_points, n_iterates)
    ws = manifold_segment(boundary, "stable", n_points, n_iterates)
    phi_u, p_u = _graph_window(wu.points, window)
    phi_s, p_s = _graph_window(ws.points, window)
    if phi_u.size < 40 or phi_s.size < 40:
        raise NumericalGuard(
            "manifold polylines too short on the symmetry window; "
            "increase n_iterates or n_points")
    lo = max(phi_u[0], phi_s[0])
    hi = min(phi_u[-1], phi_s[-1])
    if hi - lo < 0.8 * window:
        raise NumericalGuard(
            "manifold coverage of the symmetry window is too small; "
            "increase n_iterates")
    # the analysis stays clear of the sparse polyline edges, where the
    # graph interpolation error dominates the measurement
    lo, hi = max(lo, -(phi_star + 0.12)), min(hi, phi_star + 0.12)
    grid = np.linspace(lo, hi, 2001)
    diff = CubicSpline(phi_u, p_u)(grid) - CubicSpline(phi_s, p_s)(grid)

    scale = float(np.max(np.abs(diff)))
    if scale <= noise_floor:
        # unsplit at this resolution (epsilon = 0)
        return SplittingResult(transversal=False, signed_gap=float(diff[len(diff)//2]),
                               crossings=(0.0, 0.0), grid=grid, gap_profile=diff,
                               noise_floor=noise_floor)

    # the reversing symmetry G(phi, p) = (-phi, p) makes phi = 0 an exact
    # homoclinic crossing for every epsilon; the second primary is the
    # first detected sign change to its right
    sgn = np.sign(diff)
    flips = np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]
    zeros = []
    for i in flips:
        x0, x1 = grid[i], grid[i + 1]
        y0, y1 = diff[i], diff[i + 1]
        if y1 != y0:
            zeros.append(x0 - y0 * (x1 - x0) / (y1 - y0))
    zeros = np.asarray(sorted(set(zeros)))
    z0 = 0.0
    right = zeros[zeros > 0.15 * phi_star]
    if right.size == 0:
        raise NumericalGuard("no second primary crossing right of the symmetric one")
    z1 = float(right[0])
    inside = (grid > z0) & (grid < z1)
    seg = diff[inside]
    gap = float(seg[np.argmax(np.abs(seg))])
    transversal = bool(abs(gap) > 10.0 * noise_floor)
    return SplittingResult(transversal=transversal, signed_gap=gap,
                           crossings=(float(z0), float(z1)), grid=grid,
                           gap_profile=diff, noise_floor=noise_floor)


# ----------------------------------------------------------------------
# Birkhoff (arclength, p) chart for the area-preservation check
# ----------------------------------------------------------------------

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _arclength(boundary: PerturbedTable, phi: float) -> float:
    """Arclength from phi = -pi, by fixed-node Gauss-Legendre so the result
    is smooth in phi (adaptive quadrature is not, which poisons finite
    differences through this chart)."""
    half = 0.5 * (phi + math.pi)
    x = -math.pi + half * (_GAUSS_NODES + 1.0)
    dq = boundary.dpoint(x)
    return float(half * np.dot(_GAUSS_WEIGHTS, np.hypot(dq[:, 0], dq[:, 1])))


def birkhoff_chart(boundary: PerturbedTable, state: PhaseState) -> tuple:
    """(arclength fraction, cos incidence) of a state."""
    total = _arclength(boundary, math.pi)
    return (_arclength(boundary, wrap_angle(state.phi)) / total,
            _incidence(boundary, state.phi, state.direction))


def jacobian_det_birkhoff(boundary: PerturbedTable, state: PhaseState,
                          eta: float = 1e-5) -> float:
    """Richardson-extrapolated central-difference determinant of one bounce
    in the (arclength fraction, p) chart; equals 1 for the exact map.

    The extrapolation matters: at generic states the map's third
    derivatives make the plain O(eta^2) truncation visible at 1e-8.
    """
    total = _arclength(boundary, math.pi)

    def phi_of_xi(xi, phi_guess):
        phi = phi_guess
        for _ in range(60):
            speed = float(np.hypot(*boundary.dpoint(phi)))
            step = (_arclength(boundary, phi) - xi * total) / speed
            phi -= step
            if abs(step) < 1e-15:
                break
        return phi

    xi0, p0 = birkhoff_chart(boundary, state)

    def fmap(xi, p):
        phi = phi_of_xi(xi, wrap_angle(state.phi))
        st = billiard_step(boundary, state_from_angle(boundary, phi, p))
        xi1, p1 = birkhoff_chart(boundary, st)
        return np.array([xi1, p1])

    def jac_at(step):
        jac = np.empty((2, 2))
        for i, (dxi, dp) in enumerate([(step, 0.0), (0.0, step)]):
            fp = fmap(xi0 + dxi, p0 + dp)
            fm = fmap(xi0 - dxi, p0 - dp)
            d = fp - fm
            d[0] = d[0] - round(d[0])      # xi wraps on the unit circle
            jac[:, i] = d / (2.0 * step)
        return jac

    jac = (4.0 * jac_at(eta) - jac_at(2.0 * eta)) / 3.0
    return float(np.linalg.det(jac))
