"""Real-argument Jacobi elliptic functions and first-kind elliptic integrals.

Everything here is built on the arithmetic-geometric mean: K(k) from the
AGM of (1, k'), sn/cn/dn from the descending-Landen backward recursion,
and F(phi, k) from the Carlson symmetric integral RF.  The routines are
written against the *complementary* modulus kc = sqrt(1 - k^2) wherever
precision matters, because the caustic family studied by the rest of the
package degenerates into a separatrix exactly as k -> 1: there kc is the
well-conditioned parameter (k itself rounds to 1.0 once kc < 1.5e-8).

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# AGM stops when the means agree to this relative spread.
_AGM_RTOL = 1e-16
_MAX_AGM_ITER = 28

# Below this complementary modulus the k -> 1 hyperbolic expansions take
# over from the AGM backward recursion.  See jacobi() for the rationale.
KC_HYPERBOLIC = 1e-9


def _as_array(x):
    a = np.asarray(x, dtype=float)
    return a, (a.ndim == 0)


def _ret(a, scalar):
    return float(a) if scalar else a


def _kc_from_k(k):
    # sqrt((1-k)(1+k)) keeps full precision as k -> 1
    return np.sqrt((1.0 - k) * (1.0 + k))


def _check_modulus(k):
    k, _ = _as_array(k)
    if np.any(k < 0.0) or np.any(k >= 1.0):
        raise DomainError(f"modulus k must lie in [0, 1), got {k!r}")


@dataclass(frozen=True)
class EllipticModulus:
    """A modulus k with its complementary modulus and quarter periods.

    kc is stored independently of k: for nearly degenerate caustics
    kc is meaningful (1e-5 .. 1e-8) while k is indistinguishable from 1
    in double precision.
    """

    k: float
    kc: float
    K: float
    Kprime: float

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulus":
        if not 0.0 < k < 1.0:
            raise DomainError(f"modulus k must lie in (0, 1), got {k}")
        kc = float(_kc_from_k(k))
        return cls(k=k, kc=kc, K=_K_from_kc(kc), Kprime=_K_from_kc(k))

    @classmethod
    def from_kc(cls, kc: float) -> "EllipticModulus":
        if not 0.0 < kc < 1.0:
            raise DomainError(f"complementary modulus must lie in (0, 1), got {kc}")
        k = float(_kc_from_k(kc))
        return cls(k=k, kc=kc, K=_K_from_kc(kc), Kprime=_K_from_kc(k))


@dataclass(frozen=True)
class JacobiTriple:
    """sn, cn, dn at a common real argument and modulus."""

    sn: float | np.ndarray
    cn: float | np.ndarray
    dn: float | np.ndarray


@dataclass(frozen=True)
class ImagShiftTriple:
    """sn, cn, dn evaluated at t = u + i K', as complex numbers.

    sn is real there; cn and dn are purely imaginary.
    """

    sn_shift: complex | np.ndarray
    cn_shift: complex | np.ndarray
    dn_shift: complex | np.ndarray


# ----------------------------------------------------------------------
# complete integral
# ----------------------------------------------------------------------

def _agm_mean(kc):
    """AGM(1, kc) elementwise; kc > 0."""
    a = np.ones_like(kc)
    b = np.array(kc, dtype=float, copy=True)
    for _ in range(_MAX_AGM_ITER):
        if np.all(np.abs(a - b) <= _AGM_RTOL * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return 0.5 * (a + b)


def _K_series_small_kc(kc):
    # K = ln(4/kc) + (kc^2/4)(ln(4/kc) - 1) + O(kc^4 ln kc)
    ell = np.log(4.0 / kc)
    return ell + 0.25 * kc * kc * (ell - 1.0)


def _K_from_kc(kc):
    kc, scalar = _as_array(kc)
    out = np.empty_like(kc)
    tiny = kc < KC_HYPERBOLIC
    if np.any(tiny):
        out[tiny] = _K_series_small_kc(kc[tiny])
    if np.any(~tiny):
        out[~tiny] = math.pi / 2.0 / _agm_mean(kc[~tiny])
    return _ret(out, scalar)


def complete_K(k):
    """Complete elliptic integral of the first kind, K(k), for 0 <= k < 1."""
    _check_modulus(k)
    k, scalar = _as_array(k)
    return _ret(np.asarray(_K_from_kc(_kc_from_k(k))), scalar)


def complete_K_from_kc(kc):
    """K expressed through the complementary modulus; exact near k = 1."""
    kc, scalar = _as_array(kc)
    if np.any(kc <= 0.0) or np.any(kc > 1.0):
        raise DomainError("complementary modulus must lie in (0, 1]")
    return _ret(np.asarray(_K_from_kc(kc)), scalar)


# ----------------------------------------------------------------------
# incomplete integral (Carlson RF)
# ----------------------------------------------------------------------

def _rf(x, y, z):
    """Carlson symmetric integral RF(x, y, z), nonnegative arguments."""
    x = np.array(x, dtype=float, copy=True)
    y = np.array(y, dtype=float, copy=True)
    z = np.array(z, dtype=float, copy=True)
    for _ in range(60):
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x = 0.25 * (x + lam)
        y = 0.25 * (y + lam)
        z = 0.25 * (z + lam)
        ave = (x + y + z) / 3.0
        dev = np.maximum(np.abs(x - ave), np.maximum(np.abs(y - ave), np.abs(z - ave)))
        if np.all(dev <= 2e-3 * ave):
            break
    dx = (ave - x) / ave
    dy = (ave - y) / ave
    dz = (ave - z) / ave
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / np.sqrt(ave)


def incomplete_F(phi, k):
    """Incomplete elliptic integral F(phi, k) for real phi, 0 <= k < 1.

    The principal branch |phi| <= pi/2 goes through Carlson's RF; the
    extension to all reals uses F(phi + pi) = F(phi) + 2K.
    """
    _check_modulus(k)
    phi, s1 = _as_array(phi)
    k, s2 = _as_array(k)
    kc = _kc_from_k(k)
    return _ret(np.asarray(_F_from_kc(phi, k, kc)), s1 and s2)


def _F_from_kc(phi, k, kc):
    n = np.round(phi / math.pi)
    phi_r = phi - n * math.pi
    s = np.sin(phi_r)
    c = np.cos(phi_r)
    # 1 - k^2 sin^2 = cos^2 + kc^2 sin^2, stable for k -> 1
    y = c * c + (kc * s) * (kc * s)
    f = s * _rf(c * c, y, np.ones_like(y))
    need_K = np.any(n != 0)
    if need_K:
        f = f + 2.0 * n * _K_from_kc(kc)
    return f


# ----------------------------------------------------------------------
# Jacobi functions
# ----------------------------------------------------------------------

def _jacobi_agm_folded(t, k, kc, K):
    """Backward Landen recursion for t already reduced to [-2K, 2K].

    Returns the amplitude am(t); sn, cn, dn follow from it.
    """
    a = np.ones_like(k)
    b = np.array(kc, dtype=float, copy=True)
    c = np.array(k, dtype=float, copy=True)
    ratios = []
    n = 0
    for n in range(1, _MAX_AGM_ITER):
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        ratios.append(c / a)
        if np.all(np.abs(c) <= _AGM_RTOL * a):
            break
    phi = np.ldexp(a * t, n)
    for r in reversed(ratios):
        phi = 0.5 * (phi + np.arcsin(np.clip(r * np.sin(phi), -1.0, 1.0)))
    return phi


def _jacobi_degenerate_folded(t, kc):
    """k -> 1 expansions for t already folded into [-K, K], plus sign.

    First-order corrections in kc^2; the relative error is
    O(kc^4 e^{2|t|}) <= O(kc^2) on the fold.
    """
    th = np.tanh(t)
    se = 1.0 / np.cosh(t)
    sh = np.sinh(t)
    q = 0.25 * kc * kc
    sn = th + q * (th - t * se * se)
    cn = se - q * (sh * th - t * se * th)
    dn = se + q * (sh * th + t * se * th)
    return sn, cn, dn


def jacobi(t, k):
    """Jacobi sn, cn, dn at real argument t and modulus k in [0, 1).

    Arguments are reduced modulo 4K before the AGM backward recursion so
    that |t| spanning many periods keeps full precision.  For nearly
    degenerate moduli (kc < KC_HYPERBOLIC) the hyperbolic-limit
    expansions are used on a single antiperiod instead; the two regimes
    agree to ~1e-13 at the crossover.
    """
    _check_modulus(k)
    t, s1 = _as_array(t)
    k, s2 = _as_array(k)
    kc = _kc_from_k(k)
    sn, cn, dn, _ = _jacobi_from_kc(t, k, kc)
    scalar = s1 and s2
    return JacobiTriple(_ret(sn, scalar), _ret(cn, scalar), _ret(dn, scalar))


def amplitude(t, k):
    """The Jacobi amplitude am(t, k), continuous and increasing in t."""
    _check_modulus(k)
    t, s1 = _as_array(t)
    k, s2 = _as_array(k)
    kc = _kc_from_k(k)
    _, _, _, am = _jacobi_from_kc(t, k, kc)
    return _ret(am, s1 and s2)


def _jacobi_from_kc(t, k, kc):
    t, k, kc = np.broadcast_arrays(t, k, kc)
    t = np.asarray(t, dtype=float)
    sn = np.empty_like(t)
    cn = np.empty_like(t)
    dn = np.empty_like(t)
    am = np.empty_like(t)
    tiny = kc < KC_HYPERBOLIC

    if np.any(~tiny):
        m = ~tiny
        K = _K_from_kc(kc[m])
        # reduce to [-2K, 2K]; am picks the winding back up
        wind = np.round(t[m] / (4.0 * K))
        tr = t[m] - 4.0 * K * wind
        phi = _jacobi_agm_folded(tr, k[m], kc[m], K)
        sn[m] = np.sin(phi)
        cn[m] = np.cos(phi)
        dn[m] = np.hypot(kc[m], k[m] * cn[m])
        am[m] = phi + 2.0 * math.pi * wind

    if np.any(tiny):
        m = tiny
        K = _K_series_small_kc(kc[m])
        half = np.round(t[m] / (2.0 * K))
        tf = t[m] - 2.0 * K * half         # in [-K, K]
        flip = np.where(np.mod(half, 2.0) == 0.0, 1.0, -1.0)
        s, c, d = _jacobi_degenerate_folded(tf, kc[m])
        sn[m] = flip * s
        cn[m] = flip * c
        dn[m] = d
        am[m] = np.arcsin(np.clip(s, -1.0, 1.0)) + math.pi * half

    return sn, cn, dn, am


def jacobi_m(t, modulus: EllipticModulus) -> JacobiTriple:
    """Modulus-aware jacobi: uses the stored kc, valid even when k rounds to 1."""
    t, scalar = _as_array(t)
    sn, cn, dn, _ = _jacobi_from_kc(t, np.asarray(modulus.k), np.asarray(modulus.kc))
    return JacobiTriple(_ret(sn, scalar), _ret(cn, scalar), _ret(dn, scalar))


def amplitude_m(t, modulus: EllipticModulus):
    """Modulus-aware Jacobi amplitude."""
    t, scalar = _as_array(t)
    _, _, _, am = _jacobi_from_kc(t, np.asarray(modulus.k), np.asarray(modulus.kc))
    return _ret(am, scalar)


def incomplete_F_m(phi, modulus: EllipticModulus):
    """Modulus-aware incomplete integral of the first kind."""
    phi, scalar = _as_array(phi)
    return _ret(np.asarray(_F_from_kc(phi, np.asarray(modulus.k), np.asarray(modulus.kc))), scalar)


def jacobi_imag_shift(u, k):
    """sn, cn, dn at the quarter-period-shifted argument u + i K'.

    Exact rational expressions in the real triple at u:
    sn -> 1/(k sn u), cn -> -i dn u / (k sn u), dn -> -i cn u / sn u.
    Raises DomainError at the poles u = 0 mod 2K.
    """
    _check_modulus(k)
    tr = jacobi(u, k)
    return _imag_shift_from_triple(tr, np.asarray(k, dtype=float))


def jacobi_imag_shift_m(u, modulus: EllipticModulus) -> ImagShiftTriple:
    """Modulus-aware quarter-period shift, valid when k rounds to 1."""
    return _imag_shift_from_triple(jacobi_m(u, modulus), np.asarray(modulus.k))


def _imag_shift_from_triple(tr: JacobiTriple, k_a) -> ImagShiftTriple:
    sn_u, scalar = _as_array(tr.sn)
    if np.any(np.abs(sn_u) < 1e-9):
        raise DomainError("u + iK' is at (or numerically at) a pole: u = 0 mod 2K")
    cn_u = np.asarray(tr.cn, dtype=float)
    dn_u = np.asarray(tr.dn, dtype=float)
    sn_s = (1.0 / (k_a * sn_u)).astype(complex)
    cn_s = -1j * dn_u / (k_a * sn_u)
    dn_s = -1j * cn_u / sn_u
    if scalar and np.ndim(k_a) == 0:
        return ImagShiftTriple(complex(sn_s), complex(cn_s), complex(dn_s))
    return ImagShiftTriple(sn_s, cn_s, dn_s)
