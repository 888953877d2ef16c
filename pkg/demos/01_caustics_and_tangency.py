"""Confocal caustics of the ellipse and the tangency invariant.

Walks through the basic geometry: pick a table, pick a caustic (directly
or by resonance), and check that every chord of the tangent billiard
trajectory really touches the caustic.
"""

import numpy as np

from billiardflow import geometry as geo

table = geo.make_table(2.0, 1.0)
print(f"table: a={table.a}, b={table.b}, c={table.c:.6f}")

# An explicit caustic: lambda = 0.5.  The modulus, shift and rotation
# number come out of the elliptic parameterization.
ca = geo.caustic_from_lambda(table, 0.5)
print(f"lambda=0.5: k={ca.modulus.k:.6f}  delta={ca.delta:.6f}  "
      f"rho={ca.rho:.6f}")

ts = np.linspace(0.0, 4.0 * ca.modulus.K, 2000)
res = geo.tangency_residual(table, ca, ts)
print(f"tangency residual over one period: max |res| = {np.abs(res).max():.2e}")

# Resonant caustics: rational rotation number means closed polygons.
for (m, n) in [(1, 3), (1, 4), (2, 5), (3, 7)]:
    rc = geo.resonant_caustic(table, geo.Resonance(m, n))
    poly = geo.resonant_polygon(table, rc, geo.Resonance(m, n), t0=0.3)
    gap = np.hypot(*(geo.point_t(table, rc, 0.3 + n * rc.delta) - poly[0]))
    print(f"({m},{n}): lambda={rc.lam:.12f}  rho-m/n={rc.rho - m/n:+.1e}  "
          f"polygon closure={gap:.1e}")

# The major-axis orbit data that controls the separatrix.
hd = geo.characteristic_exponent(table)
print(f"characteristic exponent h={hd.h:.6f}, multiplier e^h={hd.eigenvalue:.6f}")
ss = np.linspace(-5, 5, 500)
print(f"focal-chord residual on the separatrix: {geo.focal_residual(table, ss).max():.2e}")
