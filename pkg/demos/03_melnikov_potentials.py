"""Subharmonic and homoclinic Melnikov potentials and their limit relation.

The potentials are the first-order obstructions to survival: critical
points mark surviving orbits, non-constancy marks destruction of the
resonant caustics and splitting of the separatrices.  The parity-dependent
limit (odd n converges to the homoclinic potential, even n to twice it) is
the paper-level punchline reproduced numerically here.
"""

import numpy as np

from billiardflow import geometry as geo, melnikov as mel

table = geo.make_table(2.0, 1.0)

prof = mel.subharmonic_profile(table, geo.Resonance(1, 3))
print(f"(1,3) subharmonic: period zeta={prof.period:.6f}")
for c in prof.critical_points:
    kind = "min" if c.second_derivative > 0 else "max"
    print(f"  critical point at {c.location:.6f} ({kind}), L''={c.second_derivative:+.4f}")
print(f"  nonconstancy margin: {prof.nonconstancy_margin:.4f}")

hprof = mel.homoclinic_profile(table)
print(f"homoclinic: period h={hprof.period:.6f}, "
      f"critical at {[round(c.location, 6) for c in hprof.critical_points]}")

# Laurent data at the complex poles: alpha2 converges to beta2 as the
# caustic flattens onto the separatrix.
beta = mel.beta2(table)
print(f"beta2 = {beta.coefficient2:.10f} at pole {beta.pole}")
for i in (1, 3, 5):
    ca = geo.caustic_from_lambda(table, table.b * (1 - 10.0 ** -i))
    al = mel.alpha2(table, ca)
    print(f"  lambda/b = 1-1e-{i}: alpha2 = {al.coefficient2:.10f} "
          f"(|alpha2-beta2| = {abs(al.coefficient2 - beta.coefficient2):.2e})")

# The parity-dependent limit itself.
odd = [geo.Resonance(j, 2 * j + 1) for j in range(2, 7)]
even = [geo.Resonance(2 * j - 1, 4 * j) for j in range(2, 6)]
print("odd-ladder gaps (kappa=1):", [f"{g:.2e}" for g in mel.limit_gap(table, odd)])
print("even-ladder gaps (kappa=2):", [f"{g:.2e}" for g in mel.limit_gap(table, even)])
