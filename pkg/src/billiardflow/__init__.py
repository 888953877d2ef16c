"""Elliptic billiards deformed by the curve shortening flow.

Library layout:

- ``elliptic``  : Jacobi elliptic functions and first-kind integrals (AGM).
- ``geometry``  : the ellipse, confocal caustics, resonances, natural
  parameterizations, elliptic coordinates.
- ``flow``      : first-order curvature-flow deformation and a desk-scale
  curve-shortening integrator used to validate it.
- ``melnikov``  : subharmonic and homoclinic Melnikov potentials, their
  critical points, Laurent coefficients, and the parity-dependent limit.
- ``dynamics``  : direct simulation of the billiard map, Birkhoff periodic
  orbits, invariant manifolds, separatrix-splitting measurement.
- ``cli``       : reproducible experiment runner emitting CSV/JSON.
"""

__version__ = "0.1.0"
