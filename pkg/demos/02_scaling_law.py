"""Dilation law lambda(r Omega; beta) = r^-2 lambda(Omega; r beta) on a star domain.

The identity is exact for the discrete problem too, so deviations sit at roundoff.
"""
from robinshape.diagnostics import check_scaling_law
from robinshape.mesh import DomainSpec, StarDomain, build_mesh

mesh = build_mesh(DomainSpec((StarDomain(1.0, (0.0, 0.15, 0.0), (0.1, 0.0, 0.05)),), 16))
for r in (0.5, 2.0, 3.7):
    print(check_scaling_law(mesh, 1.0, r, 6, name=f"scaling[r={r}]").summary_line())
