"""Common zeros of a degenerate eigenpair: disk versus annulus.

On the disk the pair (lambda_2 = lambda_3) vanishes together at the centre. On the
annulus the joint modulus stays away from zero and winds once around the hole.
"""
from robinshape.diagnostics import nodal_analysis
from robinshape.fem import assemble, robin_eigs
from robinshape.mesh import Annulus, Disk, DomainSpec, build_mesh

for label, comp in (("disk", Disk(1.0)), ("annulus", Annulus(0.5, 1.0))):
    for res in (8, 16):
        mesh = build_mesh(DomainSpec((comp,), res))
        rep = nodal_analysis(robin_eigs(assemble(mesh), 1.0, 3), mesh, 2, name=f"nodal[{label},res={res}]")
        print(rep.summary_line())
