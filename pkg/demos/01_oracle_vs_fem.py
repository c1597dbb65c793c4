"""Robin spectrum of the unit disk: Bessel roots against P1 finite elements.

Run with ``python3 demos/01_oracle_vs_fem.py``.
"""
import numpy as np

from robinshape.analytic import disk_robin_eigenvalues
from robinshape.fem import assemble, robin_eigs
from robinshape.mesh import Disk, DomainSpec, build_mesh

# %% exact values come from the roots of x J_m'(x) + beta R J_m(x) = 0
beta, k = 1.0, 6
exact = disk_robin_eigenvalues(1.0, beta, k)
print("exact  :", np.array2string(exact, precision=6))

# %% P1 eigenvalues are upper bounds and converge at second order
prev = None
for res in (8, 16, 32):
    mesh = build_mesh(DomainSpec((Disk(1.0),), res))
    lam = robin_eigs(assemble(mesh), beta, k).eigenvalues
    err = np.max(np.abs(lam - exact) / exact)
    line = f"res {res:2d}: n_dof={mesh.vertices.shape[0]:5d}  max rel err={err:.2e}"
    if prev is not None:
        line += f"  ratio={prev / err:.2f}"
    print(line)
    prev = err

# %% with beta R = 1 the second eigenvalue is j_{0,1}^2 (double)
print("lambda_2, lambda_3 :", exact[1], exact[2], " j01^2 =", 2.404825557695773**2)
