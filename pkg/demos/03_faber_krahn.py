"""Among random star domains of equal area, the disk minimizes lambda_1."""
from robinshape.diagnostics import check_faber_krahn
from robinshape.mesh import Disk, DomainSpec

for beta in (0.5, 1.0, 4.0):
    rep = check_faber_krahn(DomainSpec((Disk(1.0),), 16), beta, 20, seed=3)
    print(rep.summary_line())
