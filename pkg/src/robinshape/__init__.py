"""Robin Laplacian eigenvalues on planar domains and ball unions, and spectral shape optimization.

Modules
-------
mesh
    Parametric domains (disks, Fourier star domains, annuli) and structured meshes.
fem
    P1 finite-element assembly and the dense Robin eigensolver.
analytic
    Bessel functions and exact Robin spectra of disks, 3-D balls and their unions.
spectral
    Gram-pair eigenvalue algebra, spectral functionals and penalization constants.
optimize
    Measure-constrained search over ball unions and star domains.
diagnostics
    Named numerical checks (scaling law, Faber-Krahn, gaps, nodal structure).
cli
    The ``robinshape`` command.
"""

from .analytic import BallConfig, ball_robin_eigenvalues, ball_union_spectrum, disk_robin_eigenvalues
from .errors import GeometryError, HypFViolation, SolverError
from .fem import assemble, robin_eigs
from .mesh import Annulus, Disk, DomainSpec, StarDomain, build_mesh
from .optimize import BallFamily, OptProblem, StarFamily, optimize
from .spectral import FunctionalSpec, GramPair, eigenvalues_from_gram

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "BallConfig",
    "BallFamily",
    "Disk",
    "DomainSpec",
    "FunctionalSpec",
    "GeometryError",
    "GramPair",
    "HypFViolation",
    "OptProblem",
    "SolverError",
    "StarDomain",
    "StarFamily",
    "assemble",
    "ball_robin_eigenvalues",
    "ball_union_spectrum",
    "build_mesh",
    "disk_robin_eigenvalues",
    "eigenvalues_from_gram",
    "optimize",
    "robin_eigs",
]
