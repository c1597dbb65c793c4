"""P1 finite elements for the Robin Laplacian.

The discrete eigenproblem is ``(K + beta * Bb) u = lambda * M u`` with the
stiffness matrix ``K``, the interior mass matrix ``M`` and the consistent
boundary mass matrix ``Bb`` of a triangle mesh.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import GeometryError, SolverError
from .mesh import Mesh

__all__ = [
    "SolverError",
    "FemSystem",
    "SpectralResult",
    "DEGENERACY_RTOL",
    "MAX_DOF",
    "assemble",
    "robin_eigs",
    "rayleigh_quotient",
    "degenerate_pairs",
    "spectrum_to_csv",
]

MAX_DOF = 20_000
# relative gap below which two consecutive eigenvalues count as one multiple eigenvalue
DEGENERACY_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class FemSystem:
    K: sp.csr_matrix
    M: sp.csr_matrix
    Bb: sp.csr_matrix

    @property
    def n_dof(self) -> int:
        return self.K.shape[0]

    def operator(self, beta: float) -> sp.csr_matrix:
        return self.K + beta * self.Bb


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """k smallest Robin eigenpairs; ``eigenvectors`` has one column per eigenvalue."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    beta: float

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def degenerate_pairs(self) -> list[tuple[int, int]]:
        return degenerate_pairs(self.eigenvalues)


def degenerate_pairs(eigenvalues, rtol: float = DEGENERACY_RTOL) -> list[tuple[int, int]]:
    """Index pairs ``(i, i+1)`` (0-based) of numerically equal neighbours."""
    lam = np.asarray(eigenvalues, dtype=float)
    scale = max(float(np.max(np.abs(lam))), 1.0) if lam.size else 1.0
    out = []
    for i in range(len(lam) - 1):
        tol = rtol * max(abs(lam[i]), 1e-12 * scale)
        if lam[i + 1] - lam[i] < tol:
            out.append((i, i + 1))
    return out


def assemble(mesh: Mesh) -> FemSystem:
    """Assemble stiffness, interior mass and boundary mass matrices of ``mesh``."""
    v = mesh.vertices
    t = mesh.triangles
    n = len(v)
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    # edge opposite to local vertex i
    e = np.stack([p2 - p1, p0 - p2, p1 - p0], axis=1)
    area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    bad = np.flatnonzero(~(area > 0))
    if bad.size:
        raise GeometryError(f"degenerate triangle {int(bad[0])} (signed area {area[bad[0]]:.3g})")

    # gradients of barycentric coordinates are rotated opposite edges / (2 area),
    # so K_ij = (e_i . e_j) / (4 area)
    ke = np.einsum("tik,tjk->tij", e, e) / (4.0 * area)[:, None, None]
    me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    b = mesh.boundary_edges
    length = np.hypot(*(v[b[:, 1]] - v[b[:, 0]]).T)
    be = (length / 6.0)[:, None, None] * (np.ones((2, 2)) + np.eye(2))
    brows = np.repeat(b, 2, axis=1).ravel()
    bcols = np.tile(b, (1, 2)).ravel()
    Bb = sp.coo_matrix((be.ravel(), (brows, bcols)), shape=(n, n)).tocsr()
    return FemSystem(K, M, Bb)


def robin_eigs(sys: FemSystem, beta: float, k: int) -> SpectralResult:
    """k smallest eigenpairs of ``(K + beta Bb) u = lambda M u``.

    The mass matrix is factored as ``M = L L^T`` and the symmetric matrix
    ``L^{-1} (K + beta Bb) L^{-T}`` is handed to a dense symmetric eigensolver.
    Eigenvectors are M-orthonormal with their first significant coefficient
    positive.
    """
    n = sys.n_dof
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of degrees of freedom ({n})")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    if n > MAX_DOF:
        raise SolverError(f"{n} degrees of freedom exceed the dense solver cap of {MAX_DOF}")
    A = sys.operator(beta).toarray()
    try:
        L = sla.cholesky(sys.M.toarray(), lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError("mass matrix is not positive definite; mesh is broken") from exc
    X = sla.solve_triangular(L, A, lower=True)
    C = sla.solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    w, Y = sla.eigh(C, subset_by_index=[0, k - 1], driver="evr")
    U = sla.solve_triangular(L, Y, lower=True, trans="T")

    for j in range(k):
        col = U[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-8 * np.max(np.abs(col)))[0]
        if col[idx] < 0:
            U[:, j] = -col
    MU = sys.M @ U
    R = A @ U - MU * w
    residuals = np.linalg.norm(R, axis=0) / np.linalg.norm(MU, axis=0)
    U.setflags(write=False)
    return SpectralResult(w, U, residuals, float(beta))


def rayleigh_quotient(sys: FemSystem, beta: float, coeffs) -> float:
    u = np.asarray(coeffs, dtype=float)
    mass = float(u @ (sys.M @ u))
    if not np.any(u) or mass <= 0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return float(u @ (sys.K @ u) + beta * (u @ (sys.Bb @ u))) / mass


def spectrum_to_csv(eigenvalues, residuals=None) -> str:
    """CSV with columns index, lambda, residual (17 significant digits)."""
    lam = np.asarray(eigenvalues, dtype=float)
    res = np.zeros_like(lam) if residuals is None else np.asarray(residuals, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "lambda", "residual"])
    for i, (a, r) in enumerate(zip(lam, res), start=1):
        w.writerow([i, f"{a:.17g}", f"{r:.17g}"])
    return buf.getvalue()
