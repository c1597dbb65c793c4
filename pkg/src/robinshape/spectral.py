"""Finite-dimensional eigenvalue algebra for trial families.

A family of ``k`` trial functions is summarized by its Gram pair: ``A`` holds
the L2 inner products, ``B`` the energy products (Dirichlet energy plus
``beta`` times the boundary term). The family's eigenvalues are those of
``A^{-1/2} B A^{-1/2}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import HypFViolation
from .fem import FemSystem

__all__ = [
    "GramPair",
    "FunctionalSpec",
    "PerturbCoeffs",
    "eigenvalues_from_gram",
    "normalize",
    "gram_from_fem",
    "evaluate_functional",
    "functional_gradient",
    "penalization_gamma",
    "perturb_ratio",
    "rational_max",
]


@dataclass(frozen=True, eq=False)
class GramPair:
    """Mass Gram matrix ``A`` (SPD) and energy Gram matrix ``B`` (symmetric)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise ValueError(f"A and B must be square of equal shape, got {A.shape} and {B.shape}")
        for name, X in (("A", A), ("B", B)):
            scale = max(float(np.max(np.abs(X))), 1e-300)
            if np.max(np.abs(X - X.T)) > 1e-10 * scale:
                raise ValueError(f"{name} is not symmetric")
        A = 0.5 * (A + A.T)
        B = 0.5 * (B + B.T)
        k = A.shape[0]
        if np.min(np.linalg.eigvalsh(A)) <= 1e-12 * np.trace(A) / k:
            raise ValueError("A is numerically singular: the trial family is linearly dependent")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def k(self) -> int:
        return self.A.shape[0]


def _reduced(g: GramPair):
    L = sla.cholesky(g.A, lower=True)
    X = sla.solve_triangular(L, g.B, lower=True)
    C = sla.solve_triangular(L, X.T, lower=True)
    return L, 0.5 * (C + C.T)


def eigenvalues_from_gram(g: GramPair) -> np.ndarray:
    """Ascending eigenvalues of ``A^{-1/2} B A^{-1/2}`` (via ``A = L L^T``)."""
    _, C = _reduced(g)
    return np.linalg.eigvalsh(C)


def normalize(g: GramPair) -> tuple[np.ndarray, np.ndarray]:
    """Change of basis ``P`` with ``P A P^T = I`` and ``P B P^T`` diagonal ascending.

    Returns ``(P, spectrum)``. Each row of ``P`` is signed so that its
    largest-magnitude entry is positive.
    """
    L, C = _reduced(g)
    lam, Q = np.linalg.eigh(C)
    P = sla.solve_triangular(L, Q, lower=True, trans="T").T
    for i in range(P.shape[0]):
        j = int(np.argmax(np.abs(P[i])))
        if P[i, j] < 0:
            P[i] = -P[i]
    return P, lam


def gram_from_fem(sys: FemSystem, beta: float, vectors) -> GramPair:
    """Gram pair of nodal vectors: ``A = V^T M V``, ``B = V^T (K + beta Bb) V``.

    ``vectors`` is an ``(n_dof, k)`` array (one column per trial function) or a
    sequence of ``k`` coefficient vectors.
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    elif V.shape[0] != sys.n_dof:
        V = V.T
    if V.shape[0] != sys.n_dof:
        raise ValueError(f"vectors must have {sys.n_dof} coefficients")
    A = V.T @ (sys.M @ V)
    B = V.T @ (sys.operator(beta) @ V)
    return GramPair(A, B)


@dataclass(frozen=True)
class FunctionalSpec:
    """``F(lambda_1, ..., lambda_k)``: ``fp`` (p-norm), ``lambda_k`` or ``weighted``."""

    kind: str
    k: int
    p: float = 1.0
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("fp", "lambda_k", "weighted"):
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if self.kind == "fp" and not self.p >= 1:
            raise ValueError(f"Fp needs p >= 1, got {self.p}")
        if self.kind == "weighted":
            w = tuple(float(x) for x in self.weights)
            object.__setattr__(self, "weights", w)
            if len(w) != self.k:
                raise ValueError(f"weighted functional needs {self.k} weights, got {len(w)}")
            if any(x < 0 for x in w) or not w[-1] > 0:
                raise ValueError("weights must be non-negative with a positive last weight")

    @classmethod
    def Fp(cls, p: float, k: int) -> "FunctionalSpec":
        return cls("fp", k, p=float(p))

    @classmethod
    def LambdaK(cls, k: int) -> "FunctionalSpec":
        return cls("lambda_k", k)

    @classmethod
    def Weighted(cls, weights) -> "FunctionalSpec":
        w = tuple(weights)
        return cls("weighted", len(w), weights=w)


def _leading(f: FunctionalSpec, eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size < f.k:
        raise ValueError(f"need at least {f.k} eigenvalues, got {lam.size}")
    lam = lam[: f.k]
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be sorted ascending")
    if lam[0] < 0:
        raise ValueError("eigenvalues must be non-negative")
    return lam


def evaluate_functional(f: FunctionalSpec, eigenvalues) -> float:
    """Value of ``f`` on the first ``f.k`` entries of an ascending spectrum."""
    lam = _leading(f, eigenvalues)
    if f.kind == "lambda_k":
        return float(lam[-1])
    if f.kind == "weighted":
        return float(np.dot(f.weights, lam))
    if f.p == 1:
        return float(np.sum(lam))
    top = float(lam[-1])
    return top * float(np.sum((lam / top) ** f.p)) ** (1.0 / f.p)


def functional_gradient(f: FunctionalSpec, eigenvalues) -> np.ndarray:
    """Partial derivatives ``dF / d lambda_i`` in closed form."""
    lam = np.asarray(eigenvalues, dtype=float)[..., : f.k]
    if f.kind == "lambda_k":
        g = np.zeros_like(lam)
        g[..., -1] = 1.0
        return g
    if f.kind == "weighted":
        return np.broadcast_to(np.asarray(f.weights), lam.shape).copy()
    if f.p == 1:
        return np.ones_like(lam)
    norm = np.sum(lam**f.p, axis=-1, keepdims=True) ** (1.0 / f.p)
    return (lam / norm) ** (f.p - 1.0)


def _min_partial_on_grid(f: FunctionalSpec, lo: float, hi: float, points: int) -> float:
    axis = np.linspace(lo, hi, points)
    best = math.inf
    combos = itertools.combinations_with_replacement(range(points), f.k)
    while True:
        chunk = list(itertools.islice(combos, 200_000))
        if not chunk:
            return best
        lam = axis[np.array(chunk)]
        best = min(best, float(np.min(functional_gradient(f, lam))))


def penalization_gamma(
    f: FunctionalSpec,
    m: float,
    beta: float,
    lambda_cap: float | None = None,
    dimension: int = 2,
    grid_points: int = 33,
) -> float:
    """Penalty constant ``k a lambda_1(B^m) / (n m)`` trading measure for the functional.

    ``a`` is the smallest partial derivative of ``f`` over ordered tuples of a
    ``grid_points``-per-axis grid of ``[lambda_1(B^m)/2, lambda_cap]^k``;
    ``lambda_cap`` defaults to ``4 lambda_1(B^m)``. Raises HypFViolation when a
    partial derivative vanishes (e.g. for ``lambda_k`` with k >= 2).
    """
    from .analytic import ball_radius, ball_robin_eigenvalues

    if not m > 0:
        raise ValueError(f"measure must be positive, got {m}")
    lam1 = float(ball_robin_eigenvalues(ball_radius(m, dimension), beta, 1, dimension)[0])
    cap = 4.0 * lam1 if lambda_cap is None else float(lambda_cap)
    if not cap > lam1:
        raise ValueError(f"lambda_cap={cap} must exceed lambda_1 of the ball ({lam1})")
    if f.kind == "lambda_k" and f.k > 1:
        raise HypFViolation("HypF violated: lambda_k has zero partial derivatives in lambda_1..lambda_{k-1}")
    if f.kind == "weighted":
        a = min(f.weights)
    elif f.kind == "lambda_k" or (f.kind == "fp" and f.p == 1):
        a = 1.0
    else:
        a = _min_partial_on_grid(f, 0.5 * lam1, cap, grid_points)
    if not a > 0:
        raise HypFViolation(f"HypF violated: minimal partial derivative is {a}")
    return f.k * a * lam1 / (dimension * m)


@dataclass(frozen=True)
class PerturbCoeffs:
    """Normalized coefficients of the ratio ``(1 + 2 t b_ae + t^2 b_ee) / (1 + 2 t a_ae + t^2 a_ee)``."""

    a_alpha_eta: float
    a_eta_eta: float
    b_alpha_eta: float
    b_eta_eta: float

    def __post_init__(self):
        if not self.a_eta_eta > 0:
            raise ValueError(f"a_eta_eta must be positive, got {self.a_eta_eta}")
        if not self.b_eta_eta < 1:
            raise ValueError(f"b_eta_eta must be below 1, got {self.b_eta_eta}")


def perturb_ratio(c: PerturbCoeffs, t):
    t = np.asarray(t, dtype=float)
    num = 1.0 + 2.0 * t * c.b_alpha_eta + t * t * c.b_eta_eta
    den = 1.0 + 2.0 * t * c.a_alpha_eta + t * t * c.a_eta_eta
    return num / den


def rational_max(c: PerturbCoeffs) -> tuple[float, float]:
    """Maximizer ``t-`` of :func:`perturb_ratio` and the maximal value.

    The derivative has the sign of ``q2 t^2 - q1 t + q0`` with
    ``q2 = a_ae b_ee - a_ee b_ae``, ``q1 = a_ee - b_ee``, ``q0 = b_ae - a_ae``;
    the maximum sits at the root ``t- = q1 / (2 q2) (1 - sqrt(1 - 4 q0 q2 / q1^2))``,
    evaluated here as ``2 q0 / (q1 (1 + sqrt(...)))`` to avoid cancellation.
    When ``q2 = 0`` this reduces to the linear critical point ``q0 / q1``.
    """
    if not c.a_alpha_eta**2 < c.a_eta_eta:
        raise ValueError("denominator must stay positive: need a_alpha_eta^2 < a_eta_eta")
    q2 = c.a_alpha_eta * c.b_eta_eta - c.a_eta_eta * c.b_alpha_eta
    q1 = c.a_eta_eta - c.b_eta_eta
    q0 = c.b_alpha_eta - c.a_alpha_eta
    if q1 == 0:
        raise ValueError("degenerate coefficients: a_eta_eta == b_eta_eta")
    if q1 < 0:
        raise ValueError("a_eta_eta < b_eta_eta: t- is the minimizer, outside the perturbative regime")
    if q2 == 0:
        t = q0 / q1
    else:
        disc = max(1.0 - 4.0 * q0 * q2 / (q1 * q1), 0.0)
        t = 2.0 * q0 / (q1 * (1.0 + math.sqrt(disc)))
    return t, float(perturb_ratio(c, t))
