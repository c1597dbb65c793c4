"""Exact Robin spectra of disks, 3-D balls and their disjoint unions.

Separation of variables turns the Robin condition on a ball of radius ``R`` into
``x f'(x) + beta R f(x) = 0`` for ``f = J_m`` (disk, angular mode ``m``) or
``f = j_l`` (3-D ball, degree ``l``), with ``lambda = (x / R)^2``. Roots are
bracketed on a grid of step 0.05 and bisected; Bessel values come from the
ascending series for small arguments and Miller's downward recurrence otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SolverError

__all__ = [
    "bessel_j",
    "spherical_bessel_j",
    "bessel_j_table",
    "spherical_bessel_j_table",
    "BallConfig",
    "disk_robin_eigenvalues",
    "ball3d_robin_eigenvalues",
    "ball_robin_eigenvalues",
    "ball_union_spectrum",
    "ball_volume",
    "ball_radius",
]

MAX_ORDER = 50
MAX_ARG = 200.0
SCAN_STEP = 0.05
_SERIES_MAX_X = 5.0
_BISECT_STEPS = 8
_ROOT_TOL = 1e-14
_BIG = 1e250


def _series_table(mmax: int, x: np.ndarray, spherical: bool) -> np.ndarray:
    m = np.arange(mmax + 1)[:, None]
    if spherical:
        # j_l(x) = x^l / (2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
        dfact = np.array([float(math.prod(range(1, 2 * l + 2, 2))) for l in range(mmax + 1)])[:, None]
        lead = x[None, :] ** m / dfact
        q = -0.5 * x * x
    else:
        fact = np.array([float(math.factorial(l)) for l in range(mmax + 1)])[:, None]
        lead = (0.5 * x[None, :]) ** m / fact
        q = -0.25 * x * x
    term = np.ones((mmax + 1, x.size))
    total = term.copy()
    for j in range(1, 40):
        denom = j * (2 * m + 2 * j + 1) if spherical else j * (j + m)
        term = term * q / denom
        total += term
    return lead * total


def _miller_table(mmax: int, x: np.ndarray, spherical: bool) -> np.ndarray:
    """Downward recurrence from a high order, normalized by an exact identity."""
    xmax = float(x.max())
    start = int(max(mmax, xmax) + 25 + 8 * xmax ** (1 / 3))
    start += start % 2
    out = np.zeros((mmax + 1, x.size))
    f_next = np.zeros_like(x)
    f = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)  # sum J_0 + 2 sum J_2k (cylindrical only)
    for n in range(start, 0, -1):
        if spherical:
            f_prev = (2 * n + 1) / x * f - f_next
        else:
            f_prev = (2 * n) / x * f - f_next
        f_next, f = f, f_prev
        # f now holds order n-1
        if n - 1 <= mmax:
            out[n - 1] = f
        if not spherical and (n - 1) % 2 == 0:
            norm = norm + (2 * f if n - 1 > 0 else f)
        if n % 8 == 0 and np.any(big := np.abs(f) > _BIG):
            s = np.where(big, 1.0 / _BIG, 1.0)
            f, f_next, norm = f * s, f_next * s, norm * s
            out *= s
    if spherical:
        # f, f_next hold orders 0 and 1; normalize by whichever of
        # j_0 = sin x / x, j_1 = sin x / x^2 - cos x / x is larger
        j0 = np.sin(x) / x
        j1 = np.sin(x) / (x * x) - np.cos(x) / x
        scale = np.where(np.abs(j0) >= np.abs(j1), j0 / f, j1 / f_next)
    else:
        scale = 1.0 / norm
    return out * scale


def _table(mmax: int, x, spherical: bool) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((mmax + 1, x.size))
    small = x <= _SERIES_MAX_X
    if np.any(small):
        out[:, small] = _series_table(mmax, x[small], spherical)
    if np.any(~small):
        out[:, ~small] = _miller_table(mmax, x[~small], spherical)
    return out


def bessel_j_table(mmax: int, x) -> np.ndarray:
    """Array ``T`` with ``T[m, i] = J_m(x[i])`` for ``m = 0..mmax``."""
    return _table(mmax, x, spherical=False)


def spherical_bessel_j_table(lmax: int, x) -> np.ndarray:
    """Array ``T`` with ``T[l, i] = j_l(x[i])`` for ``l = 0..lmax``."""
    return _table(lmax, x, spherical=True)


def _check_order_arg(m, x):
    if int(m) != m or m < 0 or m > MAX_ORDER:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}], got {m}")
    if not (0 <= x <= MAX_ARG):
        raise ValueError(f"argument must lie in [0, {MAX_ARG}], got {x}")


def bessel_j(m: int, x: float) -> float:
    """Bessel function of the first kind J_m(x) for 0 <= m <= 50, 0 <= x <= 200."""
    _check_order_arg(m, x)
    return float(bessel_j_table(int(m), [x])[int(m), 0])


def spherical_bessel_j(l: int, x: float) -> float:
    """Spherical Bessel function j_l(x) for 0 <= l <= 50, 0 <= x <= 200."""
    _check_order_arg(l, x)
    return float(spherical_bessel_j_table(int(l), [x])[int(l), 0])


def _robin_function(modes: np.ndarray, x: np.ndarray, c: float, spherical: bool):
    """``g = x f_m'(x) + c f_m(x)`` and ``g'`` evaluated pairwise for ``modes[i], x[i]``.

    ``g'`` follows from the Bessel equation: ``-(x - m^2/x) J_m + c J_m'`` for
    the cylindrical case, ``-(x - l(l+1)/x) j_l + (c - 1) j_l'`` for the spherical one.
    """
    mmax = int(modes.max())
    t = _table(mmax + 1, x, spherical)
    cols = np.arange(x.size)
    f = t[modes, cols]
    fp1 = t[modes + 1, cols]
    fm1 = np.where(modes > 0, t[np.maximum(modes - 1, 0), cols], 0.0)
    if spherical:
        deriv = np.where(modes > 0, (modes * fm1 - (modes + 1) * fp1) / (2 * modes + 1), -fp1)
        gprime = -(x - modes * (modes + 1) / x) * f + (c - 1.0) * deriv
    else:
        deriv = np.where(modes > 0, 0.5 * (fm1 - fp1), -fp1)
        gprime = -(x - modes * modes / x) * f + c * deriv
    return x * deriv + c * f, gprime


def _refine(lo, hi, slo, modes, c, spherical):
    """Shrink sign-change brackets by bisection, then finish with Newton steps kept inside them."""
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        g, _ = _robin_function(modes, mid, c, spherical)
        same = np.sign(g) == slo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(40):
        g, gp = _robin_function(modes, x, c, spherical)
        same = np.sign(g) == slo
        lo = np.where(same, x, lo)
        hi = np.where(same, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / gp
        done = (np.abs(step) <= _ROOT_TOL * np.maximum(1.0, x)) | (g == 0)
        if np.all(done):
            return x
        new = x - step
        outside = ~((new >= lo) & (new <= hi)) | ~np.isfinite(new)
        new = np.where(outside, 0.5 * (lo + hi), new)
        x = np.where(done, x, new)
    raise SolverError("root refinement did not converge")


def _mode_roots(c: float, bound: float, spherical: bool) -> list[tuple[int, float]]:
    """All (mode, root) pairs with root < bound, including the Neumann zero root."""
    n_grid = int(math.ceil(bound / SCAN_STEP))
    grid = SCAN_STEP * np.arange(1, n_grid + 1)
    mmax = int(math.floor(bound))
    if mmax + 1 > MAX_ORDER or bound > MAX_ARG:
        raise SolverError(f"root scan bound {bound:.1f} exceeds the Bessel oracle range")
    t = _table(mmax + 1, grid, spherical)
    roots: list[tuple[int, float]] = []
    if c == 0:
        roots.append((0, 0.0))
    lo_list, hi_list, mode_list, slo_list = [], [], [], []
    for m in range(mmax + 1):
        f = t[m]
        if m == 0:
            deriv = -t[1]
        elif spherical:
            deriv = (m * t[m - 1] - (m + 1) * t[m + 1]) / (2 * m + 1)
        else:
            deriv = 0.5 * (t[m - 1] - t[m + 1])
        g = grid * deriv + c * f
        # the function is positive just to the right of 0 for every mode
        # (for m = 0, c = 0 the zero root was recorded above and g < 0 next)
        s0 = -1.0 if (m == 0 and c == 0) else 1.0
        signs = np.concatenate([[s0], np.sign(g)])
        xs = np.concatenate([[0.0], grid])
        exact = np.flatnonzero(signs[1:] == 0)
        for i in exact:
            roots.append((m, float(xs[i + 1])))
        signs[1:][signs[1:] == 0] = np.nan
        # bridge exact zeros: compare each nonzero sign with the previous nonzero one
        valid = np.flatnonzero(~np.isnan(signs))
        change = np.flatnonzero(signs[valid[1:]] != signs[valid[:-1]])
        for j in change:
            a, b = valid[j], valid[j + 1]
            if b - a > 1:
                continue  # zero sat exactly on a grid point between them
            lo_list.append(xs[a])
            hi_list.append(xs[b])
            mode_list.append(m)
            slo_list.append(signs[a])
    if lo_list:
        lo = np.array(lo_list)
        hi = np.array(hi_list)
        modes = np.array(mode_list)
        slo = np.array(slo_list)
        x = _refine(lo, hi, slo, modes, float(c), spherical)
        roots.extend(zip(mode_list, x.tolist()))
    return roots


@lru_cache(maxsize=4096)
def _unit_roots(c: float, k: int, spherical: bool) -> tuple[float, ...]:
    """Sorted roots (with multiplicity) of the unit ball with parameter ``c = beta R``."""
    if spherical:
        bound = (4.5 * math.pi * k) ** (1 / 3) + 4.0
    else:
        bound = 2.0 * math.sqrt(k) + 4.0
    for attempt in range(2):
        roots = _mode_roots(c, bound, spherical)
        expanded = []
        for m, x in roots:
            mult = (2 * m + 1) if spherical else (1 if m == 0 else 2)
            expanded.extend([x] * mult)
        expanded.sort()
        if len(expanded) >= k:
            return tuple(expanded[:k])
        bound *= 2.0
    raise SolverError(f"found only {len(expanded)} of {k} roots below the scan bound")


def _validate(R, beta, k, kmax):
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    if int(k) != k or not 1 <= k <= kmax:
        raise ValueError(f"k must be an integer in [1, {kmax}], got {k}")


def disk_robin_eigenvalues(R: float, beta: float, k: int) -> np.ndarray:
    """The k smallest Robin eigenvalues of the disk of radius R (with multiplicity)."""
    _validate(R, beta, k, 200)
    x = np.array(_unit_roots(float(beta) * float(R), int(k), False))
    return (x / R) ** 2


def ball3d_robin_eigenvalues(R: float, beta: float, k: int) -> np.ndarray:
    """The k smallest Robin eigenvalues of the 3-D ball of radius R (with multiplicity)."""
    _validate(R, beta, k, 100)
    x = np.array(_unit_roots(float(beta) * float(R), int(k), True))
    return (x / R) ** 2


def ball_robin_eigenvalues(R: float, beta: float, k: int, dimension: int = 2) -> np.ndarray:
    if dimension == 2:
        return disk_robin_eigenvalues(R, beta, k)
    if dimension == 3:
        return ball3d_robin_eigenvalues(R, beta, k)
    raise ValueError(f"dimension must be 2 or 3, got {dimension}")


def ball_volume(R: float, dimension: int) -> float:
    return math.pi * R**2 if dimension == 2 else 4.0 / 3.0 * math.pi * R**3


def ball_radius(volume: float, dimension: int) -> float:
    if dimension == 2:
        return math.sqrt(volume / math.pi)
    return (3.0 * volume / (4.0 * math.pi)) ** (1 / 3)


@dataclass(frozen=True)
class BallConfig:
    """Disjoint union of balls of the given radii in dimension 2 or 3."""

    dimension: int
    radii: tuple[float, ...]
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if not self.radii or not all(r > 0 for r in self.radii):
            raise ValueError(f"radii must be positive, got {self.radii}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")

    @property
    def volume(self) -> float:
        return sum(ball_volume(r, self.dimension) for r in self.radii)


def ball_union_spectrum(cfg: BallConfig, k: int) -> np.ndarray:
    """The k smallest eigenvalues of a disjoint union of balls."""
    parts = [ball_robin_eigenvalues(r, cfg.beta, k, cfg.dimension) for r in cfg.radii]
    return np.sort(np.concatenate(parts), kind="stable")[:k]
