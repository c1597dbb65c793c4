"""Measure-constrained minimization of spectral functionals over shape families.

Two parametric families are searched: disjoint unions of balls (radii as
parameters, spectra from the Bessel-root oracle or FEM) and unions of Fourier
star domains (FEM spectra). Every candidate is dilated to the target measure
before evaluation, so the constraint never enters the search itself. The
search is a Nelder-Mead simplex with seeded restarts under a hard evaluation
budget; infeasible geometries score ``+inf``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.optimize import minimize

from .analytic import BallConfig, ball_union_spectrum, ball_volume
from .errors import GeometryError
from .fem import assemble, robin_eigs
from .mesh import Disk, DomainSpec, StarDomain, build_mesh, disjoint_union, spec_area
from .spectral import FunctionalSpec, evaluate_functional, penalization_gamma

__all__ = [
    "BallFamily",
    "StarFamily",
    "MixedFamily",
    "Analytic",
    "Fem",
    "OptProblem",
    "OptRun",
    "SweepRow",
    "normalize_measure",
    "params_measure",
    "decode",
    "objective",
    "optimize",
    "optimize_ball_config",
    "optimize_star_domain",
    "beta_sweep",
]


@dataclass(frozen=True)
class BallFamily:
    """Disjoint unions of 1..max_balls balls; ``None`` means ``k`` balls at most."""

    max_balls: int | None = None
    dimension: int = 2


@dataclass(frozen=True)
class StarFamily:
    fourier_order: int = 4
    n_components: int = 1

    def __post_init__(self):
        if not 0 <= self.fourier_order <= 8:
            raise ValueError(f"fourier_order must be in [0, 8], got {self.fourier_order}")
        if not 1 <= self.n_components <= 3:
            raise ValueError(f"n_components must be in [1, 3], got {self.n_components}")


@dataclass(frozen=True)
class MixedFamily:
    """Search both families and keep the better candidate."""

    balls: BallFamily = BallFamily()
    stars: StarFamily = StarFamily()


@dataclass(frozen=True)
class Analytic:
    pass


@dataclass(frozen=True)
class Fem:
    resolution: int = 16
    final_resolution: int = 32


Family = Union[BallFamily, StarFamily, MixedFamily]


@dataclass(frozen=True)
class OptProblem:
    functional: FunctionalSpec
    m: float
    beta: float
    family: Family = BallFamily()
    eigensolver: Union[Analytic, Fem, None] = None
    seed: int = 0
    budget: int = 2000
    mode: str = "dilation"
    restarts: int = 5

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"target measure must be positive, got {self.m}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if int(self.budget) != self.budget or self.budget < 1:
            raise ValueError(f"budget must be a positive integer, got {self.budget}")
        if self.mode not in ("dilation", "penalized"):
            raise ValueError(f"mode must be 'dilation' or 'penalized', got {self.mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if isinstance(self.family, BallFamily) and self.family.dimension not in (2, 3):
            raise ValueError(f"ball dimension must be 2 or 3, got {self.family.dimension}")
        if self.eigensolver is None:
            default = Analytic() if isinstance(self.family, BallFamily) else Fem()
            object.__setattr__(self, "eigensolver", default)
        if isinstance(self.family, StarFamily) and not isinstance(self.eigensolver, Fem):
            raise ValueError("star-domain families need the FEM eigensolver")
        if isinstance(self.family, BallFamily) and isinstance(self.eigensolver, Fem) and self.family.dimension != 2:
            raise ValueError("FEM evaluation of ball families is 2-D only")
        if isinstance(self.family, MixedFamily) and self.family.balls.dimension != 2:
            raise ValueError("mixed families compare planar shapes: ball dimension must be 2")
        if self.mode == "penalized":
            # fail fast on functionals without strictly positive partial derivatives
            n = self.family.dimension if isinstance(self.family, BallFamily) else 2
            object.__setattr__(self, "_gamma", penalization_gamma(self.functional, self.m, self.beta, dimension=n))

    @property
    def k(self) -> int:
        return self.functional.k

    @property
    def gamma(self) -> float:
        """Penalty constant of the penalized mode."""
        if self.mode != "penalized":
            raise ValueError("gamma is only defined in penalized mode")
        return self._gamma


@dataclass(frozen=True)
class OptRun:
    """Outcome of a search. ``history`` lists ``(evaluation index, value)``."""

    best_params: tuple[float, ...]
    best_value: float
    best_spectrum: tuple[float, ...]
    history: list[tuple[int, float]]
    evaluations_used: int
    family: str
    shape: Union[BallConfig, DomainSpec, None] = None
    measure: float = math.nan
    refined_value: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "best_params": list(self.best_params),
            "best_value": self.best_value,
            "best_spectrum": list(self.best_spectrum),
            "measure": self.measure,
            "evaluations_used": self.evaluations_used,
            "refined_value": self.refined_value,
        }
        if isinstance(self.shape, BallConfig):
            out["balls"] = {"dimension": self.shape.dimension, "radii": list(self.shape.radii)}
        out.update(self.extra)
        return out


# --- parameter decoding --------------------------------------------------------


def _ball_kind(family) -> bool:
    return isinstance(family, BallFamily)


def _star_components(params: np.ndarray, family: StarFamily) -> list[StarDomain]:
    width = 1 + 2 * family.fourier_order
    if params.size != width * family.n_components:
        raise ValueError(f"expected {width * family.n_components} star parameters, got {params.size}")
    comps = []
    for block in params.reshape(family.n_components, width):
        order = family.fourier_order
        comps.append(StarDomain(block[0], tuple(block[1 : 1 + order]), tuple(block[1 + order :])))
    return comps


def params_measure(params, family: Family) -> float:
    """Measure of the shape encoded by ``params`` (exact, not the mesh area)."""
    p = np.asarray(params, dtype=float)
    if _ball_kind(family):
        if np.any(p <= 0):
            raise GeometryError("ball radii must be positive")
        return float(sum(ball_volume(r, family.dimension) for r in p))
    width = 1 + 2 * family.fourier_order
    total = 0.0
    for block in p.reshape(family.n_components, width):
        if not block[0] > 0:
            raise GeometryError("star r0 must be positive")
        total += math.pi * block[0] ** 2 * (1.0 + 0.5 * float(np.sum(block[1:] ** 2)))
    return total


def _length_mask(params: np.ndarray, family: Family) -> np.ndarray:
    if _ball_kind(family):
        return np.ones(params.size, dtype=bool)
    width = 1 + 2 * family.fourier_order
    mask = np.zeros(params.size, dtype=bool)
    mask[::width] = True
    return mask


def normalize_measure(params, family: Family, m: float) -> np.ndarray:
    """Dilate the encoded shape so that its measure equals ``m``."""
    p = np.asarray(params, dtype=float)
    current = params_measure(p, family)
    if not current > 0:
        raise ValueError("cannot normalize a zero-measure candidate")
    n = family.dimension if _ball_kind(family) else 2
    factor = (m / current) ** (1.0 / n)
    out = p.copy()
    out[_length_mask(p, family)] *= factor
    return out


def _layout(components, resolution: int) -> DomainSpec:
    # a lone component stays at the origin so equal shapes give bit-identical meshes
    if len(components) == 1:
        return DomainSpec(tuple(components), resolution)
    return disjoint_union([DomainSpec((c,), resolution) for c in components])


def decode(problem: OptProblem, params) -> Union[BallConfig, DomainSpec]:
    """Shape encoded by measure-normalized ``params``; raises on invalid geometry."""
    fam = problem.family
    p = np.asarray(params, dtype=float)
    if _ball_kind(fam):
        cfg = BallConfig(fam.dimension, tuple(p), problem.beta)
        if isinstance(problem.eigensolver, Fem):
            return _layout([Disk(r) for r in p], problem.eigensolver.resolution)
        return cfg
    return _layout(_star_components(p, fam), problem.eigensolver.resolution)


def _spectrum(problem: OptProblem, shape, k: int, resolution: int | None = None) -> np.ndarray:
    if isinstance(shape, BallConfig):
        return ball_union_spectrum(shape, k)
    if resolution is not None:
        shape = shape.with_resolution(resolution)
    return robin_eigs(assemble(build_mesh(shape)), problem.beta, k).eigenvalues


def _prepare(problem: OptProblem, params) -> tuple[np.ndarray, float]:
    """Apply the measure constraint; returns (admissible params, penalty term)."""
    fam = problem.family
    if problem.mode == "dilation":
        return normalize_measure(params, fam, problem.m), 0.0
    mu = params_measure(params, fam)
    if mu > problem.m:
        params, mu = normalize_measure(params, fam, problem.m), problem.m
    return np.asarray(params, dtype=float), problem.gamma * mu


def _evaluate(problem: OptProblem, params, resolution: int | None = None):
    p, penalty = _prepare(problem, params)
    shape = decode(problem, p)
    lam = _spectrum(problem, shape, problem.k, resolution)
    return evaluate_functional(problem.functional, lam) + penalty, p, shape, lam


def objective(problem: OptProblem, params) -> float:
    """Functional value of the measure-normalized shape; ``+inf`` for invalid geometry."""
    fam = problem.family
    if isinstance(fam, MixedFamily):
        raise ValueError("objective needs a concrete family (balls or stars)")
    try:
        return _evaluate(problem, params)[0]
    except GeometryError:
        return math.inf


# --- search ------------------------------------------------------------------


class _BudgetExhausted(Exception):
    pass


@dataclass
class _Task:
    x0: np.ndarray
    step: np.ndarray
    budget: int
    lower: np.ndarray
    history: list = field(default_factory=list)
    best_x: np.ndarray | None = None
    best_f: float = math.inf


def _run_task(problem: OptProblem, task: _Task) -> _Task:
    def f(x):
        if len(task.history) >= task.budget:
            raise _BudgetExhausted
        x = np.maximum(x, task.lower)  # parameter-space clamping
        val = objective(problem, x)
        task.history.append(val)
        if val < task.best_f:
            task.best_f, task.best_x = val, x.copy()
        return val

    if task.budget <= 0:
        return task
    n = task.x0.size
    simplex = np.vstack([task.x0] + [task.x0 + task.step[i] * np.eye(n)[i] for i in range(n)])
    try:
        if n == 0 or task.budget == 1:
            f(task.x0)
        else:
            minimize(
                f,
                task.x0,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "maxfev": 10**9,
                    "maxiter": 10**9,
                    "xatol": 1e-11,
                    "fatol": 1e-14,
                    "adaptive": n > 2,
                },
            )
    except _BudgetExhausted:
        pass
    return task


def _split_budget(budget: int, n_tasks: int) -> list[int]:
    if n_tasks == 0:
        return []
    base, extra = divmod(budget, n_tasks)
    return [base + (1 if i < extra else 0) for i in range(n_tasks)]


def _search(problem: OptProblem, tasks: list[_Task], workers: int, label: str, start_eval: int = 0):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(lambda t: _run_task(problem, t), tasks))
    else:
        done = [_run_task(problem, t) for t in tasks]
    history: list[tuple[int, float]] = []
    best_x, best_f = None, math.inf
    for t in done:  # deterministic reduction in task order
        for v in t.history:
            history.append((start_eval + len(history), float(v)))
        if t.best_x is not None and t.best_f < best_f:
            best_x, best_f = t.best_x, t.best_f
    return best_x, best_f, history


def _finish(problem: OptProblem, best_x, history, label: str, refine: bool) -> OptRun:
    if best_x is None:
        raise ValueError("no objective evaluation succeeded within the budget")
    value, p, shape, lam = _evaluate(problem, best_x)  # re-evaluated, not cached
    refined = None
    if refine and isinstance(problem.eigensolver, Fem) and problem.eigensolver.final_resolution:
        refined = _evaluate(problem, best_x, problem.eigensolver.final_resolution)[0]
    if isinstance(shape, BallConfig):
        mu = shape.volume
    else:
        mu = params_measure(p, problem.family)
    return OptRun(
        best_params=tuple(float(x) for x in p),
        best_value=float(value),
        best_spectrum=tuple(float(x) for x in lam),
        history=history,
        evaluations_used=len(history),
        family=label,
        shape=shape,
        measure=float(mu),
        refined_value=refined,
    )


def optimize_ball_config(problem: OptProblem, workers: int = 1, refine: bool = True) -> OptRun:
    """Best union of 1..max_balls balls; radii searched with seeded restarts."""
    fam = problem.family
    if not isinstance(fam, BallFamily):
        raise ValueError("optimize_ball_config needs a BallFamily problem")
    max_balls = fam.max_balls or problem.k
    if max_balls < 1:
        raise ValueError("max_balls must be at least 1")
    r_eq = lambda c: (problem.m / c / ball_volume(1.0, fam.dimension)) ** (1.0 / fam.dimension)
    plan = [(1, 0)] + [(c, r) for c in range(2, max_balls + 1) for r in range(problem.restarts)]
    # a single ball is fully determined by the measure: one evaluation suffices
    budgets = [min(1, problem.budget)] + _split_budget(problem.budget - min(1, problem.budget), len(plan) - 1)
    tasks = []
    for (c, r), b in zip(plan, budgets):
        rng = np.random.default_rng([problem.seed, c, r])
        if r == 0:
            x0 = np.full(c, r_eq(c))
        else:
            x0 = r_eq(c) * rng.uniform(0.4, 1.0, size=c)
        tasks.append(_Task(x0, 0.1 * x0, b, np.full(c, 1e-3 * r_eq(c))))
    best_x, _, history = _search(problem, tasks, workers, "balls")
    return _finish(problem, best_x, history, "balls", refine)


def optimize_star_domain(problem: OptProblem, workers: int = 1, refine: bool = True) -> OptRun:
    """Best union of Fourier star domains, starting from round disks plus perturbations."""
    fam = problem.family
    if not isinstance(fam, StarFamily):
        raise ValueError("optimize_star_domain needs a StarFamily problem")
    width = 1 + 2 * fam.fourier_order
    r0 = math.sqrt(problem.m / fam.n_components / math.pi)
    budgets = _split_budget(problem.budget, problem.restarts)
    lower = np.tile(np.concatenate([[1e-3 * r0], np.full(width - 1, -np.inf)]), fam.n_components)
    tasks = []
    for r, b in enumerate(budgets):
        rng = np.random.default_rng([problem.seed, 0, r])
        block = np.zeros(width)
        block[0] = r0
        x0 = np.tile(block, fam.n_components)
        if r > 0:
            coeffs = ~_length_mask(x0, fam)
            x0[coeffs] = rng.uniform(-0.1, 0.1, size=int(coeffs.sum()))
        step = np.where(_length_mask(x0, fam), 0.1 * r0, 0.05)
        tasks.append(_Task(x0, step, b, lower))
    best_x, _, history = _search(problem, tasks, workers, "stars")
    return _finish(problem, best_x, history, "stars", refine)


def optimize(problem: OptProblem, workers: int = 1, refine: bool = True) -> OptRun:
    """Dispatch on the problem's family; mixed families keep the better result."""
    fam = problem.family
    if isinstance(fam, BallFamily):
        return optimize_ball_config(problem, workers, refine)
    if isinstance(fam, StarFamily):
        return optimize_star_domain(problem, workers, refine)
    half = max(problem.budget // 2, 1)
    balls = replace(problem, family=fam.balls, eigensolver=Analytic(), budget=half)
    fem = problem.eigensolver if isinstance(problem.eigensolver, Fem) else Fem()
    stars = replace(problem, family=fam.stars, eigensolver=fem, budget=max(problem.budget - half, 1))
    a = optimize_ball_config(balls, workers, refine)
    b = optimize_star_domain(stars, workers, refine)
    best = a if a.best_value <= b.best_value else b
    history = a.history + [(len(a.history) + i, v) for i, v in b.history]
    return OptRun(
        best.best_params,
        best.best_value,
        best.best_spectrum,
        history,
        len(history),
        best.family,
        best.shape,
        best.measure,
        best.refined_value,
        {"balls_value": a.best_value, "stars_value": b.best_value},
    )


@dataclass(frozen=True)
class SweepRow:
    beta: float
    balls_value: float
    connected_value: float
    winner: str


def beta_sweep(problem: OptProblem, betas, workers: int = 1, tie_rtol: float = 1e-6):
    """Compare the best ball union with the best connected star domain for each beta.

    Returns ``(rows, crossover)`` where ``crossover`` is the first ``(beta_a,
    beta_b)`` interval across which the winner changes, or ``None``.
    """
    betas = [float(b) for b in betas]
    if not betas:
        raise ValueError("beta list must not be empty")
    if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta list must be positive and strictly ascending")
    fam = problem.family
    balls_fam = fam.balls if isinstance(fam, MixedFamily) else (fam if isinstance(fam, BallFamily) else BallFamily())
    star_fam = fam.stars if isinstance(fam, MixedFamily) else (fam if isinstance(fam, StarFamily) else StarFamily())
    star_fam = StarFamily(star_fam.fourier_order, 1)
    balls_fam = BallFamily(balls_fam.max_balls, 2)
    fem = problem.eigensolver if isinstance(problem.eigensolver, Fem) else Fem()
    rows = []
    for beta in betas:
        base = replace(problem, beta=beta, family=balls_fam, eigensolver=Analytic())
        a = optimize_ball_config(base, workers, refine=False)
        star = replace(problem, beta=beta, family=star_fam, eigensolver=fem)
        b = optimize_star_domain(star, workers, refine=False)
        diff = b.best_value - a.best_value
        if abs(diff) <= tie_rtol * max(abs(a.best_value), abs(b.best_value)):
            winner = "tie"
        else:
            winner = "balls" if diff > 0 else "connected"
        rows.append(SweepRow(beta, a.best_value, b.best_value, winner))
    crossover = None
    for r1, r2 in zip(rows, rows[1:]):
        if {r1.winner, r2.winner} == {"balls", "connected"}:
            crossover = (r1.beta, r2.beta)
            break
    return rows, crossover
