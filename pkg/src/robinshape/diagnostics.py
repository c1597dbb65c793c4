"""Named numerical checks over computed spectra and shapes.

Each check returns a :class:`CheckReport`. Boolean checks carry an explicit
tolerance; informational checks only report measurements and never fail a
suite.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .analytic import ball_radius, ball_robin_eigenvalues, disk_robin_eigenvalues
from .fem import DEGENERACY_RTOL, SpectralResult, assemble, robin_eigs
from .mesh import Annulus, Disk, DomainSpec, Mesh, StarDomain, build_mesh, dilate, disjoint_union, spec_area

__all__ = [
    "CheckReport",
    "INFO",
    "SUITES",
    "check_scaling_law",
    "check_faber_krahn",
    "gap_report",
    "joint_nondegeneracy",
    "linfty_trend",
    "nodal_analysis",
    "winding_number",
    "random_star",
    "corpus_specs",
    "run_suite",
    "suite_passed",
]

INFO = "informational"
SUITES = ("scaling", "faber-krahn", "gap", "nodal", "linfty", "all")


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: Union[bool, str]
    measured: list[tuple[str, float]]
    tolerance: float | None = None
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed != INFO and not isinstance(self.passed, bool):
            raise ValueError(f"passed must be a bool or {INFO!r}")
        if isinstance(self.passed, bool) and self.tolerance is None:
            raise ValueError("boolean checks need an explicit tolerance")

    @property
    def informational(self) -> bool:
        return self.passed == INFO

    def value(self, label: str) -> float:
        for key, v in self.measured:
            if key == label:
                return v
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": [[k, v] for k, v in self.measured],
            "tolerance": self.tolerance,
            "context": self.context,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def summary_line(self) -> str:
        status = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        measured = ",".join(f"{k}:{v:.6g}" for k, v in self.measured)
        tol = "-" if self.tolerance is None else f"{self.tolerance:.3g}"
        return f"{self.name} {status} measured={measured} tol={tol}"


def _rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    denom = np.maximum(np.abs(b), 1e-12 * scale)
    return float(np.max(np.abs(a - b) / denom))


# --- scaling law ---------------------------------------------------------------


def check_scaling_law(mesh: Mesh, beta: float, r: float, k: int, name: str = "scaling") -> CheckReport:
    """Compare ``lambda_k(r Omega; beta)`` with ``r^-2 lambda_k(Omega; r beta)`` entrywise."""
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    lhs = robin_eigs(assemble(dilate(mesh, r)), beta, k).eigenvalues
    rhs = robin_eigs(assemble(mesh), r * beta, k).eigenvalues / r**2
    dev = _rel_dev(lhs, rhs)
    return CheckReport(
        name,
        dev < 1e-10,
        [("max_rel_dev", dev)],
        1e-10,
        {"beta": beta, "r": r, "k": k, "n_vertices": mesh.n_vertices},
    )


# --- Faber-Krahn ---------------------------------------------------------------


def random_star(rng: np.random.Generator, order: int, area: float, amplitude: float = 0.5) -> StarDomain:
    """Random star domain of the given exact area; ``sum |coeffs| <= amplitude < 1``."""
    c = rng.uniform(-1.0, 1.0, size=2 * order)
    c *= amplitude * rng.uniform(0.2, 1.0) / max(float(np.sum(np.abs(c))), 1e-300)
    r0 = math.sqrt(area / (math.pi * (1.0 + 0.5 * float(np.sum(c * c)))))
    return StarDomain(r0, tuple(c[:order]), tuple(c[order:]))


def _lambda1(spec: DomainSpec, beta: float) -> float:
    return float(robin_eigs(assemble(build_mesh(spec)), beta, 1).eigenvalues[0])


def check_faber_krahn(
    spec: DomainSpec,
    beta: float,
    n_trials: int,
    seed: int = 0,
    order: int = 4,
    margin: float = 0.01,
    name: str = "faber_krahn",
) -> CheckReport:
    """``lambda_1(spec)`` and those of random star domains against the disk of equal area.

    The reference is the Bessel-root value of the disk; every candidate must
    satisfy ``lambda_1 >= (1 - margin) lambda_1(disk)``.
    """
    area = spec_area(spec)
    ref = float(disk_robin_eigenvalues(math.sqrt(area / math.pi), beta, 1)[0])
    values = [_lambda1(spec, beta)]
    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        star = random_star(rng, order, area)
        values.append(_lambda1(DomainSpec((star,), spec.resolution), beta))
    ratios = np.array(values) / ref
    worst = float(np.min(ratios))
    return CheckReport(
        name,
        bool(worst >= 1.0 - margin),
        [("lambda1_spec", values[0]), ("lambda1_disk", ref), ("min_ratio", worst)],
        margin,
        {"beta": beta, "n_trials": n_trials, "seed": seed, "area": area, "resolution": spec.resolution},
    )


# --- spectral gaps -------------------------------------------------------------


def gap_report(spectrum, k: int, boolean: bool = False, name: str = "gap") -> CheckReport:
    """Relative top gap ``(lambda_k - lambda_{k-1}) / lambda_k``.

    Informational unless ``boolean`` is set, in which case the gap must stay
    below the degeneracy threshold.
    """
    lam = np.asarray(spectrum, dtype=float)
    if k < 2 or lam.size < k:
        raise ValueError(f"gap_report needs k >= 2 and at least k eigenvalues (k={k}, got {lam.size})")
    gap = float((lam[k - 1] - lam[k - 2]) / lam[k - 1])
    passed = bool(gap < DEGENERACY_RTOL) if boolean else INFO
    return CheckReport(
        name,
        passed,
        [("rel_gap", gap), (f"lambda_{k}", float(lam[k - 1]))],
        DEGENERACY_RTOL if boolean else None,
        {"k": k},
    )


# --- a priori estimates --------------------------------------------------------


def joint_nondegeneracy(result: SpectralResult, mesh: Mesh, name: str = "nondegeneracy") -> CheckReport:
    """Smallest and largest vertex norm of ``(u_1, ..., u_k)`` (interior minimum)."""
    U = np.asarray(result.eigenvectors)
    norms = np.sqrt(np.sum(U * U, axis=1))
    interior = np.flatnonzero(mesh.interior_vertices())
    if interior.size == 0:
        raise ValueError("mesh has no interior vertex")
    i = interior[int(np.argmin(norms[interior]))]
    return CheckReport(
        name,
        INFO,
        [
            ("delta_hat", float(norms[i])),
            ("M_hat", float(np.max(norms))),
            ("argmin_x", float(mesh.vertices[i, 0])),
            ("argmin_y", float(mesh.vertices[i, 1])),
        ],
        None,
        {"k": result.k, "beta": result.beta},
    )


def linfty_trend(results, mesh: Mesh, dimension: int = 2, name: str = "linfty") -> CheckReport:
    """Ratios ``max |u_i| / lambda_i^(n/2)`` across a beta grid."""
    results = list(results)
    if len(results) < 3:
        raise ValueError(f"linfty_trend needs at least 3 grid points, got {len(results)}")
    measured = []
    ratios = []
    for res in results:
        if not res.beta > 0:
            raise ValueError("linfty_trend needs a positive-beta grid (the ratio is undefined at lambda=0)")
        amp = np.max(np.abs(res.eigenvectors), axis=0)
        for i, (a, lam) in enumerate(zip(amp, res.eigenvalues), start=1):
            ratio = float(a / lam ** (dimension / 2.0))
            ratios.append(ratio)
            measured.append((f"beta={res.beta:g},i={i}", ratio))
    measured.append(("max_ratio", max(ratios)))
    measured.append(("min_ratio", min(ratios)))
    return CheckReport(name, INFO, measured, None, {"betas": [r.beta for r in results], "dimension": dimension})


# --- nodal structure -----------------------------------------------------------


def winding_number(u: np.ndarray, v: np.ndarray) -> float:
    """Winding of ``(u, v)`` along a closed loop, from wrapped ``atan2`` increments."""
    ang = np.arctan2(v, u)
    d = np.diff(np.append(ang, ang[0]))
    d = -((-d + np.pi) % (2 * np.pi) - np.pi)  # wrap into (-pi, pi]
    return float(np.sum(d) / (2 * np.pi))


def _vertex_link(mesh: Mesh, i: int) -> np.ndarray:
    """Neighbours of an interior vertex in counter-clockwise order."""
    tris = mesh.triangles[np.any(mesh.triangles == i, axis=1)]
    nb = np.unique(tris[tris != i])
    d = mesh.vertices[nb] - mesh.vertices[i]
    return nb[np.argsort(np.arctan2(d[:, 1], d[:, 0]))]


def nodal_analysis(result: SpectralResult, mesh: Mesh, l: int, name: str = "nodal") -> CheckReport:
    """Common zeros of the top ``l`` eigenfunctions.

    Reports ``z = max_i |u_i|`` minimized over interior vertices (with the
    second-smallest interior value, which tracks the neighbourhood of the
    minimizer), and for ``l = 2`` the winding numbers of ``(u, v)`` around each
    hole and around the vertex where ``z`` is smallest.
    """
    k = result.k
    if not 1 <= l <= k:
        raise ValueError(f"multiplicity l must be in [1, {k}], got {l}")
    top = np.asarray(result.eigenvalues[k - l :])
    gap = float((top[-1] - top[0]) / top[-1]) if l > 1 else 0.0
    if gap >= DEGENERACY_RTOL:
        raise ValueError(f"top block of size {l} is not degenerate: relative gap {gap:.3e}")
    U = np.asarray(result.eigenvectors)[:, k - l :]
    z = np.max(np.abs(U), axis=1)
    interior = np.flatnonzero(mesh.interior_vertices())
    order = interior[np.argsort(z[interior], kind="stable")]
    i = int(order[0])
    measured = [
        ("min_z", float(z[i])),
        ("second_min_z", float(z[order[1]]) if order.size > 1 else math.nan),
        ("max_z", float(np.max(z))),
        ("argmin_x", float(mesh.vertices[i, 0])),
        ("argmin_y", float(mesh.vertices[i, 1])),
        ("top_rel_gap", gap),
    ]
    if l == 2:
        u, v = U[:, 0], U[:, 1]
        link = _vertex_link(mesh, i)
        measured.append(("winding_at_min_z", winding_number(u[link], v[link])))
        holes = [cyc for _, cyc, area in mesh.boundary_loops() if area < 0]
        for h, cyc in enumerate(holes):
            measured.append((f"winding_hole_{h}", winding_number(u[cyc], v[cyc])))
    return CheckReport(name, INFO, measured, None, {"l": l, "k": k, "beta": result.beta})


# --- corpus and suites ---------------------------------------------------------


def corpus_specs(resolution: int = 8) -> list[tuple[str, DomainSpec]]:
    """Ten test domains: disks, star domains, annuli and disjoint unions."""
    res = resolution
    star2 = StarDomain(1.0, (0.2, 0.1))
    star4 = StarDomain(0.8, (0.1, -0.05, 0.08, 0.03), (0.05, 0.1, -0.04, 0.02))
    return [
        ("disk", DomainSpec((Disk(1.0),), res)),
        ("disk_offset", DomainSpec((Disk(0.6, (0.3, -0.2)),), res)),
        ("star2", DomainSpec((star2,), res)),
        ("star4", DomainSpec((star4,), res)),
        ("star_sin", DomainSpec((StarDomain(1.2, (), (0.0, 0.15, 0.1), (-0.5, 0.4)),), res)),
        ("annulus", DomainSpec((Annulus(0.5, 1.0),), res)),
        ("annulus_offset", DomainSpec((Annulus(0.3, 1.2, (0.2, 0.1)),), res)),
        ("two_disks", disjoint_union([DomainSpec((Disk(1.0),), res), DomainSpec((Disk(0.7),), res)])),
        ("disk_star", disjoint_union([DomainSpec((Disk(0.8),), res), DomainSpec((star2,), res)])),
        (
            "three_components",
            disjoint_union(
                [DomainSpec((Disk(0.5),), res), DomainSpec((Annulus(0.4, 0.9),), res), DomainSpec((star4,), res)]
            ),
        ),
    ]


def _scaling_jobs(opts: dict) -> list[Callable[[], CheckReport]]:
    jobs = []
    for label, spec in corpus_specs(opts.get("corpus_resolution", 8)):
        mesh = build_mesh(spec)
        for r in opts.get("radii", (0.5, 2.0, 3.7)):
            jobs.append(
                lambda mesh=mesh, r=r, label=label: check_scaling_law(
                    mesh, opts["beta"], r, opts["k"], f"scaling[{label},r={r:g}]"
                )
            )
    return jobs


def _fk_jobs(opts: dict) -> list[Callable[[], CheckReport]]:
    res = opts["resolution"]
    disk = DomainSpec((Disk(1.0),), res)
    ann = DomainSpec((Annulus(0.5 * 2 / math.sqrt(3), 2 / math.sqrt(3)),), res)  # area pi
    jobs = []
    for beta in opts.get("betas", (opts["beta"],)):
        jobs.append(
            lambda beta=beta: check_faber_krahn(
                disk, beta, opts["n_trials"], opts["seed"], name=f"faber_krahn[disk+stars,beta={beta:g}]"
            )
        )
        jobs.append(lambda beta=beta: check_faber_krahn(ann, beta, 0, name=f"faber_krahn[annulus,beta={beta:g}]"))
    return jobs


def _gap_jobs(opts: dict) -> list[Callable[[], CheckReport]]:
    from .optimize import BallFamily, OptProblem, optimize_ball_config
    from .spectral import FunctionalSpec

    k, dim = opts["k"], opts["dimension"]

    def optimized() -> CheckReport:
        m = 1.0 if dim == 2 else 4.0 / 3.0 * math.pi
        prob = OptProblem(
            FunctionalSpec.LambdaK(k), m, opts["beta"], BallFamily(None, dim), seed=opts["seed"], budget=opts["budget"]
        )
        run = optimize_ball_config(prob)
        rep = gap_report(run.best_spectrum, k, boolean=dim >= 3, name=f"gap[balls,dim={dim},k={k}]")
        ctx = dict(rep.context, radii=list(run.best_params), dimension=dim, beta=opts["beta"])
        return CheckReport(rep.name, rep.passed, rep.measured, rep.tolerance, ctx)

    def single() -> CheckReport:
        lam = ball_robin_eigenvalues(ball_radius(1.0, dim), opts["beta"], k, dim)
        return gap_report(lam, k, name=f"gap[single_ball,dim={dim},k={k}]")

    return [optimized, single] if k >= 2 else []


def _nodal_jobs(opts: dict) -> list[Callable[[], CheckReport]]:
    res = opts["resolution"]

    def run(label, spec):
        mesh = build_mesh(spec)
        result = robin_eigs(assemble(mesh), opts["beta"], 3)
        return nodal_analysis(result, mesh, 2, name=f"nodal[{label},l=2]")

    return [
        lambda: run("disk", DomainSpec((Disk(1.0),), res)),
        lambda: run("annulus", DomainSpec((Annulus(0.5, 1.0),), res)),
    ]


def _linfty_jobs(opts: dict) -> list[Callable[[], CheckReport]]:
    def run():
        mesh = build_mesh(DomainSpec((Disk(1.0),), opts["resolution"]))
        sys = assemble(mesh)
        results = [robin_eigs(sys, b, opts["k"]) for b in (0.5, 1.0, 2.0, 4.0)]
        return linfty_trend(results, mesh, name="linfty[disk]")

    return [run]


_SUITE_JOBS = {
    "scaling": _scaling_jobs,
    "faber-krahn": _fk_jobs,
    "gap": _gap_jobs,
    "nodal": _nodal_jobs,
    "linfty": _linfty_jobs,
}

DEFAULTS = {
    "beta": 1.0,
    "k": 6,
    "dimension": 3,
    "resolution": 16,
    "seed": 0,
    "n_trials": 20,
    "budget": 400,
    "workers": 1,
}


def run_suite(suite: str, **options) -> list[CheckReport]:
    """Run a named suite; reports come back in a fixed order for any worker count."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    unknown = set(options) - set(DEFAULTS) - {"betas", "radii", "corpus_resolution"}
    if unknown:
        raise ValueError(f"unknown suite options: {sorted(unknown)}")
    opts = {**DEFAULTS, **options}
    names = [s for s in SUITES[:-1]] if suite == "all" else [suite]
    jobs = []
    for s in names:
        sopts = dict(opts)
        if s == "gap" and "k" not in options:
            sopts["k"] = 3
        if s == "linfty" and "k" not in options:
            sopts["k"] = 3
        jobs.extend(_SUITE_JOBS[s](sopts))
    workers = int(opts["workers"])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: job(), jobs))
    return [job() for job in jobs]


def suite_passed(reports) -> bool:
    """True iff every boolean check passed; informational reports are ignored."""
    return all(r.passed is True for r in reports if not r.informational)
