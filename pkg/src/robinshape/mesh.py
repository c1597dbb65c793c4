"""Parametric 2-D domains and their structured triangulations.

Domains are finite unions of disks, Fourier star domains and annuli. Every
component is meshed by a structured polar grid: disks and star domains share a
reference mesh of the unit disk (ring ``i`` carries ``6 i`` vertices) which is
mapped through the boundary radius function, annuli use a band of
``resolution`` radial layers with ``6 * resolution`` vertices per ring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import GeometryError

__all__ = [
    "GeometryError",
    "Disk",
    "StarDomain",
    "Annulus",
    "DomainSpec",
    "Mesh",
    "build_mesh",
    "dilate",
    "measure",
    "boundary_length",
    "disjoint_union",
    "spec_area",
    "spec_to_dict",
    "spec_from_dict",
    "spec_to_json",
    "spec_from_json",
    "unit_square_mesh",
]

# Star-domain positivity is checked on 8192 angles (step 2*pi/8192 <= 2*pi/4096).
_THETA_CHECK = 8192
_UNION_GAP = 0.25


def _point(p) -> tuple[float, float]:
    x, y = p
    return (float(x), float(y))


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise GeometryError(f"disk radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class StarDomain:
    """Star domain with boundary radius ``r0 * (1 + sum a_m cos m t + sum b_m sin m t)``."""

    r0: float
    fourier_cos: tuple[float, ...] = ()
    fourier_sin: tuple[float, ...] = ()
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        object.__setattr__(self, "r0", float(self.r0))
        object.__setattr__(self, "fourier_cos", tuple(float(a) for a in self.fourier_cos))
        object.__setattr__(self, "fourier_sin", tuple(float(b) for b in self.fourier_sin))
        if not self.r0 > 0:
            raise GeometryError(f"star domain r0 must be positive, got {self.r0}")
        theta = np.linspace(0.0, 2 * np.pi, _THETA_CHECK, endpoint=False)
        r = self.radius(theta)
        i = int(np.argmin(r))
        if not r[i] > 0:
            raise GeometryError(
                f"star domain boundary radius is non-positive ({r[i]:.3g}) at theta={theta[i]:.6f}"
            )

    def radius(self, theta):
        theta = np.asarray(theta, dtype=float)
        s = np.ones_like(theta)
        for m, a in enumerate(self.fourier_cos, start=1):
            if a:
                s = s + a * np.cos(m * theta)
        for m, b in enumerate(self.fourier_sin, start=1):
            if b:
                s = s + b * np.sin(m * theta)
        return self.r0 * s


@dataclass(frozen=True)
class Annulus:
    r_inner: float
    r_outer: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        object.__setattr__(self, "r_inner", float(self.r_inner))
        object.__setattr__(self, "r_outer", float(self.r_outer))
        if not (self.r_inner > 0 and self.r_outer > self.r_inner):
            raise GeometryError(
                f"annulus needs 0 < r_inner < r_outer, got ({self.r_inner}, {self.r_outer})"
            )


Component = Union[Disk, StarDomain, Annulus]


def _with_center(c: Component, center) -> Component:
    if isinstance(c, Disk):
        return Disk(c.radius, center)
    if isinstance(c, Annulus):
        return Annulus(c.r_inner, c.r_outer, center)
    return StarDomain(c.r0, c.fourier_cos, c.fourier_sin, center)


def _local_bbox(c: Component) -> tuple[float, float, float, float]:
    """Bounding box (xmin, xmax, ymin, ymax) relative to the component center."""
    if isinstance(c, Disk):
        return (-c.radius, c.radius, -c.radius, c.radius)
    if isinstance(c, Annulus):
        return (-c.r_outer, c.r_outer, -c.r_outer, c.r_outer)
    theta = np.linspace(0.0, 2 * np.pi, _THETA_CHECK, endpoint=False)
    r = c.radius(theta)
    x, y = r * np.cos(theta), r * np.sin(theta)
    # dense sampling can miss the extreme by O(step^2); pad generously
    pad = 1e-4 * float(r.max())
    return (x.min() - pad, x.max() + pad, y.min() - pad, y.max() + pad)


def _bbox(c: Component) -> tuple[float, float, float, float]:
    x0, x1, y0, y1 = _local_bbox(c)
    cx, cy = c.center
    return (x0 + cx, x1 + cx, y0 + cy, y1 + cy)


@dataclass(frozen=True)
class DomainSpec:
    """Declarative description of a domain: components plus mesh resolution."""

    components: tuple[Component, ...]
    resolution: int = 16

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise GeometryError("domain spec needs at least one component")
        for c in comps:
            if not isinstance(c, (Disk, StarDomain, Annulus)):
                raise GeometryError(f"unknown component type {type(c).__name__}")
        if int(self.resolution) != self.resolution or self.resolution < 1:
            raise GeometryError(f"resolution must be a positive integer, got {self.resolution}")
        object.__setattr__(self, "resolution", int(self.resolution))
        boxes = [_bbox(c) for c in comps]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                gap = max(b[0] - a[1], a[0] - b[1], b[2] - a[3], a[2] - b[3])
                if not gap > 0:
                    raise GeometryError(f"components {i} and {j} overlap (bounding boxes intersect)")

    def with_resolution(self, resolution: int) -> "DomainSpec":
        return DomainSpec(self.components, resolution)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulated 2-D domain.

    Attributes
    ----------
    vertices : (N, 2) float array
    triangles : (T, 3) int array, counter-clockwise
    boundary_edges : (B, 2) int array, oriented with the domain on the left
    boundary_component : (B,) int array, component id of each boundary edge
    component_of_vertex : (N,) int array
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_component: np.ndarray
    component_of_vertex: np.ndarray

    def __post_init__(self):
        arrays = {
            "vertices": np.array(self.vertices, dtype=float).reshape(-1, 2),
            "triangles": np.array(self.triangles, dtype=np.int64).reshape(-1, 3),
            "boundary_edges": np.array(self.boundary_edges, dtype=np.int64).reshape(-1, 2),
            "boundary_component": np.array(self.boundary_component, dtype=np.int64).reshape(-1),
            "component_of_vertex": np.array(self.component_of_vertex, dtype=np.int64).reshape(-1),
        }
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.component_of_vertex) != len(self.vertices):
            raise GeometryError("component_of_vertex must have one entry per vertex")
        if len(self.boundary_component) != len(self.boundary_edges):
            raise GeometryError("boundary_component must have one entry per boundary edge")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_components(self) -> int:
        return int(self.component_of_vertex.max()) + 1 if len(self.vertices) else 0

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def boundary_vertices(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    def interior_vertices(self) -> np.ndarray:
        return ~self.boundary_vertices()

    def boundary_loops(self) -> list[tuple[int, np.ndarray, float]]:
        """Closed boundary cycles as ``(component, vertex cycle, signed area)``.

        Outer boundaries are counter-clockwise (positive area), hole boundaries
        clockwise.
        """
        nxt = {}
        comp = {}
        for (a, b), c in zip(self.boundary_edges.tolist(), self.boundary_component.tolist()):
            if a in nxt:
                raise GeometryError(f"boundary vertex {a} starts two boundary edges")
            nxt[a] = b
            comp[a] = c
        loops = []
        seen = set()
        for start in self.boundary_edges[:, 0].tolist():
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            v = nxt[start]
            while v != start:
                if v not in nxt or v in seen:
                    raise GeometryError("boundary edges do not form closed cycles")
                cycle.append(v)
                seen.add(v)
                v = nxt[v]
            cyc = np.array(cycle)
            x, y = self.vertices[cyc, 0], self.vertices[cyc, 1]
            area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
            loops.append((comp[start], cyc, area))
        return loops

    def edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    def euler_characteristics(self) -> dict[int, int]:
        """V - E + T per component (1 for a disk, 1 - holes in general)."""
        edges = self.edges()
        out = {}
        for c in range(self.n_components):
            nv = int(np.sum(self.component_of_vertex == c))
            ne = int(np.sum(self.component_of_vertex[edges[:, 0]] == c))
            nt = int(np.sum(self.component_of_vertex[self.triangles[:, 0]] == c))
            out[c] = nv - ne + nt
        return out

    def check(self) -> None:
        """Validate the mesh invariants, raising GeometryError on failure."""
        areas = self.signed_areas()
        bad = np.flatnonzero(~(areas > 0))
        if bad.size:
            raise GeometryError(f"triangle {int(bad[0])} has non-positive signed area {areas[bad[0]]:.3g}")
        tri_comp = self.component_of_vertex[self.triangles]
        if np.any(tri_comp != tri_comp[:, :1]):
            raise GeometryError("a triangle joins vertices of distinct components")
        # each boundary edge must be an edge of exactly one triangle, in the same orientation
        directed = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        counts: dict[tuple[int, int], int] = {}
        for a, b in np.sort(directed, axis=1).tolist():
            counts[(a, b)] = counts.get((a, b), 0) + 1
        oriented = set(map(tuple, directed.tolist()))
        for a, b in self.boundary_edges.tolist():
            key = (min(a, b), max(a, b))
            if counts.get(key, 0) != 1 or (a, b) not in oriented:
                raise GeometryError(f"boundary edge ({a}, {b}) is not a free edge of one triangle")
        n_free = sum(1 for v in counts.values() if v == 1)
        if n_free != len(self.boundary_edges):
            raise GeometryError("some free triangle edges are missing from boundary_edges")
        self.boundary_loops()


def _ring_strip(inner: np.ndarray, inner_theta: np.ndarray, outer: np.ndarray, outer_theta: np.ndarray):
    """Triangulate the band between two closed rings by merging on angle."""
    n0, n1 = len(inner), len(outer)
    t0 = np.append(inner_theta, inner_theta[0] + 2 * np.pi)
    t1 = np.append(outer_theta, outer_theta[0] + 2 * np.pi)
    tris = []
    a = b = 0
    while a < n0 or b < n1:
        advance_outer = b < n1 and (a >= n0 or t1[b + 1] <= t0[a + 1] + 1e-12)
        if advance_outer:
            tris.append((inner[a % n0], outer[b % n1], outer[(b + 1) % n1]))
            b += 1
        else:
            tris.append((inner[a % n0], outer[b % n1], inner[(a + 1) % n0]))
            a += 1
    return tris


def _reference_disk(n: int):
    """Polar (rho, theta) nodes and triangles of the unit-disk reference mesh."""
    rho = [0.0]
    theta = [0.0]
    rings = [np.array([0])]
    count = 1
    for i in range(1, n + 1):
        m = 6 * i
        rho.extend([i / n] * m)
        theta.extend((2 * np.pi * np.arange(m) / m).tolist())
        rings.append(np.arange(count, count + m))
        count += m
    rho = np.array(rho)
    theta = np.array(theta)
    tris = []
    c = rings[1]
    for j in range(6):
        tris.append((0, c[j], c[(j + 1) % 6]))
    for i in range(2, n + 1):
        tris.extend(_ring_strip(rings[i - 1], theta[rings[i - 1]], rings[i], theta[rings[i]]))
    return rho, theta, np.array(tris, dtype=np.int64), rings[-1]


def _orient(vertices: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p = vertices[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    tris = tris.copy()
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _mesh_star_like(c: Component, n: int):
    rho, theta, tris, outer = _reference_disk(n)
    if isinstance(c, Disk):
        r = np.full_like(theta, c.radius)
    else:
        r = c.radius(theta)
    cx, cy = c.center
    v = np.column_stack([cx + rho * r * np.cos(theta), cy + rho * r * np.sin(theta)])
    tris = _orient(np.column_stack([rho * np.cos(theta), rho * np.sin(theta)]), tris)
    bnd = np.column_stack([outer, np.roll(outer, -1)])
    return v, tris, [bnd]


def _mesh_annulus(c: Annulus, n: int):
    m = 6 * n
    theta = 2 * np.pi * np.arange(m) / m
    radii = c.r_inner + (c.r_outer - c.r_inner) * np.arange(n + 1) / n
    cx, cy = c.center
    rings = [np.arange(i * m, (i + 1) * m) for i in range(n + 1)]
    v = np.concatenate([np.column_stack([cx + r * np.cos(theta), cy + r * np.sin(theta)]) for r in radii])
    tris = []
    for i in range(n):
        tris.extend(_ring_strip(rings[i], theta, rings[i + 1], theta))
    tris = _orient(v - np.array([cx, cy]), np.array(tris, dtype=np.int64))
    outer = rings[-1]
    inner = rings[0]
    bnd_outer = np.column_stack([outer, np.roll(outer, -1)])
    bnd_inner = np.column_stack([np.roll(inner, -1), inner])  # clockwise around the hole
    return v, tris, [bnd_outer, bnd_inner]


def build_mesh(spec: DomainSpec) -> Mesh:
    """Triangulate every component of ``spec`` and merge them into one Mesh."""
    verts, tris, bnd, bcomp, vcomp = [], [], [], [], []
    offset = 0
    for cid, c in enumerate(spec.components):
        if isinstance(c, Annulus):
            v, t, loops = _mesh_annulus(c, spec.resolution)
        else:
            v, t, loops = _mesh_star_like(c, spec.resolution)
        verts.append(v)
        tris.append(t + offset)
        for loop in loops:
            bnd.append(loop + offset)
            bcomp.append(np.full(len(loop), cid))
        vcomp.append(np.full(len(v), cid))
        offset += len(v)
    mesh = Mesh(
        np.concatenate(verts),
        np.concatenate(tris),
        np.concatenate(bnd),
        np.concatenate(bcomp),
        np.concatenate(vcomp),
    )
    areas = mesh.signed_areas()
    if not np.all(areas > 0):
        i = int(np.flatnonzero(~(areas > 0))[0])
        raise GeometryError(f"mapped mesh has an inverted triangle ({i}); boundary too irregular")
    return mesh


def dilate(mesh: Mesh, r: float) -> Mesh:
    """Return the mesh of ``r * Omega`` (coordinates scaled about the origin)."""
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    return Mesh(
        mesh.vertices * r,
        mesh.triangles,
        mesh.boundary_edges,
        mesh.boundary_component,
        mesh.component_of_vertex,
    )


def measure(mesh: Mesh) -> float:
    """Area of the polygonal domain (sum of triangle areas)."""
    return float(np.sum(mesh.signed_areas()))


def boundary_length(mesh: Mesh) -> float:
    e = mesh.vertices[mesh.boundary_edges]
    return float(np.sum(np.hypot(*(e[:, 1] - e[:, 0]).T)))


def disjoint_union(specs: Sequence[DomainSpec]) -> DomainSpec:
    """Merge specs into one, laying components out left to right with gaps.

    The gap between consecutive bounding boxes is a quarter of the largest
    component diameter; component order is preserved.
    """
    comps = [c for s in specs for c in s.components]
    if not comps:
        raise GeometryError("disjoint_union needs at least one spec")
    boxes = [_local_bbox(c) for c in comps]
    diam = max(max(b[1] - b[0], b[3] - b[2]) for b in boxes)
    gap = _UNION_GAP * diam
    placed = []
    cursor = 0.0
    for c, (x0, x1, y0, y1) in zip(comps, boxes):
        cx = cursor - x0
        cy = -0.5 * (y0 + y1) + 0.0  # avoid -0.0 in emitted specs
        placed.append(_with_center(c, (cx, cy)))
        cursor = cx + x1 + gap
    return DomainSpec(tuple(placed), max(s.resolution for s in specs))


def spec_area(spec: DomainSpec) -> float:
    """Exact area of the parametric (curved) domain."""
    total = 0.0
    for c in spec.components:
        if isinstance(c, Disk):
            total += math.pi * c.radius**2
        elif isinstance(c, Annulus):
            total += math.pi * (c.r_outer**2 - c.r_inner**2)
        else:
            s = sum(a * a for a in c.fourier_cos) + sum(b * b for b in c.fourier_sin)
            total += math.pi * c.r0**2 * (1.0 + 0.5 * s)
    return total


def unit_square_mesh() -> Mesh:
    """Two-triangle mesh of [0, 1]^2."""
    return Mesh(
        [[0, 0], [1, 0], [1, 1], [0, 1]],
        [[0, 1, 2], [0, 2, 3]],
        [[0, 1], [1, 2], [2, 3], [3, 0]],
        [0, 0, 0, 0],
        [0, 0, 0, 0],
    )


# --- JSON ---------------------------------------------------------------------

_FIELDS = {
    "disk": {"type", "center", "radius"},
    "star": {"type", "center", "r0", "cos", "sin"},
    "annulus": {"type", "center", "r_inner", "r_outer"},
}


def spec_to_dict(spec: DomainSpec) -> dict:
    comps = []
    for c in spec.components:
        center = [c.center[0], c.center[1]]
        if isinstance(c, Disk):
            comps.append({"type": "disk", "center": center, "radius": c.radius})
        elif isinstance(c, Annulus):
            comps.append({"type": "annulus", "center": center, "r_inner": c.r_inner, "r_outer": c.r_outer})
        else:
            comps.append(
                {"type": "star", "center": center, "r0": c.r0, "cos": list(c.fourier_cos), "sin": list(c.fourier_sin)}
            )
    return {"components": comps, "resolution": spec.resolution}


def _number(x, name):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise GeometryError(f"field {name!r} must be a number, got {x!r}")
    return float(x)


def spec_from_dict(data: dict) -> DomainSpec:
    """Strictly parse the JSON document form of a DomainSpec."""
    if not isinstance(data, dict):
        raise GeometryError("domain document must be a JSON object")
    extra = set(data) - {"components", "resolution"}
    if extra:
        raise GeometryError(f"unknown domain fields: {sorted(extra)}")
    if "components" not in data or "resolution" not in data:
        raise GeometryError("domain document needs 'components' and 'resolution'")
    res = data["resolution"]
    if isinstance(res, bool) or not isinstance(res, int):
        raise GeometryError(f"resolution must be an integer, got {res!r}")
    comps = []
    for i, item in enumerate(data["components"]):
        if not isinstance(item, dict) or item.get("type") not in _FIELDS:
            raise GeometryError(f"component {i}: unknown or missing type")
        kind = item["type"]
        if set(item) != _FIELDS[kind]:
            raise GeometryError(f"component {i} ({kind}): expected fields {sorted(_FIELDS[kind])}, got {sorted(item)}")
        center = item["center"]
        if not isinstance(center, list) or len(center) != 2:
            raise GeometryError(f"component {i}: center must be [x, y]")
        center = (_number(center[0], "center"), _number(center[1], "center"))
        if kind == "disk":
            comps.append(Disk(_number(item["radius"], "radius"), center))
        elif kind == "annulus":
            comps.append(Annulus(_number(item["r_inner"], "r_inner"), _number(item["r_outer"], "r_outer"), center))
        else:
            cos = [_number(a, "cos") for a in item["cos"]]
            sin = [_number(b, "sin") for b in item["sin"]]
            comps.append(StarDomain(_number(item["r0"], "r0"), tuple(cos), tuple(sin), center))
    return DomainSpec(tuple(comps), res)


def spec_to_json(spec: DomainSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)


def spec_from_json(text: str) -> DomainSpec:
    return spec_from_dict(json.loads(text))
