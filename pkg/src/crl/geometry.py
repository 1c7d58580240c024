"""Background spaces and their discretizations.

Two kinds of :class:`DiscreteDomain` are produced:

* 1-D radial grids on ``[0, r]`` for geodesic balls in space forms of any
  dimension ``n``; the weight of the grid is the sphere-volume density
  ``|S^{n-1}| sn(t)^{n-1}``.
* 2-D triangulations of surfaces (``n = 2``): flat disks, hyperbolic disks in
  the Poincare chart, and caps / cap complements / the whole of the unit
  sphere embedded in R^3.

All background metrics used for surfaces are conformal to the chart metric,
so the cotangent stiffness computed in chart coordinates is already the
background Dirichlet form; only the mass needs the chart density.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, Delaunay
from scipy.special import gamma

from .errors import (
    DisconnectedLevelSet,
    EmptyLevelSet,
    InvalidRadius,
    InvalidRegion,
    UnsupportedCombination,
)

KINDS = ("euclidean", "sphere", "hyperbolic", "product")

# Gauss-Legendre nodes for weighted 1-D integrals
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def sphere_measure(m: int) -> float:
    """Volume of the unit m-sphere S^m."""
    return 2.0 * math.pi ** ((m + 1) / 2) / gamma((m + 1) / 2)


@dataclass(frozen=True)
class BackgroundSpace:
    """Analytic model geometry.

    ``kind`` is one of ``euclidean``, ``sphere`` (unit radius), ``hyperbolic``
    (sectional curvature -1) or ``product`` (S^k x E^2, so ``n = k + 2``).
    """

    kind: str
    n: int
    k: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidRegion(f"unknown space kind {self.kind!r}")
        if self.n < 2:
            raise InvalidRegion("dimension must be >= 2")
        if self.kind == "product":
            if self.k is None or self.k < 1 or self.n != self.k + 2:
                raise InvalidRegion("product space needs k >= 1 and n = k + 2")

    @classmethod
    def euclidean(cls, n=2):
        return cls("euclidean", n)

    @classmethod
    def sphere(cls, n=2):
        return cls("sphere", n)

    @classmethod
    def hyperbolic(cls, n=2):
        return cls("hyperbolic", n)

    @classmethod
    def product(cls, k=2):
        return cls("product", k + 2, k)

    @property
    def is_space_form(self) -> bool:
        return self.kind != "product"

    @property
    def scalar_curvature(self) -> float:
        n = self.n
        if self.kind == "euclidean":
            return 0.0
        if self.kind == "sphere":
            return float(n * (n - 1))
        if self.kind == "hyperbolic":
            return float(-n * (n - 1))
        return float(self.k * (self.k - 1))

    @property
    def max_radius(self) -> float:
        return math.pi if self.kind == "sphere" else math.inf

    def sn(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            return np.sin(t)
        if self.kind == "hyperbolic":
            return np.sinh(t)
        return t

    def dsn(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            return np.cos(t)
        if self.kind == "hyperbolic":
            return np.cosh(t)
        return np.ones_like(t)

    def radial_density(self, t):
        """Volume density of geodesic spheres, |S^{n-1}| sn(t)^{n-1}."""
        return sphere_measure(self.n - 1) * self.sn(t) ** (self.n - 1)

    def ball_volume(self, r: float) -> float:
        return quad(lambda t: float(self.radial_density(t)), 0.0, r, epsabs=1e-13, epsrel=1e-13)[0]

    def sphere_mean_curvature(self, r):
        """Mean curvature of the geodesic sphere of radius r (outward normal)."""
        return (self.n - 1) * self.dsn(r) / self.sn(r)

    def distance(self, x, y):
        """Geodesic distance between chart points (rows of x and y).

        Charts: Cartesian for euclidean, unit vectors in R^{n+1} for sphere,
        Poincare ball for hyperbolic, (unit vector in R^{k+1}, R^2) for product.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self.kind == "euclidean":
            return np.linalg.norm(x - y, axis=1)
        if self.kind == "sphere":
            return _sphere_angle(x, y)
        if self.kind == "hyperbolic":
            d2 = np.sum((x - y) ** 2, axis=1)
            den = (1.0 - np.sum(x * x, axis=1)) * (1.0 - np.sum(y * y, axis=1))
            return np.arccosh(1.0 + 2.0 * d2 / den)
        k1 = self.k + 1
        ds = _sphere_angle(x[:, :k1], y[:, :k1])
        de = np.linalg.norm(x[:, k1:] - y[:, k1:], axis=1)
        return np.hypot(ds, de)

    def to_dict(self):
        d = {"kind": self.kind, "n": self.n}
        if self.k is not None:
            d["k"] = self.k
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], int(d["n"]), d.get("k"))


def _sphere_angle(x, y):
    cross = np.linalg.norm(np.cross(x, y), axis=1) if x.shape[1] == 3 else None
    dot = np.sum(x * y, axis=1)
    if cross is None:
        cross = np.sqrt(np.maximum(np.sum(x * x, 1) * np.sum(y * y, 1) - dot**2, 0.0))
    return np.arctan2(cross, dot)


@dataclass(frozen=True)
class RegionSpec:
    """A region of a background space.

    ``shape`` is ``ball`` (geodesic ball), ``complement`` (complement of a
    geodesic ball, closed spaces only) or ``superlevel`` (``{field > level}``).
    Centers default to the origin / north pole.
    """

    shape: str
    radius: float | None = None
    center: tuple | None = None
    level: float | None = None
    field: Any = None

    @classmethod
    def ball(cls, radius, center=None):
        return cls("ball", radius=float(radius), center=center)

    @classmethod
    def complement(cls, radius, center=None):
        return cls("complement", radius=float(radius), center=center)

    @classmethod
    def superlevel(cls, field, level):
        return cls("superlevel", field=field, level=float(level))

    def validate(self, space: BackgroundSpace):
        if self.shape == "ball":
            r = self.radius
            if r is None or not r > 0:
                raise InvalidRegion("ball radius must be positive")
            if space.kind == "sphere" and not r < math.pi:
                raise InvalidRegion("ball radius on the sphere must be < pi")
        elif self.shape == "complement":
            if space.kind != "sphere":
                raise InvalidRegion("complements are only supported on the closed sphere")
            r = self.radius
            if r is None or not 0 < r < math.pi:
                raise InvalidRegion("complement radius must lie in (0, pi)")
        elif self.shape == "superlevel":
            if self.field is None or self.level is None:
                raise InvalidRegion("superlevel region needs a field and a level")
            vmax = float(np.max(self.field.values))
            if not 0 < self.level < vmax:
                raise InvalidRegion("superlevel level must lie in (0, max field)")
        else:
            raise InvalidRegion(f"unknown region shape {self.shape!r}")


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Radial grid (``dimension == 1``) or triangulation (``dimension == 2``).

    Derived quantities (stiffness, lumped mass, adjacency) are cached on first
    use; the arrays themselves are read-only.
    """

    space: BackgroundSpace
    dimension: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    h: float
    label: str = ""
    parent: "DiscreteDomain | None" = field(default=None, repr=False)
    parent_vertex: np.ndarray | None = field(default=None, repr=False)
    parent_cell: np.ndarray | None = field(default=None, repr=False)
    from_parent: Any = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _readonly(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "cells", _readonly(np.asarray(self.cells, dtype=np.int64)))
        object.__setattr__(self, "boundary", _readonly(np.unique(np.asarray(self.boundary, dtype=np.int64))))

    def __repr__(self):
        return (f"DiscreteDomain({self.space.kind}, n={self.n}, dim={self.dimension}, "
                f"{self.num_vertices} vertices, {len(self.cells)} cells, h={self.h:.4g})")

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def is_boundary(self):
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.boundary] = True
        return mask

    @cached_property
    def interior(self):
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def scalar_curvature(self):
        """Background scalar curvature per vertex."""
        return np.full(self.num_vertices, self.space.scalar_curvature)

    # -- metric data ---------------------------------------------------
    @cached_property
    def density(self):
        """Chart volume density per vertex (2-D) or radial weight (1-D)."""
        if self.dimension == 1:
            return self.space.radial_density(self.vertices[:, 0])
        if self.space.kind == "hyperbolic":
            r2 = np.sum(self.vertices**2, axis=1)
            return 4.0 / (1.0 - r2) ** 2
        return np.ones(self.num_vertices)

    @cached_property
    def chart_areas(self):
        if self.dimension == 1:
            t = self.vertices[self.cells, 0]
            return t[:, 1] - t[:, 0]
        p = self._cell_points()
        c = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.linalg.norm(c, axis=1)

    def _cell_points(self):
        p = self.vertices[self.cells]
        if p.shape[2] == 2:
            p = np.concatenate([p, np.zeros(p.shape[:2] + (1,))], axis=2)
        return p

    @cached_property
    def cell_volumes(self):
        """Background volume of every cell."""
        if self.dimension == 1:
            return np.array([self._radial_integral(a, b) for a, b in self.vertices[self.cells, 0]])
        return self.chart_areas * self.density[self.cells].mean(axis=1)

    def _radial_integral(self, a, b, weight=None):
        x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        f = self.space.radial_density(x)
        if weight is not None:
            f = f * weight(x)
        return 0.5 * (b - a) * float(np.dot(_GL_W, f))

    @cached_property
    def mass(self):
        """Lumped (diagonal) mass in the background metric."""
        m = np.zeros(self.num_vertices)
        if self.dimension == 1:
            for c, (a, b) in zip(self.cells, self.vertices[self.cells, 0]):
                mid = 0.5 * (a + b)
                m[c[0]] += self._radial_integral(a, mid)
                m[c[1]] += self._radial_integral(mid, b)
            return m
        np.add.at(m, self.cells.ravel(), np.repeat(self.chart_areas / 3.0, 3))
        return m * self.density

    @cached_property
    def stiffness(self):
        """Dirichlet-form matrix: u^T K u = integral of |grad u|^2 for P1 u."""
        N = self.num_vertices
        if self.dimension == 1:
            t = self.vertices[self.cells, 0]
            dt = t[:, 1] - t[:, 0]
            w = np.array([self._radial_integral(a, b) for a, b in t]) / dt**2
            i, j = self.cells[:, 0], self.cells[:, 1]
            rows = np.concatenate([i, j, i, j])
            cols = np.concatenate([i, j, j, i])
            vals = np.concatenate([w, w, -w, -w])
            return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
        p = self._cell_points()
        rows, cols, vals = [], [], []
        area2 = 2.0 * self.chart_areas
        for k in range(3):
            i, j, l = k, (k + 1) % 3, (k + 2) % 3
            # cotangent of the angle at corner i weights edge (j, l)
            e1 = p[:, j] - p[:, i]
            e2 = p[:, l] - p[:, i]
            cot = np.sum(e1 * e2, axis=1) / area2
            a, b = self.cells[:, j], self.cells[:, l]
            w = 0.5 * cot
            rows += [a, b, a, b]
            cols += [b, a, a, b]
            vals += [-w, -w, w, w]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
        )

    def laplacian(self, values):
        """Discrete Laplace-Beltrami -(K u)/m; meaningful at interior vertices."""
        return -(self.stiffness @ np.asarray(values, dtype=float)) / self.mass

    # -- topology ----------------------------------------------------------
    @cached_property
    def edges(self):
        if self.dimension == 1:
            return np.sort(self.cells, axis=1)
        e = np.concatenate([self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @cached_property
    def boundary_edges(self):
        if self.dimension == 1:
            return np.zeros((0, 2), dtype=np.int64)
        e = np.sort(np.concatenate(
            [self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    @cached_property
    def adjacency(self):
        N = self.num_vertices
        e = self.edges
        data = np.ones(2 * len(e))
        return sp.csr_matrix(
            (data, (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(N, N),
        )

    @cached_property
    def vertex_cells(self):
        """Sparse incidence matrix (vertices x cells)."""
        nc, k = self.cells.shape
        return sp.csr_matrix(
            (np.ones(nc * k), (self.cells.ravel(), np.repeat(np.arange(nc), k))),
            shape=(self.num_vertices, nc),
        )

    def is_connected(self) -> bool:
        return connected_components(self.adjacency, directed=False)[0] == 1

    # -- gradients --------------------------------------------------------
    def cell_gradients(self, values):
        """Gradient of the P1 interpolant on every cell, in chart coordinates."""
        u = np.asarray(values, dtype=float)
        if self.dimension == 1:
            t = self.vertices[self.cells, 0]
            return ((u[self.cells[:, 1]] - u[self.cells[:, 0]]) / (t[:, 1] - t[:, 0]))[:, None]
        p = self._cell_points()
        nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        area2 = np.linalg.norm(nrm, axis=1)
        nhat = nrm / area2[:, None]
        g = np.zeros((len(self.cells), 3))
        for k in range(3):
            j, l = (k + 1) % 3, (k + 2) % 3
            g += u[self.cells[:, k], None] * np.cross(nhat, p[:, l] - p[:, j]) / area2[:, None]
        return g

    def cell_gradient_norm2(self, values):
        """|grad u|^2 per cell in the background metric."""
        g2 = np.sum(self.cell_gradients(values) ** 2, axis=1)
        if self.dimension == 2 and self.space.kind == "hyperbolic":
            g2 = g2 / self.density[self.cells].mean(axis=1)
        return g2

    def vertex_gradient_norm2(self, values):
        """Volume-weighted average of the adjacent cell values of |grad u|^2."""
        w = self.cell_volumes
        num = self.vertex_cells @ (w * self.cell_gradient_norm2(values))
        return num / (self.vertex_cells @ w)

    # -- identity -----------------------------------------------------------
    def to_dict(self):
        return {
            "space": self.space.kind,
            "n": self.n,
            "dimension": self.dimension,
            "vertices": self.vertices.tolist(),
            "cells": self.cells.tolist(),
            "boundary": self.boundary.tolist(),
            "h": self.h,
        }

    @cached_property
    def hash(self) -> str:
        d = hashlib.sha256()
        d.update(json.dumps(self.space.to_dict(), sort_keys=True).encode())
        for a in (self.vertices, self.cells, self.boundary):
            d.update(np.ascontiguousarray(a).tobytes())
        d.update(repr(self.h).encode())
        return d.hexdigest()[:16]


def domain_to_json(domain: DiscreteDomain) -> str:
    return json.dumps(domain.to_dict())


def domain_from_json(text: str, k: int | None = None) -> DiscreteDomain:
    d = json.loads(text)
    space = BackgroundSpace(d["space"], int(d["n"]), k)
    return DiscreteDomain(space, int(d["dimension"]), np.array(d["vertices"], dtype=float),
                          np.array(d["cells"], dtype=np.int64), np.array(d["boundary"], dtype=np.int64),
                          float(d["h"]))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real value per vertex of a domain."""

    domain: DiscreteDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.domain.num_vertices,):
            raise ValueError(f"expected {self.domain.num_vertices} values, got shape {v.shape}")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.dot(self.domain.mass, self.values**2)))

    @property
    def dirichlet_energy(self) -> float:
        return float(self.values @ (self.domain.stiffness @ self.values))

    def to_json(self) -> str:
        return json.dumps({"domainHash": self.domain.hash, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str, domain: DiscreteDomain) -> "ScalarField":
        d = json.loads(text)
        if d.get("domainHash") not in (None, domain.hash):
            raise InvalidRegion("field was written for a different mesh")
        return cls(domain, np.array(d["values"], dtype=float))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_radial_domain(space: BackgroundSpace, r: float, grid_points: int,
                        extend_to: float | None = None) -> DiscreteDomain:
    """Uniform grid on [0, r]; the boundary is the single vertex t = r.

    With ``extend_to`` the grid continues past ``r`` with the same spacing
    (used for deformations supported in the ball of radius ``r``).
    """
    if not space.is_space_form:
        raise UnsupportedCombination("radial grids need a space form")
    if grid_points < 16:
        raise InvalidRadius("need at least 16 grid points")
    if not (r > 0 and r < space.max_radius):
        raise InvalidRadius(f"radius {r} invalid for {space.kind}")
    t = np.linspace(0.0, r, grid_points)
    if extend_to is not None:
        if not (r < extend_to < space.max_radius):
            raise InvalidRadius("extension must lie beyond r and inside the space")
        dt = t[1] - t[0]
        extra = int(math.ceil((extend_to - r) / dt))
        t = np.concatenate([t, r + dt * np.arange(1, extra + 1)])
        t[-1] = min(t[-1], extend_to)
    N = len(t)
    cells = np.column_stack([np.arange(N - 1), np.arange(1, N)])
    return DiscreteDomain(space, 1, t[:, None], cells, [N - 1], float(np.max(np.diff(t))),
                          label=f"radial ball r={r:g}")


def _rotation_to(center):
    """Rotation taking the north pole (0, 0, 1) to ``center``."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(z, c)
    s, cth = np.linalg.norm(v), float(np.dot(z, c))
    if s < 1e-15:
        return np.eye(3) if cth > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx * ((1 - cth) / s**2)


def _ring_points(space, breakpoints, spacing):
    """Concentric geodesic rings, centered at the origin / north pole."""
    thetas = [0.0]
    start = 0.0
    for b in breakpoints:
        m = max(1, int(math.ceil((b - start) / spacing - 1e-9)))
        thetas += list(start + (b - start) * np.arange(1, m + 1) / m)
        start = b
    pts, ring = [], []
    for k, th in enumerate(thetas):
        circ = 2.0 * math.pi * float(space.sn(th))
        count = 1 if circ < 1e-9 else max(6, int(math.ceil(circ / spacing - 1e-9)))
        a = 2.0 * math.pi * (np.arange(count) + 0.5 * (k % 2)) / count
        ring += [k] * count
        if space.kind == "sphere":
            s = math.sin(th)
            p = np.column_stack([s * np.cos(a), s * np.sin(a), np.full(count, math.cos(th))])
        else:
            rad = math.tanh(th / 2.0) if space.kind == "hyperbolic" else th
            p = np.column_stack([rad * np.cos(a), rad * np.sin(a)])
        if count == 1:
            p = p[:1]
            if th > 0:  # antipodal pole
                p = np.array([[0.0, 0.0, -1.0]])
        pts.append(p)
    return np.concatenate(pts), np.array(ring), np.array(thetas)


def _orient(space, vertices, cells):
    p = vertices[cells]
    if p.shape[2] == 2:
        s = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    else:
        s = np.sum(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]) * p.sum(axis=1), axis=1)
    cells = cells.copy()
    flip = s < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]
    return cells


def _edge_lengths(space, vertices, cells):
    p = vertices[cells]
    lengths = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        d = np.linalg.norm(p[:, i] - p[:, j], axis=1)
        if space.kind == "hyperbolic":
            d = d * 2.0 / (1.0 - 0.5 * (np.sum(p[:, i] ** 2, 1) + np.sum(p[:, j] ** 2, 1)))
        lengths.append(d)
    return np.column_stack(lengths)


def polar_mesh(space: BackgroundSpace, breakpoints, h: float, center=None) -> DiscreteDomain:
    """Quasi-uniform triangulation of a geodesic disk made of concentric rings.

    ``breakpoints`` is an increasing list of radii that are guaranteed to be
    rings of the mesh; the last one is the outer radius (``pi`` on the
    sphere gives the closed sphere).
    """
    if space.n != 2 or space.kind == "product":
        raise UnsupportedCombination("2-D meshing needs a 2-dimensional space form")
    if not h > 0:
        raise InvalidRegion("mesh size must be positive")
    outer = float(breakpoints[-1])
    closed = space.kind == "sphere" and outer >= math.pi - 1e-12
    spacing = 0.8 * h
    for _ in range(40):
        pts, ring, thetas = _ring_points(space, breakpoints, spacing)
        if space.kind == "sphere":
            hull = ConvexHull(pts)
            cells = hull.simplices
            if not closed:
                top = ring == len(thetas) - 1
                cells = cells[~np.all(top[cells], axis=1)]
        else:
            cells = Delaunay(pts).simplices
        cells = _orient(space, pts, cells)
        hmax = float(np.max(_edge_lengths(space, pts, cells)))
        if hmax <= h:
            break
        spacing *= 0.95
    used = np.unique(cells)
    if len(used) != len(pts):
        raise InvalidRegion("triangulation dropped vertices")
    if center is not None:
        if space.kind == "sphere":
            pts = pts @ _rotation_to(center).T
        elif space.kind == "euclidean":
            pts = pts + np.asarray(center, dtype=float)
        elif np.linalg.norm(center) > 0:
            raise UnsupportedCombination("hyperbolic disks are centered at the origin")
    dom = DiscreteDomain(space, 2, pts, cells, [], hmax)
    bnd = np.unique(dom.boundary_edges)
    return DiscreteDomain(space, 2, pts, cells, bnd, hmax, label=f"polar mesh {list(breakpoints)}")


def build_domain(space: BackgroundSpace, region: RegionSpec, h: float) -> DiscreteDomain:
    """Triangulate a region of a 2-dimensional background space."""
    region.validate(space)
    if not h > 0:
        raise InvalidRegion("mesh size must be positive")
    if region.shape == "superlevel":
        return superlevel_domain(region.field.domain, region.field, region.level)
    if space.n != 2 or space.kind == "product":
        raise UnsupportedCombination(
            f"2-D meshing of {space.kind} n={space.n}; use build_radial_domain for balls")
    if region.shape == "ball":
        dom = polar_mesh(space, [region.radius], h, region.center)
        label = f"{space.kind} ball r={region.radius:g}"
    else:
        c = np.asarray(region.center if region.center is not None else (0, 0, 1), dtype=float)
        dom = polar_mesh(space, [math.pi - region.radius], h, -c / np.linalg.norm(c))
        label = f"sphere minus ball r={region.radius:g}"
    return DiscreteDomain(space, 2, dom.vertices, dom.cells, dom.boundary, dom.h, label=label)


def sphere_with_cap(r: float, h: float):
    """Closed unit S^2 mesh with the cap of radius r (about the north pole)
    resolved by a ring; returns ``(sphere, cap_cell_mask)``."""
    space = BackgroundSpace.sphere(2)
    dom = polar_mesh(space, [r, math.pi], h)
    ang = np.arccos(np.clip(dom.vertices[:, 2], -1.0, 1.0))
    inside = ang <= r + 1e-9
    return dom, np.all(inside[dom.cells], axis=1)


# ---------------------------------------------------------------------------
# sub-meshes
# ---------------------------------------------------------------------------

def restrict(domain: DiscreteDomain, cell_mask, label="") -> DiscreteDomain:
    """Sub-mesh made of the selected cells; boundary is recomputed topologically."""
    cell_mask = np.asarray(cell_mask, dtype=bool)
    cells = domain.cells[cell_mask]
    if len(cells) == 0:
        raise InvalidRegion("empty cell selection")
    used = np.unique(cells)
    new_index = -np.ones(domain.num_vertices, dtype=np.int64)
    new_index[used] = np.arange(len(used))
    new_cells = new_index[cells]
    if domain.dimension == 1:
        deg = np.bincount(new_cells.ravel(), minlength=len(used))
        ends = np.flatnonzero(deg == 1)
        # t = 0 is the symmetry axis, never a boundary
        ends = ends[domain.vertices[used[ends], 0] > 0]
        bnd = ends
    else:
        tmp = DiscreteDomain(domain.space, 2, domain.vertices[used], new_cells, [], domain.h)
        bnd = np.unique(tmp.boundary_edges)
    P = sp.csr_matrix((np.ones(len(used)), (np.arange(len(used)), used)),
                      shape=(len(used), domain.num_vertices))
    return DiscreteDomain(domain.space, domain.dimension, domain.vertices[used], new_cells, bnd,
                          domain.h, label=label or domain.label, parent=domain,
                          parent_vertex=used, parent_cell=np.flatnonzero(cell_mask), from_parent=P)


@dataclass(frozen=True, eq=False)
class LevelSplit:
    """A mesh cut along ``{field = level}``; ``above`` flags cells in the superlevel set."""

    domain: DiscreteDomain
    above: np.ndarray
    values: np.ndarray  # field transported to the split mesh


def split_by_level(base: DiscreteDomain, values, level: float) -> LevelSplit:
    """Cut every cell crossed by the level set, placing the new vertices by
    linear interpolation along the crossed edges."""
    f = np.asarray(values, dtype=float)
    pos = f > level
    verts = [base.vertices]
    rows, cols, wts = list(range(base.num_vertices)), list(range(base.num_vertices)), [1.0] * base.num_vertices
    cut_index = {}
    nv = base.num_vertices

    def cut(a, b):
        nonlocal nv
        key = (a, b) if a < b else (b, a)
        if key in cut_index:
            return cut_index[key]
        # a above, b not
        if f[b] == level:
            cut_index[key] = b
            return b
        tau = (level - f[a]) / (f[b] - f[a])
        p = (1 - tau) * base.vertices[a] + tau * base.vertices[b]
        if base.dimension == 2 and base.space.kind == "sphere":
            p = p / np.linalg.norm(p)
        verts.append(p[None, :])
        rows.extend([nv, nv])
        cols.extend([a, b])
        wts.extend([1 - tau, tau])
        cut_index[key] = nv
        nv += 1
        return nv - 1

    nbase = base.num_vertices

    def point(v):
        return base.vertices[v] if v < nbase else verts[v - nbase + 1][0]

    new_cells, above, parent_cell = [], [], []
    for ci, c in enumerate(base.cells):
        s = pos[c]
        if s.all() or not s.any():
            new_cells.append(list(c))
            above.append(bool(s.all()))
            parent_cell.append(ci)
            continue
        if base.dimension == 1:
            a, b = (c[0], c[1]) if s[0] else (c[1], c[0])
            p = cut(a, b)
            if p != b:
                new_cells += [[c[0], p] if s[0] else [p, c[1]], [p, c[1]] if s[0] else [c[0], p]]
                above += [True, False]
                parent_cell += [ci, ci]
            else:
                new_cells.append(list(c))
                above.append(False)
                parent_cell.append(ci)
            continue
        # rotate so that the odd vertex (unique sign) comes first
        k = int(np.flatnonzero(s if s.sum() == 1 else ~s)[0])
        A, B, C = c[k], c[(k + 1) % 3], c[(k + 2) % 3]
        single_above = bool(pos[A])
        P = cut(A, B) if single_above else cut(B, A)
        Q = cut(A, C) if single_above else cut(C, A)
        tri = [A, P, Q]
        quad_ = [P, B, C, Q]
        pieces = []
        if len({A, P, Q}) == 3:
            pieces.append((tri, single_above))
        for t in _split_quad(quad_, point):
            pieces.append((t, not single_above))
        for t, ab in pieces:
            new_cells.append(t)
            above.append(ab)
            parent_cell.append(ci)
    V = np.concatenate(verts)
    cells = np.array(new_cells, dtype=np.int64)
    above = np.array(above)
    if base.dimension == 2:
        cells = _orient(base.space, V, cells)
        areas = DiscreteDomain(base.space, 2, V, cells, [], base.h).chart_areas
        keep = areas > 1e-15 * max(base.h, 1e-300) ** 2
        cells, above = cells[keep], above[keep]
        parent_cell = np.array(parent_cell)[keep]
    P = sp.csr_matrix((wts, (rows, cols)), shape=(len(V), base.num_vertices))
    fv = P @ f
    fv[base.num_vertices:] = level
    tmp = DiscreteDomain(base.space, base.dimension, V, cells, [], base.h)
    if base.dimension == 2:
        bnd = np.unique(tmp.boundary_edges)
    else:
        bnd = base.boundary
    pv = np.concatenate([np.arange(base.num_vertices), -np.ones(len(V) - base.num_vertices, dtype=np.int64)])
    dom = DiscreteDomain(base.space, base.dimension, V, cells, bnd, base.h,
                         label=f"{base.label} split at {level:g}", parent=base,
                         parent_vertex=pv, parent_cell=np.asarray(parent_cell), from_parent=P)
    return LevelSplit(dom, above, fv)


def _split_quad(q, point):
    """Two triangles for quad q (in cyclic order), using the shorter diagonal."""
    q = [v for i, v in enumerate(q) if v != q[i - 1]]
    if len(q) < 3:
        return []
    if len(q) == 3:
        return [q]
    d02 = np.linalg.norm(point(q[0]) - point(q[2]))
    d13 = np.linalg.norm(point(q[1]) - point(q[3]))
    if d02 <= d13:
        return [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    return [[q[1], q[2], q[3]], [q[1], q[3], q[0]]]


def superlevel_domain(base: DiscreteDomain, field: ScalarField, level: float) -> DiscreteDomain:
    """The sub-mesh ``{field > level}`` with its boundary on the level set."""
    f = np.asarray(field.values if isinstance(field, ScalarField) else field, dtype=float)
    if not level < float(np.max(f)):
        raise EmptyLevelSet(f"level {level} >= max field {np.max(f)}")
    if np.all(f > level):
        return DiscreteDomain(base.space, base.dimension, base.vertices, base.cells, base.boundary,
                              base.h, label=base.label, parent=base,
                              parent_vertex=np.arange(base.num_vertices),
                              parent_cell=np.arange(len(base.cells)),
                              from_parent=sp.identity(base.num_vertices, format="csr"))
    split = split_by_level(base, f, level)
    if not split.above.any():
        raise EmptyLevelSet("no cell above the level")
    sub = restrict(split.domain, split.above, label=f"{{field > {level:g}}}")
    if not sub.is_connected():
        raise DisconnectedLevelSet(f"superlevel set at {level} is disconnected")
    # compose the maps so the result refers back to ``base`` directly
    P = sub.from_parent @ split.domain.from_parent
    pv = split.domain.parent_vertex[sub.parent_vertex]
    pc = split.domain.parent_cell[sub.parent_cell]
    return DiscreteDomain(base.space, base.dimension, sub.vertices, sub.cells, sub.boundary, sub.h,
                          label=sub.label, parent=base, parent_vertex=pv, parent_cell=pc,
                          from_parent=P.tocsr())


def geodesic_radius(domain: DiscreteDomain, center=None):
    """Distance of every vertex from the center (origin / north pole)."""
    v = domain.vertices
    if domain.dimension == 1:
        return v[:, 0].copy()
    if domain.space.kind == "sphere":
        c = np.array([0.0, 0.0, 1.0]) if center is None else np.asarray(center, dtype=float)
        return _sphere_angle(v, np.broadcast_to(c, v.shape))
    c = np.zeros(2) if center is None else np.asarray(center, dtype=float)
    return domain.space.distance(v, np.broadcast_to(c, v.shape))
