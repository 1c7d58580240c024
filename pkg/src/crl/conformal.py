"""Conformal change of scalar and boundary mean curvature.

Conventions: ``g = e^{2u} gbar`` when n = 2 and ``g = u^{4/(n-2)} gbar``
when n >= 3.  Curvatures are evaluated with the lumped P1 Laplace-Beltrami
operator of the background metric; values at boundary vertices are NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDelta, NonIdentityBoundary, NonPositiveEigenvalue, NonPositiveFactor
from .geometry import DiscreteDomain, ScalarField

EXPONENTIAL = "exponential"
POWER = "power"


def convention_for(n: int) -> str:
    return EXPONENTIAL if n == 2 else POWER


def boundary_coefficient(n: int) -> float:
    """Factor in H_g = H_gbar + c * d_nu u for identity boundary data."""
    return 2.0 if n == 2 else 2.0 * (n - 1) / (n - 2)


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    u: ScalarField
    convention: str

    def __post_init__(self):
        n = self.n
        if self.convention not in (EXPONENTIAL, POWER):
            raise ValueError(f"unknown convention {self.convention!r}")
        if (self.convention == EXPONENTIAL) != (n == 2):
            raise ValueError("exponential convention is used exactly when n = 2")
        if self.convention == POWER and np.min(self.u.values) < 1e-10:
            raise NonPositiveFactor(f"power factor must be positive, min = {np.min(self.u.values):.3g}")

    @property
    def domain(self) -> DiscreteDomain:
        return self.u.domain

    @property
    def n(self) -> int:
        return self.u.domain.n

    @property
    def identity_value(self) -> float:
        return 0.0 if self.convention == EXPONENTIAL else 1.0

    @classmethod
    def from_values(cls, domain: DiscreteDomain, values):
        return cls(ScalarField(domain, values), convention_for(domain.n))

    @classmethod
    def identity(cls, domain: DiscreteDomain):
        conv = convention_for(domain.n)
        return cls(ScalarField(domain, np.full(domain.num_vertices, 0.0 if conv == EXPONENTIAL else 1.0)), conv)

    @classmethod
    def from_multiplier(cls, domain: DiscreteDomain, w):
        """Factor of g = w^p gbar with p = 4/(n-2), or p = 2 when n = 2."""
        w = np.asarray(w, dtype=float)
        if domain.n == 2:
            if np.min(w) <= 0:
                raise NonPositiveFactor("multiplier must be positive")
            return cls(ScalarField(domain, np.log(w)), EXPONENTIAL)
        return cls(ScalarField(domain, w), POWER)

    @property
    def multiplier(self):
        """w with g = w^p gbar (see :meth:`from_multiplier`)."""
        v = self.u.values
        return np.exp(v) if self.convention == EXPONENTIAL else v.copy()

    def deviation(self):
        """|u - identity| per vertex."""
        return np.abs(self.u.values - self.identity_value)


def laplacian(domain: DiscreteDomain, values):
    """Lumped P1 Laplacian in edge-difference form (exactly 0 on constants)."""
    rows, cols, w = _edge_weights(domain)
    u = np.asarray(values, dtype=float)
    out = np.bincount(rows, weights=w * (u[cols] - u[rows]), minlength=domain.num_vertices)
    return out / domain.mass


def _edge_weights(domain):
    cache = domain.__dict__.get("_edge_weight_cache")
    if cache is None:
        K = domain.stiffness.tocoo()
        off = K.row != K.col
        cache = (K.row[off], K.col[off], -K.data[off])
        domain.__dict__["_edge_weight_cache"] = cache
    return cache


def _interior_only(domain, values):
    out = np.array(values, dtype=float)
    out[domain.boundary] = np.nan
    return out


def scalar_curvature(cf: ConformalFactor, domain: DiscreteDomain | None = None) -> ScalarField:
    """Pointwise R_g at interior vertices (NaN on the boundary)."""
    domain = domain or cf.domain
    u = cf.u.values
    Rb = domain.scalar_curvature
    lap = laplacian(domain, u)
    if cf.convention == EXPONENTIAL:
        R = np.exp(-2.0 * u) * (Rb - 2.0 * lap)
    else:
        n = cf.n
        if np.min(u) <= 0:
            raise NonPositiveFactor("power factor must be positive")
        R = u ** (-(n + 2) / (n - 2)) * (Rb * u - 4.0 * (n - 1) / (n - 2) * lap)
    return ScalarField(domain, _interior_only(domain, R))


def linearized_scalar_curvature(v, domain: DiscreteDomain) -> ScalarField:
    """Derivative of R along u = identity + t v at t = 0.

    Equals ``c_n * (-Laplacian v - R/(n-1) v)`` with c_n = 2 (n = 2) or
    4(n-1)/(n-2).
    """
    v = np.asarray(v.values if isinstance(v, ScalarField) else v, dtype=float)
    n = domain.n
    Rb = domain.scalar_curvature
    lap = laplacian(domain, v)
    c = 2.0 if n == 2 else 4.0 * (n - 1) / (n - 2)
    return ScalarField(domain, _interior_only(domain, -c * (lap + Rb / (n - 1) * v)))


# -- boundary quantities ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Samples at the boundary vertices of a domain."""

    vertices: np.ndarray
    dnu: np.ndarray
    mean_curvature: np.ndarray
    weights: np.ndarray

    @property
    def length(self) -> float:
        return float(np.sum(self.weights))


def boundary_weights(domain: DiscreteDomain):
    """Boundary measure attached to each boundary vertex (half adjacent edges)."""
    b = domain.boundary
    if domain.dimension == 1:
        return domain.space.radial_density(domain.vertices[b, 0])
    e = domain.boundary_edges
    L = _metric_lengths(domain, e[:, 0], e[:, 1])
    w = np.zeros(domain.num_vertices)
    np.add.at(w, e[:, 0], 0.5 * L)
    np.add.at(w, e[:, 1], 0.5 * L)
    return w[b]


def _metric_lengths(domain, i, j):
    V = domain.vertices
    d = np.linalg.norm(V[i] - V[j], axis=1)
    if domain.space.kind == "hyperbolic":
        d = d * 0.5 * (np.sqrt(domain.density[i]) + np.sqrt(domain.density[j]))
    return d


def _corner_angles(domain):
    p = domain._cell_points()
    ang = np.zeros(domain.cells.shape)
    for k in range(3):
        e1 = p[:, (k + 1) % 3] - p[:, k]
        e2 = p[:, (k + 2) % 3] - p[:, k]
        c = np.sum(e1 * e2, 1)
        s = np.linalg.norm(np.cross(e1, e2), axis=1)
        ang[:, k] = np.arctan2(s, c)
    return ang


def _chart3(domain):
    V = domain.vertices
    return V if V.shape[1] == 3 else np.column_stack([V, np.zeros(len(V))])


def outward_normals(domain: DiscreteDomain):
    """Unit outward conormals (chart coordinates, 3-vectors) at boundary vertices."""
    cached = domain.__dict__.get("_normals")
    if cached is not None:
        return cached
    P = _chart3(domain)
    C = domain.cells
    # every cell edge with the opposite vertex
    e = np.concatenate([C[:, [0, 1, 2]], C[:, [1, 2, 0]], C[:, [2, 0, 1]]])
    key = np.sort(e[:, :2], axis=1)
    bkey = domain.boundary_edges
    lookup = {tuple(k): i for i, k in enumerate(bkey.tolist())}
    hit = np.array([lookup.get(tuple(k), -1) for k in key.tolist()])
    sel = e[hit >= 0]
    i, j, o = sel[:, 0], sel[:, 1], sel[:, 2]
    edge = P[j] - P[i]
    cn = np.cross(edge, P[o] - P[i])
    nrm = np.cross(edge, cn)
    flip = np.sum(nrm * (P[o] - P[i]), axis=1) > 0
    nrm[flip] *= -1
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    acc = np.zeros((domain.num_vertices, 3))
    np.add.at(acc, i, nrm)
    np.add.at(acc, j, nrm)
    b = domain.boundary
    out = acc[b]
    if domain.space.kind == "sphere":
        x = P[b]
        out = out - np.sum(out * x, 1)[:, None] * x
    out = out / np.linalg.norm(out, axis=1)[:, None]
    domain.__dict__["_normals"] = out
    return out


def background_mean_curvature(domain: DiscreteDomain):
    """H_gbar at boundary vertices: exact for radial grids, turning angle per
    unit boundary length on triangulations."""
    b = domain.boundary
    if domain.dimension == 1:
        return domain.space.sphere_mean_curvature(domain.vertices[b, 0])
    theta = np.zeros(domain.num_vertices)
    np.add.at(theta, domain.cells.ravel(), _corner_angles(domain).ravel())
    turning = math.pi - theta[b]
    if domain.space.kind == "sphere":
        # chord triangles miss the angle excess K * area
        chord_area = np.zeros(domain.num_vertices)
        np.add.at(chord_area, domain.cells.ravel(), np.repeat(domain.chart_areas / 3.0, 3))
        turning = turning - chord_area[b]
        return turning / boundary_weights(domain)
    if domain.space.kind == "hyperbolic":
        e = domain.boundary_edges
        L = np.linalg.norm(domain.vertices[e[:, 0]] - domain.vertices[e[:, 1]], axis=1)
        w = np.zeros(domain.num_vertices)
        np.add.at(w, e[:, 0], 0.5 * L)
        np.add.at(w, e[:, 1], 0.5 * L)
        kappa_e = turning / w[b]
        x = domain.vertices[b]
        nu = outward_normals(domain)[:, :2]
        dlogrho = 2.0 * np.sum(x * nu, 1) / (1.0 - np.sum(x * x, 1))
        return (kappa_e + dlogrho) / np.sqrt(domain.density[b])
    return turning / boundary_weights(domain)


def normal_derivative(domain: DiscreteDomain, values, method: str = "flux"):
    """Outward normal derivative at the boundary vertices.

    ``flux``: weak (variational) flux ``(K u)_b + m_b * Lap u`` divided by the
    boundary weight, with the Laplacian extrapolated from interior neighbours;
    it sums exactly to the discrete Green identity.
    ``p1``: average of the adjacent P1 cell gradients projected on the
    outward conormal.
    """
    u = np.asarray(values, dtype=float)
    b = domain.boundary
    if method == "flux":
        lap = laplacian(domain, u)
        A = domain.adjacency[b]
        interior = (~domain.is_boundary).astype(float)
        cnt = A @ interior
        lap_ext = np.where(cnt > 0, (A @ (interior * np.nan_to_num(lap))) / np.maximum(cnt, 1), 0.0)
        flux = (domain.stiffness @ u)[b] + domain.mass[b] * lap_ext
        return flux / boundary_weights(domain)
    if method != "p1":
        raise ValueError(f"unknown method {method!r}")
    if domain.dimension == 1:
        last = domain.cells[np.any(domain.cells == b[0], axis=1)][0]
        t = domain.vertices[last, 0]
        return np.array([(u[last[1]] - u[last[0]]) / (t[1] - t[0])])
    g = domain.cell_gradients(u)
    w = domain.chart_areas
    VC = domain.vertex_cells[b]
    gb = (VC @ (w[:, None] * g)) / (VC @ w)[:, None]
    nu = outward_normals(domain)
    d = np.sum(gb * nu, axis=1)
    if domain.space.kind == "hyperbolic":
        d = d / np.sqrt(domain.density[b])
    return d


def boundary_data(domain: DiscreteDomain, values, method: str = "flux") -> BoundaryData:
    return BoundaryData(
        vertices=domain.boundary.copy(),
        dnu=normal_derivative(domain, values, method),
        mean_curvature=np.asarray(background_mean_curvature(domain), dtype=float),
        weights=boundary_weights(domain),
    )


def mean_curvature(cf: ConformalFactor, bd: BoundaryData, tol: float = 1e-9):
    """H_g at boundary vertices; requires identity boundary values."""
    ub = cf.u.values[bd.vertices]
    if np.max(np.abs(ub - cf.identity_value), initial=0.0) > tol:
        raise NonIdentityBoundary("conformal factor differs from the identity on the boundary")
    return bd.mean_curvature + boundary_coefficient(cf.n) * bd.dnu


def c0_norm(cf: ConformalFactor) -> float:
    """sqrt(n) * (max u)^{4/(n-2)}; sqrt(2) * exp(2 max u) when n = 2."""
    umax = float(np.max(cf.u.values))
    if cf.convention == EXPONENTIAL:
        return math.sqrt(2.0) * math.exp(2.0 * umax)
    n = cf.n
    return math.sqrt(n) * umax ** (4.0 / (n - 2))


def alpha_threshold(n: int, delta: float, lambda1: float, max_r: float) -> float:
    """C^0 bound below which the nonincreasing-curvature rigidity holds."""
    if not 0.0 < delta < 1.0:
        raise InvalidDelta(f"delta = {delta} outside (0, 1)")
    if not lambda1 > 0:
        raise NonPositiveEigenvalue(f"Lambda_1 = {lambda1} is not positive")
    if max_r <= 0:
        return math.inf
    return math.sqrt(n) * (1.0 + (n - 1) * delta * lambda1 / max_r) ** (4.0 / (n + 2))


def curvature_rows(cf: ConformalFactor):
    """CSV rows (vertexIndex, R_bar, R_g, difference) at interior vertices."""
    dom = cf.domain
    R = scalar_curvature(cf).values
    Rb = dom.scalar_curvature
    return [(int(i), float(Rb[i]), float(R[i]), float(R[i] - Rb[i])) for i in dom.interior]
