"""Compactly supported conformal deformations that raise (or lower) scalar
curvature on domains whose first Schrodinger eigenvalue is negative.

Pipeline: collar metrics built from the Laplacian eigenfunction near the
boundary, an eigenfunction perturbation of the Schrodinger operator on a
superlevel set, a constant rescaling that matches the two along the level
set, and a curvature-controlled gluing across a thin collar.

Two-dimensional runs use ``g = e^{2u} gbar``: the collar factors are
``log(1 -/+ e^{-1/phi})`` and the inner factor is ``log c + t * phi_sign``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .conformal import ConformalFactor, normal_derivative, scalar_curvature
from .errors import (CertifiedPositiveEigenvalue, CrlError, DeltaBudgetExceeded,
                     EmptyTWindow, MeanCurvatureOrderingFailed, NoValidEpsilon,
                     UnsupportedCombination)
from .geometry import (BackgroundSpace, DiscreteDomain, RegionSpec, ScalarField, build_domain,
                       polar_mesh, restrict, split_by_level, superlevel_domain)
from .mass import brown_york_mass
from .spectral import OperatorSpec, SpectralResult, first_eigenpair

PLUS = "plus"
MINUS = "minus"


def sign_value(sign: str) -> int:
    if sign not in (PLUS, MINUS):
        raise ValueError(f"sign must be {PLUS!r} or {MINUS!r}, got {sign!r}")
    return 1 if sign == PLUS else -1


def collar_weight(epsilon: float, sign: str) -> float:
    """Constant c = 1 -/+ e^{-1/epsilon} matching the collar factor on {phi = epsilon}."""
    return 1.0 - sign_value(sign) * math.exp(-1.0 / epsilon)


def matching_constant(epsilon: float, sign: str) -> float:
    """Slope of log(1 -/+ e^{-1/phi}) per unit of -d phi at phi = epsilon."""
    e = math.exp(-1.0 / epsilon)
    return e / (epsilon ** 2 * collar_weight(epsilon, sign))


# -- cutoff profile ----------------------------------------------------------

def cutoff(s):
    """Quintic 6s^5 - 15s^4 + 10s^3, clamped to [0, 1] outside the unit interval."""
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def cutoff_integral(s):
    """Antiderivative of :func:`cutoff` vanishing at 0 (valid on [0, 1])."""
    s = np.clip(s, 0.0, 1.0)
    return s ** 4 * (2.5 - 3.0 * s + s * s)


def smooth_min(a, b, mu):
    """Concave C^3 minimum of ``a`` and ``b``: equals min(a, b) when
    |a - b| >= mu, and its weight on ``a`` falls from 1 to 0 along the
    cutoff profile as a - b goes from -mu to mu."""
    x = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    s = (x + mu) / (2.0 * mu)
    g = np.where(x <= -mu, x, np.where(x >= mu, 0.0, x - 2.0 * mu * cutoff_integral(s)))
    return b + g


def smooth_max(a, b, mu):
    return -smooth_min(-np.asarray(a, dtype=float), -np.asarray(b, dtype=float), mu)


# -- types -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CollarMetricPair:
    """Multipliers ``w = 1 -/+ e^{-1/phi}`` (identity outside the domain)."""

    w_plus: ScalarField
    w_minus: ScalarField
    epsilon: float
    subharmonicity_margin: float
    lambda1: float
    superlevel_eigenvalue: float

    def factor(self, sign: str) -> ConformalFactor:
        w = self.w_plus if sign == PLUS else self.w_minus
        return ConformalFactor.from_multiplier(w.domain, w.values)


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    t: float
    psi: ScalarField
    sign: str
    eigenvalue: float
    residual: float
    t_min: float
    interior_margin: float

    @property
    def direction(self):
        """phi_plus = -psi, phi_minus = psi."""
        return -sign_value(self.sign) * self.psi.values

    def factor(self) -> ConformalFactor:
        return ConformalFactor.from_values(self.psi.domain, self.t * self.direction)


@dataclass(frozen=True)
class GlueSpec:
    collar_width: float = 0.1
    delta_budget: float = math.inf
    profile_order: int = 5
    max_retries: int = 6

    def __post_init__(self):
        if not self.collar_width > 0:
            raise ValueError("collar width must be positive")
        if self.profile_order != 5:
            raise ValueError("only the quintic cutoff is implemented")


@dataclass(frozen=True, eq=False)
class GlueResult:
    factor: ConformalFactor
    achieved_delta: float
    collar: np.ndarray
    collar_width: float
    mu: float
    retries: int


@dataclass(frozen=True)
class DeformBudgets:
    t_max: float = 0.3
    collar_width: float = 0.1
    delta_fraction: float = 0.1
    strictness: float = 10.0
    max_levels: int = 12
    tol: float = 1e-8


@dataclass(frozen=True, eq=False)
class DeformationReport:
    factor: ConformalFactor
    sign: str
    support_certificate: float
    margins: dict
    achieved_delta: float
    delta_budget: float
    brown_york_mass: float
    parameters: dict
    eigenvalues: dict
    strict_threshold: float
    curvature_scale: float
    collar_inequality_margin: float
    subharmonicity_margin: float
    h: float
    omega_eps: DiscreteDomain
    omega: DiscreteDomain | None = None
    timings: dict = field(default_factory=dict)

    @property
    def sup_deviation(self) -> float:
        return float(np.max(np.abs(self.factor.multiplier - 1.0)))

    def restricted_factor(self) -> ConformalFactor:
        """The factor on the closure of the domain itself."""
        u = self.factor.u.values[self.omega.parent_vertex]
        return ConformalFactor.from_values(self.omega, u)

    def to_dict(self, timings: bool = True):
        d = {
            "sign": self.sign,
            "supportCertificate": self.support_certificate,
            "curvatureMargins": self.margins,
            "achievedDelta": self.achieved_delta,
            "deltaBudget": self.delta_budget,
            "brownYorkMass": self.brown_york_mass,
            "parameters": self.parameters,
            "eigenvalues": self.eigenvalues,
            "strictThreshold": self.strict_threshold,
            "curvatureScale": self.curvature_scale,
            "collarInequalityMargin": self.collar_inequality_margin,
            "subharmonicityMargin": self.subharmonicity_margin,
            "supDeviation": self.sup_deviation,
            "h": self.h,
            "meshHash": self.factor.domain.hash,
        }
        if timings:
            d["timings"] = self.timings
        return d


# -- stages ------------------------------------------------------------------

def subharmonicity_margin(domain: DiscreteDomain, phi, lambda1: float):
    """|grad phi|^2 - lambda1 phi^3 - 2 |grad phi|^2 phi per vertex; its sign
    is the sign of Lap e^{-1/phi}."""
    g2 = domain.vertex_gradient_norm2(phi)
    return g2 - lambda1 * phi ** 3 - 2.0 * g2 * phi


def build_collar_metrics(phi: SpectralResult, ambient: DiscreteDomain | None = None,
                         max_levels: int = 12, tol: float = 1e-8) -> CollarMetricPair:
    """Pick the largest epsilon = 2^-k with a nonnegative subharmonicity
    margin on {0 < phi <= 2 epsilon} and a negative Schrodinger eigenvalue
    on {phi > epsilon}; the multipliers live on ``ambient`` (default: the
    eigenfunction's domain) and equal 1 off the domain."""
    omega = phi.domain
    values = phi.eigenfunction.values
    margin = subharmonicity_margin(omega, values, phi.eigenvalue)
    chosen = None
    for k in range(1, max_levels + 1):
        eps = 2.0 ** -k
        band = (values > 0) & (values <= 2 * eps)
        if not band.any() or np.min(margin[band]) < 0:
            continue
        try:
            sub = superlevel_domain(omega, values, eps)
        except CrlError:
            continue
        res = first_eigenpair(OperatorSpec.schrodinger(sub), tol)
        if res.eigenvalue < 0:
            chosen = (eps, float(np.min(margin[band])), res.eigenvalue)
            break
    if chosen is None:
        raise NoValidEpsilon(f"no epsilon in 2^-1 .. 2^-{max_levels} passes both collar tests",
                             min_margin=float(np.min(margin[values > 0])))
    eps, m, lam_eps = chosen
    target = ambient if ambient is not None else omega
    phi_t = _to_ambient(omega, target, values)
    e = np.zeros(target.num_vertices)
    pos = phi_t > 0
    e[pos] = np.exp(-1.0 / phi_t[pos])
    return CollarMetricPair(ScalarField(target, 1.0 - e), ScalarField(target, 1.0 + e),
                            eps, m, phi.eigenvalue, lam_eps)


def _to_ambient(sub: DiscreteDomain, ambient: DiscreteDomain, values):
    if sub is ambient:
        return np.asarray(values, dtype=float).copy()
    if sub.parent is not ambient:
        raise ValueError("domain is not a sub-mesh of the ambient mesh")
    out = np.zeros(ambient.num_vertices)
    out[sub.parent_vertex] = values
    return out


def build_perturbation(omega_eps: DiscreteDomain, psi: SpectralResult, sign: str, t_max: float,
                       epsilon: float, phi_eps, threshold: float = 0.0) -> PerturbationSpec:
    """Largest t on a geometric grid below ``t_max`` whose matched inner
    factor keeps the multiplier above 1/2 and whose exact discrete
    curvature change has the required sign with margin ``threshold`` at
    every interior vertex; t must also exceed the matching bound."""
    s = sign_value(sign)
    if psi.eigenvalue >= 0:
        raise CertifiedPositiveEigenvalue(f"Schrodinger eigenvalue {psi.eigenvalue:g} on the superlevel set")
    K = matching_constant(epsilon, sign)
    dpsi = normal_derivative(omega_eps, psi.eigenfunction.values)
    dphi = normal_derivative(omega_eps, phi_eps)
    t_min = float(np.max(K * dphi / dpsi))
    c = math.log(collar_weight(epsilon, sign))
    Rb = omega_eps.scalar_curvature
    I = omega_eps.interior
    direction = -s * psi.eigenfunction.values
    t = t_max
    while t > t_min:
        u = c + t * direction
        if np.min(np.exp(u)) > 0.5:
            R = scalar_curvature(ConformalFactor.from_values(omega_eps, u)).values
            m = float(np.min(s * (R[I] - Rb[I])))
            if m > threshold:
                return PerturbationSpec(t, psi.eigenfunction, sign, psi.eigenvalue, psi.residual, t_min, m)
        t *= 0.8
    raise EmptyTWindow(f"no t in ({t_min:.3g}, {t_max:g}] meets the curvature and matching conditions",
                       t_min=t_min)


def apply_matching(pert: PerturbationSpec, epsilon: float, phi_eps):
    """Rescale the perturbed factor by the collar constant and check the
    strict boundary ordering of normal derivatives (equivalently of mean
    curvatures, since the factors agree on the level set).

    Returns the matched factor on the superlevel set and the per-vertex
    slope gap ``s * (d_nu u_inner - d_nu u_collar)``, which must be positive.
    """
    dom = pert.psi.domain
    s = sign_value(pert.sign)
    u = math.log(collar_weight(epsilon, pert.sign)) + pert.t * pert.direction
    phi_eps = np.asarray(phi_eps, dtype=float)
    outer = np.log1p(-s * np.exp(-1.0 / np.maximum(phi_eps, 1e-300)))
    gap = s * (normal_derivative(dom, u) - normal_derivative(dom, outer))
    if np.min(gap) <= 0:
        worst = int(np.argmin(gap))
        raise MeanCurvatureOrderingFailed(
            f"boundary ordering fails at boundary vertex {worst} (gap {gap[worst]:.3g})",
            vertex=int(dom.boundary[worst]), gap=float(gap[worst]))
    return ConformalFactor.from_values(dom, u), gap


def glue(inner: ConformalFactor, outer: ConformalFactor, spec: GlueSpec, *, inside, distance,
         slope_gap: float, sign: str) -> GlueResult:
    """Join ``inner`` (used on ``inside``) and ``outer`` (used elsewhere)
    across the collar ``|distance| < 2 * width``.

    In the collar the factor is the smooth minimum (sign plus) or maximum
    (sign minus) of the two inputs with transition scale
    ``mu = slope_gap * width``. Because the inputs cross along the level set
    with a strict slope gap, the result equals each input at the collar
    edges. achievedDelta compares the lowest (plus) curvature of the inputs
    over the whole mesh with the lowest glued curvature in the collar.
    """
    s = sign_value(sign)
    dom = inner.domain
    if outer.domain is not dom:
        raise ValueError("inputs must live on the same mesh")
    a, b = inner.u.values, outer.u.values
    inside = np.asarray(inside, dtype=bool)
    distance = np.asarray(distance, dtype=float)
    base = np.where(inside, a, b)
    on_level = np.abs(distance) == 0
    R_in = scalar_curvature(ConformalFactor.from_values(dom, a)).values
    R_out = scalar_curvature(ConformalFactor.from_values(dom, b)).values
    R_inputs = np.where(inside, R_in, R_out)
    R_inputs[on_level] = np.nan
    extreme_input = float(np.nanmin(s * R_inputs))
    width = spec.collar_width
    last = math.inf
    for attempt in range(spec.max_retries + 1):
        mu = slope_gap * width
        collar = (np.abs(distance) < 2.0 * width) & ~dom.is_boundary
        x = s * (a - b)
        glued = b + s * (smooth_min(x, 0.0, mu))
        u = np.where(collar, glued, base)
        edge = collar & (np.abs(distance) >= width)
        consistent = np.all(np.where(inside[edge], x[edge] <= -mu, x[edge] >= mu))
        if consistent:
            R = scalar_curvature(ConformalFactor.from_values(dom, u)).values
            low = float(np.nanmin(s * R[collar])) if collar.any() else extreme_input
            last = max(0.0, extreme_input - low)
            if last <= spec.delta_budget:
                return GlueResult(ConformalFactor.from_values(dom, u), last, collar, width, mu, attempt)
        width *= 0.5
    raise DeltaBudgetExceeded(f"achieved delta {last:.3g} exceeds budget {spec.delta_budget:.3g}",
                              achieved_delta=last)


# -- orchestration -----------------------------------------------------------

def _ambient_mesh(space: BackgroundSpace, region: RegionSpec, h: float):
    """Closed sphere meshed with the region boundary as a ring, and the cell
    mask of the region."""
    if region.shape == "ball":
        c = region.center if region.center is not None else (0.0, 0.0, 1.0)
        radius = region.radius
    elif region.shape == "complement":
        c = -np.asarray(region.center if region.center is not None else (0.0, 0.0, 1.0), dtype=float)
        radius = math.pi - region.radius
    else:
        raise UnsupportedCombination("deformations are built on geodesic balls and their complements")
    c = np.asarray(c, dtype=float)
    c = c / np.linalg.norm(c)
    amb = polar_mesh(space, [radius, math.pi], h, c)
    ang = np.arccos(np.clip(amb.vertices @ c, -1.0, 1.0))
    return amb, np.all((ang <= radius + 1e-9)[amb.cells], axis=1)


def _tagged(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except CrlError as err:
        err.details.setdefault("stage", stage)
        raise


def certify_negative(omega: DiscreteDomain, tol: float = 1e-8) -> SpectralResult:
    res = first_eigenpair(OperatorSpec.schrodinger(omega), tol)
    if res.eigenvalue >= -max(tol, res.residual):
        raise CertifiedPositiveEigenvalue(
            f"Schrodinger eigenvalue {res.eigenvalue:.6g} is not certified negative",
            eigenvalue=res.eigenvalue)
    return res


def build_deformation(space: BackgroundSpace, region: RegionSpec, sign: str, h: float,
                      budgets: DeformBudgets = DeformBudgets()) -> DeformationReport:
    """Run the whole construction and certify the result."""
    s = sign_value(sign)
    region.validate(space)
    clock = {}
    t0 = time.perf_counter()
    if space.kind != "sphere" or space.n != 2:
        # nonpositive curvature never gives a negative eigenvalue; refuse on the spot
        if space.n == 2 and space.kind in ("euclidean", "hyperbolic"):
            omega = build_domain(space, region, h)
            certify_negative(omega, budgets.tol)
        raise UnsupportedCombination("mesh deformations are implemented on the round 2-sphere")

    ambient, mask = _ambient_mesh(space, region, h)
    omega = restrict(ambient, mask, label="omega")
    sch = _tagged("certify", certify_negative, omega, budgets.tol)
    lap = first_eigenpair(OperatorSpec.laplacian(omega), budgets.tol)
    clock["eigen"] = time.perf_counter() - t0

    pair = _tagged("collar", build_collar_metrics, lap, ambient, budgets.max_levels, budgets.tol)
    eps = pair.epsilon
    phi_amb = _to_ambient(omega, ambient, lap.eigenfunction.values)
    split = split_by_level(ambient, phi_amb, eps)
    mesh = split.domain
    phi = split.values
    omega_eps = restrict(mesh, split.above, label="superlevel")
    psi = first_eigenpair(OperatorSpec.schrodinger(omega_eps), budgets.tol)
    phi_eps = phi[omega_eps.parent_vertex]
    clock["collar"] = time.perf_counter() - t0

    scale = float(np.max(np.abs(omega.scalar_curvature)))
    threshold = budgets.strictness * h * h * scale
    pert = _tagged("perturbation", build_perturbation, omega_eps, psi, sign, budgets.t_max, eps,
                   phi_eps)
    inner_eps, gap = _tagged("matching", apply_matching, pert, eps, phi_eps)
    clock["perturbation"] = time.perf_counter() - t0

    # inner factor on the split mesh, continued past the level set through phi
    inside = np.zeros(mesh.num_vertices, dtype=bool)
    inside[omega_eps.parent_vertex] = True
    dpsi = normal_derivative(omega_eps, psi.eigenfunction.values)
    dphi = normal_derivative(omega_eps, phi_eps)
    kappa = float(np.sum(dpsi) / np.sum(dphi))
    logc = math.log(collar_weight(eps, sign))
    a = logc - s * pert.t * kappa * (phi - eps)
    a[omega_eps.parent_vertex] = inner_eps.u.values
    pos = phi > 0
    b = np.zeros(mesh.num_vertices)
    b[pos] = np.log1p(-s * np.exp(-1.0 / phi[pos]))

    level_pts = omega_eps.vertices[omega_eps.boundary]
    dist, _ = cKDTree(level_pts).query(mesh.vertices)
    dist = np.where(inside, -dist, dist)
    dist[omega_eps.parent_vertex[omega_eps.boundary]] = 0.0

    glue_spec = GlueSpec(budgets.collar_width, budgets.delta_fraction * pert.interior_margin)
    glued = _tagged("glue", glue, ConformalFactor.from_values(mesh, a), ConformalFactor.from_values(mesh, b),
                    glue_spec, inside=inside, distance=dist, slope_gap=float(np.min(gap)), sign=sign)
    clock["glue"] = time.perf_counter() - t0

    u = glued.factor.u.values.copy()
    in_omega = np.zeros(mesh.num_vertices, dtype=bool)
    omega_cells = mask[mesh.parent_cell]
    in_omega[np.unique(mesh.cells[omega_cells])] = True
    outside = ~in_omega | (phi <= 0)
    u[outside] = 0.0  # identity off the domain, written rather than computed
    factor = ConformalFactor.from_values(mesh, u)
    support = float(np.max(np.abs(u[outside]))) if outside.any() else 0.0

    R = scalar_curvature(factor).values
    diff = R - mesh.scalar_curvature
    interior_eps = omega_eps.parent_vertex[omega_eps.interior]
    rest = ~inside & ~glued.collar & ~mesh.is_boundary

    def span(idx):
        v = diff[idx]
        v = v[~np.isnan(v)]
        return {"min": float(np.min(v)), "max": float(np.max(v))} if len(v) else {"min": 0.0, "max": 0.0}

    margins = {"insideOmegaEps": span(interior_eps), "collar": span(glued.collar), "outside": span(rest)}

    collar_region = pos & (phi <= 2 * eps) & ~inside
    R_collar = scalar_curvature(ConformalFactor.from_values(mesh, b)).values
    cm = s * (R_collar - mesh.scalar_curvature)
    collar_margin = float(np.nanmin(cm[collar_region])) if collar_region.any() else 0.0

    omega_split = restrict(mesh, omega_cells, label="omega")
    mass = brown_york_mass(ConformalFactor.from_values(omega_split, u[omega_split.parent_vertex]))
    clock["total"] = time.perf_counter() - t0

    return DeformationReport(
        factor=factor, sign=sign, support_certificate=support, margins=margins,
        achieved_delta=glued.achieved_delta, delta_budget=glue_spec.delta_budget,
        brown_york_mass=mass.value,
        parameters={"epsilon": eps, "t": pert.t, "tMin": pert.t_min, "collarWidth": glued.collar_width,
                    "mu": glued.mu, "glueRetries": glued.retries, "continuationSlope": kappa},
        eigenvalues={"lambda1": lap.eigenvalue, "Lambda1": sch.eigenvalue,
                     "Lambda1Superlevel": psi.eigenvalue},
        strict_threshold=threshold, curvature_scale=scale, collar_inequality_margin=collar_margin,
        subharmonicity_margin=pair.subharmonicity_margin, h=h, omega_eps=omega_eps, omega=omega_split,
        timings=clock,
    )
