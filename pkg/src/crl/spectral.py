"""First Dirichlet eigenpairs of the Laplacian and of -Lap - R/(n-1).

Two independent solvers: P1 finite elements with lumped mass on any
:class:`DiscreteDomain`, and a shooting method for geodesic balls of
space forms that integrates the radial ODE to near machine precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .conformal import normal_derivative
from .errors import BracketFailure, InvalidRadius, SolverDivergence, UnsupportedCombination
from .geometry import BackgroundSpace, DiscreteDomain, ScalarField, build_radial_domain

LAPLACIAN = "laplacian"
SCHRODINGER = "schrodinger"


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """``-Lap - potential`` with Dirichlet conditions on ``domain``."""

    kind: str
    potential: ScalarField

    def __post_init__(self):
        if self.kind not in (LAPLACIAN, SCHRODINGER):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        dom = self.potential.domain
        expected = _background_potential(dom) if self.kind == SCHRODINGER else 0.0
        if not np.allclose(self.potential.values, expected, rtol=1e-12, atol=1e-12):
            raise ValueError("potential does not match the operator kind")

    @property
    def domain(self) -> DiscreteDomain:
        return self.potential.domain

    @classmethod
    def laplacian(cls, domain: DiscreteDomain):
        return cls(LAPLACIAN, ScalarField(domain, np.zeros(domain.num_vertices)))

    @classmethod
    def schrodinger(cls, domain: DiscreteDomain):
        return cls(SCHRODINGER, ScalarField(domain, _background_potential(domain)))

    @classmethod
    def of_kind(cls, kind: str, domain: DiscreteDomain):
        return cls.laplacian(domain) if kind == LAPLACIAN else cls.schrodinger(domain)


def _background_potential(domain):
    return np.asarray(domain.scalar_curvature, dtype=float) / (domain.n - 1)


def assemble(spec: OperatorSpec):
    """Dirichlet-reduced ``(A, m)``: stiffness minus potential-weighted mass on
    interior vertices, and the matching lumped mass vector."""
    dom = spec.domain
    I = dom.interior
    m = dom.mass
    A = dom.stiffness - sp.diags(m * spec.potential.values)
    return A[I][:, I].tocsc(), m[I].copy()


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalue: float
    eigenfunction: ScalarField
    residual: float
    iterations: int
    h: float
    kind: str = LAPLACIAN
    tol: float = 1e-8

    @property
    def domain(self) -> DiscreteDomain:
        return self.eigenfunction.domain

    def to_dict(self):
        return {
            "eigenvalue": self.eigenvalue,
            "residual": self.residual,
            "iterations": self.iterations,
            "h": self.h,
            "kind": self.kind,
            "tol": self.tol,
            "field": json.loads(self.eigenfunction.to_json()),
        }


def _residual(A, m, x, lam):
    r = A @ x - lam * m * x
    return float(np.sqrt(np.sum(r * r / m)))


def first_eigenpair(spec: OperatorSpec, tol: float = 1e-8, max_iter: int = 1000) -> SpectralResult:
    """Lowest eigenpair of the generalized problem ``A x = lam M x``.

    Shifted inverse iteration with one sparse LU factorization. The shift sits
    below the sandwich lower bound so the shifted matrix is positive definite.
    The residual is measured in the ``M^-1`` norm for ``M``-normalized vectors.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol = {tol} outside [1e-12, 1e-4]")
    dom = spec.domain
    if len(dom.interior) == 0:
        raise ValueError("domain has no interior vertices")
    A, m = assemble(spec)
    shift = -float(np.max(spec.potential.values, initial=0.0)) - 1.0
    lu = splu((A - shift * sp.diags(m)).tocsc())
    x = np.ones(len(m))
    x /= math.sqrt(np.dot(m, x * x))
    lam, res = float(x @ (A @ x)), math.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(m * x)
        x = y / math.sqrt(np.dot(m, y * y))
        lam = float(x @ (A @ x))
        res = _residual(A, m, x, lam)
        if res <= tol:
            break
    else:
        raise SolverDivergence(f"inverse iteration did not reach tol {tol:g} in {max_iter} steps",
                               residual=res, eigenvalue=lam)
    if np.sum(x) < 0:
        x = -x
    x = x / np.max(np.abs(x))
    if np.min(x) <= 0:
        raise SolverDivergence("first eigenvector is not of one sign", residual=res)
    full = np.zeros(dom.num_vertices)
    full[dom.interior] = x
    return SpectralResult(lam, ScalarField(dom, full), res, it, float(dom.h), spec.kind, tol)


# -- radial shooting ---------------------------------------------------------

def _shoot(space, n, V, lam, r, dense=False):
    """Integrate the radial equation from the origin; returns the solution."""
    k = lam + V
    t0 = min(1e-5, 1e-5 * r)
    y0 = [1.0 - k * t0 * t0 / (2 * n), -k * t0 / n]

    def rhs(t, y):
        return [y[1], -(n - 1) * float(space.dsn(t)) / float(space.sn(t)) * y[1] - k * y[0]]

    def zero(t, y):
        return y[0]
    zero.terminal = True
    zero.direction = -1
    return solve_ivp(rhs, (t0, r), y0, method="DOP853", rtol=1e-12, atol=1e-14,
                     events=None if dense else zero, dense_output=dense)


def radial_first_eigenpair(space: BackgroundSpace, r: float, kind: str = LAPLACIAN,
                           grid_points: int = 401, tol: float = 1e-9) -> SpectralResult:
    """First Dirichlet eigenpair on the geodesic ball of radius ``r`` by
    shooting from the center and root-finding on the eigenvalue."""
    if not space.is_space_form:
        raise UnsupportedCombination("radial reduction needs a space form")
    if not 0 < r < space.max_radius:
        raise InvalidRadius(f"radius {r} outside (0, {space.max_radius:g})")
    n = space.n
    R = space.scalar_curvature
    V = R / (n - 1) if kind == SCHRODINGER else 0.0
    lo = -10 * abs(R) - 100 / r**2
    hi = 100 / r**2 + 10 * abs(R)

    def crosses(lam):
        return _shoot(space, n, V, lam, r).status == 1

    if crosses(lo) or not crosses(hi):
        raise BracketFailure(f"no sign change of the shooting function on [{lo:g}, {hi:g}]")
    # bisect on "first zero lies inside (0, r)" (monotone by Sturm comparison)
    steps = 0
    while hi - lo > 1e-3 * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if crosses(mid):
            hi = mid
        else:
            lo = mid
        steps += 1

    def endpoint(lam):
        return _shoot(space, n, V, lam, r, dense=True).y[0, -1]

    lam, info = brentq(endpoint, lo, hi, xtol=tol * 1e-3, rtol=1e-15, full_output=True)
    steps += info.iterations
    dom = build_radial_domain(space, r, grid_points)
    sol = _shoot(space, n, V, lam, r, dense=True)
    t = dom.vertices[:, 0]
    phi = np.where(t < sol.t[0], 1.0 - (lam + V) * t * t / (2 * n), sol.sol(np.clip(t, sol.t[0], r))[0])
    phi[dom.boundary] = 0.0
    phi = phi / np.max(np.abs(phi))
    width = abs(hi - lo) if info.converged is False else tol * 1e-3
    return SpectralResult(float(lam), ScalarField(dom, phi), float(width), steps, float(dom.h), kind, tol)


def hopf_boundary_check(result: SpectralResult):
    """Outward normal derivatives of the eigenfunction at boundary vertices
    (one-sided cell gradients)."""
    return normal_derivative(result.domain, result.eigenfunction.values, method="p1")


def observed_orders(hs, errors):
    """Convergence orders between consecutive meshes from errors against a reference."""
    h = np.asarray(hs, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def richardson_limit(hs, values, order: float = 2.0) -> float:
    """Extrapolate the two finest values assuming error ~ C h^order."""
    h1, h2 = float(hs[-2]), float(hs[-1])
    v1, v2 = float(values[-2]), float(values[-1])
    q = (h1 / h2) ** order
    return (q * v2 - v1) / (q - 1.0)
