"""Experiment configurations, sweeps, the rigidity search and the report writer."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.optimize import brentq, minimize
from scipy.sparse.linalg import splu
from scipy.special import jn_zeros

from . import __version__
from .conformal import ConformalFactor, boundary_data, curvature_rows, mean_curvature
from .deform import DeformBudgets, build_deformation
from .errors import (CertifiedNegativeEigenvalue, ConfigError, CrlError, NoCrossing, OptimizerStall,
                     TruncationTooSmall)
from .geometry import (BackgroundSpace, DiscreteDomain, RegionSpec, ScalarField, build_domain,
                       domain_from_json, domain_to_json, geodesic_radius)
from .mass import brown_york_mass
from .spectral import (LAPLACIAN, SCHRODINGER, OperatorSpec, first_eigenpair, hopf_boundary_check,
                       radial_first_eigenpair)

EXPERIMENTS = ("mesh", "radial", "eig", "mass", "deform", "karp-pinsky", "complement", "product",
               "rigidity")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    name: str = ""
    space: dict = field(default_factory=lambda: {"kind": "euclidean", "n": 2})
    region: dict | None = None
    h: float = 0.05
    tol: float = 1e-8
    seed: int = 0
    kind: str = LAPLACIAN
    sign: str = "plus"
    grid_points: int = 401
    radius: float | None = None
    r_values: list | None = None
    r_min: float = 0.05
    r_max: float = 0.8
    points: int = 9
    crossing: list | None = None
    restarts: int = 200
    max_iter: int = 100
    penalty: float = 10.0
    penalty_growth: float = 10.0
    penalty_loops: int = 5
    start_scale: float = 0.5
    control: bool = False
    truncation: float = 20.0
    budgets: dict = field(default_factory=dict)
    mesh: str | None = None
    field: str | None = None
    profile_t: float | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if not 1e-12 <= self.tol <= 1e-4:
            raise ConfigError("tol must lie in [1e-12, 1e-4]")
        if self.kind not in (LAPLACIAN, SCHRODINGER):
            raise ConfigError(f"unknown operator kind {self.kind!r}")
        if self.sign not in ("plus", "minus"):
            raise ConfigError(f"unknown sign {self.sign!r}")
        self.background()
        try:
            DeformBudgets(**self.budgets)
        except TypeError as err:
            raise ConfigError(f"bad budgets: {err}") from err
        if self.region is not None:
            self.region_spec().validate(self.background())

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except CrlError:
            raise
        except (TypeError, ValueError, KeyError) as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        return cls.from_dict(d)

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def background(self) -> BackgroundSpace:
        try:
            return BackgroundSpace.from_dict(self.space)
        except CrlError:
            raise
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"bad space: {err}") from err

    def region_spec(self) -> RegionSpec:
        r = self.region
        if r is None:
            raise ConfigError("this experiment needs a region")
        try:
            shape = r["shape"]
            center = tuple(r["center"]) if r.get("center") is not None else None
            if shape == "ball":
                return RegionSpec.ball(r["radius"], center)
            if shape == "complement":
                return RegionSpec.complement(r["radius"], center)
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"bad region: {err}") from err
        raise ConfigError(f"region shape {shape!r} cannot be given in a config")

    def radii(self):
        if self.r_values is not None:
            r = sorted(float(x) for x in self.r_values)
        else:
            r = list(np.geomspace(self.r_min, self.r_max, self.points))
        return r


@dataclass(frozen=True)
class SweepRow:
    parameter: float
    value: float
    h: float
    residual: float
    extra: dict = field(default_factory=dict)

    def to_row(self):
        return {"parameter": self.parameter, "value": self.value, "h": self.h,
                "residual": self.residual, **self.extra}


# -- radius sweeps -----------------------------------------------------------

def critical_radius(space: BackgroundSpace, lo: float, hi: float, tol: float = 1e-7,
                    grid_points: int = 64) -> float:
    """Radius where the Schrodinger eigenvalue of the geodesic ball changes sign."""
    def lam(r):
        return radial_first_eigenpair(space, r, SCHRODINGER, grid_points).eigenvalue

    a, b = lam(lo), lam(hi)
    if a * b > 0:
        raise NoCrossing(f"Schrodinger eigenvalue keeps one sign on [{lo:g}, {hi:g}]")
    return float(brentq(lam, lo, hi, xtol=tol, rtol=1e-15))


def karp_pinsky_sweep(cfg: ExperimentConfig):
    """Radial first eigenvalues of geodesic balls, the log-log slope and the
    critical radius of the Schrodinger operator when it exists."""
    space = cfg.background()
    radii = cfg.radii()
    if len(radii) < 8:
        raise ConfigError("a sweep needs at least 8 radii")
    if space.kind == "sphere" and radii[-1] >= math.pi:
        raise ConfigError("sphere radii must stay below pi")
    rows = []
    for r in radii:
        lap = radial_first_eigenpair(space, r, LAPLACIAN, cfg.grid_points)
        sch = lap.eigenvalue - space.scalar_curvature / (space.n - 1)
        rows.append(SweepRow(r, lap.eigenvalue, lap.h, lap.residual, {"Lambda1": sch}))
    lr = np.log([row.parameter for row in rows])
    ll = np.log([row.value for row in rows])
    slope = float(np.polyfit(lr, ll, 1)[0])
    result = {"slope": slope, "criticalRadius": None}
    lo, hi = (cfg.crossing if cfg.crossing is not None else (radii[0], radii[-1]))
    try:
        result["criticalRadius"] = critical_radius(space, float(lo), float(hi))
    except NoCrossing as err:
        result["noCrossing"] = str(err)
    values = [row.value for row in rows]
    checks = {"atLeastEightRows": len(rows) >= 8,
              "decreasingInRadius": bool(np.all(np.diff(values) < 0))}
    if space.kind == "euclidean":
        checks["slopeMinusTwo"] = abs(slope + 2.0) <= 0.01
    if cfg.crossing is not None:
        checks["crossingFound"] = result["criticalRadius"] is not None
    return result, rows, checks


def ramp_quotient(r: float) -> float:
    """Rayleigh quotient on S^2 minus B_r of the function vanishing on B_r,
    equal to 1 off B_2r and linear in the distance in between."""
    top = min(2.0 * r, math.pi)
    width = top - r
    grad = quad(lambda t: math.sin(t) / width ** 2, r, top, epsabs=1e-13)[0]
    ramp = quad(lambda t: ((t - r) / width) ** 2 * math.sin(t), r, top, epsabs=1e-13)[0]
    flat = quad(math.sin, top, math.pi, epsabs=1e-13)[0] if top < math.pi else 0.0
    return grad / (ramp + flat)


def complement_eigenvalue_sweep(cfg: ExperimentConfig):
    """First Laplacian eigenvalue of the sphere minus a geodesic ball, for
    shrinking balls."""
    space = cfg.background()
    if space.kind != "sphere" or space.n != 2:
        raise ConfigError("the complement sweep runs on the round 2-sphere")
    radii = cfg.radii()
    if radii[0] <= 0 or radii[-1] > math.pi / 2 + 1e-12:
        raise ConfigError("complement radii must lie in (0, pi/2]")
    rows = []
    for r in radii:
        dom = build_domain(space, RegionSpec.complement(r), cfg.h)
        res = first_eigenpair(OperatorSpec.laplacian(dom), cfg.tol)
        rows.append(SweepRow(r, res.eigenvalue, dom.h, res.residual, {"rampQuotient": ramp_quotient(r)}))
    values = np.array([row.value for row in rows])
    threshold = space.scalar_curvature / (space.n - 1)
    below = [row.value < threshold for row in rows if row.parameter < math.pi / 2 - 1e-12]
    checks = {
        "decreasingAsRadiusShrinks": bool(np.all(np.diff(values) > 0)),
        "belowThreshold": bool(all(below)),
        "rampUpperBound": bool(all(row.extra["rampQuotient"] >= row.value for row in rows)),
    }
    return {"threshold": threshold}, rows, checks


def ramp_tube_quotient(L: float) -> float:
    """Rayleigh quotient of the flat-factor ramp (1 up to L/2, linear to 0 at L)
    on the truncated tube S^k x D_L; the sphere factor cancels."""
    return 72.0 / (11.0 * L * L)


def product_volume_growth_demo(cfg: ExperimentConfig):
    space = cfg.background()
    if space.kind != "product":
        raise ConfigError("the volume-growth demo needs the product background S^k x E^2")
    L = float(cfg.truncation)
    if not L > 0:
        raise ConfigError("truncation radius must be positive")
    Q = space.scalar_curvature
    n = space.n
    quotient = ramp_tube_quotient(L)
    exact = float(jn_zeros(0, 1)[0] ** 2 / L ** 2)
    result = {
        "truncation": L,
        "Q": Q,
        "rampQuotient": quotient,
        "exactLaplacianEigenvalue": exact,
        "schrodingerUpperBound": quotient - Q / (n - 1),
        "unnormalizedChainBound": quotient - Q,
    }
    checks = {
        "quotientBelowHalfQ": quotient < Q / 2,
        "schrodingerNegative": result["schrodingerUpperBound"] < 0,
        "exactBelowQuotient": exact <= quotient,
    }
    if not (checks["quotientBelowHalfQ"] and checks["schrodingerNegative"]):
        raise TruncationTooSmall(f"ramp quotient {quotient:.4g} too large for Q = {Q:g}; enlarge L",
                                 **result)
    return result, [SweepRow(L, quotient, 0.0, 0.0, {"upperBound": result["schrodingerUpperBound"]})], checks


# -- rigidity search ---------------------------------------------------------

class MassPenalty:
    """Penalized Brown-York mass over factors vanishing on the boundary.

    Variables are ``y = -Lap v`` on interior vertices, so that the interior
    curvature is exactly ``e^{-2v} (R_bar + 2y)`` with ``v = K^-1 M y``.
    """

    def __init__(self, domain: DiscreteDomain):
        self.domain = domain
        I = domain.interior
        self.I = I
        K = domain.stiffness.tocsr()
        m = domain.mass
        self.m = m[I]
        self.Rb = domain.scalar_curvature[I]
        self.lu = splu(K[I][:, I].tocsc())
        b = domain.boundary
        lap = -sp.diags(1.0 / m) @ K
        interior = (~domain.is_boundary).astype(float)
        A = domain.adjacency[b]
        cnt = np.asarray(A @ interior).ravel()
        E = sp.diags(1.0 / np.maximum(cnt, 1.0)) @ A @ sp.diags(interior)
        flux = K[b] + sp.diags(m[b]) @ E @ lap
        self.mass_vector = -2.0 * np.asarray(flux.sum(axis=0)).ravel()[I]
        self.penalty = 1.0

    def factor(self, y):
        return self.lu.solve(self.m * y)

    def full(self, v):
        u = np.zeros(self.domain.num_vertices)
        u[self.I] = v
        return u

    def curvature(self, y, v=None):
        v = self.factor(y) if v is None else v
        return np.exp(-2.0 * v) * (self.Rb + 2.0 * y)

    def mass(self, v):
        return float(self.mass_vector @ v)

    def violation(self, y, v=None):
        return np.maximum(self.Rb - self.curvature(y, v), 0.0)

    def __call__(self, y):
        v = self.factor(y)
        R = self.curvature(y, v)
        viol = np.maximum(self.Rb - R, 0.0)
        P = self.penalty
        f = self.mass(v) + P * float(np.dot(self.m, viol ** 2))
        gv = self.mass_vector + 4.0 * P * self.m * viol * R
        grad = self.m * self.lu.solve(gv) - 4.0 * P * self.m * viol * np.exp(-2.0 * v)
        return f, grad

    def restore(self, y, tol=1e-12):
        """Smallest uniform raise of y (found by bisection) making the point feasible."""
        def feasible(c):
            return np.min(self.curvature(y + c) - self.Rb) >= -tol

        if feasible(0.0):
            return y
        hi = max(1e-12, float(np.max(self.Rb - self.curvature(y))))
        while not feasible(hi):
            hi *= 2.0
        lo = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if feasible(mid) else (mid, hi)
        return y + hi


def rigidity_search(cfg: ExperimentConfig, warm_start: ConformalFactor | None = None):
    """Seeded restarts of a penalized mass minimization with the curvature
    constraint R_g >= R_bar, each penalty stage ending with a feasibility
    restoration; the lowest feasible mass is the counterexample candidate."""
    space = cfg.background()
    if warm_start is not None:
        dom = warm_start.domain
    else:
        dom = build_domain(space, cfg.region_spec(), cfg.h)
    sch = first_eigenpair(OperatorSpec.schrodinger(dom), cfg.tol)
    if sch.eigenvalue < 0 and not cfg.control:
        raise CertifiedNegativeEigenvalue(
            f"Schrodinger eigenvalue {sch.eigenvalue:.6g} < 0: rigidity is not expected; set control",
            eigenvalue=sch.eigenvalue)
    obj = MassPenalty(dom)
    rng = np.random.default_rng(cfg.seed)
    nI = len(obj.I)
    best_obj, best_y, iterations, stalls = math.inf, np.zeros(nI), 0, 0
    feasible_best = {"mass": math.inf, "distance": None}
    feasible_count = 0

    def record(y):
        nonlocal feasible_count
        v = obj.factor(y)
        if np.min(obj.curvature(y, v) - obj.Rb) >= -1e-12:
            feasible_count += 1
            m = obj.mass(v)
            if m < feasible_best["mass"]:
                feasible_best.update(mass=m, distance=float(np.max(np.abs(v))))

    starts = []
    if warm_start is not None:
        v0 = warm_start.u.values[obj.I]
        starts.append((dom.stiffness.tocsr()[obj.I][:, obj.I] @ v0) / obj.m)
        record(starts[0])
        warm = {"mass": obj.mass(v0), "distance": float(np.max(np.abs(v0))),
                "minCurvatureGain": float(np.min(obj.curvature(starts[0], v0) - obj.Rb))}
    restarts = cfg.restarts if warm_start is None else 0
    starts += [cfg.start_scale * rng.standard_normal(nI) for _ in range(restarts)]
    for y in starts:
        obj.penalty = cfg.penalty
        for _ in range(cfg.penalty_loops):
            res = minimize(obj, y, jac=True, method="L-BFGS-B",
                           options={"maxiter": cfg.max_iter, "gtol": 1e-12, "ftol": 1e-15})
            y = res.x
            iterations += int(res.nit)
            record(y)
            record(obj.restore(y))
            obj.penalty *= cfg.penalty_growth
        if not res.success:
            stalls += 1
        if res.fun < best_obj:
            best_obj, best_y = float(res.fun), y.copy()
    v_best = obj.factor(best_y)
    result = {
        "domain": dom.label,
        "Lambda1": sch.eigenvalue,
        "bestObjective": best_obj,
        "bestObjectiveMass": obj.mass(v_best),
        "finalFactorDistanceFromIdentity": float(np.max(np.abs(v_best))),
        "bestFeasibleMass": feasible_best["mass"] if feasible_count else None,
        "bestFeasibleDistance": feasible_best["distance"],
        "feasiblePoints": feasible_count,
        "restarts": len(starts),
        "iterations": iterations,
        "stalls": stalls,
        "finalPenalty": cfg.penalty * cfg.penalty_growth ** (cfg.penalty_loops - 1),
    }
    if warm_start is not None:
        result["warmStart"] = warm
    if len(starts) and stalls == len(starts) and warm_start is None:
        raise OptimizerStall("every restart exhausted its iteration budget", **result)
    if cfg.control:
        checks = {"nontrivialFeasibleZeroMass": warm_start is not None and warm["minCurvatureGain"] >= -1e-12
                  and abs(warm["mass"]) <= 1e-10 and warm["distance"] > 1e-3}
    else:
        checks = {
            "noNegativeFeasibleMass": feasible_count > 0 and feasible_best["mass"] >= -1e-6,
            "collapsesToIdentity": result["finalFactorDistanceFromIdentity"] < 1e-4,
        }
    rows = [SweepRow(float(i), float(v_best[i]), dom.h, 0.0) for i in range(nI)]
    return result, rows, checks, dom


# -- single tasks ------------------------------------------------------------

def _mesh_task(cfg):
    dom = build_domain(cfg.background(), cfg.region_spec(), cfg.h)
    result = {"vertices": dom.num_vertices, "cells": len(dom.cells), "boundaryVertices": len(dom.boundary),
              "h": dom.h, "volume": float(np.sum(dom.cell_volumes)), "connected": dom.is_connected(),
              "mesh": json.loads(domain_to_json(dom))}
    rows = [{"vertex": i, **{f"x{j}": float(x) for j, x in enumerate(p)}} for i, p in enumerate(dom.vertices)]
    return result, rows, {"connected": dom.is_connected()}, dom


def _radial_task(cfg):
    space = cfg.background()
    if cfg.radius is None:
        raise ConfigError("radial needs a radius")
    res = radial_first_eigenpair(space, float(cfg.radius), cfg.kind, cfg.grid_points, min(cfg.tol, 1e-9))
    t = res.domain.vertices[:, 0]
    rows = [{"t": float(a), "phi": float(b)} for a, b in zip(t, res.eigenfunction.values)]
    return res.to_dict(), rows, {"positive": bool(np.all(res.eigenfunction.values[:-1] > 0))}, res.domain


def _eig_task(cfg):
    dom = build_domain(cfg.background(), cfg.region_spec(), cfg.h)
    res = first_eigenpair(OperatorSpec.of_kind(cfg.kind, dom), cfg.tol)
    dnu = hopf_boundary_check(res)
    out = res.to_dict()
    out["hopf"] = {"min": float(np.min(dnu)), "max": float(np.max(dnu))}
    rows = [{"vertex": int(i), "value": float(v)} for i, v in enumerate(res.eigenfunction.values)]
    checks = {"residualWithinTol": res.residual <= cfg.tol, "hopfNegative": bool(np.all(dnu < 0))}
    return out, rows, checks, dom


def _mass_task(cfg):
    if cfg.mesh is not None:
        try:
            dom = domain_from_json(Path(cfg.mesh).read_text(), cfg.space.get("k"))
            field_ = ScalarField.from_json(Path(cfg.field).read_text(), dom) if cfg.field else None
        except OSError as err:
            raise ConfigError(str(err)) from err
        if field_ is None:
            raise ConfigError("mass needs a field file with the mesh file")
        cf = ConformalFactor(field_, "exponential" if dom.n == 2 else "power")
    else:
        dom = build_domain(cfg.background(), cfg.region_spec(), cfg.h)
        t = float(cfg.profile_t or 0.0)
        rho = geodesic_radius(dom) / float(cfg.region["radius"])
        u = t * (1.0 - rho ** 2)
        u[dom.boundary] = 0.0
        cf = ConformalFactor.from_values(dom, u) if dom.n == 2 else ConformalFactor.from_values(dom, 1.0 + u)
    bd = boundary_data(dom, cf.u.values)
    rep = brown_york_mass(cf, dom, bd)
    Hg = mean_curvature(cf, bd)
    rows = [{"vertex": int(v), "Hbar": float(a), "Hg": float(b), "weight": float(w)}
            for v, a, b, w in zip(bd.vertices, bd.mean_curvature, Hg, bd.weights)]
    out = rep.to_dict()
    out.pop("boundaryIntegrandSamples")
    return out, rows, {"formsAgree": abs(rep.value - rep.flux_form) <= 1e-10 * max(1.0, abs(rep.value))}, dom


def _deform_task(cfg):
    rep = build_deformation(cfg.background(), cfg.region_spec(), cfg.sign, cfg.h, DeformBudgets(**cfg.budgets))
    s = 1 if cfg.sign == "plus" else -1
    inside = rep.margins["insideOmegaEps"]
    checks = {
        "supportIdentity": rep.support_certificate == 0.0,
        "strictInside": (inside["min"] if s > 0 else -inside["max"]) >= rep.strict_threshold,
        "deltaWithinBudget": rep.achieved_delta <= rep.delta_budget,
        "massZero": abs(rep.brown_york_mass) <= 1e-12,
        "nontrivial": rep.sup_deviation > 0,
    }
    rows = [{"vertex": i, "Rbar": a, "Rg": b, "difference": c} for i, a, b, c in curvature_rows(rep.factor)]
    return rep, rows, checks, rep.factor.domain


def _rigidity_task(cfg):
    warm = None
    if cfg.control:
        rep = build_deformation(cfg.background(), cfg.region_spec(), "plus", cfg.h, DeformBudgets(**cfg.budgets))
        warm = rep.restricted_factor()
    result, rows, checks, dom = rigidity_search(cfg, warm)
    return result, rows, checks, dom


TASKS = {
    "mesh": _mesh_task,
    "radial": _radial_task,
    "eig": _eig_task,
    "mass": _mass_task,
    "deform": _deform_task,
    "karp-pinsky": lambda cfg: (*karp_pinsky_sweep(cfg), None),
    "complement": lambda cfg: (*complement_eigenvalue_sweep(cfg), None),
    "product": lambda cfg: (*product_volume_growth_demo(cfg), None),
    "rigidity": _rigidity_task,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_rows(path, rows):
    rows = [r.to_row() if isinstance(r, SweepRow) else r for r in rows]
    header = []
    for r in rows:
        header += [k for k in r if k not in header]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header or ["parameter", "value"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})


def run_experiment(cfg: ExperimentConfig, out_dir) -> int:
    """Dispatch, write ``report.json`` / ``rows.csv`` / ``timings.json`` and
    return the exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"experiment": cfg.experiment, "name": cfg.name, "version": __version__,
              "configHash": cfg.hash, "seed": cfg.seed, "tolerances": {"solver": cfg.tol},
              "config": cfg.to_dict()}
    rows = []
    t0 = time.perf_counter()
    timings = {}
    try:
        result, rows, checks, dom = TASKS[cfg.experiment](cfg)
        if hasattr(result, "to_dict"):
            timings.update(getattr(result, "timings", {}))
            result = result.to_dict(timings=False) if cfg.experiment == "deform" else result.to_dict()
        report.update(meshHash=dom.hash if dom is not None else None, result=result,
                      checks=checks, passed=bool(all(checks.values())))
        status = 0 if report["passed"] else 1
    except CrlError as err:
        report.update(meshHash=None, passed=False, error={
            "type": type(err).__name__, "message": str(err), "details": err.details})
        status = err.exit_code
    timings["total"] = time.perf_counter() - t0
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    write_rows(out / "rows.csv", rows)
    (out / "timings.json").write_text(json.dumps(_jsonable(timings), indent=2) + "\n")
    return status
