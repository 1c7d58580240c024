"""Brown-York mass of a conformal deformation, as a boundary quadrature."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import BoundaryData, ConformalFactor, boundary_coefficient, boundary_data, mean_curvature
from .errors import SolverFailure
from .geometry import DiscreteDomain


@dataclass(frozen=True, eq=False)
class MassReport:
    value: float
    integrand: np.ndarray
    weights: np.ndarray
    boundary_measure: float
    domain_hash: str
    flux_form: float

    def recompute(self) -> float:
        return float(np.dot(self.integrand, self.weights))

    def to_dict(self):
        return {
            "value": self.value,
            "fluxForm": self.flux_form,
            "boundaryMeasureTotal": self.boundary_measure,
            "boundaryIntegrandSamples": self.integrand.tolist(),
            "domainHash": self.domain_hash,
        }


def brown_york_mass(cf: ConformalFactor, domain: DiscreteDomain | None = None,
                    bd: BoundaryData | None = None) -> MassReport:
    """Integral of ``H_gbar - H_g`` over the boundary in the background measure.

    Also evaluates ``-c * integral(d_nu u)`` directly and checks the two
    agree, which they must since ``H_g`` is affine in the normal derivative.
    """
    domain = domain or cf.domain
    if bd is None:
        bd = boundary_data(domain, cf.u.values)
    Hg = mean_curvature(cf, bd)
    integrand = bd.mean_curvature - Hg
    value = float(np.dot(integrand, bd.weights))
    flux = float(-boundary_coefficient(cf.n) * np.dot(bd.dnu, bd.weights))
    if abs(value - flux) > 1e-10 * max(1.0, abs(flux)):
        raise SolverFailure(f"mass forms disagree: {value!r} vs {flux!r}")
    return MassReport(value, integrand, bd.weights.copy(), bd.length, domain.hash, flux)
