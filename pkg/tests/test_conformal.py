import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import disk
from crl.conformal import (ConformalFactor, alpha_threshold, background_mean_curvature, boundary_data,
                           c0_norm, laplacian, linearized_scalar_curvature, mean_curvature, normal_derivative,
                           scalar_curvature)
from crl.errors import InvalidDelta, NonPositiveEigenvalue, NonPositiveFactor
from crl.geometry import BackgroundSpace, RegionSpec, build_domain, build_radial_domain, geodesic_radius


def test_identity_has_background_curvature():
    for kind in ("euclidean", "sphere", "hyperbolic"):
        dom = build_domain(getattr(BackgroundSpace, kind)(2), RegionSpec.ball(1.0), 0.1)
        R = scalar_curvature(ConformalFactor.identity(dom)).values
        assert np.allclose(R[dom.interior], dom.scalar_curvature[dom.interior], atol=1e-13)
        assert np.all(np.isnan(R[dom.boundary]))


def test_laplacian_of_quadratic_in_the_plane():
    dom = disk(h=0.04)
    lap = laplacian(dom, geodesic_radius(dom) ** 2)
    # the lumped operator is consistent on average, not pointwise
    assert abs(np.average(lap[dom.interior], weights=dom.mass[dom.interior]) - 4.0) < 0.02


def test_flat_to_round_metric():
    # e^{2u} |dx|^2 with u = log(2/(1+|x|^2)) is the round metric of curvature 2
    dom = disk(radius=0.8, h=0.02)
    u = np.log(2.0 / (1.0 + geodesic_radius(dom) ** 2))
    R = scalar_curvature(ConformalFactor.from_values(dom, u)).values[dom.interior]
    assert abs(np.median(R) - 2.0) < 1e-3


def test_power_convention_refuses_nonpositive_factor():
    dom = build_radial_domain(BackgroundSpace.euclidean(3), 1.0, 51)
    with pytest.raises(NonPositiveFactor):
        ConformalFactor.from_values(dom, np.zeros(dom.num_vertices))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.sampled_from(["euclidean", "sphere", "hyperbolic"]))
def test_linearization_matches_finite_differences(coeffs, kind):
    dom = build_domain(getattr(BackgroundSpace, kind)(2), RegionSpec.ball(1.0), 0.1)
    x, y = dom.vertices[:, 0], dom.vertices[:, 1]
    v = (1 - (geodesic_radius(dom)) ** 2) * (coeffs[0] + coeffs[1] * x + coeffs[2] * y * y)
    v[dom.boundary] = 0.0
    if np.max(np.abs(v)) < 1e-3:
        return
    t = 1e-6
    fd = (scalar_curvature(ConformalFactor.from_values(dom, t * v)).values
          - scalar_curvature(ConformalFactor.from_values(dom, -t * v)).values) / (2 * t)
    lin = linearized_scalar_curvature(v, dom).values
    I = dom.interior
    assert np.max(np.abs(fd[I] - lin[I])) <= 1e-6 * np.max(np.abs(lin[I])) + 1e-8


def test_linearization_in_power_convention():
    dom = build_radial_domain(BackgroundSpace.sphere(3), 1.5, 201)
    t = dom.vertices[:, 0]
    v = np.cos(math.pi * t / 3.0)
    v[dom.boundary] = 0.0
    h = 1e-4
    fd = (scalar_curvature(ConformalFactor.from_values(dom, 1 + h * v)).values
          - scalar_curvature(ConformalFactor.from_values(dom, 1 - h * v)).values) / (2 * h)
    lin = linearized_scalar_curvature(v, dom).values
    I = dom.interior
    assert np.max(np.abs(fd[I] - lin[I])) < 1e-6 * np.max(np.abs(lin[I]))


@pytest.mark.parametrize("kind,r,H", [
    ("euclidean", 1.0, 1.0),
    ("sphere", 1.0, 1 / math.tan(1.0)),
    ("sphere", 2.0, 1 / math.tan(2.0)),
    ("hyperbolic", 1.0, 1 / math.tanh(1.0)),
])
def test_background_mean_curvature_of_circles(kind, r, H):
    dom = build_domain(getattr(BackgroundSpace, kind)(2), RegionSpec.ball(r), 0.02)
    Hb = background_mean_curvature(dom)
    assert abs(np.median(Hb) - H) < 5e-3 * max(1, abs(H))


def test_normal_derivative_of_radial_quadratic():
    dom = disk(h=0.02)
    u = 1.0 - geodesic_radius(dom) ** 2
    for method in ("flux", "p1"):
        d = normal_derivative(dom, u, method=method)
        assert abs(np.mean(d) + 2.0) < 0.02


def test_mean_curvature_of_identity_equals_background():
    dom = disk(h=0.05)
    cf = ConformalFactor.identity(dom)
    bd = boundary_data(dom, cf.u.values)
    assert np.array_equal(mean_curvature(cf, bd), bd.mean_curvature)


def test_c0_norm_and_threshold():
    dom = disk(h=0.1)
    u = 0.1 * (1 - geodesic_radius(dom) ** 2)
    u[dom.boundary] = 0
    assert math.isclose(c0_norm(ConformalFactor.from_values(dom, u)), math.sqrt(2) * math.exp(0.2))
    assert alpha_threshold(2, 0.1, 5.0, 1.0) > math.sqrt(2)
    with pytest.raises(InvalidDelta):
        alpha_threshold(2, 1.5, 5.0, 1.0)
    with pytest.raises(NonPositiveEigenvalue):
        alpha_threshold(2, 0.1, -1.0, 1.0)
