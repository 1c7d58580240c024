import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import disk
from crl.errors import ConfigError, InvalidRegion, UnsupportedCombination
from crl.geometry import (BackgroundSpace, RegionSpec, ScalarField, build_domain, build_radial_domain,
                          domain_from_json, domain_to_json, geodesic_radius, restrict, sphere_with_cap,
                          split_by_level, superlevel_domain)


@pytest.mark.parametrize("kind,R", [("euclidean", 0.0), ("sphere", 2.0), ("hyperbolic", -2.0)])
def test_background_curvature(kind, R):
    assert getattr(BackgroundSpace, kind)(2).scalar_curvature == R


def test_product_curvature_comes_from_sphere_factor():
    assert BackgroundSpace.product(2).scalar_curvature == 2.0
    assert BackgroundSpace.product(3).n == 5


@pytest.mark.parametrize("kind,r,area", [
    ("euclidean", 1.0, math.pi),
    ("sphere", 2.0, 2 * math.pi * (1 - math.cos(2.0))),
    ("hyperbolic", 1.0, 2 * math.pi * (math.cosh(1.0) - 1)),
])
def test_mesh_area_converges(kind, r, area):
    dom = build_domain(getattr(BackgroundSpace, kind)(2), RegionSpec.ball(r), 0.04)
    assert abs(dom.cell_volumes.sum() - area) / area < 2e-3
    assert abs(dom.mass.sum() - dom.cell_volumes.sum()) < 1e-10 * area


def test_stiffness_kills_constants():
    dom = disk(h=0.08)
    assert np.max(np.abs(dom.stiffness @ np.ones(dom.num_vertices))) < 1e-12


def test_boundary_lies_on_the_circle():
    dom = disk(h=0.08)
    assert np.allclose(np.linalg.norm(dom.vertices[dom.boundary], axis=1), 1.0)
    assert dom.is_connected()


def test_json_round_trip_preserves_hash():
    dom = disk(h=0.1)
    back = domain_from_json(domain_to_json(dom))
    assert back.hash == dom.hash
    field = ScalarField(dom, np.arange(dom.num_vertices, dtype=float))
    assert np.array_equal(ScalarField.from_json(field.to_json(), back).values, field.values)


def test_meshing_is_deterministic():
    a = build_domain(BackgroundSpace.sphere(2), RegionSpec.ball(1.3), 0.07)
    b = build_domain(BackgroundSpace.sphere(2), RegionSpec.ball(1.3), 0.07)
    assert a.hash == b.hash


@pytest.mark.parametrize("space,region,err", [
    (BackgroundSpace.sphere(2), RegionSpec.ball(3.5), InvalidRegion),
    (BackgroundSpace.euclidean(2), RegionSpec.complement(0.5), InvalidRegion),
    (BackgroundSpace.euclidean(3), RegionSpec.ball(1.0), UnsupportedCombination),
])
def test_invalid_regions_are_refused(space, region, err):
    with pytest.raises(err) as info:
        build_domain(space, region, 0.1)
    assert isinstance(info.value, ConfigError)


def test_complement_covers_rest_of_sphere():
    r = 0.6
    dom = build_domain(BackgroundSpace.sphere(2), RegionSpec.complement(r), 0.05)
    assert abs(dom.cell_volumes.sum() - 2 * math.pi * (1 + math.cos(r))) < 0.01


def test_sphere_with_cap_has_ring_at_cap_radius():
    mesh, mask = sphere_with_cap(2.0, 0.1)
    cap = restrict(mesh, mask)
    theta = np.arccos(np.clip(cap.vertices[cap.boundary, 2], -1, 1))
    assert np.allclose(theta, 2.0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95))
def test_level_split_puts_level_set_on_vertices(level):
    dom = disk(h=0.1)
    rho = geodesic_radius(dom)
    values = 1.0 - rho ** 2
    split = split_by_level(dom, values, level)
    sub = restrict(split.domain, split.above)
    assert np.allclose(split.values[sub.parent_vertex[sub.boundary]], level, atol=1e-12)
    assert np.all(split.values[sub.parent_vertex[sub.interior]] > level)


def test_superlevel_domain_of_radial_profile_is_a_ball():
    dom = disk(h=0.05)
    field = ScalarField(dom, 1.0 - geodesic_radius(dom) ** 2)
    sub = superlevel_domain(dom, field, 0.75)
    assert abs(sub.cell_volumes.sum() - math.pi * 0.25) < 5e-3


def test_radial_domain_volume():
    dom = build_radial_domain(BackgroundSpace.euclidean(3), 1.0, 401)
    assert abs(dom.mass.sum() - 4 * math.pi / 3) < 1e-3
