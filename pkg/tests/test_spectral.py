import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros

from conftest import disk
from crl.errors import InvalidRadius, SolverDivergence, UnsupportedCombination
from crl.geometry import BackgroundSpace, RegionSpec, build_domain
from crl.spectral import (LAPLACIAN, SCHRODINGER, OperatorSpec, first_eigenpair, hopf_boundary_check,
                          observed_orders, radial_first_eigenpair, richardson_limit)

J01_SQ = float(jn_zeros(0, 1)[0] ** 2)


def test_radial_flat_disk_and_ball():
    assert abs(radial_first_eigenpair(BackgroundSpace.euclidean(2), 1.0).eigenvalue - J01_SQ) < 1e-9
    assert abs(radial_first_eigenpair(BackgroundSpace.euclidean(3), 1.0).eigenvalue - math.pi ** 2) < 1e-9


@pytest.mark.parametrize("n", [2, 3])
def test_hemisphere_schrodinger_eigenvalue_vanishes(n):
    res = radial_first_eigenpair(BackgroundSpace.sphere(n), math.pi / 2, SCHRODINGER)
    assert abs(res.eigenvalue) < 1e-9


def test_radial_hyperbolic_three_ball():
    # in H^3 the radial problem reduces to sinh-weighted sine modes: lambda = 1 + (pi/r)^2
    r = 1.3
    res = radial_first_eigenpair(BackgroundSpace.hyperbolic(3), r)
    assert abs(res.eigenvalue - (1 + (math.pi / r) ** 2)) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 3.0))
def test_radial_scaling_in_the_plane(r):
    res = radial_first_eigenpair(BackgroundSpace.euclidean(2), r, grid_points=51)
    assert abs(res.eigenvalue * r * r - J01_SQ) < 1e-8 * J01_SQ


def test_radial_refusals():
    with pytest.raises(InvalidRadius):
        radial_first_eigenpair(BackgroundSpace.sphere(2), 3.5)
    with pytest.raises(UnsupportedCombination):
        radial_first_eigenpair(BackgroundSpace.product(2), 1.0)


def test_fem_converges_at_second_order():
    hs = [0.08, 0.04, 0.02]
    vals = [first_eigenpair(OperatorSpec.laplacian(disk(h=h))).eigenvalue for h in hs]
    orders = observed_orders(hs, np.array(vals) - J01_SQ)
    assert np.all(orders > 1.7)
    assert abs(richardson_limit(hs, vals) - J01_SQ) < abs(vals[-1] - J01_SQ)


def test_fem_eigenpair_is_normalized_and_positive():
    res = first_eigenpair(OperatorSpec.laplacian(disk(h=0.05)), tol=1e-10)
    phi = res.eigenfunction.values
    assert np.max(phi) == 1.0
    assert np.all(phi[res.domain.interior] > 0)
    assert np.all(phi[res.domain.boundary] == 0)
    assert res.residual <= 1e-10


def test_sphere_cap_schrodinger_sign():
    for r, sign in [(1.0, 1), (2.0, -1)]:
        dom = build_domain(BackgroundSpace.sphere(2), RegionSpec.ball(r), 0.05)
        lam = first_eigenpair(OperatorSpec.schrodinger(dom)).eigenvalue
        assert np.sign(lam) == sign


def test_hopf_on_hemisphere():
    dom = build_domain(BackgroundSpace.sphere(2), RegionSpec.ball(math.pi / 2), 0.02)
    res = first_eigenpair(OperatorSpec.schrodinger(dom))
    dnu = hopf_boundary_check(res)
    assert np.all(dnu < 0)
    assert abs(np.mean(dnu) + 1.0) < 0.01


def test_iteration_budget_is_enforced():
    with pytest.raises(SolverDivergence):
        first_eigenpair(OperatorSpec.laplacian(disk(h=0.05)), tol=1e-12, max_iter=2)


def test_operator_spec_rejects_wrong_potential():
    dom = build_domain(BackgroundSpace.sphere(2), RegionSpec.ball(1.0), 0.1)
    lap = OperatorSpec.laplacian(dom)
    with pytest.raises(ValueError):
        OperatorSpec(SCHRODINGER, lap.potential)
    assert OperatorSpec.of_kind(LAPLACIAN, dom).kind == LAPLACIAN


def test_to_dict_round_trips_through_json():
    import json
    res = first_eigenpair(OperatorSpec.laplacian(disk(h=0.1)))
    d = json.loads(json.dumps(res.to_dict()))
    assert d["eigenvalue"] == res.eigenvalue and d["kind"] == LAPLACIAN


def test_half_maximum_superlevel_of_disk_eigenfunction():
    from scipy.optimize import brentq
    from scipy.special import j0
    from crl.geometry import superlevel_domain

    ratio = brentq(lambda t: j0(math.sqrt(J01_SQ) * t) - 0.5, 0.0, 1.0)
    res = first_eigenpair(OperatorSpec.laplacian(disk(h=0.02)))
    sub = superlevel_domain(res.domain, res.eigenfunction, 0.5)
    assert abs(math.sqrt(sub.cell_volumes.sum() / math.pi) - ratio) < 2e-3
