import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cap_deformation
from crl.conformal import ConformalFactor, scalar_curvature
from crl.deform import (MINUS, PLUS, DeformBudgets, build_collar_metrics, build_deformation, collar_weight,
                        cutoff, cutoff_integral, matching_constant, smooth_max, smooth_min)
from crl.errors import CertifiedPositiveEigenvalue, PreconditionRefused, UnsupportedCombination
from crl.geometry import BackgroundSpace, RegionSpec, build_domain
from crl.spectral import OperatorSpec, first_eigenpair

finite = st.floats(-10, 10, allow_nan=False)


def test_cutoff_end_conditions():
    assert cutoff(0.0) == 0.0 and cutoff(1.0) == 1.0
    s = np.array([-0.5, 1.5])
    assert np.array_equal(cutoff(s), [0.0, 1.0])
    # C^2 matching: first and second derivatives vanish at both ends
    for x in (1e-4, 1 - 1e-4):
        d1 = (cutoff(x + 1e-6) - cutoff(x - 1e-6)) / 2e-6
        assert abs(d1) < 1e-5
    assert math.isclose(cutoff_integral(1.0), 0.5)


@settings(max_examples=100)
@given(st.floats(0, 1))
def test_cutoff_is_monotone_with_symmetric_profile(s):
    assert 0.0 <= cutoff(s) <= 1.0
    assert math.isclose(cutoff(s) + cutoff(1 - s), 1.0, abs_tol=1e-12)


@settings(max_examples=200)
@given(finite, finite, st.floats(1e-3, 5))
def test_smooth_min_bounds_and_exactness(a, b, mu):
    m = float(smooth_min(a, b, mu))
    assert m <= min(a, b) + 1e-12
    assert m >= min(a, b) - mu / 2 - 1e-12
    if abs(a - b) >= mu:
        assert m == pytest.approx(min(a, b), abs=1e-12)
    assert float(smooth_max(a, b, mu)) == pytest.approx(-float(smooth_min(-a, -b, mu)))


@settings(max_examples=100)
@given(finite, finite, finite, finite, st.floats(1e-2, 5), st.floats(0, 1))
def test_smooth_min_is_concave(a1, b1, a2, b2, mu, lam):
    mid = smooth_min(lam * a1 + (1 - lam) * a2, lam * b1 + (1 - lam) * b2, mu)
    chord = lam * smooth_min(a1, b1, mu) + (1 - lam) * smooth_min(a2, b2, mu)
    assert mid >= chord - 1e-9


@settings(max_examples=100)
@given(st.floats(0.05, 2.0))
def test_collar_weights_bracket_the_identity(eps):
    wp, wm = collar_weight(eps, PLUS), collar_weight(eps, MINUS)
    assert 0 < wp < 1 < wm
    assert wp * wm <= 1.0
    assert matching_constant(eps, PLUS) > 0


def test_collar_pair_on_cap():
    dom = build_domain(BackgroundSpace.sphere(2), RegionSpec.ball(2.0), 0.05)
    lap = first_eigenpair(OperatorSpec.laplacian(dom))
    pair = build_collar_metrics(lap)
    assert pair.subharmonicity_margin >= 0
    assert pair.superlevel_eigenvalue < 0
    assert np.all(pair.w_plus.values * pair.w_minus.values <= 1.0)
    interior = dom.interior
    R_plus = scalar_curvature(pair.factor(PLUS)).values[interior]
    R_minus = scalar_curvature(pair.factor(MINUS)).values[interior]
    near = lap.eigenfunction.values[interior] <= 2 * pair.epsilon
    assert np.all(R_plus[near] >= dom.scalar_curvature[interior][near] - 1e-12)
    assert np.all(R_minus[near] <= dom.scalar_curvature[interior][near] + 1e-12)


@pytest.mark.parametrize("sign,s", [(PLUS, 1), (MINUS, -1)])
def test_deformation_certificates(sign, s):
    rep = cap_deformation(sign)
    inside = rep.margins["insideOmegaEps"]
    assert rep.support_certificate == 0.0
    assert (inside["min"] if s > 0 else -inside["max"]) >= rep.strict_threshold
    assert rep.achieved_delta <= rep.delta_budget
    assert abs(rep.brown_york_mass) <= 1e-12
    assert rep.sup_deviation > 0
    assert rep.collar_inequality_margin >= 0


def test_deformation_is_supported_in_the_domain():
    rep = cap_deformation(PLUS)
    mesh = rep.factor.domain
    theta = np.arccos(np.clip(mesh.vertices[:, 2], -1, 1))
    assert np.all(rep.factor.u.values[theta > 2.0 + 1e-9] == 0.0)
    R = scalar_curvature(rep.factor).values
    outside = (theta > 2.0 + 1e-9) & ~np.isnan(R)
    assert np.allclose(R[outside], 2.0, atol=1e-12)


def test_restricted_factor_has_identity_boundary():
    f = cap_deformation(PLUS).restricted_factor()
    assert np.all(f.u.values[f.domain.boundary] == 0.0)


def test_report_serializes_without_timings():
    d = cap_deformation(PLUS).to_dict(timings=False)
    assert "timings" not in d and d["sign"] == PLUS


@pytest.mark.parametrize("space,region,err", [
    (BackgroundSpace.hyperbolic(2), RegionSpec.ball(1.0), CertifiedPositiveEigenvalue),
    (BackgroundSpace.euclidean(2), RegionSpec.ball(1.0), CertifiedPositiveEigenvalue),
    (BackgroundSpace.sphere(2), RegionSpec.ball(1.0), CertifiedPositiveEigenvalue),
    (BackgroundSpace.sphere(3), RegionSpec.ball(2.0), UnsupportedCombination),
])
def test_deformation_refusals(space, region, err):
    with pytest.raises(err):
        build_deformation(space, region, PLUS, 0.1)


def test_refusal_exit_code():
    with pytest.raises(PreconditionRefused) as info:
        build_deformation(BackgroundSpace.sphere(2), RegionSpec.ball(1.2), PLUS, 0.1)
    assert info.value.exit_code == 3


def test_budgets_are_frozen():
    b = DeformBudgets()
    with pytest.raises(Exception):
        b.t_max = 1.0
