import numpy as np
import pytest

from frechet_lab.quadrature import hyperspherical_rule, tensor_expectation
from frechet_lab.radial import RadialDensity, alpha_coefficient, fourth_directional, normalize
from frechet_lab.smeary import design_smeary
from frechet_lab.tensors import fourth_rho, hessian_rho


def unit(d, k):
    e = np.zeros(d + 1)
    e[k] = 1.0
    return e


@pytest.mark.parametrize("d", [2, 3, 4])
def test_rule_integrates_density_to_one(d):
    f = normalize(RadialDensity.from_segments([(0.0, 0.7, 1.0), (1.2, 2.5, 0.4)]), d)
    pts, w = hyperspherical_rule(f, d)
    assert pts.shape == (w.size, d + 1)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert w.sum() == pytest.approx(1.0, abs=1e-13)


def test_rule_first_moments_vanish():
    f = normalize(RadialDensity.bump(2.0), 3)
    pts, w = hyperspherical_rule(f, 3)
    assert np.allclose((w[:, None] * pts[:, 1:]).sum(axis=0), 0.0, atol=1e-15)


@pytest.mark.parametrize("d", [2, 3])
def test_full_sphere_integrals_match_radial_coefficients(d):
    f = normalize(RadialDensity.from_segments([(0.0, 0.7, 1.0), (1.2, 2.5, 0.4)]), d)
    rule = hyperspherical_rule(f, d)
    Z = unit(d, 1)
    assert tensor_expectation(f, d, lambda fr: hessian_rho(fr, Z, Z), rule) == pytest.approx(
        alpha_coefficient(f, d), abs=1e-13)
    assert tensor_expectation(f, d, lambda fr: fourth_rho(fr, Z, Z, Z, Z), rule) == pytest.approx(
        fourth_directional(f, d), abs=1e-12)


def test_smeary_design_d4_by_direct_integration():
    design = design_smeary(0.8, 4)
    f = design.density()
    rule = hyperspherical_rule(f, 4, n_angle=16)
    Z = unit(4, 2)
    assert abs(tensor_expectation(f, 4, lambda fr: hessian_rho(fr, Z, Z), rule)) < 1e-13
    assert tensor_expectation(f, 4, lambda fr: fourth_rho(fr, Z, Z, Z, Z), rule) == pytest.approx(
        design.beta_check, abs=1e-9)


def test_rule_needs_d2():
    with pytest.raises(ValueError):
        hyperspherical_rule(RadialDensity.uniform(1.0), 1)
