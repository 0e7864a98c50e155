import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import special_ortho_group

from frechet_lab.frechet import (
    EmpiricalSample,
    empirical_gradient,
    empirical_value,
    estimate_mean,
    extrinsic_mean,
    frechet_slope_symmetric,
    frechet_value_symmetric,
    tangent_basis,
    tangent_coordinates,
    tangent_covariance,
)
from frechet_lab.radial import RadialDensity, alpha_coefficient, normalize, sphere_volume
from frechet_lab.sampling import RadialSampler
from frechet_lab.sphere import CutLocusError, exp_map, log_map, north_pole, random_tangent

# mpmath value of E[phi^2] for the normalized bump of radius 0.5 on S^3
BUMP3_DELTA05_EPHI2 = 0.148552784313


def second_moment(f, d):
    """1-D quadrature of E[phi^2] under f(phi) sin^{d-1} phi V(S^{d-1})."""
    pieces = f.smooth_pieces()
    val = sum(integrate.quad(lambda t: t * t * float(f(t)) * math.sin(t) ** (d - 1), a, b, epsabs=1e-14)[0]
              for a, b in pieces)
    return sphere_volume(d - 1) * val


# --------------------------------------------------------------------------
# symmetric Frechet function


@pytest.mark.parametrize("d", [2, 3, 5])
def test_uniform_frechet_function_is_constant(d):
    f = normalize(RadialDensity.uniform(1.0), d)
    vals = [frechet_value_symmetric(f, d, t) for t in (0.0, 0.4, 1.3, 2.5, 3.0)]
    assert max(vals) - min(vals) < 1e-8


def test_value_at_pole_is_half_second_moment(bump3):
    assert second_moment(bump3, 3) == pytest.approx(BUMP3_DELTA05_EPHI2, abs=1e-11)
    assert frechet_value_symmetric(bump3, 3, 0.0) == pytest.approx(BUMP3_DELTA05_EPHI2 / 2, abs=1e-11)
    f = normalize(RadialDensity.from_segments([(0.0, 1.0, 1.0), (1.5, 2.5, 0.3)]), 6)
    assert frechet_value_symmetric(f, 6, 0.0) == pytest.approx(second_moment(f, 6) / 2, abs=1e-11)


def test_value_against_direct_monte_carlo(rng):
    d, t = 4, 0.7
    f = normalize(RadialDensity.from_segments([(0.0, 1.2, 1.0), (2.0, 2.8, 0.5)]), d)
    pts = RadialSampler(f, d, seed=rng).sample(200_000)
    q = np.zeros(d + 1)
    q[0], q[1] = math.cos(t), math.sin(t)
    mc = 0.5 * np.arccos(np.clip(pts @ q, -1, 1)) ** 2
    assert abs(frechet_value_symmetric(f, d, t) - mc.mean()) < 4 * mc.std() / math.sqrt(mc.size)


@pytest.mark.parametrize("spec", [("bump", 3), ("segments", 5), ("segments", 2)])
def test_second_difference_equals_alpha(spec, bump3):
    kind, d = spec
    f = bump3 if kind == "bump" else normalize(RadialDensity.from_segments([(0, 1, 1), (1.5, 2.5, 0.3)]), d)
    a = alpha_coefficient(f, d)
    assert a > 0
    h = 1e-3
    f0 = frechet_value_symmetric(f, d, 0.0)
    assert abs(frechet_slope_symmetric(f, d, 0.0)) < 1e-14
    assert abs(2 * (frechet_value_symmetric(f, d, h) - f0) / h**2 - a) < 1e-6
    assert abs(frechet_slope_symmetric(f, d, h) / h - a) < 1e-6


def test_slope_is_derivative_of_value():
    d = 4
    f = normalize(RadialDensity.from_segments([(0.0, 0.9, 1.0), (1.7, 2.9, 0.4)]), d)
    h = 1e-5
    for t in (0.3, 1.0, 2.0):
        num = (frechet_value_symmetric(f, d, t + h) - frechet_value_symmetric(f, d, t - h)) / (2 * h)
        assert frechet_slope_symmetric(f, d, t) == pytest.approx(num, abs=1e-8)


def test_quartic_growth_of_smeary_design(smeary10):
    f, beta = smeary10.density(), smeary10.beta_check
    f0 = frechet_value_symmetric(f, 10, 0.0)
    for t in (0.05, 0.1, 0.2):
        ratio = (frechet_value_symmetric(f, 10, t) - f0) / (beta * t**4 / 24)
        assert abs(ratio - 1) < 0.05


# --------------------------------------------------------------------------
# empirical gradient


def test_empirical_sample_validation():
    with pytest.raises(ValueError):
        EmpiricalSample(np.empty((0, 3)))
    s = EmpiricalSample([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert s.d == 2 and len(s) == 2
    assert np.allclose(np.linalg.norm(s.points, axis=1), 1.0)


def test_gradient_single_point_and_cancellation():
    x = north_pole(3)
    assert np.allclose(empirical_gradient([x], x), 0.0, atol=1e-15)
    e = np.array([0.0, 1.0, 0.0, 0.0])
    pts = [exp_map(x, 0.7 * e), exp_map(x, -0.7 * e)]
    assert np.linalg.norm(empirical_gradient(pts, x)) < 1e-15


def test_gradient_equals_minus_mean_log(rng):
    x = north_pole(5)
    pts = RadialSampler(normalize(RadialDensity.bump(1.5), 5), 5, seed=rng).sample(50)
    assert np.allclose(empirical_gradient(pts, x), -log_map(x, pts).mean(axis=0), atol=1e-15)


def test_gradient_matches_finite_difference(rng):
    d = 4
    pts = RadialSampler(normalize(RadialDensity.bump(2.0), d), d, seed=rng).sample(200)
    x = exp_map(north_pole(d), 0.2 * random_tangent(north_pole(d), rng))
    g = empirical_gradient(pts, x)
    h = 1e-5
    for _ in range(5):
        v = random_tangent(x, rng)
        v /= np.linalg.norm(v)
        num = (empirical_value(pts, exp_map(x, h * v)) - empirical_value(pts, exp_map(x, -h * v))) / (2 * h)
        assert abs(g @ v - num) < 1e-7


def test_gradient_cut_locus_names_index():
    x = north_pole(2)
    pts = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]
    with pytest.raises(CutLocusError, match="sample point 1"):
        empirical_gradient(pts, x)


# --------------------------------------------------------------------------
# mean estimation


def test_identical_points_one_iteration():
    q = np.array([0.0, 0.6, 0.8])
    est = estimate_mean([q] * 5, init=north_pole(2))
    assert est.converged and est.iterations == 1
    assert np.allclose(est.point, q, atol=1e-12)


def test_symmetric_pair_recovers_midpoint():
    q = np.array([0.0, 0.0, 1.0])
    e = np.array([1.0, 0.0, 0.0])
    pts = [exp_map(q, 0.3 * e), exp_map(q, -0.3 * e)]
    est = estimate_mean(pts, init=exp_map(q, np.array([0.05, 0.1, 0.0])))
    assert est.converged
    assert np.linalg.norm(est.point - q) < 1e-9


@pytest.mark.parametrize("step_rule", ["fixed", "bb"])
def test_bump_sample_mean_within_monte_carlo_error(step_rule, bump3):
    n = 1000
    sampler = RadialSampler(bump3, 3, seed=7)
    pts = sampler.sample(n)
    p = north_pole(3)
    est = estimate_mean(pts, step_rule=step_rule)
    assert est.converged and est.grad_norm < 1e-10
    sigma = np.sqrt(np.diag(tangent_covariance(pts, p)))
    err = np.abs(tangent_coordinates(p, log_map(p, est.point)))
    assert np.all(err < 3 * sigma / math.sqrt(n))


def test_descent_is_monotone(rng):
    for d, delta in ((2, 2.5), (3, 1.5), (6, 2.8)):
        pts = RadialSampler(normalize(RadialDensity.bump(delta), d), d, seed=rng).sample(300)
        init = exp_map(north_pole(d), 0.8 * random_tangent(north_pole(d), rng) / math.sqrt(d))
        for rule in ("fixed", "bb"):
            est = estimate_mean(pts, init=init, step_rule=rule, check_monotone=True)
            vals = np.array(est.diagnostics["values"])
            assert np.all(np.diff(vals) <= 1e-12)


def test_equivariance(rng):
    d = 4
    pts = RadialSampler(normalize(RadialDensity.bump(1.0), d), d, seed=rng).sample(400)
    Q = special_ortho_group.rvs(d + 1, random_state=3)
    a = estimate_mean(pts)
    b = estimate_mean(pts @ Q.T)
    assert np.linalg.norm(Q @ a.point - b.point) < 1e-9


def test_non_convergence_reported(bump3):
    pts = RadialSampler(bump3, 3, seed=1).sample(100)
    est = estimate_mean(pts, init=[0.0, 1.0, 0.0, 0.0], max_iter=2)
    assert not est.converged and est.iterations == 2
    assert est.grad_norm >= 1e-10
    assert "halvings" in est.diagnostics


def test_unknown_step_rule():
    with pytest.raises(ValueError):
        estimate_mean([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], step_rule="newton")


def test_extrinsic_mean():
    assert np.allclose(extrinsic_mean([[1.0, 0, 0], [0, 1.0, 0]]), [2**-0.5, 2**-0.5, 0])
    with pytest.raises(ValueError):
        extrinsic_mean([[1.0, 0, 0], [-1.0, 0, 0]])


# --------------------------------------------------------------------------
# tangent coordinates and covariance


def test_tangent_basis_orthonormal(rng):
    for d in (2, 3, 7):
        base = rng.standard_normal(d + 1)
        base /= np.linalg.norm(base)
        B = tangent_basis(base)
        assert B.shape == (d, d + 1)
        assert np.allclose(B @ B.T, np.eye(d), atol=1e-14)
        assert np.allclose(B @ base, 0.0, atol=1e-14)
        assert np.array_equal(B, tangent_basis(base))


def test_covariance_of_base_copies_is_zero():
    b = north_pole(3)
    assert np.array_equal(tangent_covariance([b] * 4, b), np.zeros((3, 3)))


def test_covariance_isotropic_and_trace(bump3):
    n = 100_000
    pts = RadialSampler(bump3, 3, seed=11).sample(n)
    C = tangent_covariance(pts, north_pole(3))
    assert np.allclose(C, C.T)
    assert np.all(np.linalg.eigvalsh(C) >= 0)
    diag = np.diag(C)
    off = C - np.diag(diag)
    assert np.max(np.abs(off)) / diag.min() < 0.05
    phi2 = np.arccos(np.clip(pts[:, 0], -1, 1)) ** 2
    assert np.trace(C) == pytest.approx(BUMP3_DELTA05_EPHI2, abs=4 * phi2.std() / math.sqrt(n))


def test_covariance_cut_locus():
    with pytest.raises(CutLocusError):
        tangent_covariance([[-1.0, 0.0, 0.0]], north_pole(2))
