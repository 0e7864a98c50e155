"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N PASS/FAIL`` line (repeated in the
terminal summary) before asserting.  The CLT runs (criteria 6 and 7) take a
few minutes; worker count follows FRECHET_LAB_JOBS.
"""
import math
import os
import time

import numpy as np
import pytest

from frechet_lab.clt import (
    CltConfig,
    Regime,
    compare_to_limit,
    correction_classical,
    correction_smeary,
    perturbation_map,
    run_scaling_experiment,
    slope_separation,
    tau_classical,
    tau_smeary,
)
from frechet_lab.frechet import frechet_value_symmetric
from frechet_lab.quadrature import hyperspherical_rule, tensor_expectation
from frechet_lab.radial import (
    RadialDensity,
    alpha_coefficient,
    beta_coefficient,
    fourth_bracket,
    fourth_directional,
    normalize,
)
from frechet_lab.smeary import design_smeary, suggest_epsilon
from frechet_lab.sphere import exp_map, log_map, north_pole
from frechet_lab.tensors import fourth_rho, hessian_rho
from frechet_lab.verify import tensors_suite

JOBS = int(os.environ.get("FRECHET_LAB_JOBS", "1"))
SIZES = [100, 1_000, 10_000, 100_000]
REPLICATES = 200
SEED = 20240601


def fmt(x, spec=".3g"):
    return format(float(x), spec)


def finish(acceptance, number, title, checks, t0):
    ok = acceptance(number, title, checks, time.perf_counter() - t0)
    failed = [f"{label} = {value}" for label, value, passed in checks if not passed]
    assert ok, "; ".join(failed)


# --------------------------------------------------------------------------


def test_criterion_1_tensor_oracles(acceptance):
    t0 = time.perf_counter()
    res = {c.name: c for c in tensors_suite(seed=0, configs=100, dims=(2, 3, 5, 10))}
    o = [res["order 1 vs finite differences"].value, res["order 2 vs finite differences"].value,
         res["order 3 (symmetrized) vs finite differences"].value,
         res["order 4 (symmetrized) vs finite differences"].value]
    cov3 = res["order 3 as covariant derivative of the Hessian"].value
    cov4 = res["order 4 as covariant derivative of order 3"].value
    elapsed = time.perf_counter() - t0
    checks = [
        ("max rel err orders 1-3", fmt(max(o[:3])), max(o[:3]) < 1e-6),
        ("max rel err order 4", fmt(o[3]), o[3] < 1e-4),
        ("covariant order 3", fmt(cov3), cov3 < 1e-6),
        ("covariant order 4", fmt(cov4), cov4 < 1e-4),
        ("runtime s", fmt(elapsed), elapsed < 60),
    ]
    finish(acceptance, 1, "closed-form tensors vs finite differences, 100 configs per d in {2,3,5,10}", checks, t0)


def test_criterion_2_uniform_degeneracy(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for d in range(2, 11):
        f = normalize(RadialDensity.uniform(1.0), d)
        vals = [alpha_coefficient(f, d, m) for m in ("exact", "quadrature")]
        if d >= 4:
            vals += [beta_coefficient(f, d, m) for m in ("exact", "quadrature")]
        worst = max(worst, max(abs(v) for v in vals))
    elapsed = time.perf_counter() - t0
    checks = [("max |alpha|, |beta|", fmt(worst), worst <= 1e-12), ("runtime s", fmt(elapsed), elapsed < 10)]
    finish(acceptance, 2, "alpha_d = beta_d = 0 for constant f, d = 2..10", checks, t0)


def balanced_random_density(rng, d):
    """Cap at the pole plus 1-3 pieces in [pi/2, pi - eps], cap level solving alpha_d = 0.

    alpha_d is linear in the levels.  Outer pieces close to pi/2 can still
    add to alpha_d, so draws whose balancing cap level is not positive are
    redrawn.
    """
    while True:
        a = rng.uniform(0.2, 1.4)
        eps = rng.uniform(0.05, 0.5)
        k = int(rng.integers(1, 4))
        cuts = np.sort(rng.uniform(math.pi / 2, math.pi - eps, 2 * k))
        outer = [(cuts[2 * i], cuts[2 * i + 1], rng.uniform(0.1, 2.0)) for i in range(k)]
        level = -alpha_coefficient(RadialDensity.from_segments(outer), d) / alpha_coefficient(
            RadialDensity.from_segments([(0.0, a, 1.0)]), d)
        if level > 0:
            return normalize(RadialDensity.from_segments([(0.0, a, level)] + outer), d)


def test_criterion_3_low_dimension_negativity(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_alpha, worst_fourth, count = 0.0, -np.inf, 0
    for d in (2, 3):
        for _ in range(50):
            f = balanced_random_density(rng, d)
            assert f.vanishes_near_pi
            worst_alpha = max(worst_alpha, abs(alpha_coefficient(f, d)))
            worst_fourth = max(worst_fourth, fourth_directional(f, d))
            count += 1
    grid = np.linspace(0.0, math.pi, 100_002)[1:-1]
    bracket = max(float(np.max(fourth_bracket(grid, d, as_printed=p))) for d in (2, 3) for p in (False, True))
    elapsed = time.perf_counter() - t0
    checks = [
        ("densities", count, count == 100),
        ("max |alpha|", fmt(worst_alpha), worst_alpha < 1e-12),
        ("max fourth_directional", fmt(worst_fourth), worst_fourth < 0),
        ("max bracket on grid", fmt(bracket), bracket < 0),
        ("runtime s", fmt(elapsed), elapsed < 60),
    ]
    finish(acceptance, 3, "fourth directional derivative < 0 for d in {2,3} with alpha_d = 0", checks, t0)


def test_criterion_4_smeary_construction(acceptance):
    t0 = time.perf_counter()
    worst_alpha, min_beta = 0.0, np.inf
    for d in range(4, 11):
        for phi1 in (0.5, 1.0, 1.3):
            s = design_smeary(phi1, d)
            f = s.density()
            worst_alpha = max(worst_alpha, abs(alpha_coefficient(f, d)))
            min_beta = min(min_beta, beta_coefficient(f, d))
    # the gap phi1 - eps(d) shrinks like 1/(d - 3); extrapolating a quadratic
    # in 1/(d - 3) over d = 50..100 to d = infinity should leave nothing
    trend_ok = True
    limit_ratio = 0.0
    dims = np.arange(4, 101)
    for phi1 in (0.3, 0.8, 1.0, 1.3):
        gaps = np.array([phi1 - suggest_epsilon(phi1, int(d)) for d in dims])
        trend_ok &= bool(np.all(gaps > 0) and np.all(np.diff(gaps) < 0))
        tail = dims >= 50
        limit = np.polyfit(1.0 / (dims[tail] - 3), gaps[tail], 2)[-1]
        limit_ratio = max(limit_ratio, abs(limit) / gaps[0])
    elapsed = time.perf_counter() - t0
    checks = [
        ("max |alpha|", fmt(worst_alpha), worst_alpha <= 1e-9),
        ("min beta", fmt(min_beta), min_beta > 0),
        ("phi1 - eps(d) decreasing to d = 100", trend_ok, trend_ok),
        ("extrapolated gap at d = inf / gap at d = 4", fmt(limit_ratio), limit_ratio < 0.01),
        ("runtime s", fmt(elapsed), elapsed < 10),
    ]
    finish(acceptance, 4, "cap+strip designer for d = 4..10 and eps(d) -> phi1", checks, t0)


def quartic_law(smeary10):
    f, beta = smeary10.density(), smeary10.beta_check
    ts = np.linspace(0.02, 0.2, 10)
    f0 = frechet_value_symmetric(f, 10, 0.0)
    inc = np.array([frechet_value_symmetric(f, 10, t) for t in ts]) - f0
    pointwise = np.max(np.abs(inc / (beta * ts**4 / 24) - 1))
    coef = float(np.sum(inc * ts**4) / np.sum(ts**8))
    fit_err = abs(coef / (beta / 24) - 1)
    return pointwise, fit_err


def test_criterion_5_quartic_law(acceptance, smeary10):
    t0 = time.perf_counter()
    pointwise, fit_err = quartic_law(smeary10)
    elapsed = time.perf_counter() - t0
    checks = [
        ("max pointwise rel err on (0, 0.2]", fmt(pointwise), pointwise < 0.05),
        ("rel err of fitted t^4 coefficient", fmt(fit_err), fit_err < 0.05),
        ("runtime s", fmt(elapsed), elapsed < 60),
    ]
    finish(acceptance, 5, "F(t) - F(0) = (beta_d/24) t^4 for the d = 10 design", checks, t0)


# --------------------------------------------------------------------------
# CLT experiments


@pytest.fixture(scope="module")
def classical_run(bump3):
    t0 = time.perf_counter()
    cfg = CltConfig(bump3, 3, SIZES, REPLICATES, seed=SEED, regime=Regime.CLASSICAL)
    res = run_scaling_experiment(cfg, jobs=JOBS)
    limit = compare_to_limit(res, cfg)
    return cfg, res, limit, time.perf_counter() - t0


@pytest.fixture(scope="module")
def smeary_run(smeary10):
    t0 = time.perf_counter()
    cfg = CltConfig(smeary10.density(), 10, SIZES, REPLICATES, seed=SEED, regime=Regime.SMEARY)
    res = run_scaling_experiment(cfg, jobs=JOBS)
    limit = compare_to_limit(res, cfg)
    return cfg, res, limit, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_6_classical_rate(acceptance, classical_run):
    t0 = time.perf_counter()
    cfg, res, limit, elapsed = classical_run
    fit = res.fit
    min_p = min(limit["ks_pvalues"])
    checks = [
        ("slope", f"{fit.slope:.4f} +- {fit.stderr:.4f}", abs(fit.slope + 0.5) <= 0.05),
        ("sizes in fit", fit.used_sizes, True),
        ("min KS p at n = 1e5", fmt(min_p), min_p > 0.01),
        ("valid run", res.valid, res.valid),
    ]
    finish(acceptance, 6, "classical bump d = 3, R = 200: slope -1/2 and KS vs H#N", checks, t0 - elapsed)


@pytest.mark.slow
def test_criterion_7_smeary_rate(acceptance, smeary_run, classical_run, smeary10):
    t0 = time.perf_counter()
    cfg, res, limit, elapsed = smeary_run
    fit = res.fit
    sep = slope_separation(classical_run[1].fit, fit)
    pointwise, fit_err = quartic_law(smeary10)
    checks = [
        ("slope", f"{fit.slope:.4f} +- {fit.stderr:.4f}", abs(fit.slope + 1 / 6) <= 0.08),
        ("sizes in fit", fit.used_sizes, True),
        ("curvature p", fmt(fit.curvature_p), True),
        ("separation from classical (combined s.e.)", fmt(sep), sep > 3),
        ("quartic law rel err", fmt(max(pointwise, fit_err)), max(pointwise, fit_err) < 0.05),
        ("valid run", res.valid, res.valid),
    ]
    finish(acceptance, 7, "smeary cap+strip d = 10, R = 200: slope -1/6, separation and quartic law",
           checks, t0 - elapsed)


def test_criterion_8_correction_maps(acceptance, bump3, smeary10):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    Z = rng.standard_normal((100, 10)) * rng.uniform(0.01, 10, (100, 1))
    a, b = alpha_coefficient(bump3, 3), smeary10.beta_check
    inv_c = float(np.max(np.abs(correction_classical(tau_classical(Z, a), a) - Z)))
    inv_s = float(np.max(np.abs(correction_smeary(tau_smeary(Z, b), b) - Z)))

    p3 = north_pole(3)
    x3 = exp_map(p3, np.array([0.0, 0.3, 0.4, 0.0]))
    est_c = perturbation_map(bump3, 3, x3, [1e-3, 5e-4, 2.5e-4], r=2).estimate
    target_c = correction_classical(log_map(p3, x3), a)
    err_c = float(np.linalg.norm(est_c - target_c) / np.linalg.norm(target_c))

    p10 = north_pole(10)
    v = np.zeros(11)
    v[1], v[3] = 0.6, 0.8
    x10 = exp_map(p10, v)
    est_s = perturbation_map(smeary10.density(), 10, x10, [1e-4, 5e-5, 2.5e-5], r=4).estimate
    target_s = correction_smeary(log_map(p10, x10), b)
    err_s = abs(np.linalg.norm(est_s) / np.linalg.norm(target_s) - 1)
    cos = float(est_s @ target_s / (np.linalg.norm(est_s) * np.linalg.norm(target_s)))
    angle = math.degrees(math.acos(min(1.0, cos)))
    checks = [
        ("max |H(tau(Z)) - Z| classical", fmt(inv_c), inv_c < 1e-12),
        ("max |H(tau(Z)) - Z| smeary", fmt(inv_s), inv_s < 1e-12),
        ("classical perturbation rel err", fmt(err_c), err_c < 0.02),
        ("smeary perturbation magnitude rel err", fmt(err_s), err_s < 0.05),
        ("smeary perturbation angle deg", fmt(angle), angle < 1.0),
    ]
    finish(acceptance, 8, "H inverts tau; perturbation map matches H", checks, t0)


def test_criterion_9_isotropy(acceptance, bump3):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    cases = [
        (2, normalize(RadialDensity.from_segments([(0.0, 0.7, 1.0), (1.2, 2.5, 0.4)]), 2)),
        (3, bump3),
        (4, design_smeary(0.8, 4).density()),
    ]
    spread = mixed = coef = 0.0
    for d, f in cases:
        rule = hyperspherical_rule(f, d)
        vals = []
        for _ in range(6):
            Z = np.r_[0.0, rng.standard_normal(d)]
            T = np.r_[0.0, rng.standard_normal(d)]
            T -= (T @ Z) / (Z @ Z) * Z
            s = rng.uniform(0.5, 2.0)
            Z, T = s * Z / np.linalg.norm(Z), T / np.linalg.norm(T)
            vals.append(tensor_expectation(f, d, lambda fr: fourth_rho(fr, Z, Z, Z, Z), rule) / s**4)
            mixed = max(mixed, abs(tensor_expectation(f, d, lambda fr: hessian_rho(fr, Z, T), rule)))
        spread = max(spread, float(np.ptp(vals)))
        coef = max(coef, abs(vals[0] - fourth_directional(f, d)))
    elapsed = time.perf_counter() - t0
    checks = [
        ("spread of fourth derivative / |Z|^4", fmt(spread), spread < 1e-8),
        ("max |hessian(Z, T)|, Z perp T", fmt(mixed), mixed < 1e-8),
        ("agreement with 1-D coefficient", fmt(coef), coef < 1e-8),
        ("runtime s", fmt(elapsed), elapsed < 60),
    ]
    finish(acceptance, 9, "isotropy and vanishing mixed Hessian by full-sphere quadrature, d in {2,3,4}", checks, t0)
