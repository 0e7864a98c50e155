"""Monte Carlo checks of the classical and 2-smeary CLTs for sample Frechet means.

For a rotationally symmetric measure with local mean at the pole p,

    n^{1/(2k+2)} log_p(mean_n)  ->  H_# N,    N = Gaussian(0, Cov(log_p X)),

with k = 0 and H(Z) = Z / alpha_d in the classical case, and k = 2 and
H(Z) = Z |Z|^{-2/3} (6 / beta_d)^{1/3} in the smeary case.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats
from scipy.spatial.distance import cdist

from .frechet import (
    estimate_mean,
    frechet_slope_symmetric,
    frechet_value_symmetric,
    tangent_basis,
    tangent_covariance,
)
from .radial import Classification, RadialDensity, TensorReport, classify
from .sampling import RadialSampler, replicate_rng
from .sphere import CutLocusError, as_point, exp_map, geodesic_distance, log_map, north_pole

MIN_REPLICATES = 50
MAX_NONCONVERGENCE = 0.01
LIMIT_DRAWS = 10_000
COVARIANCE_SAMPLE = 100_000
TRUST_RADIUS = math.pi / 2
# stream keys kept apart from the (n index, replicate) keys
_COV_STREAM = 1_000_003
_LIMIT_STREAM = 1_000_033


class Regime(str, enum.Enum):
    CLASSICAL = "Classical"
    SMEARY = "Smeary"

    @property
    def k(self) -> int:
        return 0 if self is Regime.CLASSICAL else 2

    @property
    def rate(self) -> float:
        return 1.0 / (2 * self.k + 2)

    @property
    def expected_class(self) -> Classification:
        return Classification.LOCAL_MIN if self is Regime.CLASSICAL else Classification.SMEARY_CANDIDATE


class InitPolicy(str, enum.Enum):
    EXTRINSIC_MEAN = "ExtrinsicMean"
    POLE = "Pole"


class RegimeMismatchError(ValueError):
    pass


class PerturbationTooLargeError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# correction maps


def tau_classical(Z, alpha: float):
    return alpha * np.asarray(Z, dtype=float)


def correction_classical(Z, alpha: float):
    """H(Z) = Z / alpha_d."""
    if not alpha > 0:
        raise ValueError("classical correction needs alpha_d > 0")
    return np.asarray(Z, dtype=float) / alpha


def tau_smeary(Z, beta: float):
    """(beta_d / 6) Z |Z|^2."""
    Z = np.asarray(Z, dtype=float)
    return beta / 6.0 * Z * np.sum(Z * Z, axis=-1, keepdims=True)


def correction_smeary(Z, beta: float):
    """H(Z) = Z |Z|^{-2/3} beta_d^{-1/3} 6^{1/3}, with H(0) = 0."""
    if not beta > 0:
        raise ValueError("smeary correction needs beta_d > 0")
    Z = np.asarray(Z, dtype=float)
    nz = np.linalg.norm(Z, axis=-1, keepdims=True)
    scale = np.where(nz > 0, np.cbrt(6.0 / beta) / np.cbrt(np.where(nz > 0, nz, 1.0)) ** 2, 0.0)
    return Z * scale


def correction(regime: Regime, report: TensorReport):
    if regime is Regime.CLASSICAL:
        return lambda Z: correction_classical(Z, report.alpha)
    return lambda Z: correction_smeary(Z, report.beta)


# --------------------------------------------------------------------------
# configuration and results


@dataclass
class CltConfig:
    density: RadialDensity
    d: int
    sample_sizes: Sequence[int]
    replicates: int
    seed: int = 0
    regime: Regime = Regime.CLASSICAL
    init_policy: Optional[InitPolicy] = None
    pole: Optional[np.ndarray] = None
    step_rule: str = "bb"
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        self.regime = Regime(self.regime)
        if self.init_policy is None:
            # the smeary run studies the local mean at the pole
            self.init_policy = InitPolicy.POLE if self.regime is Regime.SMEARY else InitPolicy.EXTRINSIC_MEAN
        self.init_policy = InitPolicy(self.init_policy)
        self.pole = north_pole(self.d) if self.pole is None else as_point(self.pole)
        self.sample_sizes = [int(n) for n in self.sample_sizes]
        self.validate()

    def validate(self):
        sizes = self.sample_sizes
        if len(sizes) < 2:
            raise ValueError("need at least two sample sizes")
        if any(b <= a for a, b in zip(sizes[:-1], sizes[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        if sizes[0] < 1:
            raise ValueError("sample sizes must be positive")
        if self.replicates < MIN_REPLICATES:
            raise ValueError(f"replicates must be >= {MIN_REPLICATES} for exponent fits (got {self.replicates})")
        if self.pole.size != self.d + 1:
            raise ValueError("pole dimension does not match d")
        if self.step_rule not in ("fixed", "bb"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "sample_sizes": list(self.sample_sizes),
            "replicates": self.replicates,
            "seed": self.seed,
            "regime": self.regime.value,
            "init_policy": self.init_policy.value,
            "pole": self.pole.tolist(),
            "step_rule": self.step_rule,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    sizes: list
    mean_norms: list
    norm_stderrs: list
    used_sizes: list
    curvature_z: float = float("nan")
    curvature_p: float = float("nan")
    dropped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ExperimentResult:
    config: dict
    report: dict
    sizes: list
    logs: np.ndarray  # (len(sizes), R, d) tangent coordinates of log_p(mean_n)
    rescaled: np.ndarray
    norms: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    fit: ExponentFit
    nonconvergence_rate: float
    valid: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "report": self.report,
            "sizes": self.sizes,
            "fit": self.fit.to_dict(),
            "nonconvergence_rate": self.nonconvergence_rate,
            "valid": self.valid,
            "notes": self.notes,
        }

    def rows(self):
        """One record per (n, replicate): n, replicate, coordinates, norm, converged, iterations."""
        d = self.logs.shape[-1]
        for i, n in enumerate(self.sizes):
            for r in range(self.logs.shape[1]):
                rec = {"n": n, "replicate": r}
                rec.update({f"z{j}": float(self.logs[i, r, j]) for j in range(d)})
                rec.update(
                    norm=float(self.norms[i, r]),
                    converged=bool(self.converged[i, r]),
                    iterations=int(self.iterations[i, r]),
                )
                yield rec


# --------------------------------------------------------------------------
# scaling experiment


def _replicate(args):
    density, d, pole, n, seed, n_idx, r, policy, step_rule, tol, max_iter = args
    sampler = RadialSampler(density, d, pole=pole, seed=replicate_rng(seed, n_idx, r))
    pts = sampler.sample(n)
    init = pole if policy == InitPolicy.POLE.value else None
    try:
        est = estimate_mean(pts, init=init, tol=tol, max_iter=max_iter, step_rule=step_rule)
    except (CutLocusError, ValueError):
        return np.full(d + 1, np.nan), False, -1
    try:
        v = log_map(pole, est.point)
    except CutLocusError:
        return np.full(d + 1, np.nan), False, est.iterations
    return v, est.converged, est.iterations


def _map(fn, tasks, jobs: int):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))


def check_regime(cfg: CltConfig) -> TensorReport:
    report = classify(cfg.density, cfg.d)
    if report.classification != cfg.regime.expected_class:
        raise RegimeMismatchError(
            f"density classified {report.classification.value}, "
            f"but the {cfg.regime.value} regime needs {cfg.regime.expected_class.value}"
        )
    return report


def run_scaling_experiment(cfg: CltConfig, jobs: int = 1) -> ExperimentResult:
    """Sample means for every (n, replicate) and the log-log rate fit.

    Replicate (i, r) draws from its own stream (seed, i, r), so the result is
    identical for every ``jobs``.
    """
    report = check_regime(cfg)
    R = cfg.replicates
    tasks = [
        (cfg.density, cfg.d, cfg.pole, n, cfg.seed, i, r, cfg.init_policy.value, cfg.step_rule, cfg.tol, cfg.max_iter)
        for i, n in enumerate(cfg.sample_sizes)
        for r in range(R)
    ]
    out = _map(_replicate, tasks, jobs)
    basis = tangent_basis(cfg.pole)
    amb = np.array([o[0] for o in out]).reshape(len(cfg.sample_sizes), R, cfg.d + 1)
    conv = np.array([bool(o[1]) for o in out]).reshape(len(cfg.sample_sizes), R)
    iters = np.array([o[2] for o in out]).reshape(len(cfg.sample_sizes), R)
    logs = amb @ basis.T
    norms = np.linalg.norm(logs, axis=-1)
    scale = np.asarray(cfg.sample_sizes, dtype=float) ** cfg.regime.rate
    rescaled = logs * scale[:, None, None]
    rate = 1.0 - conv.mean()
    notes = []
    valid = rate <= MAX_NONCONVERGENCE
    if not valid:
        notes.append(f"non-convergence rate {rate:.3%} exceeds {MAX_NONCONVERGENCE:.0%}; experiment invalid")
    if cfg.init_policy is InitPolicy.POLE:
        notes.append("descent initialized at the pole; estimates are local means")
    ok = conv & np.isfinite(norms)
    if np.all(ok.sum(axis=1) >= 2):
        fit = fit_exponent(cfg.sample_sizes, [norms[i][ok[i]] for i in range(len(cfg.sample_sizes))])
    else:
        fit = _empty_fit(cfg.sample_sizes)
        notes.append("fewer than two converged replicates at some n; no exponent fit")
    return ExperimentResult(
        config=cfg.to_dict(),
        report=report.to_dict(),
        sizes=list(cfg.sample_sizes),
        logs=logs,
        rescaled=rescaled,
        norms=norms,
        converged=conv,
        iterations=iters,
        fit=fit,
        nonconvergence_rate=float(rate),
        valid=bool(valid),
        notes=notes,
    )


def _linear_fit(x, y, se, degree):
    """Least squares polynomial fit; returns coefficients (highest first) and
    their standard errors propagated from independent per-point errors."""
    X = np.vander(x, degree + 1)
    # rows of the pseudo-inverse are the linear weights of each coefficient
    P = np.linalg.pinv(X)
    coef = P @ y
    cse = np.sqrt((P**2) @ (se**2))
    return coef, cse


def fit_exponent(sizes, norms_per_n, alpha: float = 0.05) -> ExponentFit:
    """OLS slope of log(mean |log_p mean_n|) against log n.

    The standard error is propagated from the per-n standard errors of the log
    mean norm.  If a quadratic term is significant at level ``alpha`` (a sign
    of pre-asymptotic curvature) and at least four sizes are available, the
    two smallest sizes are dropped from the slope fit.
    """
    sizes = np.asarray(sizes, dtype=float)
    means = np.array([np.mean(v) for v in norms_per_n])
    sds = np.array([np.std(v, ddof=1) for v in norms_per_n])
    counts = np.array([len(v) for v in norms_per_n])
    se = sds / np.sqrt(counts) / means
    x, y = np.log(sizes), np.log(means)
    curv_z = curv_p = float("nan")
    use = np.ones(sizes.size, dtype=bool)
    if sizes.size >= 3:
        coef, cse = _linear_fit(x, y, se, 2)
        curv_z = float(coef[0] / cse[0])
        curv_p = float(2 * stats.norm.sf(abs(curv_z)))
        if curv_p < alpha and sizes.size >= 4:
            use[:2] = False
    coef, cse = _linear_fit(x[use], y[use], se[use], 1)
    return ExponentFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        stderr=float(cse[0]),
        sizes=[int(n) for n in sizes],
        mean_norms=means.tolist(),
        norm_stderrs=(se * means).tolist(),
        used_sizes=[int(n) for n in sizes[use]],
        curvature_z=curv_z,
        curvature_p=curv_p,
        dropped=[int(n) for n in sizes[~use]],
    )


def _empty_fit(sizes) -> ExponentFit:
    nan = float("nan")
    k = len(sizes)
    return ExponentFit(nan, nan, nan, [int(n) for n in sizes], [nan] * k, [nan] * k, [], nan, nan, [])


def slope_separation(classical: ExponentFit, smeary: ExponentFit) -> float:
    """(smeary slope - classical slope) in combined standard errors."""
    return (smeary.slope - classical.slope) / math.hypot(classical.stderr, smeary.stderr)


# --------------------------------------------------------------------------
# comparison with the limit law


def rayleigh_test(vectors) -> tuple[float, float]:
    """Rayleigh statistic d n |mean unit vector|^2 ~ chi2_d under uniform directions."""
    v = np.asarray(vectors, dtype=float)
    nv = np.linalg.norm(v, axis=1)
    u = v[nv > 0] / nv[nv > 0, None]
    n, d = u.shape
    stat = d * n * float(np.sum(u.mean(axis=0) ** 2))
    return stat, float(stats.chi2.sf(stat, d))


def energy_distance(a, b, chunk: int = 1000) -> float:
    """2 E|A - B| - E|A - A'| - E|B - B'| (V-statistic)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def mean_dist(p, q):
        total = 0.0
        for i in range(0, p.shape[0], chunk):
            total += cdist(p[i : i + chunk], q).sum()
        return total / (p.shape[0] * q.shape[0])

    return 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b)


def limit_draws(cov, H, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    evals = np.linalg.eigvalsh(cov)
    if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
        raise np.linalg.LinAlgError("tangent covariance is singular")
    z = rng.multivariate_normal(np.zeros(cov.shape[0]), cov, size=n_draws, method="cholesky")
    return H(z)


def limit_distance(rescaled, draws) -> dict:
    rescaled = np.asarray(rescaled, dtype=float)
    ks = [stats.ks_2samp(rescaled[:, j], draws[:, j]) for j in range(rescaled.shape[1])]
    return {
        "ks_statistics": [float(k.statistic) for k in ks],
        "ks_pvalues": [float(k.pvalue) for k in ks],
        "energy_distance": float(energy_distance(rescaled, draws)),
    }


def compare_to_limit(
    result: ExperimentResult,
    cfg: CltConfig,
    n_draws: int = LIMIT_DRAWS,
    cov_sample: int = COVARIANCE_SAMPLE,
    return_draws: bool = False,
):
    """KS and energy distances between the rescaled means at the largest n and H_# N.

    With ``return_draws`` the H_# N draws are returned as well, as ``(report, draws)``.
    """
    report = check_regime(cfg)
    sampler = RadialSampler(cfg.density, cfg.d, pole=cfg.pole, seed=replicate_rng(cfg.seed, _COV_STREAM))
    cov = tangent_covariance(sampler.sample(cov_sample), cfg.pole)
    draws = limit_draws(cov, correction(cfg.regime, report), n_draws, replicate_rng(cfg.seed, _LIMIT_STREAM))
    ok = result.converged[-1] & np.isfinite(result.norms[-1])
    rescaled = result.rescaled[-1][ok]
    out = limit_distance(rescaled, draws)
    stat, p = rayleigh_test(rescaled)
    out.update(
        n=result.sizes[-1],
        replicates=int(ok.sum()),
        covariance=cov.tolist(),
        rayleigh_statistic=stat,
        rayleigh_pvalue=p,
        regime=cfg.regime.value,
    )
    if cfg.regime is Regime.SMEARY:
        out["disclaimer"] = "smeary convergence is slow; finite-n distances are exploratory, no pass threshold"
    return (out, draws) if return_draws else out


# --------------------------------------------------------------------------
# perturbation characterization of H


def _mixture_gradient(f, d, eps, pole, x, q):
    t = float(geodesic_distance(pole, q))
    grad = -eps * log_map(q, x)
    if t > 0:
        away = -log_map(q, pole) / t
        grad = grad + (1 - eps) * frechet_slope_symmetric(f, d, t) * away
    return grad


def _mixture_value(f, d, eps, pole, x, q):
    t = float(geodesic_distance(pole, q))
    return (1 - eps) * frechet_value_symmetric(f, d, t) + eps * 0.5 * float(geodesic_distance(q, x)) ** 2


def perturbed_mean(f: RadialDensity, d: int, x, eps: float, pole=None, tol: float = 1e-15, max_iter: int = 500):
    """Local mean of (1 - eps) mu + eps delta_x reached by descent from the pole.

    The symmetric part of the gradient comes from the quadrature slope of the
    Frechet function, the atom contributes -eps log_q(x).  Barzilai-Borwein
    descent finds the direction, then the distance along it is polished by a
    one-dimensional root solve.
    """
    pole = north_pole(d) if pole is None else as_point(pole)
    x = as_point(x)
    q = pole.copy()
    grad = _mixture_gradient(f, d, eps, pole, x, q)
    s = 1.0
    value = _mixture_value(f, d, eps, pole, x, q)
    for _ in range(max_iter):
        if np.linalg.norm(grad) < tol:
            break
        for _ in range(60):
            q_new = exp_map(q, -s * grad)
            v_new = _mixture_value(f, d, eps, pole, x, q_new)
            if v_new <= value + 1e-16:
                break
            s *= 0.5
        else:
            break
        if geodesic_distance(pole, q_new) > TRUST_RADIUS:
            raise PerturbationTooLargeError("descent left the trust region around the pole")
        g_new = _mixture_gradient(f, d, eps, pole, x, q_new)
        sk = -s * grad
        yk = (g_new - (g_new @ q) * q) - grad
        sy = float(sk @ yk)
        s = float(sk @ sk) / sy if sy > 0 else 1.0
        q, grad, value = q_new, g_new, v_new
    t0 = float(geodesic_distance(pole, q))
    if t0 == 0.0:
        return q
    u = log_map(pole, q) / t0

    def along(t):
        qt = exp_map(pole, t * u)
        return float(_mixture_gradient(f, d, eps, pole, x, qt) @ (-log_map(qt, pole) / t))

    lo, hi = 0.5 * t0, min(2.0 * t0, TRUST_RADIUS)
    if along(lo) < 0 < along(hi):
        t0 = optimize.brentq(along, lo, hi, xtol=1e-16, rtol=1e-14)
    return exp_map(pole, t0 * u)


def _extrapolate_to_zero(h, values):
    """Neville extrapolation of values(h) to h = 0 (vector valued)."""
    h = list(h)
    P = [np.asarray(v, dtype=float) for v in values]
    m = len(h)
    for k in range(1, m):
        P = [(h[i + k] * P[i] - h[i] * P[i + 1]) / (h[i + k] - h[i]) for i in range(m - k)]
    return P[0]


@dataclass
class PerturbationEstimate:
    estimate: np.ndarray
    raw: list
    eps_grid: list
    order: int


def perturbation_map(f: RadialDensity, d: int, x, eps_grid, r: int, pole=None) -> PerturbationEstimate:
    """lim log_p(mean_{eps,x}) / eps^{1/(r-1)}, Richardson extrapolated in eps^{1/(r-1)}.

    r = 2 is the classical case (limit H(log_p x) = log_p x / alpha_d), r = 4
    the smeary one.
    """
    if r < 2:
        raise ValueError("order r must be >= 2")
    pole = north_pole(d) if pole is None else as_point(pole)
    x = as_point(x)
    if geodesic_distance(pole, x) >= math.pi - 1e-8:
        raise CutLocusError("x is antipodal to the pole")
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid or any(not 0 < e < 1 for e in eps_grid):
        raise ValueError("eps values must lie in (0, 1)")
    power = 1.0 / (r - 1)
    raw = []
    for eps in eps_grid:
        q = perturbed_mean(f, d, x, eps, pole)
        raw.append(log_map(pole, q) / eps**power)
    h = [e**power for e in eps_grid]
    est = _extrapolate_to_zero(h, raw) if len(raw) > 1 else raw[0]
    return PerturbationEstimate(est, raw, eps_grid, r)
