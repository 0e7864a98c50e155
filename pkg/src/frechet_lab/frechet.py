"""Frechet functions, sample Frechet means and tangent covariances on S^d.

The empirical measure is mu_n = (1/n) sum_i delta_{X_i}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .radial import RadialDensity, sphere_volume
from .sphere import (
    CUT_LOCUS_TOL,
    CutLocusError,
    as_point,
    exp_map,
    geodesic_distance,
    log_map,
    project_tangent,
)

DESCENT_SLACK = 1e-12
MAX_HALVINGS = 60


# --------------------------------------------------------------------------
# population Frechet function of a rotationally symmetric measure


def _gauss_legendre(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def _polar_grid(f: RadialDensity, d: int, t: float, n_radial: int, n_angular: int):
    """Product Gauss-Legendre rule over (phi1, phi2) in [0, pi]^2 with weights
    V(S^{d-2}) f(phi1) sin^{d-1} phi1 sin^{d-2} phi2."""
    breaks = set(f.breakpoints)
    breaks.update(b for b in (t, np.pi - t) if 0.0 < b < np.pi)
    breaks = sorted(breaks)
    p1, w1 = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (a + b)
        if f(mid) == 0.0 and f.is_piecewise_constant:
            continue
        x, w = _gauss_legendre(a, b, n_radial)
        p1.append(x)
        w1.append(w * np.asarray(f(x)) * np.sin(x) ** (d - 1))
    p1 = np.concatenate(p1)
    w1 = np.concatenate(w1)
    p2, w2 = _gauss_legendre(0.0, np.pi, n_angular)
    w2 = w2 * np.sin(p2) ** (d - 2)
    return p1, w1 * sphere_volume(d - 2), p2, w2


def _reduced_points(t, p1, p2):
    """q at distance t from the pole and y on the grid, in the 3-d slice spanned
    by the pole, the direction of q and one further axis."""
    q = np.array([np.cos(t), np.sin(t), 0.0])
    P1, P2 = np.meshgrid(p1, p2, indexing="ij")
    s1 = np.sin(P1)
    y = np.stack([np.cos(P1), s1 * np.cos(P2), s1 * np.sin(P2)], axis=-1)
    return q, y


def frechet_value_symmetric(f: RadialDensity, d: int, t: float, n_radial: int = 96, n_angular: int = 96) -> float:
    """F(q) for a point q at distance t from the pole."""
    p1, w1, p2, w2 = _polar_grid(f, d, t, n_radial, n_angular)
    q, y = _reduced_points(t, p1, p2)
    theta = 2.0 * np.arctan2(np.linalg.norm(y - q, axis=-1), np.linalg.norm(y + q, axis=-1))
    return float(w1 @ (0.5 * theta**2) @ w2)


def frechet_slope_symmetric(f: RadialDensity, d: int, t: float, n_radial: int = 96, n_angular: int = 96) -> float:
    """dF/dt along the geodesic leaving the pole, i.e. <grad F(q), e_t>."""
    p1, w1, p2, w2 = _polar_grid(f, d, t, n_radial, n_angular)
    q, y = _reduced_points(t, p1, p2)
    e_t = np.array([-np.sin(t), np.cos(t), 0.0])
    theta = 2.0 * np.arctan2(np.linalg.norm(y - q, axis=-1), np.linalg.norm(y + q, axis=-1))
    # grad rho_y(q) = -theta/sin(theta) (y - cos(theta) q) and <q, e_t> = 0
    integrand = -(y @ e_t) / np.sinc(theta / np.pi)
    return float(w1 @ integrand @ w2)


# --------------------------------------------------------------------------
# empirical Frechet function


@dataclass(frozen=True)
class EmpiricalSample:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("empty sample")
        object.__setattr__(self, "points", as_point(pts))

    @property
    def d(self) -> int:
        return self.points.shape[1] - 1

    def __len__(self):
        return self.points.shape[0]


def _points(sample) -> np.ndarray:
    if isinstance(sample, EmpiricalSample):
        return sample.points
    return np.atleast_2d(np.asarray(sample, dtype=float))


def _value_and_gradient(pts: np.ndarray, x: np.ndarray):
    c = pts @ x
    w = pts - c[:, None] * x
    s = np.linalg.norm(w, axis=1)
    theta = np.arctan2(s, c)
    near = np.linalg.norm(pts + x, axis=1) < CUT_LOCUS_TOL
    if np.any(near):
        raise CutLocusError(f"sample point {int(np.flatnonzero(near)[0])} is antipodal to the current point")
    scale = theta / np.where(s > 0, s, 1.0)
    scale = np.where(s > 0, scale, 0.0)
    grad = -(scale[:, None] * w).mean(axis=0)
    return 0.5 * float(np.mean(theta**2)), grad


def empirical_value(sample, x) -> float:
    return 0.5 * float(np.mean(geodesic_distance(np.asarray(x, float), _points(sample)) ** 2))


def empirical_gradient(sample, x) -> np.ndarray:
    """grad F_n(x) = -(1/n) sum_i log_x(X_i)."""
    return _value_and_gradient(_points(sample), np.asarray(x, dtype=float))[1]


def extrinsic_mean(sample) -> np.ndarray:
    m = _points(sample).mean(axis=0)
    if np.linalg.norm(m) < 1e-12:
        raise ValueError("extrinsic mean is undefined (Euclidean mean at the origin)")
    return m / np.linalg.norm(m)


@dataclass
class MeanEstimate:
    point: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    value: float
    diagnostics: dict = field(default_factory=dict)


def estimate_mean(
    sample,
    init=None,
    step: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    step_rule: str = "fixed",
    check_monotone: bool = False,
) -> MeanEstimate:
    """Riemannian gradient descent x <- exp_x(-s grad F_n(x)) from ``init``.

    ``step_rule="fixed"`` uses s = ``step`` (s = 1 is iterated Karcher
    averaging); ``"bb"`` uses Barzilai-Borwein lengths, which converge much
    faster on flat, degenerate Frechet functions.  Either way a step is halved
    until F_n does not increase.  The result is a stationary point, i.e. a
    local mean.
    """
    if step_rule not in ("fixed", "bb"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    pts = _points(sample)
    x = extrinsic_mean(pts) if init is None else as_point(init)
    value, grad = _value_and_gradient(pts, x)
    history = [value] if check_monotone else None
    halvings = 0
    s_next = step
    it = 0
    stalled = False
    while it < max_iter:
        gn = float(np.linalg.norm(grad))
        if gn < tol:
            break
        s = s_next
        for _ in range(MAX_HALVINGS):
            x_new = exp_map(x, -s * grad)
            v_new, g_new = _value_and_gradient(pts, x_new)
            if v_new <= value + DESCENT_SLACK:
                break
            s *= 0.5
            halvings += 1
        else:
            stalled = True
            break
        it += 1
        if step_rule == "bb":
            sk = -s * grad
            yk = project_tangent(x, g_new) - grad
            sy = float(sk @ yk)
            s_next = float(sk @ sk) / sy if sy > 0 else step
            s_next = min(max(s_next, 1e-3 * step), 1e4 * step)
        x, value, grad = x_new, v_new, g_new
        if history is not None:
            history.append(value)
    gn = float(np.linalg.norm(grad))
    diag = {"halvings": halvings, "stalled": stalled, "step_rule": step_rule}
    if history is not None:
        diag["values"] = history
    return MeanEstimate(x, gn, it, gn < tol, value, diag)


# --------------------------------------------------------------------------
# tangent coordinates


def tangent_basis(base) -> np.ndarray:
    """Orthonormal basis of T_base S^d as a ``(d, d+1)`` array.

    Gram-Schmidt on the standard basis with the coordinate most aligned with
    ``base`` left out, so the ordering is deterministic and well conditioned.
    """
    base = as_point(base)
    n = base.size
    skip = int(np.argmax(np.abs(base)))
    basis = []
    for i in range(n):
        if i == skip:
            continue
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):
            v = v - (v @ base) * base
            for b in basis:
                v = v - (v @ b) * b
        basis.append(v / np.linalg.norm(v))
    return np.array(basis)


def tangent_coordinates(base, vectors) -> np.ndarray:
    return np.asarray(vectors, dtype=float) @ tangent_basis(base).T


def tangent_covariance(sample, base, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """Covariance of log_base(X_i) in the tangent_basis coordinates."""
    pts = _points(sample)
    base = as_point(base)
    basis = tangent_basis(base) if basis is None else basis
    coords = log_map(base, pts) @ basis.T
    if coords.shape[0] < 2:
        return np.zeros((basis.shape[0], basis.shape[0]))
    return np.cov(coords, rowvar=False)
