"""Tensor-product quadrature over all of S^d in hyperspherical coordinates.

This integrates the pointwise tensors of rho_y against dmu(y) directly, so it
checks the coefficient integrals of ``radial`` without sharing any of their
algebra.  The cost grows like n^d, which is fine for d <= 3 or 4.
"""
from __future__ import annotations

import numpy as np

from .radial import RadialDensity
from .sphere import north_pole
from .tensors import GeodesicFrame


def _gl(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def hyperspherical_rule(f: RadialDensity, d: int, n_radial: int = 40, n_angle: int = 24, n_azimuth: int = 16):
    """Nodes ``(N, d+1)`` and weights of a rule for int g(y) f(d(e1, y)) dV(y).

    y = (cos p1, sin p1 cos p2, ..., sin p1 ... sin p_{d-1} cos p_d, sin p1 ... sin p_d)
    with Gauss-Legendre in p1 (split at the breakpoints of f), Gauss-Legendre
    in p2..p_{d-1} and the periodic trapezoid rule in p_d.

    The tensors at e1 depend on the angles only through polynomials of degree
    <= 4 in the unit direction, so the trapezoid rule is exact in p_d and the
    angular Gauss rules converge quickly; the radial rule sets the accuracy.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    p1, w1 = [], []
    for a, b in f.smooth_pieces():
        x, w = _gl(a, b, n_radial)
        p1.append(x)
        w1.append(w * np.asarray(f(x)) * np.sin(x) ** (d - 1))
    axes = [np.concatenate(p1)]
    weights = [np.concatenate(w1)]
    for k in range(2, d):
        x, w = _gl(0.0, np.pi, n_angle)
        axes.append(x)
        weights.append(w * np.sin(x) ** (d - k))
    az = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    axes.append(az)
    weights.append(np.full(n_azimuth, 2 * np.pi / n_azimuth))

    grids = np.meshgrid(*axes, indexing="ij")
    w = np.ones_like(grids[0])
    for k, wk in enumerate(weights):
        shape = [1] * d
        shape[k] = -1
        w = w * wk.reshape(shape)
    pts = np.empty(grids[0].shape + (d + 1,))
    run = np.ones_like(grids[0])
    for k in range(d - 1):
        pts[..., k] = run * np.cos(grids[k])
        run = run * np.sin(grids[k])
    pts[..., d - 1] = run * np.cos(grids[d - 1])
    pts[..., d] = run * np.sin(grids[d - 1])
    return pts.reshape(-1, d + 1), w.ravel()


def tensor_expectation(f: RadialDensity, d: int, fn, rule=None, **kw) -> float:
    """int fn(GeodesicFrame(e1, y)) f(d(e1, y)) dV(y); ``fn`` takes a batched frame."""
    pts, w = hyperspherical_rule(f, d, **kw) if rule is None else rule
    frame = GeodesicFrame.from_points(north_pole(d), pts)
    return float(np.sum(w * fn(frame)))
