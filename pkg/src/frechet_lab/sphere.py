"""Geometry of the unit sphere S^d embedded in R^{d+1}.

Points are plain numpy arrays of shape ``(d+1,)`` (or ``(n, d+1)`` for
batches); tangent vectors are ambient vectors orthogonal to their base point.
"""
from __future__ import annotations

import numpy as np

SMALL_ANGLE = 1e-9
CUT_LOCUS_TOL = 1e-8
TANGENT_TOL = 1e-10


class CutLocusError(ValueError):
    """Raised when a point lies (numerically) on the cut locus of another."""


def _inner(a, b):
    return np.sum(a * b, axis=-1)


def as_point(coords) -> np.ndarray:
    """Validate and renormalize ``coords`` onto the sphere.

    Accepts a single point or an ``(n, d+1)`` batch. Requires d >= 2.
    """
    x = np.asarray(coords, dtype=float)
    if x.shape[-1] < 3:
        raise ValueError(f"need ambient dimension >= 3 (d >= 2), got {x.shape[-1]}")
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise ValueError("cannot place a zero or non-finite vector on the sphere")
    return x / norm


def north_pole(d: int) -> np.ndarray:
    e = np.zeros(d + 1)
    e[0] = 1.0
    return e


def check_tangent(base, vec, tol: float = TANGENT_TOL) -> np.ndarray:
    """Return ``vec`` as an array after checking it is orthogonal to ``base``."""
    base = np.asarray(base, dtype=float)
    vec = np.asarray(vec, dtype=float)
    if base.shape[-1] != vec.shape[-1]:
        raise ValueError("base point and vector have different ambient dimensions")
    if np.any(np.abs(_inner(base, vec)) > tol * np.maximum(1.0, np.linalg.norm(vec, axis=-1))):
        raise ValueError("vector is not tangent to the sphere at its base point")
    return vec


def project_tangent(base, vec) -> np.ndarray:
    """Orthogonal projection of an ambient vector onto T_base S^d."""
    base = np.asarray(base, dtype=float)
    vec = np.asarray(vec, dtype=float)
    return vec - _inner(base, vec)[..., None] * base


def _check_dims(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


def geodesic_distance(x, y):
    """Great-circle distance in [0, pi]; broadcasts over leading axes.

    Uses atan2 of the orthogonal and parallel components so that the result is
    accurate near 0 and near pi, where arccos alone loses half the digits.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(x, y)
    c = _inner(x, y)
    perp = np.linalg.norm(y - c[..., None] * x, axis=-1)
    return np.arctan2(perp, c)


def exp_map(base, vec) -> np.ndarray:
    """Exponential map ``cos|v| base + sin|v| v/|v|``; broadcasts over rows."""
    base = np.asarray(base, dtype=float)
    vec = np.asarray(vec, dtype=float)
    _check_dims(base, vec)
    t = np.linalg.norm(vec, axis=-1, keepdims=True)
    small = t < SMALL_ANGLE
    safe_t = np.where(small, 1.0, t)
    out = np.where(
        small,
        base + vec,
        np.cos(t) * base + np.sin(t) * vec / safe_t,
    )
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def log_map(x, y) -> np.ndarray:
    """Logarithm map at ``x``; ``y`` may be a batch of points.

    Raises CutLocusError if any ``y`` is within CUT_LOCUS_TOL of ``-x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(x, y)
    c = _inner(x, y)
    w = y - c[..., None] * x
    s = np.linalg.norm(w, axis=-1)
    theta = np.arctan2(s, c)
    bad = np.linalg.norm(y + x, axis=-1) < CUT_LOCUS_TOL
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))
        raise CutLocusError(f"point(s) {idx.tolist()} lie on the cut locus of the base point")
    small = theta < SMALL_ANGLE
    scale = np.where(small, 0.0, theta / np.where(small, 1.0, s))
    return scale[..., None] * w


def rotation_from_pole(p) -> np.ndarray:
    """Orthogonal matrix Q with ``Q @ e1 = p``.

    Identity when ``p`` is the north pole, otherwise a product of two
    Householder reflections (so det Q = +1).
    """
    p = as_point(p)
    n = p.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    if np.array_equal(p, e1):
        return np.eye(n)
    # fixes e1, flips the last coordinate
    flip = np.eye(n)
    flip[-1, -1] = -1.0
    u = e1 - p
    u /= np.linalg.norm(u)
    reflect = np.eye(n) - 2.0 * np.outer(u, u)
    return reflect @ flip


def rotate_pole_to(p, v) -> np.ndarray:
    """Apply the rotation sending e1 to ``p`` to vector(s) ``v``."""
    q = rotation_from_pole(p)
    return np.asarray(v, dtype=float) @ q.T


def random_tangent(base, rng: np.random.Generator, size=None) -> np.ndarray:
    """Standard Gaussian vector(s) projected onto T_base S^d."""
    base = np.asarray(base, dtype=float)
    shape = (base.size,) if size is None else (size, base.size)
    return project_tangent(base, rng.standard_normal(shape))


def uniform_directions(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform on the unit sphere in R^dim."""
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
