"""Finite-difference oracles for the closed-form tensors of rho_y."""
from __future__ import annotations

import itertools

import numpy as np

from .sphere import exp_map, geodesic_distance
from .tensors import GeodesicFrame

DEFAULT_STEP = {1: 1e-3, 2: 1e-3, 3: 1e-2, 4: 2e-2}


def rho(x, y):
    return 0.5 * geodesic_distance(x, y) ** 2


def mixed_partial(fun, x, dirs, h: float) -> float:
    """Central-difference estimate of d^k/ds_1..ds_k fun(exp_x(sum s_i v_i)) at 0.

    Error O(h^2); the stencil uses 2^k evaluations.
    """
    dirs = [np.asarray(v, dtype=float) for v in dirs]
    k = len(dirs)
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=k):
        v = sum(s * d for s, d in zip(signs, dirs))
        total += np.prod(signs) * fun(exp_map(x, h * v))
    return total / (2.0 * h) ** k


def richardson(estimate, h: float, levels: int = 2) -> float:
    """Romberg extrapolation of an even-order estimate over h, h/2, ..., h/2^levels.

    Each level cancels the next term h^2, h^4, ... of the error expansion.
    """
    table = [estimate(h / 2**i) for i in range(levels + 1)]
    for j in range(1, levels + 1):
        f = 4.0**j
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    return table[0]


def rho_derivative_fd(x, y, dirs, h: float | None = None) -> float:
    """Symmetric k-th derivative of rho_y o exp_x at 0 in directions ``dirs``."""
    k = len(dirs)
    h = DEFAULT_STEP[k] if h is None else h
    fun = lambda p: rho(p, y)  # noqa: E731
    return richardson(lambda s: mixed_partial(fun, x, dirs, s), h)


def transport(x, u, s: float, v) -> np.ndarray:
    """Parallel transport of v from x along t -> exp_x(t u) to t = s."""
    n = np.linalg.norm(u)
    if n == 0:
        return np.asarray(v, dtype=float)
    e = u / n
    a = s * n
    return v + (e @ v) * ((np.cos(a) - 1.0) * e - np.sin(a) * x)


def covariant_fd(tensor, x, y, U, rest, h: float = 1e-4) -> float:
    """(grad_U T)(rest) for a closed-form tensor T(frame, *rest).

    Differentiates T along the geodesic exp_x(sU) with the remaining
    arguments parallel transported, by a 4-point central stencil.
    """
    def at(s):
        xs = exp_map(x, s * np.asarray(U))
        frame = GeodesicFrame.from_points(xs, y)
        return tensor(frame, *(transport(x, U, s, v) for v in rest))

    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)
