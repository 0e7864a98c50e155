"""Sampling from rotationally symmetric measures f(d(p, .)) dV on S^d."""
from __future__ import annotations

import numpy as np

from .radial import RadialDensity, is_normalized
from .sphere import as_point, north_pole, rotation_from_pole, uniform_directions

TABLE_SIZE = 4096
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def replicate_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent PCG64 stream for (seed, *keys), e.g. (seed, n_index, replicate)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def colatitude_table(f: RadialDensity, d: int, size: int = TABLE_SIZE):
    """Knots and normalized CDF of the colatitude density f(phi) sin^{d-1} phi.

    Uses ``size`` uniform knots on [0, pi] plus the breakpoints of f, with
    8-point Gauss-Legendre on every cell.
    """
    knots = np.union1d(np.linspace(0.0, np.pi, size), f.breakpoints)
    a, b = knots[:-1], knots[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    w = np.asarray(f(t)) * np.sin(t) ** (d - 1)
    cell = half * (w @ _GL_WEIGHTS)
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    return knots, cdf / cdf[-1]


class RadialSampler:
    """I.i.d. draws from dmu = f(d(pole, .)) dV by inverse-CDF colatitudes.

    The colatitude is read off a precomputed table with linear interpolation;
    the direction is uniform on the (d-1)-sphere of tangent directions.
    One sampler owns one generator; build one per replicate for parallel use.
    """

    def __init__(self, density: RadialDensity, d: int, pole=None, seed=0, table_size: int = TABLE_SIZE):
        if not is_normalized(density, d):
            raise ValueError("sampler needs a density normalized on S^d")
        self.density = density
        self.d = d
        self.pole = north_pole(d) if pole is None else as_point(pole)
        if self.pole.size != d + 1:
            raise ValueError("pole dimension does not match d")
        self.rng = seed if isinstance(seed, np.random.Generator) else replicate_rng(seed)
        self.knots, self.cdf = colatitude_table(density, d, table_size)
        self._rotation = rotation_from_pole(self.pole)

    def colatitudes(self, u) -> np.ndarray:
        """Inverse CDF at uniforms ``u`` in [0, 1)."""
        idx = np.searchsorted(self.cdf, u, side="right") - 1
        idx = np.clip(idx, 0, self.cdf.size - 2)
        lo, hi = self.cdf[idx], self.cdf[idx + 1]
        width = np.where(hi > lo, hi - lo, 1.0)
        frac = np.clip((u - lo) / width, 0.0, 1.0)
        return self.knots[idx] + frac * (self.knots[idx + 1] - self.knots[idx])

    def sample(self, n: int) -> np.ndarray:
        """``(n, d+1)`` array of points."""
        phi = self.colatitudes(self.rng.random(n))
        dirs = uniform_directions(n, self.d, self.rng)
        pts = np.empty((n, self.d + 1))
        pts[:, 0] = np.cos(phi)
        pts[:, 1:] = np.sin(phi)[:, None] * dirs
        if self.pole[0] != 1.0 or np.any(self.pole[1:] != 0.0):
            pts = pts @ self._rotation.T
        return pts


def sample(sampler: RadialSampler, n: int) -> np.ndarray:
    return sampler.sample(n)
