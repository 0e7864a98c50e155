"""Cap-plus-strip densities whose pole is a 2-smeary local Frechet mean.

The profile is c1 on [0, phi1], c2 on [pi/2, pi - eps] and 0 elsewhere.  The
ratio c1/c2 is fixed by the boundary-term equation alpha_d = 0,

    c1 phi1 sin^{d-1} phi1 + c2 (pi - eps) sin^{d-1} eps - c2 pi/2 = 0,

and the absolute level by normalization.  What is left to check is beta_d > 0,
which holds once eps is small enough.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .radial import (
    TOL_EXACT,
    RadialDensity,
    alpha_coefficient,
    beta_coefficient,
    normalize,
)

MAX_HALVINGS = 64


class InfeasibleDesignError(ValueError):
    pass


def g1(phi, d: int):
    """phi sin^{d-1} phi."""
    return phi * np.sin(phi) ** (d - 1)


def g2(phi, d: int):
    """sin^{d-3} phi cos phi (sin phi - phi cos phi); positive on (0, pi/2)."""
    s, c = np.sin(phi), np.cos(phi)
    return s ** (d - 3) * c * (s - phi * c)


def suggest_epsilon(phi1: float, d: int) -> float:
    """arcsin(sin phi1 * (cos phi1 (sin phi1 - phi1 cos phi1))^{1/(d-3)})."""
    if d < 4:
        raise ValueError("smeary designs need d >= 4")
    if not 0.0 < phi1 < math.pi / 2:
        raise ValueError("phi1 must lie in (0, pi/2)")
    base = math.cos(phi1) * (math.sin(phi1) - phi1 * math.cos(phi1))
    arg = math.sin(phi1) * base ** (1.0 / (d - 3))
    if not 0.0 <= arg <= 1.0:
        raise ValueError(f"arcsin argument {arg} outside [0, 1]")
    return math.asin(arg)


def printed_level_ratio(phi1: float, epsilon: float, d: int) -> float:
    """(pi - 2 eps sin^{d-1} eps) / (2 phi1 sin^{d-1} phi1), the quoted closed form."""
    return (math.pi - 2 * epsilon * math.sin(epsilon) ** (d - 1)) / (2 * g1(phi1, d))


def exact_level_ratio(phi1: float, epsilon: float, d: int) -> float:
    """c1/c2 solving alpha_d = 0 exactly from boundary terms."""
    return (math.pi / 2 - g1(math.pi - epsilon, d)) / g1(phi1, d)


@dataclass(frozen=True)
class CapStripDesign:
    d: int
    phi1: float
    epsilon: float
    c1: float
    c2: float
    alpha_check: float
    beta_check: float
    ratio: float
    printed_ratio: float
    halvings: int = 0

    @property
    def phi2(self) -> float:
        return math.pi - self.epsilon

    @property
    def smeary(self) -> bool:
        return abs(self.alpha_check) <= TOL_EXACT and self.beta_check > TOL_EXACT

    def density(self) -> RadialDensity:
        return RadialDensity.from_segments(
            [(0.0, self.phi1, self.c1), (math.pi / 2, self.phi2, self.c2)],
            dimension=self.d,
            normalized=True,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(phi2=self.phi2, smeary=self.smeary, ratio_discrepancy=self.ratio - self.printed_ratio)
        return out


def solve_levels(phi1: float, epsilon: float, d: int) -> CapStripDesign:
    """Levels (c1, c2) for given geometry; the design may come back non-smeary."""
    if d < 4:
        raise ValueError("smeary designs need d >= 4")
    if not 0.0 < phi1 < math.pi / 2:
        raise ValueError("phi1 must lie in (0, pi/2)")
    if not 0.0 < epsilon < math.pi / 2:
        raise InfeasibleDesignError("strip [pi/2, pi - eps] is empty unless 0 < eps < pi/2")
    ratio = exact_level_ratio(phi1, epsilon, d)
    if ratio < 0:
        raise InfeasibleDesignError(f"alpha_d = 0 forces a negative cap level (c1/c2 = {ratio:.3g})")
    raw = RadialDensity.from_segments([(0.0, phi1, ratio), (math.pi / 2, math.pi - epsilon, 1.0)])
    f = normalize(raw, d)
    (_, _, c1), (_, _, c2) = f.constant_pieces()
    return CapStripDesign(
        d=d,
        phi1=phi1,
        epsilon=epsilon,
        c1=c1,
        c2=c2,
        alpha_check=alpha_coefficient(f, d, "exact"),
        beta_check=beta_coefficient(f, d, "exact"),
        ratio=ratio,
        printed_ratio=printed_level_ratio(phi1, epsilon, d),
    )


def design_smeary(phi1: float, d: int, epsilon: float | None = None) -> CapStripDesign:
    """Cap+strip design with alpha_d = 0 and beta_d > 0.

    Starts from ``epsilon`` (default: suggest_epsilon) and halves it until
    beta_d is positive, at most MAX_HALVINGS times.
    """
    eps = suggest_epsilon(phi1, d) if epsilon is None else float(epsilon)
    tried = []
    for k in range(MAX_HALVINGS + 1):
        design = solve_levels(phi1, eps, d)
        tried.append((eps, design.beta_check))
        if design.smeary:
            return CapStripDesign(**{**asdict(design), "halvings": k})
        eps *= 0.5
    scan = ", ".join(f"eps={e:.3g}: beta={b:.3g}" for e, b in tried[:8])
    raise InfeasibleDesignError(f"no eps with beta_d > 0 for phi1={phi1}, d={d} ({scan}, ...)")
