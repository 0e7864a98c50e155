"""Rotationally symmetric densities dmu = f(d(p, .)) dV and their coefficients.

The two coefficients that govern the Frechet function at the pole are

    alpha_d = V(S^{d-1})/d * int_0^pi f d(phi sin^{d-1} phi)
    beta_d  = a_d V(S^{d-2})/(d+2) * int_0^pi f d(G2),
    G2(phi) = sin^{d-3} phi (2 phi sin^2 phi + 3 cos phi sin phi - 3 phi),

i.e. the Hessian and the fourth directional derivative of F at the pole for a
unit tangent vector.  For piecewise-constant profiles both integrals telescope
into boundary terms and are evaluated exactly.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

PI = math.pi

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-12
TOL_EXACT = 1e-9
TOL_QUADRATURE = 1e-7
# below this colatitude the bracket of the fourth tensor is replaced by its series
BRACKET_SERIES_CUTOFF = 0.3
# Taylor coefficients (A_j, B_j) of the bracket: sum_j (A_j + B_j d) phi^(2j + 5)
_BRACKET_SERIES = (
    (-8 / 15, -4 / 15),
    (8 / 315, 58 / 315),
    (13 / 945, -11 / 270),
    (-404 / 155925, 2999 / 623700),
    (22837 / 97297200, -70583 / 194594400),
    (-3593 / 261954000, 3397 / 176904000),
    (798719 / 1389404016000, -191081 / 252618912000),
    (-2175457 / 118794043368000, 21943739 / 950352346944000),
    (628627 / 1364608498176000, -407681 / 724077978624000),
    (-380005019 / 40393776154507776000, 8209129 / 731109070669824000),
    (19306706597 / 121181328463523328000000, -45232855453 / 242362656927046656000000),
)


class DivergentIntegralError(ValueError):
    """The requested tensor coefficient does not exist for this density."""


class Classification(str, enum.Enum):
    LOCAL_MIN = "LocalMin"
    LOCAL_MAX = "LocalMax"
    SMEARY_CANDIDATE = "SmearyCandidate"
    INCONCLUSIVE = "Inconclusive"


# --------------------------------------------------------------------------
# constants


def wallis(k: int) -> float:
    """a_k = int_0^pi sin^k x dx via a_k = (k-1)/k a_{k-2}."""
    if k < 0:
        raise ValueError("k must be non-negative")
    a = PI if k % 2 == 0 else 2.0
    for j in range(2 if k % 2 == 0 else 3, k + 1, 2):
        a *= (j - 1) / j
    return a


def sphere_volume(k: int) -> float:
    """Volume of the unit k-sphere: V(S^0) = 2, V(S^k) = a_{k-1} V(S^{k-1})."""
    if k < 0:
        raise ValueError("k must be non-negative")
    v = 2.0
    for j in range(1, k + 1):
        v *= wallis(j - 1)
    return v


@functools.lru_cache(maxsize=None)
def _gauss_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def _sin_power_half(k: int, a: float, b: float) -> float:
    """int_a^b sin^k x dx for 0 <= a <= b <= pi/2."""
    if b - a <= 0.25:
        # exact for polynomials of degree < 2n, so sin^k near a pole is covered
        x, w = _gauss_nodes(max(20, k // 2 + 12))
        h = 0.5 * (b - a)
        return h * float(np.dot(w, np.sin(0.5 * (a + b) + h * x) ** k))
    inc = float(special.beta((k + 1) / 2, 0.5))
    lo, hi = (float(special.betainc((k + 1) / 2, 0.5, math.sin(t) ** 2)) for t in (a, b))
    return 0.5 * inc * (hi - lo)


def sin_power_integral(k: int, a: float, b: float) -> float:
    """int_a^b sin^k x dx for 0 <= a <= b <= pi.

    Uses the incomplete beta function on long pieces and Gauss-Legendre
    on short ones, after reflecting into [0, pi/2].  The
    reduction formula cancels catastrophically on short intervals near the
    poles (relative error about 1e-4 for k = 4 on [0, 1e-3]).
    """
    if k == 0:
        return b - a
    h = PI / 2
    total = 0.0
    if a < h:
        total += _sin_power_half(k, a, min(b, h))
    if b > h:
        total += _sin_power_half(k, PI - b, PI - max(a, h))
    return total


# --------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class RadialDensity:
    """Radial profile f on [0, pi].

    ``kind`` is one of ``segments``, ``uniform``, ``bump`` or
    ``truncated_exponential``; ``params`` holds the family parameters.
    ``dimension`` records the d for which the profile was normalized.
    """

    kind: str
    params: dict = field(default_factory=dict)
    dimension: Optional[int] = None
    normalized: bool = False

    def __post_init__(self):
        if self.kind == "segments":
            segs = tuple((float(a), float(b), float(v)) for a, b, v in self.params["segments"])
            if not segs:
                raise ValueError("segments must be non-empty")
            prev = 0.0
            for a, b, v in segs:
                if not (0.0 <= a < b <= PI):
                    raise ValueError(f"segment [{a}, {b}] must satisfy 0 <= a < b <= pi")
                if a < prev:
                    raise ValueError("segments must be sorted and non-overlapping")
                if v < 0 or not math.isfinite(v):
                    raise ValueError("segment values must be finite and non-negative")
                prev = b
            object.__setattr__(self, "params", {"segments": segs})
        elif self.kind == "uniform":
            _nonneg(self.params, "value")
        elif self.kind == "bump":
            _nonneg(self.params, "value")
            if not 0.0 < float(self.params["delta"]) <= PI:
                raise ValueError("bump delta must lie in (0, pi]")
        elif self.kind == "truncated_exponential":
            _nonneg(self.params, "scale")
            float(self.params["kappa"])
            if not 0.0 < float(self.params["phi_max"]) <= PI:
                raise ValueError("phi_max must lie in (0, pi]")
        else:
            raise ValueError(f"unknown density kind {self.kind!r}")

    # constructors ---------------------------------------------------------

    @classmethod
    def from_segments(cls, segments, **kw) -> "RadialDensity":
        return cls("segments", {"segments": tuple(segments)}, **kw)

    @classmethod
    def uniform(cls, value: float = 1.0, **kw) -> "RadialDensity":
        return cls("uniform", {"value": float(value)}, **kw)

    @classmethod
    def bump(cls, delta: float, value: float = 1.0, **kw) -> "RadialDensity":
        return cls("bump", {"delta": float(delta), "value": float(value)}, **kw)

    @classmethod
    def truncated_exponential(cls, kappa: float, phi_max: float = PI, scale: float = 1.0, **kw):
        return cls(
            "truncated_exponential",
            {"kappa": float(kappa), "phi_max": float(phi_max), "scale": float(scale)},
            **kw,
        )

    # evaluation -----------------------------------------------------------

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        p = self.params
        if self.kind == "uniform":
            return np.full_like(phi, p["value"])
        if self.kind == "bump":
            return np.where(phi <= p["delta"], p["value"], 0.0)
        if self.kind == "truncated_exponential":
            return np.where(phi <= p["phi_max"], p["scale"] * np.exp(p["kappa"] * np.cos(phi)), 0.0)
        out = np.zeros_like(phi)
        for a, b, v in p["segments"]:
            out = np.where((phi >= a) & (phi <= b), v, out)
        return out

    @property
    def is_piecewise_constant(self) -> bool:
        return self.kind in ("segments", "uniform", "bump")

    def constant_pieces(self) -> list[tuple[float, float, float]]:
        """(start, end, value) triples for piecewise-constant kinds."""
        p = self.params
        if self.kind == "uniform":
            return [(0.0, PI, p["value"])]
        if self.kind == "bump":
            return [(0.0, p["delta"], p["value"])]
        if self.kind == "segments":
            return list(p["segments"])
        raise TypeError(f"{self.kind} density is not piecewise constant")

    def smooth_pieces(self) -> list[tuple[float, float]]:
        """Subintervals of [0, pi] on which f is smooth and not identically 0."""
        if self.is_piecewise_constant:
            return [(a, b) for a, b, v in self.constant_pieces() if v > 0]
        return [(0.0, self.params["phi_max"])]

    @property
    def breakpoints(self) -> list[float]:
        pts = {0.0, PI}
        for a, b in self.smooth_pieces():
            pts.update((a, b))
        return sorted(pts)

    @property
    def support_end(self) -> float:
        pieces = self.smooth_pieces()
        return max(b for _, b in pieces) if pieces else 0.0

    @property
    def vanishes_near_pi(self) -> bool:
        return self.support_end < PI

    @property
    def vanish_radius(self) -> float:
        """epsilon such that f = 0 on (pi - epsilon, pi]; 0 if f does not vanish."""
        return PI - self.support_end

    @property
    def sup_near_pi(self) -> float:
        """Limit of sup f over (pi - eps, pi] as eps -> 0."""
        if self.vanishes_near_pi:
            return 0.0
        return float(self(PI))

    def scaled(self, factor: float) -> "RadialDensity":
        if factor <= 0 or not math.isfinite(factor):
            raise ValueError("scale factor must be positive and finite")
        p = self.params
        if self.kind == "segments":
            params = {"segments": tuple((a, b, v * factor) for a, b, v in p["segments"])}
        elif self.kind == "truncated_exponential":
            params = {**p, "scale": p["scale"] * factor}
        else:
            params = {**p, "value": p["value"] * factor}
        return RadialDensity(self.kind, params, dimension=None, normalized=False)


def _nonneg(params, key):
    v = float(params[key])
    if v < 0 or not math.isfinite(v):
        raise ValueError(f"{key} must be finite and non-negative")


# --------------------------------------------------------------------------
# quadrature


def integrate_pieces(fn: Callable[[float], float], f: RadialDensity) -> float:
    """Adaptive Gauss-Kronrod integral of fn(phi) * f(phi) over the support of f."""
    if f.is_piecewise_constant:
        pieces = [(a, b, v) for a, b, v in f.constant_pieces() if v > 0]
    else:
        pieces = [(a, b, None) for a, b in f.smooth_pieces()]
    total = 0.0
    for a, b, v in pieces:
        if v is None:
            integrand = lambda t: fn(t) * float(f(t))  # noqa: E731
        else:
            integrand = lambda t, v=v: fn(t) * v  # noqa: E731
        val, _ = integrate.quad(
            integrand, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200
        )
        total += val
    return total


def mass(f: RadialDensity, d: int) -> float:
    """V(S^{d-1}) int_0^pi f sin^{d-1}."""
    if f.is_piecewise_constant:
        s = sum(v * sin_power_integral(d - 1, a, b) for a, b, v in f.constant_pieces())
    else:
        s = integrate_pieces(lambda t: math.sin(t) ** (d - 1), f)
    return sphere_volume(d - 1) * s


def normalize(f: RadialDensity, d: int) -> RadialDensity:
    """Rescale f into a probability density on S^d (idempotent)."""
    if f.normalized and f.dimension == d:
        return f
    m = mass(f, d)
    if not m > 0:
        raise ValueError("density has zero mass")
    g = f.scaled(1.0 / m)
    return RadialDensity(g.kind, g.params, dimension=d, normalized=True)


def is_normalized(f: RadialDensity, d: int, tol: float = 1e-8) -> bool:
    if f.normalized and f.dimension == d:
        return True
    return abs(mass(f, d) - 1.0) <= tol


# --------------------------------------------------------------------------
# coefficient integrals


def g1_primitive(phi, d: int):
    """phi sin^{d-1} phi."""
    return phi * np.sin(phi) ** (d - 1)


def g1_derivative(phi, d: int):
    s, c = np.sin(phi), np.cos(phi)
    return s ** (d - 1) + (d - 1) * phi * c * s ** (d - 2)


def g2_primitive(phi, d: int):
    """sin^{d-3} phi (2 phi sin^2 phi + 3 cos phi sin phi - 3 phi)."""
    s, c = np.sin(phi), np.cos(phi)
    return s ** (d - 3) * (2 * phi * s * s + 3 * c * s - 3 * phi)


def g2_derivative(phi, d: int):
    s, c = np.sin(phi), np.cos(phi)
    h = 2 * phi * s * s + 3 * c * s - 3 * phi
    dh = 2 * s * s + 4 * phi * s * c + 3 * (c * c - s * s) - 3
    lead = (d - 3) * s ** (d - 4) * c * h if d != 3 else 0.0
    return lead + s ** (d - 3) * dh


def fourth_bracket(phi, d: int, as_printed: bool = False):
    """Bracket B_d(phi) with grad^4 F(Z^4) = (a_d V(S^{d-2})/(d+2)) int B sin^{d-4} f.

    The corrected form carries sin(phi) cos^2(phi) in the (3d - 9) term; with
    ``as_printed=True`` the variant with sin(phi) cos(phi) is returned, which
    only agrees for d = 3.
    """
    phi = np.asarray(phi, dtype=float)
    s, c = np.sin(phi), np.cos(phi)
    first = s * c if as_printed else s * c * c
    out = (first - phi * c**3) * (3 * d - 9) + phi * c * s * s * (7 - d) - 4 * s**3
    if not as_printed:
        p2 = phi * phi
        series = np.zeros_like(phi)
        for a, b in reversed(_BRACKET_SERIES):
            series = series * p2 + (a + b * d)
        series = series * phi**5
        out = np.where(phi < BRACKET_SERIES_CUTOFF, series, out)
    return out


def _alpha_prefactor(d):
    return sphere_volume(d - 1) / d


def _beta_prefactor(d):
    return wallis(d) * sphere_volume(d - 2) / (d + 2)


def _resolve_method(f: RadialDensity, method: str) -> str:
    if method == "auto":
        return "exact" if f.is_piecewise_constant else "quadrature"
    if method == "exact" and not f.is_piecewise_constant:
        raise ValueError("exact boundary terms need a piecewise-constant density")
    if method not in ("exact", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    return method


def alpha_coefficient(f: RadialDensity, d: int, method: str = "auto") -> float:
    """Hessian coefficient: grad^2 F(Z, Z)_p = alpha_d |Z|^2."""
    if d < 2:
        raise ValueError("alpha_d needs d >= 2")
    if _resolve_method(f, method) == "exact":
        s = sum(v * (g1_primitive(b, d) - g1_primitive(a, d)) for a, b, v in f.constant_pieces())
    else:
        s = integrate_pieces(lambda t: g1_derivative(t, d), f)
    return _alpha_prefactor(d) * float(s)


def beta_coefficient(f: RadialDensity, d: int, method: str = "auto") -> float:
    """Fourth-order coefficient: grad^4 F(Z^4)_p = beta_d |Z|^4 (d >= 4)."""
    if d < 4:
        raise ValueError("beta_d is defined for d >= 4; use fourth_directional")
    if _resolve_method(f, method) == "exact":
        s = sum(v * (g2_primitive(b, d) - g2_primitive(a, d)) for a, b, v in f.constant_pieces())
    else:
        s = integrate_pieces(lambda t: g2_derivative(t, d), f)
    return _beta_prefactor(d) * float(s)


def fourth_directional(f: RadialDensity, d: int) -> float:
    """grad^4 F(Z, Z, Z, Z)_p for unit Z, by quadrature of the bracket form."""
    if d < 2:
        raise ValueError("need d >= 2")
    if d < 4 and not f.vanishes_near_pi:
        raise DivergentIntegralError(
            f"fourth tensor diverges for d = {d} unless f vanishes near the antipode"
        )
    s = integrate_pieces(lambda t: float(fourth_bracket(t, d)) * math.sin(t) ** (d - 4), f)
    return _beta_prefactor(d) * s


def guaranteed_order(d: int, sup_near_pi: float, vanishes_near_pi: bool) -> int:
    """Largest j <= 4 for which F is guaranteed C^j near the pole."""
    if vanishes_near_pi:
        return 4
    if math.isfinite(sup_near_pi):
        return min(d, 4)
    return 0


def differentiability_order(f: RadialDensity, d: int) -> int:
    return guaranteed_order(d, f.sup_near_pi, f.vanishes_near_pi)


@dataclass(frozen=True)
class TensorReport:
    d: int
    alpha: float
    beta: Optional[float]
    fourth_directional: Optional[float]
    diff_order: int
    classification: Classification
    tol: float
    method: str

    def to_dict(self) -> dict:
        return {
            "dimension": self.d,
            "alpha": self.alpha,
            "beta": self.beta,
            "fourth_directional": self.fourth_directional,
            "diff_order": self.diff_order,
            "classification": self.classification.value,
            "tol": self.tol,
            "method": self.method,
        }


def classify(f: RadialDensity, d: int, tol: Optional[float] = None, method: str = "auto") -> TensorReport:
    """Local behaviour of the Frechet function at the pole."""
    method = _resolve_method(f, method)
    if tol is None:
        tol = TOL_EXACT if method == "exact" else TOL_QUADRATURE
    alpha = alpha_coefficient(f, d, method)
    beta = beta_coefficient(f, d, method) if d >= 4 else None
    try:
        fourth = fourth_directional(f, d)
    except DivergentIntegralError:
        fourth = None
    order = differentiability_order(f, d)

    if order >= 2 and alpha > tol:
        label = Classification.LOCAL_MIN
    elif d < 4 and f.vanishes_near_pi and abs(alpha) <= tol:
        label = Classification.LOCAL_MAX
    elif d >= 4 and math.isfinite(f.sup_near_pi) and abs(alpha) <= tol and beta > tol:
        label = Classification.SMEARY_CANDIDATE
    else:
        label = Classification.INCONCLUSIVE
    return TensorReport(d, alpha, beta, fourth, order, label, tol, method)
