"""Derivative tensors of rho_y(x) = d(x, y)^2 / 2 on S^d, orders 1 to 4.

Everything is chart-free: the gradient Y = grad rho_y(x) = -log_x(y) and the
arguments are ambient vectors in T_x S^d, and every tensor is a polynomial in
inner products with coefficients depending only on r = |Y| through
g = r cot r.

``third_rho`` and ``fourth_rho`` are iterated covariant derivatives,
``grad^3 rho(W, Z, T) = (grad_W grad^2 rho)(Z, T)`` and
``grad^4 rho(U, W, Z, T) = (grad_U grad^3 rho)(W, Z, T)``.  They are
symmetric in their last two slots only: the curvature of the sphere makes the
slot order matter (Ricci identity).  The ``*_sym`` variants average over all
argument permutations; that is the symmetric derivative of rho_y o exp_x at 0,
which is what finite differences of rho_y along exp_x see.  Both agree on
repeated arguments (Z, ..., Z).

All functions broadcast over leading axes of the frame (many y at once).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .sphere import CutLocusError, geodesic_distance, log_map

FRAME_CUT_TOL = 1e-8
G_SERIES_CUTOFF = 1e-4
COEF_SERIES_CUTOFF = 0.3


def _inner(a, b):
    return np.sum(a * b, axis=-1)


def g_cot(t):
    """t cot t, with the series 1 - t^2/3 - t^4/45 below 1e-4."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < G_SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    t2 = t * t
    return np.where(small, 1.0 - t2 / 3.0 - t2 * t2 / 45.0, safe / np.tan(safe))


def _series(r2, coefs):
    out = np.zeros_like(r2)
    for c in reversed(coefs):
        out = out * r2 + c
    return out


# Taylor coefficients in r^2 of the tensor coefficients, used for r < 0.3 where
# the closed forms lose digits to cancellation (about 1e-7 at r = 0.05 for f4).
_SERIES = {
    "hess": (-1 / 3, -1 / 45, -2 / 945, -1 / 4725, -2 / 93555, -1382 / 638512875, -4 / 18243225, -3617 / 162820783125, -87734 / 38979295480125, -349222 / 1531329465290625, -310732 / 13447856940643125),
    "t1": (1 / 3, -4 / 45, -4 / 315, -8 / 4725, -4 / 18711, -5528 / 212837625, -8 / 2606175, -57872 / 162820783125, -175468 / 4331032831125, -1396888 / 306265893058125, -621464 / 1222532449149375),
    "t2": (4 / 15, 4 / 105, 8 / 1575, 4 / 6237, 5528 / 70945875, 8 / 868725, 57872 / 54273594375, 175468 / 1443677610375, 1396888 / 102088631019375, 621464 / 407510816383125, 3781825456 / 22435507995972946875),
    "f1": (1 / 3, -1 / 5, 1 / 105, 2 / 525, 13 / 17325, 8618 / 70945875, 1262 / 70945875, 8852 / 3618239625, 2325443 / 7218388051875, 3261766 / 79402268570625, 59986918 / 11740192567228125),
    "f2": (-1 / 15, -23 / 315, -74 / 4725, -139 / 51975, -86662 / 212837625, -36838 / 638512875, -84428 / 10854718875, -21891109 / 21655164155625, -273853786 / 2143861251406875, -555946474 / 35220577701684375, -7583397916 / 3959207293406990625),
    "f3": (4 / 15, -16 / 315, -64 / 4725, -128 / 51975, -82112 / 212837625, -35456 / 638512875, -82048 / 10854718875, -1946368 / 1968651286875, -269028416 / 2143861251406875, -547914368 / 35220577701684375, -127362550912 / 67306523987918840625),
    "f4": (12 / 35, 8 / 105, 76 / 5775, 3176 / 1576575, 20312 / 70945875, 848 / 21928725, 1345364 / 267347705625, 30320968 / 47641361142375, 18115688 / 230199854259375, 952642384 / 99713368870990875, 25629260312 / 22435507995972946875),
}


def _closed(name, g, r2):
    if name == "hess":
        return (g - 1) / r2
    if name == "t1":
        return (g - g * g) / r2
    if name == "t2":
        return (3 * g * g - 3 * g + r2) / (r2 * r2)
    g2, g3 = g * g, g * g * g
    if name == "f1":
        return (g2 - g3) / r2
    if name == "f2":
        return ((3 * g3 - 3 * g2) / r2 - 1 + 2 * g) / r2
    if name == "f3":
        return ((3 * g3 - 3 * g2) / r2 + g) / r2
    if name == "f4":
        return ((15 * g2 - 15 * g3) / r2 + 4 - 9 * g) / (r2 * r2)
    raise KeyError(name)


@dataclass(frozen=True)
class GeodesicFrame:
    """Base point x, target(s) y and the derived gradient data.

    ``Y`` is grad rho_y(x) (pointing away from y), ``r`` = |Y| = d(x, y) and
    ``g`` = r cot r.
    """

    x: np.ndarray
    y: np.ndarray
    Y: np.ndarray
    r: np.ndarray
    g: np.ndarray

    @classmethod
    def from_points(cls, x, y) -> "GeodesicFrame":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = geodesic_distance(x, y)
        if np.any(r >= np.pi - FRAME_CUT_TOL):
            raise CutLocusError("y lies within the cut-locus guard radius of x")
        Y = -log_map(x, y)
        return cls(x, y, Y, r, g_cot(r))

    def coef(self, name: str):
        r2 = self.r * self.r
        small = self.r < COEF_SERIES_CUTOFF
        safe_r2 = np.where(small, 1.0, r2)
        safe_g = np.where(small, 0.5, self.g)
        return np.where(small, _series(r2, _SERIES[name]), _closed(name, safe_g, safe_r2))


def grad_rho(frame: GeodesicFrame) -> np.ndarray:
    """Gradient of rho_y at x: -log_x(y)."""
    return frame.Y


def hessian_rho(frame: GeodesicFrame, Z, T):
    """<Z,T> g - <Y,T><Y,Z> (g - 1)/|Y|^2."""
    Y = frame.Y
    return _inner(Z, T) * frame.g - _inner(Y, T) * _inner(Y, Z) * frame.coef("hess")


def third_rho(frame: GeodesicFrame, W, Z, T):
    """(grad_W grad^2 rho_y)(Z, T)."""
    Y = frame.Y
    yw, yz, yt = _inner(Y, W), _inner(Y, Z), _inner(Y, T)
    zt = _inner(Z, T)
    s1 = zt * yw + _inner(W, T) * yz + _inner(W, Z) * yt
    return s1 * frame.coef("t1") + yw * yz * yt * frame.coef("t2") - zt * yw


def fourth_rho(frame: GeodesicFrame, U, W, Z, T):
    """(grad_U grad^3 rho_y)(W, Z, T), assembled from the sums I_1, ..., I_4."""
    Y = frame.Y
    yu, yw, yz, yt = _inner(Y, U), _inner(Y, W), _inner(Y, Z), _inner(Y, T)
    uw, uz, ut = _inner(U, W), _inner(U, Z), _inner(U, T)
    wz, wt, zt = _inner(W, Z), _inner(W, T), _inner(Z, T)
    i1 = zt * uw + wz * ut + wt * uz
    i2 = yu * (yw * zt + yz * wt + yt * wz)
    i3 = uw * yz * yt + uz * yw * yt + ut * yz * yw
    i4 = yu * yw * yz * yt
    return (
        i1 * frame.coef("f1")
        + i2 * frame.coef("f2")
        + i3 * frame.coef("f3")
        + i4 * frame.coef("f4")
        - zt * uw * frame.g
        + zt * yw * yu * frame.coef("hess")
    )


def _symmetrized(fn, frame, vecs):
    perms = list(itertools.permutations(range(len(vecs))))
    total = 0.0
    for p in perms:
        total = total + fn(frame, *(vecs[i] for i in p))
    return total / len(perms)


def third_rho_sym(frame: GeodesicFrame, W, Z, T):
    return _symmetrized(third_rho, frame, (W, Z, T))


def fourth_rho_sym(frame: GeodesicFrame, U, W, Z, T):
    return _symmetrized(fourth_rho, frame, (U, W, Z, T))


def curvature_commutator(frame: GeodesicFrame, W, Z, T):
    """third_rho(W,Z,T) - third_rho(Z,W,T) predicted by the Ricci identity on S^d."""
    Y = frame.Y
    return _inner(W, T) * _inner(Y, Z) - _inner(Z, T) * _inner(Y, W)


def directional_tensors(frame: GeodesicFrame, Z):
    """(h2, h3, h4) = grad^k rho_y(Z, ..., Z) through the angle between Y and Z."""
    Z = np.asarray(Z, dtype=float)
    nz = np.linalg.norm(Z, axis=-1)
    r = frame.r
    g = frame.g
    denom = np.where((nz == 0) | (r == 0), 1.0, nz * r)
    cos = np.where((nz == 0) | (r == 0), 0.0, _inner(frame.Y, Z) / denom)
    cos = np.clip(cos, -1.0, 1.0)
    sin2 = 1.0 - cos * cos
    h2 = nz**2 * (g * sin2 + cos * cos)
    # (3g - 3g^2 - r^2)/r = r (3 t1 - 1), finite as r -> 0
    h3 = nz**3 * r * (3 * frame.coef("t1") - 1) * (cos - cos**3)
    h4 = nz**4 * (-sin2 * _fourth_radial(frame, "a") + sin2 * sin2 * _fourth_radial(frame, "b"))
    return h2, h3, h4


def _fourth_radial(frame, which):
    # a = (12 g^2 - 12 g^3 - 8 r^2 g + 4 r^2)/r^2, b = (15 g^2 - 15 g^3 - 9 r^2 g + 4 r^2)/r^2
    g = frame.g
    f1 = frame.coef("f1")  # (g^2 - g^3)/r^2
    if which == "a":
        return 12 * f1 - 8 * g + 4
    return 15 * f1 - 9 * g + 4
