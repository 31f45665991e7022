"""Hopf-type fibrations of S^3, the double cover S^3 -> ST S^2 and lens-space actions.

Everything lives in the quaternion model of :mod:`nullcone.quatgeo`.  The
double cover sends ``q`` to ``(q^-1 k q, q^-1 j q)``, read as (base point,
unit tangent).  Left multiplication by ``exp(i theta/2)`` is then the unit
speed geodesic flow on ST S^2, and the lens action generating L(2c, 1) is
left multiplication by ``exp(i pi/c)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quatgeo import (
    I,
    J,
    K,
    ONE,
    TangentPoint,
    UnitImag,
    UnitQuaternion,
    conjugate_by,
    imag_products,
    quat_exp,
    rotation_to_quaternion,
)

TIE_TOL = 1e-12
COLLINEAR_TOL = 1e-15


class DegenerateOrbitError(ValueError):
    """Two distinct orbit elements tie in every component."""


@dataclass(frozen=True)
class LensClass:
    c: int
    rep: UnitQuaternion

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"c must be a positive integer, got {self.c}")

    def distance(self, other: "LensClass") -> float:
        if self.c != other.c:
            return math.inf
        return self.rep.distance(other.rep)


def hopf_tau(w: UnitImag, q: UnitQuaternion) -> UnitImag:
    return conjugate_by(q, w)


def _perpendicular(w: UnitImag) -> UnitImag:
    v = w.vec
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(v)))] = 1.0
    return UnitImag.from_vec(np.cross(v, axis))


def hopf_section(w: UnitImag, p: UnitImag) -> UnitQuaternion:
    """A unit quaternion ``q`` with ``q^-1 w q = p``."""
    cross, inner = imag_products(p, w)
    s = cross.norm()
    if s <= COLLINEAR_TOL:
        if inner > 0:
            return ONE
        return quat_exp(_perpendicular(w), math.pi / 2)
    # atan2 rather than arccos(<w, p>): same angle, no loss of accuracy near 0 and pi
    theta = math.atan2(s, inner)
    eta = UnitImag.from_vec(cross.vec)
    return quat_exp(eta, theta / 2)


def big_phi(q: UnitQuaternion) -> TangentPoint:
    return TangentPoint(conjugate_by(q, K), conjugate_by(q, J))


def phi_preimage(pt: TangentPoint) -> UnitQuaternion:
    """One of the two antipodal preimages of ``pt`` under :func:`big_phi`."""
    base, direction = pt.base.vec, pt.dir.vec
    # q^-1 (.) q sends i, j, k to dir x base, dir, base
    R = np.column_stack([np.cross(direction, base), direction, base])
    r = rotation_to_quaternion(R)
    return r.inverse()


def lens_act(c: int, k: int, q: UnitQuaternion) -> UnitQuaternion:
    if c < 1:
        raise ValueError(f"c must be a positive integer, got {c}")
    k %= 2 * c
    if k == 0:
        return q
    return quat_exp(I, math.pi * k / c) * q


def zc_act_sts2(c: int, pt: TangentPoint, power: int = 1) -> TangentPoint:
    """Rotate ``(base, dir)`` by ``2 pi power / c`` in the plane they span."""
    if c < 1:
        raise ValueError(f"c must be a positive integer, got {c}")
    a = 2.0 * math.pi * power / c
    ca, sa = math.cos(a), math.sin(a)
    y, v = pt.base.vec, pt.dir.vec
    return TangentPoint.from_vecs(ca * y + sa * v, -sa * y + ca * v)


def sts2_flow(q: UnitQuaternion, theta: float) -> UnitQuaternion:
    return quat_exp(I, theta / 2) * q


def lens_orbit(c: int, q: UnitQuaternion) -> list[UnitQuaternion]:
    return [lens_act(c, k, q) for k in range(2 * c)]


def _lex_compare(a: UnitQuaternion, b: UnitQuaternion, tol: float = TIE_TOL) -> int:
    for ca, cb in zip(a.as_array(), b.as_array()):
        if ca > cb + tol:
            return 1
        if ca < cb - tol:
            return -1
    return 0


def lens_canonicalize(c: int, q: UnitQuaternion) -> LensClass:
    """Representative of the Z_2c orbit of ``q``: the (w, x, y, z)-lexicographic maximum."""
    orbit = lens_orbit(c, q)
    best = orbit[0]
    for cand in orbit[1:]:
        cmp = _lex_compare(cand, best)
        if cmp > 0:
            best = cand
        elif cmp == 0 and cand.distance(best) > TIE_TOL:
            raise DegenerateOrbitError(f"orbit of {q} has tied elements {cand} and {best}")
    return LensClass(c, best)
