"""Quaternions and the sphere models S^3 = unit quaternions, S^2 = unit imaginary
quaternions, and the unit tangent bundle of S^2 as orthogonal pairs of them.

Components are stored as ``(w, x, y, z)`` for ``w + x i + y j + z k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10
# Products of unit quaternions are renormalized once this many multiplications
# have accumulated since the last normalization.
RENORM_EVERY = 16


class QuaternionError(ValueError):
    pass


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("w", "x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise QuaternionError(f"non-finite component {name}={value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = (float(v) for v in a)
        return cls(w, x, y, z)

    @property
    def vec(self) -> np.ndarray:
        """Imaginary part as an R^3 vector."""
        return np.array([self.x, self.y, self.z])

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> "Quaternion":
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if n2 == 0.0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        return Quaternion(self.w / n2, -self.x / n2, -self.y / n2, -self.z / n2)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def scale(self, s: float) -> "Quaternion":
        return Quaternion(s * self.w, s * self.x, s * self.y, s * self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return quat_mul(self, other)

    def distance(self, other: "Quaternion") -> float:
        return (self - other).norm()


@dataclass(frozen=True)
class UnitQuaternion(Quaternion):
    """Point of S^3. ``chain`` counts multiplications since the last renormalization."""

    chain: int = field(default=0, compare=False)

    def __post_init__(self):
        super().__post_init__()
        if abs(self.norm() - 1.0) > UNIT_TOL:
            raise QuaternionError(f"|q| = {self.norm()!r} is not 1")

    @classmethod
    def normalized(cls, q) -> "UnitQuaternion":
        if not isinstance(q, Quaternion):
            q = Quaternion.from_array(q)
        n = q.norm()
        if n == 0.0:
            raise QuaternionError("cannot normalize the zero quaternion")
        return cls(q.w / n, q.x / n, q.y / n, q.z / n)

    def inverse(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z, self.chain)

    def __neg__(self) -> "UnitQuaternion":
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z, self.chain)

    def __mul__(self, other: Quaternion) -> Quaternion:
        prod = quat_mul(self, other)
        if not isinstance(other, UnitQuaternion):
            return prod
        chain = self.chain + other.chain + 1
        if chain > RENORM_EVERY:
            return UnitQuaternion.normalized(prod)
        return UnitQuaternion(prod.w, prod.x, prod.y, prod.z, chain)


@dataclass(frozen=True)
class UnitImag(Quaternion):
    """Point of S^2 as a unit pure-imaginary quaternion."""

    def __post_init__(self):
        super().__post_init__()
        if self.w != 0.0:
            raise QuaternionError(f"real part {self.w!r} must be exactly zero")
        if abs(self.norm() - 1.0) > UNIT_TOL:
            raise QuaternionError(f"|u| = {self.norm()!r} is not 1")

    @classmethod
    def from_vec(cls, v, normalize: bool = True) -> "UnitImag":
        v = np.asarray(v, dtype=float)
        if normalize:
            n = float(np.linalg.norm(v))
            if n == 0.0:
                raise QuaternionError("cannot normalize the zero vector")
            v = v / n
        return cls(0.0, float(v[0]), float(v[1]), float(v[2]))

    def __neg__(self) -> "UnitImag":
        return UnitImag(0.0, -self.x, -self.y, -self.z)


@dataclass(frozen=True)
class TangentPoint:
    """A unit tangent vector ``dir`` to S^2 at ``base``."""

    base: UnitImag
    dir: UnitImag

    def __post_init__(self):
        dot = self.base.x * self.dir.x + self.base.y * self.dir.y + self.base.z * self.dir.z
        if abs(dot) > ORTHO_TOL:
            raise QuaternionError(f"<base, dir> = {dot!r} is not 0")

    @classmethod
    def from_vecs(cls, base, direction) -> "TangentPoint":
        return cls(UnitImag.from_vec(base), UnitImag.from_vec(direction))

    def as_array(self) -> np.ndarray:
        """Stacked ``(base, dir)`` in R^6."""
        return np.concatenate([self.base.vec, self.dir.vec])

    def distance(self, other: "TangentPoint") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


ONE = UnitQuaternion(1.0, 0.0, 0.0, 0.0)
I = UnitImag(0.0, 1.0, 0.0, 0.0)
J = UnitImag(0.0, 0.0, 1.0, 0.0)
K = UnitImag(0.0, 0.0, 0.0, 1.0)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_exp(u: Quaternion, theta: float) -> UnitQuaternion:
    """``cos(theta) + u sin(theta)`` for a unit imaginary ``u``."""
    c, s = math.cos(theta), math.sin(theta)
    return UnitQuaternion.normalized(Quaternion(c, s * u.x, s * u.y, s * u.z))


def imag_products(u: Quaternion, v: Quaternion) -> tuple[Quaternion, float]:
    """Cross product ``(uv - vu)/2`` and inner product ``-(uv + vu)/2``."""
    uv, vu = quat_mul(u, v), quat_mul(v, u)
    cross = (uv - vu).scale(0.5)
    inner = -0.5 * (uv.w + vu.w)
    # The real part of uv - vu vanishes identically for imaginary inputs.
    return Quaternion(0.0, cross.x, cross.y, cross.z), inner


def conjugate_raw(q: Quaternion, w: Quaternion) -> Quaternion:
    """``q^-1 w q`` exactly as computed, real part included."""
    return quat_mul(quat_mul(q.inverse(), w), q)


def conjugate_by(q: Quaternion, w: Quaternion) -> UnitImag:
    """``q^-1 w q``; for unit ``q`` this rotates ``w`` and stays in S^2.

    The real part is identically zero and is dropped; the norm is not
    touched, so the UnitImag constructor still certifies it.
    """
    r = conjugate_raw(q, w)
    return UnitImag.from_vec([r.x, r.y, r.z], normalize=False)


def random_unit_quaternion(rng: np.random.Generator) -> UnitQuaternion:
    return UnitQuaternion.normalized(rng.standard_normal(4))


def random_unit_imag(rng: np.random.Generator) -> UnitImag:
    return UnitImag.from_vec(rng.standard_normal(3))


def random_tangent_point(rng: np.random.Generator) -> TangentPoint:
    x = rng.standard_normal(3)
    x /= np.linalg.norm(x)
    u = rng.standard_normal(3)
    u -= np.dot(u, x) * x
    u /= np.linalg.norm(u)
    # one more projection pass keeps <x, u> at rounding level
    u -= np.dot(u, x) * x
    return TangentPoint.from_vecs(x, u)


def rotation_to_quaternion(R: np.ndarray) -> UnitQuaternion:
    """Unit ``r`` with ``r v r^-1 = R v`` for a rotation matrix ``R`` (Shepperd's method)."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    diag = [tr, R[0, 0], R[1, 1], R[2, 2]]
    k = int(np.argmax(diag))
    if k == 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = (0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s)
    elif k == 1:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = ((R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s)
    elif k == 2:
        s = 2.0 * math.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        q = ((R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        q = ((R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s)
    return UnitQuaternion.normalized(q)
