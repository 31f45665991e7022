"""Null geodesics of diagonal Lorentzian 3-metrics and the cone-bundle chart.

A diagonal metric ``g11 dx1^2 + g22 dx2^2 + g33 dx3^2`` with ``g33 < 0`` has
its future null directions at ``x`` parametrized by an angle ``theta``::

    (cos(theta)/sqrt(g11), sin(theta)/sqrt(g22), 1/sqrt(-g33))

which gives coordinates ``(x1, x2, x3, theta)`` on the projectivized null cone
bundle.  Future is the sign of the ``x3`` component.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Sequence, TextIO

import numpy as np

from .metricexpr import DiagonalMetric, EvalError

TWO_PI = 2.0 * math.pi
DEFAULT_STEP = 1e-3
MAX_STEPS = 10_000_000
NULL_INPUT_TOL = 1e-10
LIFT_TOL = 1e-8


class LorentzError(ValueError):
    pass


class NonNullError(LorentzError):
    pass


class PastPointingError(LorentzError):
    pass


class StepError(LorentzError):
    pass


class ChartPoint(NamedTuple):
    x1: float
    x2: float
    x3: float


class Vec4(NamedTuple):
    """Components in the frame ``(d/dx1, d/dx2, d/dx3, d/dtheta)``."""

    a1: float
    a2: float
    a3: float
    at: float

    @classmethod
    def from_array(cls, a) -> "Vec4":
        return cls(*(float(v) for v in a))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class ConePoint:
    base: ChartPoint
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "base", ChartPoint(*(float(v) for v in self.base)))
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @classmethod
    def from_array(cls, a) -> "ConePoint":
        return cls(ChartPoint(a[0], a[1], a[2]), a[3])

    def as_array(self) -> np.ndarray:
        return np.array([*self.base, self.theta])


@dataclass
class Trajectory:
    """Samples of an integrated curve.

    ``velocities`` are the base components of the tangent (the geodesic
    velocity, or the base part of the kernel field); ``thetas`` are cone
    angles in ``[0, 2 pi)``.
    """

    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    thetas: np.ndarray
    null_residuals: np.ndarray
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.params)

    def cone_point(self, i: int) -> ConePoint:
        return ConePoint(ChartPoint(*self.points[i]), self.thetas[i])

    def rows(self):
        for s, p, th, r in zip(self.params, self.points, self.thetas, self.null_residuals):
            yield (s, p[0], p[1], p[2], th, r)

    def write_csv(self, out: str | Path | TextIO) -> None:
        if isinstance(out, (str, Path)):
            with open(out, "w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
            return
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows():
            writer.writerow([f"{v:.17g}" for v in row])


CSV_HEADER = ("s", "x1", "x2", "x3", "theta", "null_residual")


def christoffel(m: DiagonalMetric, p: Sequence[float]) -> np.ndarray:
    """``G[k, i, j]`` = Christoffel symbol with upper index ``k``."""
    g, dg = m.diag_and_partials(p)
    G = np.zeros((3, 3, 3))
    for k in range(3):
        inv = 0.5 / g[k]
        for i in range(3):
            # d_i g_kk enters Gamma^k_ki = Gamma^k_ik (including i == k)
            G[k, k, i] += inv * dg[k][i]
            if i != k:
                G[k, i, k] += inv * dg[k][i]
                # -d_k g_ii enters Gamma^k_ii
                G[k, i, i] -= inv * dg[i][k]
    return G


def null_residual(m: DiagonalMetric, p: Sequence[float], v: Sequence[float]) -> float:
    """``g(v, v)`` at ``p``; zero exactly for null ``v``."""
    g11, g22, g33 = m.diag(p)
    return v[0] * v[0] * g11 + v[1] * v[1] * g22 + v[2] * v[2] * g33


def _theta_of(g: Sequence[float], v: Sequence[float]) -> float:
    g11, g22, g33 = g
    scale = math.sqrt(-g33) * v[2]
    cos_t = v[0] * math.sqrt(g11) / scale
    sin_t = v[1] * math.sqrt(g22) / scale
    return math.atan2(sin_t, cos_t) % TWO_PI


def cone_lift(m: DiagonalMetric, p: Sequence[float], v: Sequence[float]) -> ConePoint:
    """The cone point spanned by a future null vector ``v`` at ``p``."""
    v = [float(a) for a in v]
    res = null_residual(m, p, v)
    size = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    if abs(res) > LIFT_TOL * size or size == 0.0:
        raise NonNullError(f"g(v, v) = {res:.3g} for v = {v}")
    if v[2] <= 0.0:
        raise PastPointingError(f"v = {v} is not future pointing (x3 component <= 0)")
    return ConePoint(ChartPoint(*p), _theta_of(m.diag(p), v))


def cone_embed(m: DiagonalMetric, cp: ConePoint) -> np.ndarray:
    g11, g22, g33 = m.diag(cp.base)
    return np.array(
        [math.cos(cp.theta) / math.sqrt(g11), math.sin(cp.theta) / math.sqrt(g22), 1.0 / math.sqrt(-g33)]
    )


def rk4(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    T: float,
    h: float,
    inside: Callable[[np.ndarray], bool] | None = None,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Classical RK4 with ``ceil(T/h)`` uniform steps covering ``[0, T]``.

    Stops early, flagging truncation, when a step leaves ``inside`` or the
    right-hand side cannot be evaluated.
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise StepError(f"step must be positive and finite, got {h!r}")
    if not (T >= 0.0 and math.isfinite(T)):
        raise StepError(f"integration length must be non-negative and finite, got {T!r}")
    n = math.ceil(T / h - 1e-9) if T > 0 else 0
    if n > MAX_STEPS:
        raise StepError(f"step {h!r} needs {n} steps over length {T!r}; limit is {MAX_STEPS}")
    dt = T / n if n else 0.0
    ys = [np.asarray(y0, dtype=float)]
    truncated = False
    y = ys[0]
    for _ in range(n):
        try:
            k1 = f(y)
            k2 = f(y + 0.5 * dt * k1)
            k3 = f(y + 0.5 * dt * k2)
            k4 = f(y + dt * k3)
        except EvalError:
            truncated = True
            break
        y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_next)) or (inside is not None and not inside(y_next)):
            truncated = True
            break
        y = y_next
        ys.append(y)
    params = dt * np.arange(len(ys))
    return params, np.array(ys), truncated


def geodesic_rhs(m: DiagonalMetric, y: np.ndarray, extra: bool = False) -> np.ndarray:
    """``(x', v')`` for the geodesic equation; with ``extra`` also ``sigma' = v3 sqrt(-g33)``."""
    g, dg = m.diag_and_partials(y[:3])
    v = y[3:6]
    acc = np.empty(3)
    for k in range(3):
        # Gamma^k_ij v^i v^j for a diagonal metric
        s = 2.0 * v[k] * (dg[k][0] * v[0] + dg[k][1] * v[1] + dg[k][2] * v[2])
        s -= dg[0][k] * v[0] * v[0] + dg[1][k] * v[1] * v[1] + dg[2][k] * v[2] * v[2]
        acc[k] = -s / (2.0 * g[k])
    parts = [v, acc]
    if extra:
        parts.append([v[2] * math.sqrt(-g[2])])
    return np.concatenate(parts)


def integrate_geodesic(
    m: DiagonalMetric,
    p0: Sequence[float],
    v0: Sequence[float],
    T: float,
    h: float = DEFAULT_STEP,
    *,
    with_sigma: bool = False,
):
    """RK4 on the second-order geodesic equation from a future null ``v0``.

    With ``with_sigma`` also returns the samples of ``sigma`` with
    ``sigma' = x3' sqrt(-g33)``, the parameter in which the geodesic's cone
    lift follows the kernel field.
    """
    p0 = [float(a) for a in p0]
    v0 = [float(a) for a in v0]
    if not m.contains(p0):
        raise LorentzError(f"start point {p0} is outside the domain of {m.name}")
    res = null_residual(m, p0, v0)
    if abs(res) > NULL_INPUT_TOL * max(1.0, sum(a * a for a in v0)):
        raise NonNullError(f"initial velocity {v0} has g(v, v) = {res:.3g}")
    if v0[2] <= 0.0:
        raise PastPointingError(f"initial velocity {v0} is not future pointing")
    y0 = np.array(p0 + v0 + ([0.0] if with_sigma else []))
    params, ys, truncated = rk4(
        lambda y: geodesic_rhs(m, y, with_sigma), y0, T, h, inside=lambda y: m.contains(y[:3])
    )
    points, vels = ys[:, :3], ys[:, 3:6]
    thetas = np.empty(len(ys))
    residuals = np.empty(len(ys))
    for i, (p, v) in enumerate(zip(points, vels)):
        g = m.diag(p)
        thetas[i] = _theta_of(g, v)
        residuals[i] = abs(v[0] * v[0] * g[0] + v[1] * v[1] * g[1] + v[2] * v[2] * g[2])
    traj = Trajectory(params, points, vels, thetas, residuals, truncated)
    if with_sigma:
        return traj, ys[:, 6]
    return traj
