"""The Engel structure on the projectivized null cone bundle and its kernel.

On the cone chart ``(x1, x2, x3, theta)`` of a diagonal metric the Engel
distribution is ``D = span{X, d/dtheta}`` with ``X`` the spanned null
direction, ``E = span{X, d/dtheta, Xdot}`` with ``Xdot = [d/dtheta, X]``, and
the kernel line field is spanned by ``Z = X + (F cos + G sin + H) d/dtheta``.
Vector fields are callables taking a length-4 state array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .lorentz import (
    DEFAULT_STEP,
    ConePoint,
    Trajectory,
    Vec4,
    cone_embed,
    integrate_geodesic,
    rk4,
)
from .metricexpr import DiagonalMetric
from .report import CheckReport, report_from, separation_residual

VectorField = Callable[[np.ndarray], np.ndarray]

RANK_TOL = 1e-7
KERNEL_TOL = 1e-6
UNIQUENESS_MIN = 1e-2
SPRAY_TOL = 1e-6
THETA_ODE_TOL = 1e-4
PERTURBATION = 0.1


@dataclass(frozen=True)
class KernelCoeffs:
    F: float
    G: float
    H: float

    def correction(self, theta: float) -> float:
        return self.F * math.cos(theta) + self.G * math.sin(theta) + self.H


@dataclass(frozen=True)
class FrameSample:
    X: Vec4
    Xdot: Vec4
    dTheta: Vec4
    Z: Vec4


def _state(cp) -> np.ndarray:
    if isinstance(cp, ConePoint):
        return cp.as_array()
    return np.asarray(cp, dtype=float)


def _coeffs(g, dg, theta: float) -> KernelCoeffs:
    g11, g22, g33 = g
    s11, s22, s33 = math.sqrt(g11), math.sqrt(g22), math.sqrt(-g33)
    c, s = math.cos(theta), math.sin(theta)
    F = (dg[0][1] / s22 + s * dg[0][2] / s33) / (2.0 * g11)
    G = -(dg[1][0] / s11 + c * dg[1][2] / s33) / (2.0 * g22)
    H = (s * dg[2][0] / s11 - c * dg[2][1] / s22) / (2.0 * g33)
    return KernelCoeffs(F, G, H)


def kernel_coeffs(m: DiagonalMetric, cp) -> KernelCoeffs:
    y = _state(cp)
    g, dg = m.diag_and_partials(y[:3])
    return _coeffs(g, dg, y[3])


def x_field(m: DiagonalMetric) -> VectorField:
    def X(y):
        g11, g22, g33 = m.diag(y[:3])
        return np.array([math.cos(y[3]) / math.sqrt(g11), math.sin(y[3]) / math.sqrt(g22), 1.0 / math.sqrt(-g33), 0.0])

    return X


def xdot_field(m: DiagonalMetric) -> VectorField:
    def Xdot(y):
        g11, g22, _ = m.diag(y[:3])
        return np.array([-math.sin(y[3]) / math.sqrt(g11), math.cos(y[3]) / math.sqrt(g22), 0.0, 0.0])

    return Xdot


def dtheta_field(m: DiagonalMetric | None = None) -> VectorField:
    e = np.array([0.0, 0.0, 0.0, 1.0])
    return lambda y: e


def z_field(m: DiagonalMetric, perturb: float = 0.0, correction: bool = True) -> VectorField:
    """The kernel field; ``perturb`` shifts its theta coefficient, ``correction=False`` drops it."""

    def Z(y):
        g, dg = m.diag_and_partials(y[:3])
        c, s = math.cos(y[3]), math.sin(y[3])
        at = _coeffs(g, dg, y[3]).correction(y[3]) if correction else 0.0
        return np.array([c / math.sqrt(g[0]), s / math.sqrt(g[1]), 1.0 / math.sqrt(-g[2]), at + perturb])

    return Z


def frame_fields(m: DiagonalMetric, cp) -> FrameSample:
    y = _state(cp)
    X = x_field(m)(y)
    Z = z_field(m)(y)
    # the kernel lies in D: it differs from X only along d/dtheta
    assert np.array_equal(Z[:3], X[:3]) and X[3] == 0.0
    return FrameSample(
        Vec4.from_array(X), Vec4.from_array(xdot_field(m)(y)), Vec4(0.0, 0.0, 0.0, 1.0), Vec4.from_array(Z)
    )


def _jacobian(W: VectorField, y: np.ndarray) -> np.ndarray:
    J = np.empty((4, 4))
    for j in range(4):
        h = 1e-5 * (1.0 + abs(y[j]))
        up, down = y.copy(), y.copy()
        up[j] += h
        down[j] -= h
        J[:, j] = (W(up) - W(down)) / (2.0 * h)
    return J


def lie_bracket(m: DiagonalMetric | None, V: VectorField, W: VectorField, cp) -> Vec4:
    """``[V, W] = (DW) V - (DV) W`` with central-difference Jacobians."""
    y = _state(cp)
    b = _jacobian(W, y) @ V(y) - _jacobian(V, y) @ W(y)
    return Vec4.from_array(b)


def singular_ratios(vectors) -> np.ndarray:
    A = np.array([np.asarray(v, dtype=float) for v in vectors])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0.0:
        return np.zeros_like(sv)
    return sv / sv[0]


def numerical_rank(vectors, rel_tol: float = RANK_TOL) -> int:
    return int(np.sum(singular_ratios(vectors) > rel_tol))


def random_cone_points(m: DiagonalMetric, n: int, rng: np.random.Generator, shrink: float = 0.0):
    lo = np.array([a + shrink * (b - a) for a, b in m.domain])
    hi = np.array([b - shrink * (b - a) for a, b in m.domain])
    for _ in range(n):
        yield np.append(rng.uniform(lo, hi), rng.uniform(0.0, 2.0 * math.pi))


def engel_rank_check(m: DiagonalMetric, samples: int, seed: int = 0) -> CheckReport:
    """Flag ranks (2, 3, 4) of D, E = D + [X, d/dtheta] and E + [X, Xdot] or E + [d/dtheta, Xdot].

    The residual is ``-log10`` of the smallest singular-value ratio that must
    exceed the rank tolerance.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    X, Xd, T = x_field(m), xdot_field(m), dtheta_field()
    rng = np.random.default_rng(seed)
    residuals, points = [], []
    for y in random_cone_points(m, samples, rng):
        x, t = X(y), T(y)
        e3 = lie_bracket(m, X, T, y)
        ratio_d = singular_ratios([x, t])[-1]
        ratio_e = singular_ratios([x, t, e3])[-1]
        ratio_t = max(
            singular_ratios([x, t, e3, lie_bracket(m, X, Xd, y)])[-1],
            singular_ratios([x, t, e3, lie_bracket(m, T, Xd, y)])[-1],
        )
        residuals.append(separation_residual(min(ratio_d, ratio_e, ratio_t)))
        points.append(y)
    return report_from(f"engel_rank[{m.name}]", residuals, points, -math.log10(RANK_TOL))


def _orthogonal_part(basis: np.ndarray, v: np.ndarray) -> float:
    """Component of ``v`` orthogonal to the column span of ``basis``, relative to ``1 + |v|``.

    Finite-difference brackets carry an O(h^2) error proportional to the
    size of the fields, which grows near excluded chart singularities; the
    relative measure keeps the tolerance meaningful there.
    """
    q, _ = np.linalg.qr(basis)
    return float(np.linalg.norm(v - q @ (q.T @ v))) / (1.0 + float(np.linalg.norm(v)))


def kernel_char_check(
    m: DiagonalMetric,
    samples: int,
    seed: int = 0,
    *,
    perturb: float = 0.0,
    correction: bool = True,
) -> tuple[CheckReport, CheckReport]:
    """``[Z, e]`` stays in E for ``e`` in ``{X, d/dtheta, Xdot}``; ``d/dtheta`` itself does not.

    Returns the kernel report (largest relative component of a bracket
    outside E) and the uniqueness report (``-log10`` of the smallest relative
    component of ``[d/dtheta, Xdot]`` outside E, which must stay above the
    control bound).
    ``perturb`` and ``correction`` alter Z for control runs.
    """
    X, Xd, T = x_field(m), xdot_field(m), dtheta_field()
    Z = z_field(m, perturb=perturb, correction=correction)
    rng = np.random.default_rng(seed)
    kernel_res, unique_res, points = [], [], []
    for y in random_cone_points(m, samples, rng):
        E = np.column_stack([X(y), T(y), Xd(y)])
        worst = max(_orthogonal_part(E, np.asarray(lie_bracket(m, Z, e, y))) for e in (X, T, Xd))
        kernel_res.append(worst)
        unique_res.append(separation_residual(_orthogonal_part(E, np.asarray(lie_bracket(m, T, Xd, y)))))
        points.append(y)
    label = "" if (perturb == 0.0 and correction) else ":control"
    return (
        report_from(f"kernel_char[{m.name}]{label}", kernel_res, points, KERNEL_TOL),
        report_from(f"kernel_unique[{m.name}]", unique_res, points, -math.log10(UNIQUENESS_MIN)),
    )


def kernel_flow(
    m: DiagonalMetric,
    cp0,
    T: float,
    h: float = DEFAULT_STEP,
    *,
    perturb: float = 0.0,
) -> Trajectory:
    """RK4 integral curve of Z (optionally with a shifted theta coefficient)."""
    Z = z_field(m, perturb=perturb)
    params, ys, truncated = rk4(Z, _state(cp0), T, h, inside=lambda y: m.contains(y[:3]))
    points = ys[:, :3]
    vels = np.empty_like(points)
    residuals = np.empty(len(ys))
    for i, y in enumerate(ys):
        z = Z(y)
        vels[i] = z[:3]
        g = m.diag(y[:3])
        residuals[i] = abs(z[0] * z[0] * g[0] + z[1] * z[1] * g[1] + z[2] * z[2] * g[2])
    return Trajectory(params, points, vels, ys[:, 3] % (2.0 * math.pi), residuals, truncated)


MAX_REDRAWS = 50


def _spray_trial(m: DiagonalMetric, y0: np.ndarray, length: float, h: float, perturb: float):
    cp = ConePoint.from_array(y0)
    geo, sigma = integrate_geodesic(m, cp.base, cone_embed(m, cp), length, h, with_sigma=True)
    if geo.truncated:
        return None
    Z = z_field(m, perturb=perturb)
    params, ys, truncated = rk4(Z, y0, float(sigma[-1]), h, inside=lambda y: m.contains(y[:3]))
    if truncated:
        return None
    slopes = np.array([Z(y) for y in ys])
    spline = CubicHermiteSpline(params, ys, slopes)
    flow_at = spline(np.clip(sigma, 0.0, params[-1]))
    return float(np.max(np.linalg.norm(flow_at[:, :3] - geo.points, axis=1)))


def spray_equiv_check(
    m: DiagonalMetric,
    trials: int,
    seed: int = 0,
    *,
    perturb: float = 0.0,
    length: float = 1.0,
    h: float = DEFAULT_STEP,
) -> CheckReport:
    """Kernel-field integral curves trace the same base curves as null geodesics.

    Each trial integrates the geodesic from a random cone point over
    parameter length ``length``, carrying ``sigma`` with
    ``sigma' = x3' sqrt(-g33)``, and integrates Z over ``[0, sigma_end]``; the
    kernel curve is Hermite-interpolated at the geodesic's sigma samples and
    the base points are compared.  Starts whose curves leave the domain are
    redrawn.
    """
    rng = np.random.default_rng(seed)
    residuals, points = [], []
    for _ in range(trials):
        for _attempt in range(MAX_REDRAWS):
            y0 = next(random_cone_points(m, 1, rng, shrink=0.25))
            dev = _spray_trial(m, y0, length, h, perturb)
            if dev is not None:
                break
        else:
            dev = math.nan
        residuals.append(dev)
        points.append(y0)
    label = f":perturbed({perturb:g})" if perturb else ""
    return report_from(f"spray_equiv[{m.name}]{label}", residuals, points, SPRAY_TOL)


def theta_ode_residual(m: DiagonalMetric, traj: Trajectory) -> CheckReport:
    """Compare ``theta'`` along a geodesic with ``x3' sqrt(-g33) (F cos + G sin + H)``.

    ``theta'`` comes from centred differences of the sampled cone angles; the
    per-sample residual is normalized by ``1 + |theta'|``.
    """
    n = len(traj)
    if n < 3:
        raise ValueError("need at least 3 samples to difference theta")
    s = traj.params
    theta = np.unwrap(traj.thetas)
    residuals, points = [], []
    for i in range(1, n - 1):
        dtheta = (theta[i + 1] - theta[i - 1]) / (s[i + 1] - s[i - 1])
        p = traj.points[i]
        g, dg = m.diag_and_partials(p)
        rhs = traj.velocities[i][2] * math.sqrt(-g[2]) * _coeffs(g, dg, traj.thetas[i]).correction(traj.thetas[i])
        residuals.append(abs(dtheta - rhs) / (1.0 + abs(dtheta)))
        points.append((*p, traj.thetas[i]))
    return report_from(f"theta_ode[{m.name}]", residuals, points, THETA_ODE_TOL)
