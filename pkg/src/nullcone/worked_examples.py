"""Worked examples: null geodesics of S^2 x S^1, their skies and contact
structure, and the two explicit deprolongations (flat R^3 and S^2 x S^1).

S^2 computations use the quaternion model throughout.  A null geodesic of
``(S^2 x S^1, g_round - dt^2/c^2)`` starting on ``S^2 x {0}`` is
``s -> (mu(s), c s)`` with ``mu`` the unit-speed great circle of its initial
unit tangent vector, so the geodesics form ST S^2 up to the Z_c action that
moves the start along ``mu`` by ``2 pi / c``.

Tangent vectors to ST S^2 are written in R^6 as ``(d base, d dir)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .hopflens import (
    big_phi,
    lens_act,
    lens_canonicalize,
    phi_preimage,
    sts2_flow,
    zc_act_sts2,
)
from .quatgeo import (
    J,
    K,
    TangentPoint,
    UnitImag,
    UnitQuaternion,
    imag_products,
    quat_exp,
    random_tangent_point,
    random_unit_quaternion,
)
from .report import CheckReport, report_from, separation_residual

TWO_PI = 2.0 * math.pi
SLICE_TOL = 1e-10
SKY_TOL = 1e-9
MINK_SPAN_TOL = 1e-8
MINK_NULL_TOL = 1e-9
PULLBACK_TOL = 1e-9
MIN_SIN_OMEGA = 0.05
FOLIATION_DET_MIN = 1e-6
LEAF_IN_D_TOL = 1e-8
CONE_NULL_TOL = 1e-8
FIBER_GRID = 64
INJECTIVITY_MIN = 1e-6
LENS_SPREAD_TOL = 1e-9
LENS_DISTINCT_MIN = 1e-6


class SliceMismatchError(RuntimeError):
    pass


# -- S^2 x S^1 geodesics ------------------------------------------------------


@dataclass(frozen=True)
class S2S1Geodesic:
    start: TangentPoint
    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"c must be a positive integer, got {self.c}")

    @property
    def lift(self) -> UnitQuaternion:
        return phi_preimage(self.start)


def s2s1_eval(g: S2S1Geodesic, s: float) -> tuple[UnitImag, float]:
    """Point of the geodesic at parameter ``s``: the S^2 point and the S^1 angle."""
    point = big_phi(sts2_flow(g.lift, s)).base
    return point, (g.c * s) % TWO_PI


def slice_points_matrix(g: S2S1Geodesic) -> list[TangentPoint]:
    return [zc_act_sts2(g.c, g.start, power=j) for j in range(g.c)]


def slice_points_quaternion(g: S2S1Geodesic) -> list[TangentPoint]:
    q = g.lift
    return [big_phi(sts2_flow(q, TWO_PI * j / g.c)) for j in range(g.c)]


def slice_points(g: S2S1Geodesic) -> list[TangentPoint]:
    """The ``c`` crossings of ``S^2 x {0}``, cross-checked between two constructions."""
    by_matrix = slice_points_matrix(g)
    by_flow = slice_points_quaternion(g)
    worst = max(a.distance(b) for a, b in zip(by_matrix, by_flow))
    if worst > SLICE_TOL:
        raise SliceMismatchError(f"slice point constructions disagree by {worst:.3g}")
    return by_matrix


# -- skies and the contact structure on ST S^2 ---------------------------------


@dataclass(frozen=True)
class SkyCircleParams:
    """Circle of radius ``tau`` about ``center`` on the round S^2, started along ``frame_a``."""

    center: UnitImag
    tau: float
    frame_a: UnitImag
    frame_b: UnitImag

    def __post_init__(self):
        if not 0.0 < self.tau < math.pi:
            raise ValueError(f"radius must lie in (0, pi), got {self.tau}")
        vecs = (self.center.vec, self.frame_a.vec, self.frame_b.vec)
        for a, b in combinations(vecs, 2):
            if abs(float(a @ b)) > 1e-10:
                raise ValueError("center and frame must be pairwise orthogonal")


def sky_params(pt: TangentPoint, tau: float) -> SkyCircleParams:
    """Sky of the point ``mu(tau)`` on the great circle of ``pt``, parametrized to start at ``pt.base``.

    The centre is ``y = mu(tau)``; ``frame_a`` is the backward unit tangent
    ``-mu'(tau)``, which makes ``s = 0`` land on ``mu(0)``, and ``frame_b`` is
    the normal ``x cross u`` of the great circle.
    """
    x, u = pt.base.vec, pt.dir.vec
    y = x * math.cos(tau) + u * math.sin(tau)
    back = x * math.sin(tau) - u * math.cos(tau)
    return SkyCircleParams(UnitImag.from_vec(y), tau, UnitImag.from_vec(back), UnitImag.from_vec(np.cross(x, u)))


def _sky_w(params: SkyCircleParams, s: float) -> np.ndarray:
    return params.frame_a.vec * math.cos(s) + params.frame_b.vec * math.sin(s)


def sky_circle(params: SkyCircleParams, s: float) -> UnitImag:
    w = _sky_w(params, s)
    return UnitImag.from_vec(params.center.vec * math.cos(params.tau) + w * math.sin(params.tau))


def sky_curve(params: SkyCircleParams, s: float) -> TangentPoint:
    """The null geodesic of the sky at ``s``: base on the circle, heading to the centre."""
    y, tau = params.center.vec, params.tau
    w = _sky_w(params, s)
    return TangentPoint.from_vecs(y * math.cos(tau) + w * math.sin(tau), y * math.sin(tau) - w * math.cos(tau))


def sky_tangent(params: SkyCircleParams, s: float) -> np.ndarray:
    """Derivative of :func:`sky_curve` in R^6."""
    tau = params.tau
    dw = -params.frame_a.vec * math.sin(s) + params.frame_b.vec * math.cos(s)
    return np.concatenate([dw * math.sin(tau), -dw * math.cos(tau)])


def _phi_derivative(q: UnitQuaternion, w: UnitImag) -> np.ndarray:
    """``d/dphi big_phi(exp(w phi / 2) q)`` at 0, which is ``(q^-1 (k x w) q, q^-1 (j x w) q)``."""
    parts = []
    for a in (K, J):
        cross, _ = imag_products(a, w)
        r = q.inverse() * cross * q
        parts.append([r.x, r.y, r.z])
    return np.concatenate(parts)


def contact_plane(pt: TangentPoint) -> tuple[np.ndarray, np.ndarray]:
    """Basis ``(fiber, horizontal)`` of the contact plane at ``pt`` in R^6.

    Both come from the quaternion model: left multiplication by ``exp(-k phi/2)``
    rotates the direction about the base point, and by ``exp(j phi/2)`` moves
    the base point along ``base x dir`` with the direction parallel.
    """
    q = phi_preimage(pt)
    fiber = _phi_derivative(q, -K)
    horizontal = _phi_derivative(q, J)
    return fiber, horizontal


def _plane_residual(plane, v: np.ndarray) -> float:
    Q, _ = np.linalg.qr(np.column_stack(plane))
    return float(np.linalg.norm(v - Q @ (Q.T @ v)))


def _zc_tangent_map(c: int, power: int, v: np.ndarray) -> np.ndarray:
    """The Z_c action is linear on R^6, so it is its own derivative."""
    a = TWO_PI * power / c
    ca, sa = math.cos(a), math.sin(a)
    return np.concatenate([ca * v[:3] + sa * v[3:], -sa * v[:3] + ca * v[3:]])


def sky_tangency_check(c: int, trials: int, seed: int = 0) -> CheckReport:
    """Sky tangents lie in the contact plane, and the plane is Z_c-invariant.

    Each trial draws a lift ``q``, canonicalizes it in its lens orbit, and at
    ``big_phi`` of the representative checks the tangent of the sky of
    ``mu(tau)`` (random ``tau``) and of the fiber sky through the base point.
    For ``c > 1`` it also pushes the plane at ``big_phi(q)`` forward by each
    Z_c element and compares with the plane computed independently at the
    image point.
    """
    rng = np.random.default_rng(seed)
    residuals, points = [], []
    for _ in range(trials):
        q = random_unit_quaternion(rng)
        pt = big_phi(lens_canonicalize(c, q).rep)
        tau = rng.uniform(0.1, math.pi - 0.1)
        plane = contact_plane(pt)
        params = sky_params(pt, tau)
        sky_start = sky_curve(params, 0.0)
        worst = max(
            sky_start.distance(pt),
            _plane_residual(plane, sky_tangent(params, 0.0)),
            # the sky of the base point at time 0 is its fiber circle
            _plane_residual(plane, np.concatenate([np.zeros(3), np.cross(pt.base.vec, pt.dir.vec)])),
        )
        if c > 1:
            base_pt = big_phi(q)
            base_plane = contact_plane(base_pt)
            for k in range(1, 2 * c):
                image_pt = big_phi(lens_act(c, k, q))
                image_plane = contact_plane(image_pt)
                for v in base_plane:
                    worst = max(worst, _plane_residual(image_plane, _zc_tangent_map(c, k, v)))
        residuals.append(worst)
        points.append((*pt.as_array(), tau))
    return report_from(f"sky_tangency[c={c}]", residuals, points, SKY_TOL)


# -- the flat example ----------------------------------------------------------


def mink_p(x: float, y: float, t: float, theta: float) -> tuple[float, float, float]:
    """Quotient by the kernel: the null line through ``(x, y, t)`` meets ``t = 0`` at ``(u, v)``."""
    return x - t * math.cos(theta), y - t * math.sin(theta), theta


def mink_omega(t: float) -> float:
    """``omega`` with ``cos = -t / sqrt(1 + t^2)`` and ``sin = 1 / sqrt(1 + t^2)``."""
    return math.atan2(1.0, -t)


def mink_phi(x: float, y: float, t: float, theta: float) -> tuple[float, float, float, float]:
    u, v, th = mink_p(x, y, t, theta)
    return u, v, th, mink_omega(t)


def mink_line(omega: float, theta: float) -> np.ndarray:
    """``cos(omega) (-sin theta, cos theta, 0) + sin(omega) (0, 0, 1)`` in ``(u, v, theta)``."""
    return np.array([-math.cos(omega) * math.sin(theta), math.cos(omega) * math.cos(theta), math.sin(omega)])


def mink_cone_vector(omega: float, theta: float) -> np.ndarray:
    """``d/domega - cos(theta)/sin^2(omega) d/du - sin(theta)/sin^2(omega) d/dv`` in ``(u, v, omega)``."""
    s = math.sin(omega)
    if not (0.0 < omega < math.pi) or s < MIN_SIN_OMEGA:
        raise ValueError(f"omega = {omega!r} is outside the domain (sin(omega) >= {MIN_SIN_OMEGA})")
    return np.array([-math.cos(theta) / (s * s), -math.sin(theta) / (s * s), 1.0])


def mink_image_metric(omega: float, inverse_power: bool = True) -> np.ndarray:
    """``du^2 + dv^2 - sin(omega)^(-4) domega^2``; ``inverse_power=False`` gives ``sin^4`` instead."""
    s4 = math.sin(omega) ** 4
    return np.diag([1.0, 1.0, -(1.0 / s4 if inverse_power else s4)])


def mink_leaf_projection(u: float, v: float, theta: float, omega: float) -> tuple[float, float, float]:
    """Leaf space map of the image foliation; with ``cot(omega) = -t`` it returns ``(x, y, omega)``."""
    cot = math.cos(omega) / math.sin(omega)
    return u - math.cos(theta) * cot, v - math.sin(theta) * cot, omega


def _fd_jacobian(f, z: np.ndarray, h: float = 1e-6) -> np.ndarray:
    cols = []
    for j in range(len(z)):
        up, down = z.copy(), z.copy()
        up[j] += h
        down[j] -= h
        cols.append((np.asarray(f(*up)) - np.asarray(f(*down))) / (2.0 * h))
    return np.column_stack(cols)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def mink_pushforward_check(samples: int, seed: int = 0) -> CheckReport:
    """``p_* E`` equals ``span{-sin d/du + cos d/dv, d/dtheta}`` and ``p_*`` kills the kernel."""
    rng = np.random.default_rng(seed)
    residuals, points = [], []
    for _ in range(samples):
        z = np.append(rng.uniform(-5, 5, size=3), rng.uniform(0, TWO_PI))
        th = z[3]
        Jp = _fd_jacobian(mink_p, z)
        X = np.array([math.cos(th), math.sin(th), 1.0, 0.0])
        Xdot = np.array([-math.sin(th), math.cos(th), 0.0, 0.0])
        dtheta = np.array([0.0, 0.0, 0.0, 1.0])
        pushed = [Jp @ e for e in (dtheta, Xdot)]
        target = [np.array([-math.sin(th), math.cos(th), 0.0]), np.array([0.0, 0.0, 1.0])]
        worst = float(np.linalg.norm(Jp @ X))
        worst = max(worst, *(_plane_residual(target, _unit(w)) for w in pushed))
        worst = max(worst, *(_plane_residual(pushed, w) for w in target))
        # the fourth coordinate of mink_phi is the angle of p_* d/dtheta in the contact plane
        omega = mink_phi(*z)[3]
        line = mink_line(omega, th)
        worst = max(worst, float(np.linalg.norm(_unit(pushed[0]) - line)))
        residuals.append(worst)
        points.append(z)
    return report_from("mink_pushforward", residuals, points, MINK_SPAN_TOL)


def mink_cone_check(samples: int, seed: int = 0, inverse_power: bool = True) -> CheckReport:
    """The reconstructed cone vectors are null for the image metric."""
    rng = np.random.default_rng(seed)
    lo = math.asin(MIN_SIN_OMEGA)
    residuals, points = [], []
    for _ in range(samples):
        omega, theta = rng.uniform(lo, math.pi - lo), rng.uniform(0, TWO_PI)
        V = mink_cone_vector(omega, theta)
        residuals.append(abs(float(V @ mink_image_metric(omega, inverse_power) @ V)))
        points.append((omega, theta))
    label = "" if inverse_power else ":printed-sin4"
    return report_from(f"mink_cone_null{label}", residuals, points, MINK_NULL_TOL)


def mink_pullback_check(samples: int, seed: int = 0) -> CheckReport:
    """Under ``t = cot(omega)`` the image metric pulls back to ``dx^2 + dy^2 - dt^2``."""
    rng = np.random.default_rng(seed)
    flat = np.diag([1.0, 1.0, -1.0])
    residuals, points = [], []
    for _ in range(samples):
        t = rng.uniform(-5, 5)
        omega = math.atan2(1.0, t)
        # d omega / dt for omega = arccot(t)
        Jac = np.diag([1.0, 1.0, -1.0 / (1.0 + t * t)])
        pulled = Jac.T @ mink_image_metric(omega) @ Jac
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        err = max(abs(a @ pulled @ b - a @ flat @ b), abs(a @ pulled @ a - a @ flat @ a))
        residuals.append(err / (1.0 + float(a @ a + b @ b)))
        points.append((t, omega))
    return report_from("mink_pullback", residuals, points, PULLBACK_TOL)


# -- the S^2 x S^1 deprolongation ----------------------------------------------


def sts2_deprolong_p(q: UnitQuaternion, t: float) -> UnitQuaternion:
    """Flow the ST S^2 point back by ``t`` along its great circle."""
    return sts2_flow(q, -t)


# -- foliation conditions --------------------------------------------------------


def _coefficients(frame, v: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares coefficients of ``v`` in ``frame`` and the relative residual."""
    A = np.column_stack(frame)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return coef, float(np.linalg.norm(A @ coef - v)) / (1.0 + float(np.linalg.norm(v)))


def _min_line_separation(vectors) -> float:
    units = np.array([_unit(v) for v in vectors])
    gram = np.abs(units @ units.T)
    np.fill_diagonal(gram, 0.0)
    # the sine of the angle between two lines
    return float(np.sqrt(max(0.0, 1.0 - gram.max() ** 2)))


def _foliation_reports(name, samples, rows) -> list[CheckReport]:
    det_res, in_d_res, null_res, inj_res, rank_res, points = [], [], [], [], [], []
    for point, det, leaf_res, null, separation, ratio in rows:
        det_res.append(separation_residual(abs(det)))
        in_d_res.append(leaf_res)
        null_res.append(null)
        inj_res.append(separation_residual(separation))
        rank_res.append(separation_residual(ratio))
        points.append(point)
    return [
        report_from(f"foliation_leaf_in_d[{name}]", in_d_res, points, LEAF_IN_D_TOL),
        report_from(f"foliation_transverse[{name}]", det_res, points, -math.log10(FOLIATION_DET_MIN)),
        report_from(f"foliation_cone_null[{name}]", null_res, points, CONE_NULL_TOL),
        report_from(f"foliation_injective[{name}]", inj_res, points, -math.log10(INJECTIVITY_MIN)),
        report_from(f"foliation_submersion[{name}]", rank_res, points, 7.0),
    ]


def _minkowski_rows(samples, rng, tangent_control):
    grid = np.linspace(0.0, TWO_PI, FIBER_GRID, endpoint=False)
    for _ in range(samples):
        x, y, t = rng.uniform(-5, 5, size=3)
        theta = rng.uniform(0, TWO_PI)
        z = np.array(mink_phi(x, y, t, theta))
        omega = z[3]
        # Engel frame of the image: the contact-plane line and d/domega; the kernel is d/domega
        frame = [np.append(mink_line(omega, theta), 0.0), np.array([0.0, 0.0, 0.0, 1.0])]
        kernel = frame[1]
        leaf = _fd_jacobian(mink_phi, np.array([x, y, t, theta]))[:, 3]
        if tangent_control:
            leaf = kernel
        coef_leaf, res_leaf = _coefficients(frame, leaf)
        coef_kernel, _ = _coefficients(frame, kernel)
        det = float(np.linalg.det(np.column_stack([coef_leaf, coef_kernel])))
        Jq = _fd_jacobian(mink_leaf_projection, z)
        sv = np.linalg.svd(Jq, compute_uv=False)
        ratio = float(sv[-1] / sv[0])
        cone, null = [], 0.0
        for th in grid:
            zl = np.array(mink_phi(x, y, t, th))
            V = _fd_jacobian(mink_leaf_projection, zl) @ np.array([0.0, 0.0, 0.0, 1.0])
            Vu = _unit(V)
            null = max(null, abs(float(Vu @ mink_image_metric(zl[3]) @ Vu)))
            cone.append(V)
        yield (x, y, t, theta), det, res_leaf, null, _min_line_separation(cone), ratio


def _s2s1_rows(samples, rng, tangent_control):
    grid = np.linspace(0.0, TWO_PI, FIBER_GRID, endpoint=False)
    h = 1e-6
    for _ in range(samples):
        pt = random_tangent_point(rng)
        t = rng.uniform(0, TWO_PI)
        q = phi_preimage(pt)
        x, u = pt.base.vec, pt.dir.vec
        n = np.cross(x, u)
        # Engel frame on ST S^2 x S^1 in R^7: the kernel u + d/dt and the fiber rotation d/dtheta
        kernel = np.concatenate([u, -x, [1.0]])
        frame = [kernel, np.concatenate([np.zeros(3), n, [0.0]])]

        def leaf_point(phi):
            return np.append(big_phi(quat_exp(K, -phi / 2) * q).as_array(), t)

        leaf = (leaf_point(h) - leaf_point(-h)) / (2 * h)
        if tangent_control:
            flow = lambda s: np.append(big_phi(sts2_flow(q, s)).as_array(), t + s)
            leaf = (flow(h) - flow(-h)) / (2 * h)
        coef_leaf, res_leaf = _coefficients(frame, leaf)
        coef_kernel, _ = _coefficients(frame, kernel)
        det = float(np.linalg.det(np.column_stack([coef_leaf, coef_kernel])))
        # leaf projection (x, u, t) -> (x, t) on a basis of T(ST S^2 x S^1)
        tangent_basis = [kernel, frame[1], np.concatenate([n, np.zeros(4)]), np.append(np.zeros(6), 1.0)]
        images = np.array([np.append(v[:3], v[6]) for v in tangent_basis])
        sv = np.linalg.svd(images, compute_uv=False)
        ratio = float(sv[2] / sv[0])
        cone, null = [], 0.0
        for phi in grid:
            pl = big_phi(quat_exp(K, -phi / 2) * q)
            V = np.append(pl.dir.vec, 1.0)  # image of the kernel direction under the projection
            Vu = _unit(V)
            null = max(null, abs(float(Vu[:3] @ Vu[:3] - Vu[3] ** 2)))
            cone.append(V)
        yield (*pt.as_array(), t), det, res_leaf, null, _min_line_separation(cone), ratio


def foliation_check(example: str, samples: int, seed: int = 0, tangent_control: bool = False) -> list[CheckReport]:
    """Transversality of leaves to the kernel inside D, and the cone built from D along a leaf.

    ``tangent_control`` replaces the leaf direction by the kernel itself,
    which must fail transversality.
    """
    rng = np.random.default_rng(seed)
    if example == "minkowski":
        rows = _minkowski_rows(samples, rng, tangent_control)
    elif example == "s2s1":
        rows = _s2s1_rows(samples, rng, tangent_control)
    else:
        raise ValueError(f"unknown foliation example {example!r}; expected minkowski or s2s1")
    name = example + (":tangent-control" if tangent_control else "")
    return _foliation_reports(name, samples, list(rows))


# -- lens identification -----------------------------------------------------------


def slice_consistency_check(trials: int, seed: int = 0, cs=range(1, 7)) -> CheckReport:
    rng = np.random.default_rng(seed)
    residuals, points = [], []
    for c in cs:
        for _ in range(trials):
            g = S2S1Geodesic(random_tangent_point(rng), c)
            worst = max(a.distance(b) for a, b in zip(slice_points_matrix(g), slice_points_quaternion(g)))
            residuals.append(worst)
            points.append((c, *g.start.as_array()))
    return report_from("slice_consistency", residuals, points, SLICE_TOL)


def lens_bijection_check(c: int, trials: int, seed: int = 0) -> tuple[CheckReport, CheckReport]:
    """Slice points of one geodesic share a lens class; distinct geodesics do not.

    Returns the spread report (largest distance between the canonical
    representatives of one geodesic's slices) and the distinctness report
    (``-log10`` of the smallest distance between classes of different
    geodesics).
    """
    rng = np.random.default_rng(seed)
    classes, spreads, points = [], [], []
    for _ in range(trials):
        g = S2S1Geodesic(random_tangent_point(rng), c)
        reps = [lens_canonicalize(c, phi_preimage(p)) for p in slice_points(g)]
        spreads.append(max(r.distance(reps[0]) for r in reps))
        points.append(g.start.as_array())
        classes.append(reps[0])
    separations = [
        min((classes[i].distance(classes[j]) for j in range(len(classes)) if j != i), default=math.inf)
        for i in range(len(classes))
    ]
    return (
        report_from(f"lens_slices[c={c}]", spreads, points, LENS_SPREAD_TOL),
        report_from(
            f"lens_distinct[c={c}]",
            [separation_residual(s) for s in separations],
            points,
            -math.log10(LENS_DISTINCT_MIN),
        ),
    )
