"""Verification suites behind ``nullcone verify``.

Each suite maps ``(seed, samples)`` to a list of reports.  ``samples``
overrides every per-check sample count when given.  Control runs, which
must fail, are wrapped so that the emitted report passes exactly when the
control is detected.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import engel, worked_examples as wx
from .hopflens import (
    big_phi,
    hopf_section,
    hopf_tau,
    lens_act,
    zc_act_sts2,
)
from .lorentz import ChartPoint, ConePoint, cone_embed, integrate_geodesic
from .metricexpr import builtin_metric
from .quatgeo import UnitQuaternion, conjugate_raw, quat_exp, random_unit_imag, random_unit_quaternion
from .report import CheckReport, report_from, separation_residual

METRICS = ("minkowski3", "s2s1:c=1", "s2s1:c=2", "s2s1:c=3", "s2s1:c=4", "warped-sin4")
SuiteFn = Callable[[int, "int | None"], list]


def control_detected(control: CheckReport, name: str) -> CheckReport:
    """Report that passes when ``control`` fails, by a margin ``max_residual / threshold >= 1``."""
    ratio = control.max_residual / control.threshold if control.threshold else math.inf
    return CheckReport(name, control.samples, separation_residual(ratio), 0.0, control.worst_point)


def _n(samples, default):
    return default if samples is None else samples


# -- hopf -----------------------------------------------------------------------


def hopf_fiber_checks(samples: int, seed: int = 0) -> list[CheckReport]:
    """``tau_w`` lands on unit imaginaries, is constant on fibers, and the section inverts it."""
    rng = np.random.default_rng(seed)
    fiber, section, points = [], [], []
    for _ in range(samples):
        w, q, p = random_unit_imag(rng), random_unit_quaternion(rng), random_unit_imag(rng)
        raw = conjugate_raw(q, w)
        shifted = hopf_tau(w, quat_exp(w, rng.uniform(-10, 10)) * q)
        fiber.append(max(abs(raw.w), abs(raw.norm() - 1.0), shifted.distance(hopf_tau(w, q))))
        section.append(hopf_tau(w, hopf_section(w, p)).distance(p))
        points.append(q.as_array())
    return [
        report_from("hopf_fiber", fiber, points, 1e-12),
        report_from("hopf_section", section, points, 1e-10),
    ]


def phi_cover_checks(samples: int, seed: int = 0) -> list[CheckReport]:
    """``big_phi(q) = big_phi(-q)``, and points with equal images differ only by sign."""
    rng = np.random.default_rng(seed)
    cover, collide, points = [], [], []
    for _ in range(samples):
        q = random_unit_quaternion(rng)
        cover.append(big_phi(q).distance(big_phi(-q)))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        q2 = UnitQuaternion.normalized((q * quat_exp(random_unit_imag(rng), 1e-11 * rng.random())).scale(sign))
        gap = big_phi(q).distance(big_phi(q2))
        collide.append(min(q2.distance(q), q2.distance(-q)) if gap <= 1e-10 else 0.0)
        points.append(q.as_array())
    return [
        report_from("phi_two_to_one", cover, points, 4 * np.finfo(float).eps),
        report_from("phi_near_collision", collide, points, 1e-8),
    ]


def lens_equivariance_check(c: int, samples: int, seed: int = 0) -> CheckReport:
    rng = np.random.default_rng(seed)
    res, points = [], []
    for _ in range(samples):
        q = random_unit_quaternion(rng)
        res.append(big_phi(lens_act(c, 1, q)).distance(zc_act_sts2(c, big_phi(q))))
        points.append(q.as_array())
    return report_from(f"lens_equivariance[c={c}]", res, points, 1e-12)


def hopf_suite(seed: int, samples=None) -> list[CheckReport]:
    reports = hopf_fiber_checks(_n(samples, 1000), seed)
    reports += phi_cover_checks(_n(samples, 1000), seed + 1)
    reports += [lens_equivariance_check(c, _n(samples, 100), seed + 1 + c) for c in range(1, 7)]
    return reports


# -- lens -----------------------------------------------------------------------


def lens_suite(seed: int, samples=None) -> list[CheckReport]:
    n = _n(samples, 100)
    reports = [wx.slice_consistency_check(n, seed)]
    for c in range(1, 5):
        reports.extend(wx.lens_bijection_check(c, n, seed + c))
    return reports


# -- engel ----------------------------------------------------------------------


def engel_suite(seed: int, samples=None) -> list[CheckReport]:
    n = _n(samples, 500)
    reports = []
    for name in METRICS:
        m = builtin_metric(name)
        reports.append(engel.engel_rank_check(m, n, seed))
        reports.extend(engel.kernel_char_check(m, n, seed))
        if name.startswith("s2s1"):
            dropped, _ = engel.kernel_char_check(m, max(1, n // 10), seed, correction=False)
            reports.append(control_detected(dropped, f"kernel_char_control[{name}]:uncorrected"))
        shifted, _ = engel.kernel_char_check(m, max(1, n // 10), seed, perturb=engel.PERTURBATION)
        reports.append(control_detected(shifted, f"kernel_char_control[{name}]:perturbed"))
    return reports


# -- kernel ---------------------------------------------------------------------


def rk4_order_check(h: float = 0.1) -> CheckReport:
    """Endpoint error ratio under step halving on a tilted closed S^2 x S^1 geodesic."""
    m = builtin_metric("s2s1:c=1")
    cp = ConePoint(ChartPoint(math.pi / 2, 0.0, 0.0), math.pi / 4)
    v = cone_embed(m, cp)
    exact = np.array([math.pi / 2, 2 * math.pi, 2 * math.pi])
    errs = [
        float(np.linalg.norm(integrate_geodesic(m, cp.base, v, 2 * math.pi, step).points[-1] - exact))
        for step in (h, h / 2)
    ]
    ratio = errs[0] / errs[1]
    return CheckReport("rk4_order", 2, max(12.0 / ratio, ratio / 20.0), 1.0, (h, ratio))


def null_conservation_check(name: str, seed: int, trials: int) -> CheckReport:
    m = builtin_metric(name)
    rng = np.random.default_rng(seed)
    residuals, points = [], []
    for y in engel.random_cone_points(m, trials, rng, shrink=0.25):
        cp = ConePoint.from_array(y)
        tr = integrate_geodesic(m, cp.base, cone_embed(m, cp), 2 * math.pi)
        residuals.append(float(tr.null_residuals.max()))
        points.append(y)
    return report_from(f"null_conservation[{name}]", residuals, points, 1e-8)


def theta_ode_check(name: str, seed: int) -> CheckReport:
    m = builtin_metric(name)
    rng = np.random.default_rng(seed)
    for y in engel.random_cone_points(m, engel.MAX_REDRAWS, rng, shrink=0.25):
        cp = ConePoint.from_array(y)
        tr = integrate_geodesic(m, cp.base, cone_embed(m, cp), 1.0)
        if not tr.truncated:
            return engel.theta_ode_residual(m, tr)
    return CheckReport(f"theta_ode[{name}]", 0, math.nan, engel.THETA_ODE_TOL)


def kernel_suite(seed: int, samples=None) -> list[CheckReport]:
    trials = _n(samples, 4)
    reports = [rk4_order_check()]
    for name in METRICS:
        m = builtin_metric(name)
        reports.append(engel.spray_equiv_check(m, trials, seed))
        control = engel.spray_equiv_check(m, max(1, trials // 2), seed, perturb=engel.PERTURBATION)
        reports.append(control_detected(control, f"spray_control[{name}]:perturbed"))
        reports.append(theta_ode_check(name, seed))
        reports.append(null_conservation_check(name, seed, max(1, trials // 4)))
    return reports


# -- contact ----------------------------------------------------------------------


def contact_suite(seed: int, samples=None) -> list[CheckReport]:
    reports = [wx.sky_tangency_check(c, _n(samples, 200), seed + c) for c in range(1, 5)]
    n = _n(samples, 100)
    reports.append(wx.mink_pushforward_check(n, seed))
    reports.append(wx.mink_cone_check(n, seed))
    reports.append(wx.mink_pullback_check(n, seed))
    printed = wx.mink_cone_check(n, seed, inverse_power=False)
    reports.append(control_detected(printed, "mink_cone_control:printed-sin4"))
    return reports


# -- examples ---------------------------------------------------------------------


def examples_suite(seed: int, samples=None) -> list[CheckReport]:
    n = _n(samples, 200)
    reports = []
    for example in ("minkowski", "s2s1"):
        reports.extend(wx.foliation_check(example, n, seed))
        control = wx.foliation_check(example, max(1, n // 10), seed, tangent_control=True)
        transverse = next(r for r in control if r.check.startswith("foliation_transverse"))
        reports.append(control_detected(transverse, f"foliation_control[{example}]:tangent-leaf"))
    return reports


SUITES: dict[str, SuiteFn] = {
    "hopf": hopf_suite,
    "lens": lens_suite,
    "engel": engel_suite,
    "kernel": kernel_suite,
    "contact": contact_suite,
    "examples": examples_suite,
}


def run_suites(names, seed: int, samples=None) -> list[CheckReport]:
    reports = []
    for name in names:
        reports.extend(SUITES[name](seed, samples))
    return sorted(reports, key=lambda r: r.check)
