import io
import math

import numpy as np
import pytest

from nullcone.lorentz import (
    CSV_HEADER,
    ChartPoint,
    ConePoint,
    NonNullError,
    PastPointingError,
    StepError,
    christoffel,
    cone_embed,
    cone_lift,
    integrate_geodesic,
    null_residual,
)
from nullcone.metricexpr import BUILTIN_NAMES, builtin_metric, eval_expr

MINK = builtin_metric("minkowski3")


def random_point(m, rng, shrink=0.0):
    out = []
    for lo, hi in m.domain:
        pad = shrink * (hi - lo)
        out.append(rng.uniform(lo + pad, hi - pad))
    return ChartPoint(*out)


def fd_christoffel(m, p, h=1e-5):
    """Oracle: the textbook formula with metric derivatives by central differences."""
    def g(q):
        return np.diag([eval_expr(e, q) for e in m.components])

    dg = np.zeros((3, 3, 3))  # dg[l, i, j] = d_l g_ij
    for l in range(3):
        hi, lo = list(p), list(p)
        hi[l] += h
        lo[l] -= h
        dg[l] = (g(hi) - g(lo)) / (2 * h)
    ginv = np.linalg.inv(g(p))
    G = np.zeros((3, 3, 3))
    for k in range(3):
        for i in range(3):
            for j in range(3):
                G[k, i, j] = 0.5 * sum(ginv[k, l] * (dg[i, l, j] + dg[j, l, i] - dg[l, i, j]) for l in range(3))
    return G


def test_christoffel_minkowski_zero():
    assert np.all(christoffel(MINK, (1.0, -2.0, 3.0)) == 0.0)


def test_christoffel_sphere_values():
    m = builtin_metric("s2s1:c=2")
    G = christoffel(m, (math.pi / 4, 0.0, 0.0))
    assert G[0, 1, 1] == pytest.approx(-0.5, abs=1e-15)
    assert G[1, 0, 1] == pytest.approx(1.0, abs=1e-15)
    assert G[1, 1, 0] == G[1, 0, 1]


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_christoffel_matches_oracle_and_symmetry(name):
    m = builtin_metric(name)
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = random_point(m, rng)
        G = christoffel(m, p)
        assert np.allclose(G, fd_christoffel(m, p), atol=1e-6)
        assert np.array_equal(G, G.transpose(0, 2, 1))
        assert G[2, 0, 1] == G[0, 1, 2] == G[1, 0, 2] == 0.0


def test_null_residual_examples():
    assert null_residual(MINK, (0, 0, 0), (1, 0, 1)) == 0.0
    assert null_residual(MINK, (0, 0, 0), (1, 0, 0)) == 1.0
    m = builtin_metric("s2s1:c=2")
    rng = np.random.default_rng(2)
    for _ in range(50):
        x1, th = rng.uniform(0.1, 3.0), rng.uniform(0, 2 * math.pi)
        v = (math.cos(th), math.sin(th) / math.sin(x1), 2.0)
        assert abs(null_residual(m, (x1, 0.0, 0.0), v)) <= 1e-14


def test_cone_lift_examples():
    cp = cone_lift(MINK, (0, 0, 0), (math.cos(0.7), math.sin(0.7), 1))
    assert cp.theta == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(NonNullError):
        cone_lift(MINK, (0, 0, 0), (1, 0, 0))
    with pytest.raises(PastPointingError):
        cone_lift(MINK, (0, 0, 0), (1, 0, -1))
    m = builtin_metric("s2s1:c=3")
    for alpha in (0.1, 2.0, 4.0):
        x1 = 1.1
        cp = cone_lift(m, (x1, 0, 0), (math.cos(alpha), math.sin(alpha) / math.sin(x1), 3))
        assert cp.theta == pytest.approx(alpha, abs=1e-14)


def test_cone_embed_examples():
    assert np.allclose(cone_embed(MINK, ConePoint(ChartPoint(0, 0, 0), 0.0)), (1, 0, 1), atol=0)
    m = builtin_metric("s2s1:c=2")
    v = cone_embed(m, ConePoint(ChartPoint(math.pi / 2, 0, 0), math.pi / 2))
    assert np.allclose(v, (0, 1, 2), atol=1e-15)


def test_theta_normalized():
    assert ConePoint(ChartPoint(0, 0, 0), -0.5).theta == pytest.approx(2 * math.pi - 0.5)
    assert ConePoint(ChartPoint(0, 0, 0), 2 * math.pi).theta == 0.0


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_embed_lift_round_trip(name):
    m = builtin_metric(name)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        cp = ConePoint(random_point(m, rng), rng.uniform(0, 2 * math.pi))
        v = cone_embed(m, cp)
        assert abs(null_residual(m, cp.base, v)) <= 1e-12 * max(1.0, float(v @ v))
        back = cone_lift(m, cp.base, v)
        diff = abs(back.theta - cp.theta)
        assert min(diff, 2 * math.pi - diff) <= 1e-10


def test_minkowski_straight_line():
    th = 0.4
    tr = integrate_geodesic(MINK, (1, 2, 3), (math.cos(th), math.sin(th), 1), 2.0, 0.01)
    s = tr.params
    expected = np.column_stack([1 + s * math.cos(th), 2 + s * math.sin(th), 3 + s])
    assert np.allclose(tr.points, expected, atol=1e-13)
    assert np.allclose(tr.thetas, th, atol=1e-14)
    assert not tr.truncated


@pytest.mark.parametrize("c", [1, 2])
def test_s2s1_equatorial_closes(c):
    m = builtin_metric(f"s2s1:c={c}")
    tr = integrate_geodesic(m, (math.pi / 2, 0, 0), (0, 1, c), 2 * math.pi)
    end = tr.points[-1]
    assert tr.params[-1] == pytest.approx(2 * math.pi, abs=1e-12)
    assert abs(end[0] - math.pi / 2) <= 1e-6
    # both angular coordinates come back modulo 2 pi: x2 after one turn, x3 after c turns
    assert abs(end[1] - 2 * math.pi) <= 1e-6
    assert abs(end[2] - 2 * math.pi * c) <= 1e-6
    assert tr.null_residuals.max() < 1e-8


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_null_conservation(name):
    m = builtin_metric(name)
    rng = np.random.default_rng(4)
    for _ in range(2):
        cp = ConePoint(random_point(m, rng, shrink=0.25), rng.uniform(0, 2 * math.pi))
        tr = integrate_geodesic(m, cp.base, cone_embed(m, cp), 2 * math.pi)
        assert len(tr) > 10
        assert tr.null_residuals.max() < 1e-8


def test_rk4_order():
    m = builtin_metric("s2s1:c=1")
    cp = ConePoint(ChartPoint(math.pi / 2, 0, 0), math.pi / 4)
    v = cone_embed(m, cp)
    exact = np.array([math.pi / 2, 2 * math.pi, 2 * math.pi])
    errs = [np.linalg.norm(integrate_geodesic(m, cp.base, v, 2 * math.pi, h).points[-1] - exact) for h in (0.1, 0.05)]
    assert 12 <= errs[0] / errs[1] <= 20


def test_domain_exit_truncates():
    m = builtin_metric("s2s1:c=2")
    # heading along a meridian towards the excluded pole
    tr = integrate_geodesic(m, (math.pi / 2, 0, 0), (-1, 0, 2), 2 * math.pi)
    assert tr.truncated
    assert tr.points[:, 0].min() >= 0.05
    assert tr.params[-1] < 2 * math.pi


def test_integrate_errors():
    with pytest.raises(NonNullError):
        integrate_geodesic(MINK, (0, 0, 0), (1, 0, 0), 1.0)
    with pytest.raises(PastPointingError):
        integrate_geodesic(MINK, (0, 0, 0), (1, 0, -1), 1.0)
    with pytest.raises(StepError):
        integrate_geodesic(MINK, (0, 0, 0), (1, 0, 1), 1.0, 0.0)
    with pytest.raises(StepError):
        integrate_geodesic(MINK, (0, 0, 0), (1, 0, 1), 1.0, 1e-300)


def test_csv_format():
    tr = integrate_geodesic(MINK, (0, 0, 0), (1, 0, 1), 0.3, 0.1)
    buf = io.StringIO()
    tr.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + len(tr)
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == tr.params[-1] and last[1] == tr.points[-1, 0]
