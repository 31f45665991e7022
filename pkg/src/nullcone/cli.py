"""``nullcone`` command line: verification suites, curve export, lens orbits and plots."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import Sequence

import numpy as np

from .engel import kernel_flow
from .hopflens import big_phi, lens_canonicalize, lens_orbit, phi_preimage, zc_act_sts2
from .lorentz import DEFAULT_STEP, ChartPoint, ConePoint, LorentzError, Trajectory, cone_embed, integrate_geodesic
from .metricexpr import DiagonalMetric, metric_from_source
from .quatgeo import QuaternionError, random_tangent_point
from .suites import run_suites
from .worked_examples import S2S1Geodesic, s2s1_eval, slice_points

log = logging.getLogger("nullcone")

TWO_PI = 2.0 * math.pi
SUITE_ORDER = ("hopf", "lens", "engel", "kernel", "contact", "examples")
LOG_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}


class UsageError(ValueError):
    """Bad command-line input; reported on stderr with exit code 2."""


def _configure_logging() -> None:
    level = os.environ.get("NULLCONE_LOG", "").strip().lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(level, logging.WARNING),
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _parse_start(text: str) -> ChartPoint:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--start expects x1,x2,x3, got {text!r}")
    try:
        return ChartPoint(*(float(p) for p in parts))
    except ValueError:
        raise UsageError(f"--start has a non-numeric component: {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nullcone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run check suites and print a JSON array of reports")
    verify.add_argument("suite", nargs="?", default="all", choices=("all", *SUITE_ORDER))
    verify.add_argument("--seed", type=int, default=0, help="fixes all sampling")
    verify.add_argument("--samples", type=_positive_int, help="override every per-check sample count")
    verify.add_argument("--threshold", type=float, help="override every check threshold")
    verify.add_argument("--out", help="also write the JSON reports to this file")

    for name, what in (("geodesic", "a null geodesic"), ("kernelflow", "an integral curve of the kernel field Z")):
        p = sub.add_parser(name, help=f"integrate {what} and export it")
        p.add_argument("--metric", default="minkowski3", help="built-in name, JSON file or inline JSON")
        p.add_argument("--start", help="x1,x2,x3 (default: centre of the metric domain)")
        p.add_argument("--theta", type=float, default=0.0, help="cone angle of the initial direction")
        p.add_argument("--T", type=float, default=TWO_PI, help="parameter length")
        p.add_argument("--step", type=float, default=DEFAULT_STEP)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="output file (default: stdout)")

    orbit = sub.add_parser("orbit", help="print the Z_c orbit on ST S^2 and the Z_2c orbit on S^3")
    orbit.add_argument("--c", type=_positive_int, required=True)
    orbit.add_argument("--seed", type=int, default=0)
    orbit.add_argument("--format", choices=("text", "json"), default="text")
    orbit.add_argument("--out")

    plot = sub.add_parser("plot", help="draw figures as SVG")
    plot.add_argument("figure", choices=("figure1",))
    plot.add_argument("--c", type=_positive_int, default=4)
    plot.add_argument("--seed", type=int, default=0)
    plot.add_argument("--format", choices=("svg",), default="svg")
    plot.add_argument("--out")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


# -- verify -------------------------------------------------------------------------


def cmd_verify(args) -> int:
    names = SUITE_ORDER if args.suite == "all" else (args.suite,)
    reports = run_suites(names, args.seed, args.samples)
    if args.threshold is not None:
        reports = [r.with_threshold(args.threshold) for r in reports]
    for r in reports:
        log.debug("%s: %s (%.3g <= %.3g)", r.check, "pass" if r.passed else "FAIL", r.max_residual, r.threshold)
    failed = [r.check for r in reports if not r.passed]
    text = json.dumps([r.to_json() for r in reports], indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        _emit(text, args.out)
    if failed:
        log.warning("%d of %d checks failed: %s", len(failed), len(reports), ", ".join(failed))
        return 1
    log.info("all %d checks passed", len(reports))
    return 0


# -- geodesic / kernelflow ------------------------------------------------------------


def _start_point(m: DiagonalMetric, start: str | None) -> ChartPoint:
    if start is None:
        return ChartPoint(*((lo + hi) / 2 for lo, hi in m.domain))
    p = _parse_start(start)
    if not m.contains(p):
        raise UsageError(f"start point {tuple(p)} is outside the domain of {m.name}")
    return p


def _trajectory_json(m: DiagonalMetric, tr: Trajectory, kind: str) -> str:
    doc = {
        "curve": kind,
        "metric": m.to_json(),
        "truncated": bool(tr.truncated),
        "columns": ["s", "x1", "x2", "x3", "theta", "null_residual"],
        "rows": [[float(v) for v in row] for row in tr.rows()],
    }
    return json.dumps(doc, indent=1) + "\n"


def cmd_curve(args) -> int:
    m = metric_from_source(args.metric)
    cp = ConePoint(_start_point(m, args.start), args.theta)
    if args.command == "geodesic":
        tr = integrate_geodesic(m, cp.base, cone_embed(m, cp), args.T, args.step)
    else:
        tr = kernel_flow(m, cp, args.T, args.step)
    if tr.truncated:
        log.warning("curve left the domain of %s at s = %.6g; output is truncated", m.name, tr.params[-1])
    if args.format == "json":
        _emit(_trajectory_json(m, tr, args.command), args.out)
    elif args.out:
        tr.write_csv(args.out)
    else:
        tr.write_csv(sys.stdout)
    return 0


# -- orbit ------------------------------------------------------------------------------


def _fmt(values) -> str:
    return " ".join(f"{v:+.6f}" for v in values)


def orbit_tables(c: int, seed: int) -> dict:
    pt = random_tangent_point(np.random.default_rng(seed))
    q = phi_preimage(pt)
    zc = [zc_act_sts2(c, pt, power=j) for j in range(c)]
    z2c = lens_orbit(c, q)
    return {
        "c": c,
        "seed": seed,
        "zc_orbit": [{"j": j, "base": p.base.vec.tolist(), "dir": p.dir.vec.tolist()} for j, p in enumerate(zc)],
        "z2c_orbit": [
            {"k": k, "quaternion": r.as_array().tolist(), "image_index": _nearest(big_phi(r), zc)}
            for k, r in enumerate(z2c)
        ],
        "class_rep": lens_canonicalize(c, q).rep.as_array().tolist(),
    }


def _nearest(pt, candidates) -> int:
    return int(np.argmin([pt.distance(p) for p in candidates]))


def cmd_orbit(args) -> int:
    tables = orbit_tables(args.c, args.seed)
    if args.format == "json":
        _emit(json.dumps(tables, indent=2) + "\n", args.out)
        return 0
    lines = [f"Z_{args.c} orbit on ST S^2 (base | dir)"]
    for row in tables["zc_orbit"]:
        lines.append(f"  j={row['j']:<3d} {_fmt(row['base'])} | {_fmt(row['dir'])}")
    lines.append(f"Z_{2 * args.c} orbit on S^3 (w x y z -> Z_{args.c} index)")
    for row in tables["z2c_orbit"]:
        lines.append(f"  k={row['k']:<3d} {_fmt(row['quaternion'])} -> j={row['image_index']}")
    lines.append(f"lens class representative: {_fmt(tables['class_rep'])}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# -- plot -------------------------------------------------------------------------------

SVG_SIZE = 480
INNER_R = 90.0
OUTER_R = 210.0


def _polar(angle: float, t: float) -> tuple[float, float]:
    r = INNER_R + (OUTER_R - INNER_R) * t / TWO_PI
    centre = SVG_SIZE / 2
    return centre + r * math.cos(angle), centre - r * math.sin(angle)


def figure1_svg(c: int, seed: int = 0, samples_per_turn: int = 240) -> str:
    """A null geodesic of S^2 x S^1 in the plane of its great circle.

    The polar angle is the position along the great circle and the radius
    is the S^1 coordinate, with the inner circle at ``t = 0``.  The curve
    is drawn one S^1 turn per polyline; the ``c`` slice points sit on the
    inner circle.
    """
    g = S2S1Geodesic(random_tangent_point(np.random.default_rng(seed)), c)
    x0, u0 = g.start.base.vec, g.start.dir.vec

    def angle_of(v):
        return math.atan2(float(v @ u0), float(v @ x0))

    centre = SVG_SIZE / 2
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f"<title>Null geodesic of S2 x S1 with c = {c}</title>",
        f'<rect width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>',
    ]
    for i in range(5):
        r = INNER_R + (OUTER_R - INNER_R) * i / 4
        style = 'fill="#dddddd" stroke="#888888"' if i == 0 else 'fill="none" stroke="#cccccc" stroke-dasharray="4 3"'
        out.append(f'<circle class="grid" cx="{centre:.1f}" cy="{centre:.1f}" r="{r:.2f}" {style}/>')
    for j in range(c):
        s = np.linspace(TWO_PI * j / c, TWO_PI * (j + 1) / c, samples_per_turn + 1)
        pts = []
        for k, sk in enumerate(s):
            base, t = s2s1_eval(g, float(sk))
            # the last sample of each turn sits at t = 2 pi, not back at 0
            t = TWO_PI if k == len(s) - 1 and t < math.pi else t
            pts.append("{:.2f},{:.2f}".format(*_polar(angle_of(base.vec), t)))
        out.append(f'<polyline class="geodesic" fill="none" stroke="#c0392b" stroke-width="1.5" points="{" ".join(pts)}"/>')
    for j, p in enumerate(slice_points(g)):
        cx, cy = _polar(angle_of(p.base.vec), 0.0)
        out.append(f'<circle class="slice-point" data-index="{j}" cx="{cx:.2f}" cy="{cy:.2f}" r="5" fill="#1f4e79"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args) -> int:
    _emit(figure1_svg(args.c, args.seed), args.out)
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "geodesic": cmd_curve,
    "kernelflow": cmd_curve,
    "orbit": cmd_orbit,
    "plot": cmd_plot,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, LorentzError, QuaternionError, OSError, ValueError) as exc:
        print(f"nullcone: error: {exc}", file=sys.stderr)
        return 2


def main() -> int:
    return run_cli(sys.argv[1:])
