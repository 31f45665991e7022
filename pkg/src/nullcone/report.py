"""Named verification outcomes shared by every check suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a sampled check; it passes exactly when ``max_residual <= threshold``.

    Checks that certify a separation (a rank, an angle, a determinant) report
    ``-log10`` of the smallest observed value against ``-log10`` of the bound,
    so the same comparison applies.
    """

    check: str
    samples: int
    max_residual: float
    threshold: float
    worst_point: tuple[float, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return bool(not math.isnan(self.max_residual) and self.max_residual <= self.threshold)

    def with_threshold(self, threshold: float) -> "CheckReport":
        return replace(self, threshold=threshold)

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "samples": self.samples,
            "max_residual": _json_float(self.max_residual),
            "threshold": _json_float(self.threshold),
            "pass": self.passed,
            "worst_point": [_json_float(v) for v in self.worst_point],
        }


def _json_float(v: float):
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def report_from(
    check: str,
    residuals: Sequence[float],
    points: Sequence[Iterable[float]],
    threshold: float,
) -> CheckReport:
    """Reduce per-sample residuals to a report, keeping the worst sample's point."""
    if len(residuals) == 0:
        return CheckReport(check, 0, math.nan, threshold)
    worst = 0
    for i, r in enumerate(residuals):
        if math.isnan(r) or (not math.isnan(residuals[worst]) and r > residuals[worst]):
            worst = i
            if math.isnan(r):
                break
    point = tuple(float(v) for v in points[worst])
    return CheckReport(check, len(residuals), float(residuals[worst]), threshold, point)


def separation_residual(value: float) -> float:
    """``-log10`` of a quantity that must stay large; zero or NaN maps to +inf."""
    if not value > 0.0:
        return math.inf
    return -math.log10(value)
