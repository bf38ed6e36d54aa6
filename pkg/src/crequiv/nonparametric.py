"""Nelson-Aalen estimates of cumulative transition intensities."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import Sample
from .hazards import IntensityFamily, cumulative_intensity


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function with jumps at ``times``.

    ``values[i]`` is the estimate on ``[times[i], times[i+1])``; the function
    is 0 before the first jump.
    """

    times: np.ndarray
    values: np.ndarray
    variances: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        vals = np.where(idx >= 0, self.values[np.maximum(idx, 0)] if self.values.size else 0.0, 0.0)
        return float(vals) if vals.ndim == 0 else vals

    def variance(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        v = np.where(idx >= 0, self.variances[np.maximum(idx, 0)] if self.variances.size else 0.0, 0.0)
        return float(v) if v.ndim == 0 else v


def _at_risk(times: np.ndarray, at: np.ndarray) -> np.ndarray:
    s = np.sort(times)
    return s.size - np.searchsorted(s, at, side="left")


def nelson_aalen(sample: Sample, j: int | None = None) -> StepFunction:
    """Nelson-Aalen estimator of ``A_0j``; ``j=None`` ignores cause labels (all-cause).

    Variance: ``sum d / Y^2`` over jump times.
    """
    if j is None:
        mask = sample.states > 0
    else:
        if not 1 <= j <= sample.k:
            raise ValueError(f"state {j} outside 1..{sample.k}")
        mask = sample.states == j
    ev = sample.times[mask]
    if ev.size == 0:
        empty = np.empty(0)
        return StepFunction(empty, empty, empty)
    jump_t, d = np.unique(ev, return_counts=True)
    y = _at_risk(sample.times, jump_t).astype(float)
    return StepFunction(jump_t, np.cumsum(d / y), np.cumsum(d / y**2))


@dataclass(frozen=True)
class Band:
    lower: np.ndarray
    upper: np.ndarray


def na_confidence(step: StepFunction, level: float = 0.95) -> Band:
    """Pointwise log-transformed intervals ``A * exp(+-z * se / A)`` at the jump times."""
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    z = norm.ppf(0.5 + level / 2)
    a = step.values
    se = np.sqrt(step.variances)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.exp(z * se / a)
    lower = np.where(a > 0, a / f, 0.0)
    upper = np.where(a > 0, a * f, 0.0)
    return Band(lower, upper)


def diagnostic_rows(
    sample: Sample, j: int, level: float = 0.95, parametric: IntensityFamily | None = None
) -> list[dict]:
    """Tidy rows ``(group, j, t, A_hat, lower, upper[, A_param])`` for plotting."""
    step = nelson_aalen(sample, j)
    band = na_confidence(step, level)
    rows = []
    for t, a, lo, hi in zip(step.times, step.values, band.lower, band.upper):
        row = {"group": sample.group, "j": j, "t": float(t), "A_hat": float(a), "lower": float(lo), "upper": float(hi)}
        if parametric is not None:
            row["A_param"] = float(cumulative_intensity(parametric, t))
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return "group,j,t,A_hat,lower,upper\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2)
