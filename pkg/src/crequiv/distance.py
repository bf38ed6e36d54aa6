"""Sup-norm distances between paired transition intensities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hazards import CompetingRisksModel, IntensityFamily, intensity

GRID_POINTS = 2001
# Left end of the search window in days. Times are recorded in days, so the
# data carry no information about intensities inside the first day, where a
# fitted Weibull shape below 1 diverges.
T_MIN = 1.0
GOLDEN_TOL = 1e-10
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SupNorm:
    value: float
    argmax_t: float
    boundary_singularity: bool = False


@dataclass(frozen=True)
class DistanceResult:
    per_transition: tuple[SupNorm, ...]
    d_hat: float
    argmax_j: int  # 1-based
    argmax_t: float
    grid_points: int

    def to_list(self) -> list[dict]:
        return [
            {"j": j, "d_j": s.value, "argmax_t": s.argmax_t}
            for j, s in enumerate(self.per_transition, start=1)
        ]


def _abs_diff(a: IntensityFamily, b: IntensityFamily, t):
    return np.abs(np.asarray(intensity(a, t)) - np.asarray(intensity(b, t)))


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    t = 0.5 * (lo + hi)
    return t, f(t)


def sup_norm_diff(
    a: IntensityFamily,
    b: IntensityFamily,
    tau: float,
    grid: int = GRID_POINTS,
    t_min: float = T_MIN,
    refine: bool = True,
) -> SupNorm:
    """``sup_{t in [t_min, tau]} |alpha_a(t) - alpha_b(t)|`` and a maximising t.

    Dense grid search followed by golden-section refinement around the best
    grid point. Ties resolve to the smallest t.
    """
    if not 0 <= t_min < tau:
        raise ValueError(f"need 0 <= t_min < tau, got t_min={t_min}, tau={tau}")
    singular = a.singular_at_zero or b.singular_at_zero
    if a.family == "exponential" and b.family == "exponential":
        return SupNorm(abs(a.params[0] - b.params[0]), t_min, False)
    ts = np.linspace(t_min, tau, grid)
    vals = _abs_diff(a, b, ts)
    i = int(np.argmax(vals))
    best_t, best_v = float(ts[i]), float(vals[i])
    if refine and grid > 1:
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
        t, v = _golden_max(lambda s: float(_abs_diff(a, b, s)), float(lo), float(hi), GOLDEN_TOL)
        if v > best_v:
            best_t, best_v = t, v
    return SupNorm(float(best_v), float(best_t), singular)


def global_distance(
    m1: CompetingRisksModel,
    m2: CompetingRisksModel,
    grid: int = GRID_POINTS,
    t_min: float = T_MIN,
) -> DistanceResult:
    """Maximum over transitions of the sup-norm intensity differences."""
    if m1.k != m2.k:
        raise ValueError(f"models have different numbers of transitions ({m1.k} vs {m2.k})")
    if m1.horizon != m2.horizon:
        raise ValueError(f"models have different horizons ({m1.horizon} vs {m2.horizon})")
    per = tuple(sup_norm_diff(a, b, m1.horizon, grid, t_min) for a, b in zip(m1.transitions, m2.transitions))
    j = int(np.argmax([s.value for s in per]))
    return DistanceResult(per, per[j].value, j + 1, per[j].argmax_t, grid)
