"""Parametric cause-specific intensity families.

Three families are supported, all parameterised in days:

* ``exponential``: ``alpha(t) = rate``
* ``gompertz``: ``alpha(t) = scale * exp(shape * t)`` (shape may be negative)
* ``weibull``: ``alpha(t) = (shape / scale) * (t / scale) ** (shape - 1)``

Every function here is vectorised over ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

FAMILIES = ("exponential", "gompertz", "weibull")
N_PARAMS = {"exponential": 1, "gompertz": 2, "weibull": 2}

# Weibull with shape < 1 has an infinite intensity at t = 0.
SINGULAR_CAP = 1e12
GOMPERTZ_SERIES_EPS = 1e-10

_ALIASES = {
    "exp": "exponential",
    "exponential": "exponential",
    "gompertz": "gompertz",
    "gomp": "gompertz",
    "weibull": "weibull",
    "weib": "weibull",
}


class ParameterDomainError(ValueError):
    """Raised when family parameters violate their domain."""


def canonical_family(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown intensity family {name!r}") from None


@dataclass(frozen=True)
class IntensityFamily:
    """One parametric transition intensity.

    ``params`` is ``(rate,)`` for the exponential family and
    ``(scale, shape)`` for Gompertz and Weibull.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        fam = canonical_family(self.family)
        object.__setattr__(self, "family", fam)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != N_PARAMS[fam]:
            raise ParameterDomainError(
                f"{fam} takes {N_PARAMS[fam]} parameter(s), got {len(params)}"
            )
        if not all(np.isfinite(params)):
            raise ParameterDomainError(f"non-finite {fam} parameters {params}")
        if params[0] <= 0:
            raise ParameterDomainError(f"{fam} rate/scale must be positive, got {params[0]}")
        if fam == "weibull" and params[1] <= 0:
            raise ParameterDomainError(f"weibull shape must be positive, got {params[1]}")

    @property
    def singular_at_zero(self) -> bool:
        return self.family == "weibull" and self.params[1] < 1

    def intensity(self, t):
        return intensity(self, t)

    def cumulative(self, t):
        return cumulative_intensity(self, t)

    def __str__(self):
        return f"{self.family}({', '.join(f'{p:.6g}' for p in self.params)})"


def exponential(rate: float) -> IntensityFamily:
    return IntensityFamily("exponential", (rate,))


def gompertz(scale: float, shape: float) -> IntensityFamily:
    return IntensityFamily("gompertz", (scale, shape))


def weibull(scale: float, shape: float) -> IntensityFamily:
    return IntensityFamily("weibull", (scale, shape))


def weibull_from_log_shape(log_shape: float, scale: float) -> IntensityFamily:
    """Build a Weibull from a ``(log shape, scale)`` pair.

    This is the layout of the application estimates, whose first
    Weibull entry can be negative (e.g. ``-0.112, 1304.5``).
    """
    return weibull(scale, float(np.exp(log_shape)))


def intensity(spec: IntensityFamily, t):
    t = np.asarray(t, dtype=float)
    fam, p = spec.family, spec.params
    if fam == "exponential":
        out = np.full_like(t, p[0])
    elif fam == "gompertz":
        out = p[0] * np.exp(p[1] * t)
    else:
        scale, shape = p
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (shape / scale) * np.power(t / scale, shape - 1.0)
        out = np.where(t <= 0, _weibull_at_zero(scale, shape), out)
    return out if out.ndim else float(out)


def _weibull_at_zero(scale: float, shape: float) -> float:
    if shape < 1:
        return SINGULAR_CAP
    if shape == 1:
        return 1.0 / scale
    return 0.0


def cumulative_intensity(spec: IntensityFamily, t):
    t = np.asarray(t, dtype=float)
    fam, p = spec.family, spec.params
    if fam == "exponential":
        out = p[0] * t
    elif fam == "gompertz":
        scale, shape = p
        if abs(shape) < GOMPERTZ_SERIES_EPS:
            out = scale * t * (1.0 + 0.5 * shape * t)
        else:
            out = scale / shape * np.expm1(shape * t)
    else:
        scale, shape = p
        out = np.power(np.maximum(t, 0.0) / scale, shape)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CompetingRisksModel:
    """k cause-specific intensities out of the initial state, observed on [0, horizon]."""

    transitions: tuple[IntensityFamily, ...]
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if len(self.transitions) < 1:
            raise ValueError("a competing risks model needs at least one transition")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    @property
    def k(self) -> int:
        return len(self.transitions)

    @property
    def families(self) -> tuple[str, ...]:
        return tuple(tr.family for tr in self.transitions)

    def all_cause_cumulative(self, t):
        return sum(cumulative_intensity(tr, t) for tr in self.transitions)

    def all_cause_intensity(self, t):
        return sum(intensity(tr, t) for tr in self.transitions)

    def replace(self, j: int, spec: IntensityFamily) -> "CompetingRisksModel":
        """Return a copy with transition ``j`` (0-based) swapped for ``spec``."""
        trs = list(self.transitions)
        trs[j] = spec
        return CompetingRisksModel(tuple(trs), self.horizon)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "transitions": [
                {"state": j + 1, "family": tr.family, "params": list(tr.params)}
                for j, tr in enumerate(self.transitions)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CompetingRisksModel":
        trs = [IntensityFamily(tr["family"], tuple(tr["params"])) for tr in d["transitions"]]
        return cls(tuple(trs), float(d["horizon"]))


def survival(model: CompetingRisksModel, t):
    """All-cause survival ``exp(-sum_j A_j(t))``."""
    out = np.exp(-np.asarray(model.all_cause_cumulative(t), dtype=float))
    return out if out.ndim else float(out)


BEYOND_HORIZON = np.inf


def invert_all_cause(model: CompetingRisksModel, target, cap=None, tol: float = 1e-9):
    """Smallest ``t`` with ``A(t) >= target`` where ``A`` is the all-cause cumulative.

    Values not reached before ``cap`` (default ``10 * horizon``) come back as
    ``BEYOND_HORIZON``. ``cap`` may be an array, one window end per target.
    """
    target = np.asarray(target, dtype=float)
    if np.any(target < 0) or np.any(np.isnan(target)):
        raise ValueError("inversion targets must be nonnegative")
    cap = np.broadcast_to(
        np.asarray(10.0 * model.horizon if cap is None else cap, dtype=float), target.shape
    )
    reached = np.asarray(model.all_cause_cumulative(cap)) >= target
    out = np.full(target.shape, BEYOND_HORIZON)

    if all(tr.family == "exponential" for tr in model.transitions):
        total = sum(tr.params[0] for tr in model.transitions)
        out = np.where(reached, target / total, out)
        return out if out.ndim else float(out)

    lo = np.zeros(target.shape)
    hi = np.where(reached, cap, 0.0)
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        above = np.asarray(model.all_cause_cumulative(mid)) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    # safeguarded Newton steps inside the bracket sharpen A(t) to rounding level
    t = hi.copy()
    for _ in range(3):
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.asarray(model.all_cause_cumulative(t))
            above = a >= target
            hi = np.where(above, t, hi)
            lo = np.where(above, lo, t)
            step = (a - target) / np.asarray(model.all_cause_intensity(t))
        t = np.where(np.isfinite(step), np.clip(t - step, lo, hi), t)
    out = np.where(reached, t, out)
    if np.any(np.diff(model.all_cause_cumulative(np.linspace(0, np.max(cap, initial=0), 64))) < -1e-12):
        raise RuntimeError("all-cause cumulative intensity is not monotone")
    return out if out.ndim else float(out)


# --- unconstrained parameterisation shared by the optimisers ---------------

FAMILY_CODE = {"exponential": 0, "gompertz": 1, "weibull": 2}


def to_unconstrained(spec: IntensityFamily, t_ref: float) -> np.ndarray:
    """Map parameters to the optimiser's space.

    Rates, scales and the Weibull shape are log-transformed; the Gompertz
    shape is kept on its natural scale but multiplied by ``t_ref`` so both
    coordinates are O(1).
    """
    p = spec.params
    if spec.family == "exponential":
        return np.array([np.log(p[0])])
    if spec.family == "gompertz":
        return np.array([np.log(p[0]), p[1] * t_ref])
    return np.array([np.log(p[0]), np.log(p[1])])


def from_unconstrained(family: str, x: Sequence[float], t_ref: float) -> IntensityFamily:
    family = canonical_family(family)
    if family == "exponential":
        return exponential(float(np.exp(x[0])))
    if family == "gompertz":
        return gompertz(float(np.exp(x[0])), float(x[1]) / t_ref)
    return weibull(float(np.exp(x[0])), float(np.exp(x[1])))


def exponential_equivalent(family: str, rate: float, t_ref: float) -> np.ndarray:
    """Starting point in optimiser space matching a constant intensity ``rate``."""
    family = canonical_family(family)
    if family == "exponential":
        return np.array([np.log(rate)])
    if family == "gompertz":
        return np.array([np.log(rate), 0.0])
    return np.array([-np.log(rate), 0.0])


def shift_intensity(family: str, x: np.ndarray, c: float) -> np.ndarray:
    """Move ``x`` so that the intensity is multiplied by ``exp(c)`` at every t."""
    x = np.array(x, dtype=float)
    if canonical_family(family) == "weibull":
        x[0] -= c / np.exp(x[1])
    else:
        x[0] += c
    return x


def inverse_cumulative(spec: IntensityFamily, target):
    """Closed-form ``A^{-1}(target)`` for a single family; ``inf`` where never reached."""
    target = np.asarray(target, dtype=float)
    fam, p = spec.family, spec.params
    if fam == "exponential":
        out = target / p[0]
    elif fam == "gompertz":
        scale, shape = p
        if abs(shape) < GOMPERTZ_SERIES_EPS:
            out = target / scale
        else:
            arg = shape * target / scale
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.where(arg > -1.0, np.log1p(np.maximum(arg, -1.0)) / shape, np.inf)
    else:
        scale, shape = p
        out = scale * np.power(target, 1.0 / shape)
    return out if out.ndim else float(out)
