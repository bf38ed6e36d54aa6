"""Log-likelihoods and unconstrained maximum likelihood fits.

The all-cause survival factorises over causes, so the log-likelihood of a
sample is a sum of independent per-transition blocks::

    logL = sum_j [ sum_{events of j} log alpha_j(t_i) - sum_i A_j(t_i) ]

and each block is maximised on its own.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .data import CensoringModel, Parametric, Sample
from .hazards import (
    FAMILY_CODE,
    CompetingRisksModel,
    IntensityFamily,
    canonical_family,
    exponential,
    exponential_equivalent,
    from_unconstrained,
    gompertz,
    intensity,
    to_unconstrained,
    weibull,
)

EPS_FLOOR = 1e-10
XATOL = 1e-8
N_RESTARTS = 5
AGREE_TOL = 1e-9


def log_likelihood(sample: Sample, model: CompetingRisksModel) -> float:
    """Log-likelihood of a sample under a competing risks model, censoring terms excluded."""
    if model.k != sample.k:
        raise ValueError(f"model has {model.k} transitions, sample has k={sample.k}")
    t = sample.times
    total = -float(np.sum(model.all_cause_cumulative(t)))
    for j, tr in enumerate(model.transitions, start=1):
        ev = sample.events(j)
        if ev.size:
            a = np.asarray(intensity(tr, ev))
            if np.any(a <= 0):
                return -np.inf
            total += float(np.sum(np.log(a)))
    return total


def log_likelihood_censored(sample: Sample, model: CompetingRisksModel, censoring: Parametric) -> float:
    """Adds the censoring-density term ``sum_{censored} log g(t_i)``."""
    if not isinstance(censoring, Parametric) or censoring.hazard is None:
        raise ValueError("a fitted parametric censoring law is required")
    base = log_likelihood(sample, model)
    tc = sample.times[sample.states == 0]
    if tc.size == 0:
        return base
    lg = censoring.log_density(tc)
    if np.any(~np.isfinite(lg)):
        return -np.inf
    return base + float(np.sum(lg))


# --- per-transition blocks -------------------------------------------------


@dataclass(frozen=True)
class Block:
    """Sufficient data for fitting one cause-specific intensity.

    Tied observation times are collapsed into ``(t_all, w)`` pairs; under
    administrative censoring most records share the horizon.
    """

    t_all: np.ndarray
    log_t_all: np.ndarray
    w: np.ndarray
    d: int
    sum_ev: float
    sum_log_ev: float
    t_ref: float

    @classmethod
    def from_arrays(cls, times: np.ndarray, event_mask: np.ndarray) -> "Block":
        times = np.asarray(times, dtype=float)
        ev = times[event_mask]
        uniq, counts = np.unique(times, return_counts=True)
        return cls(
            uniq, np.log(uniq), counts.astype(float), int(ev.size),
            float(ev.sum()), float(np.log(ev).sum()), float(uniq[-1]),
        )

    @classmethod
    def for_transition(cls, sample: Sample, j: int) -> "Block":
        return cls.from_arrays(sample.times, sample.states == j)

    @property
    def exposure(self) -> float:
        return float(np.dot(self.w, self.t_all))

    def neg_loglik(self, family: str, x) -> float:
        return _kernels.neg_loglik(
            FAMILY_CODE[family], np.asarray(x, dtype=float), self.t_all, self.log_t_all, self.w,
            float(self.d), self.sum_ev, self.sum_log_ev, self.t_ref,
        )

    def loglik(self, spec: IntensityFamily) -> float:
        return -self.neg_loglik(spec.family, to_unconstrained(spec, self.t_ref))


@dataclass(frozen=True)
class BlockFit:
    spec: IntensityFamily
    loglik: float
    converged: bool
    iterations: int
    restarts_used: int
    degenerate: bool


def _initial_step(family: str) -> np.ndarray:
    if family == "exponential":
        return np.array([0.5])
    return np.array([0.5, 0.5])


def _degenerate_profile(family: str) -> IntensityFamily:
    if family == "exponential":
        return exponential(EPS_FLOOR)
    if family == "gompertz":
        return gompertz(EPS_FLOOR, 0.0)
    return weibull(1.0 / EPS_FLOOR, 1.0)


def fit_block(
    block: Block,
    family: str,
    restarts: int = N_RESTARTS,
    start: IntensityFamily | None = None,
    seed: int = 0,
    maxiter: int = 5000,
) -> BlockFit:
    """Maximise one transition block by multi-start Nelder-Mead.

    The first run starts at the constant intensity matching the
    occurrence/exposure rate (plus ``start`` if given). Up to ``restarts``
    further runs start from random perturbations of that point; the search
    stops early once a restart reproduces the best optimum.
    """
    family = canonical_family(family)
    if block.d == 0:
        spec = _degenerate_profile(family)
        return BlockFit(spec, block.loglik(spec), True, 0, 0, True)

    code = FAMILY_CODE[family]
    x0 = exponential_equivalent(family, block.d / block.exposure, block.t_ref)
    step = _initial_step(family)
    starts = [x0]
    if start is not None:
        starts.append(to_unconstrained(start, block.t_ref))
    rng = np.random.default_rng(seed)

    def run(x):
        return _kernels.nelder_mead(
            code, np.asarray(x, dtype=float), step, block.t_all, block.log_t_all, block.w,
            float(block.d), block.sum_ev, block.sum_log_ev, block.t_ref, XATOL, maxiter,
        )

    best = None
    iterations = 0
    agreements = 0
    used = 0
    for i in range(len(starts) + restarts):
        if i < len(starts):
            x = starts[i]
        else:
            x = x0 + rng.normal(0.0, 1.0, size=x0.size) * step
            used += 1
        xb, fb, nit, conv = run(x)
        iterations += nit
        if best is not None and conv and abs(fb - best[1]) <= AGREE_TOL * (1.0 + abs(best[1])):
            agreements += 1
        if best is None or fb < best[1] or (fb == best[1] and conv and not best[2]):
            best = (xb, fb, conv)
        if agreements >= 1 and i + 1 >= len(starts):
            break
    xb, fb, conv = best
    spec = from_unconstrained(family, xb, block.t_ref)
    return BlockFit(spec, -fb, bool(conv) and fb < _kernels.BIG, iterations, used, False)


# --- model fits ------------------------------------------------------------


@dataclass
class FitResult:
    model: CompetingRisksModel
    logL: float
    converged: bool
    iterations: int
    restarts_used: int
    censoring: Parametric | None = None
    degenerate_states: tuple[int, ...] = ()
    block_logliks: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        out = {
            "model": self.model.to_dict(),
            "logL": self.logL,
            "converged": self.converged,
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "degenerate_states": list(self.degenerate_states),
            "censoring": None,
        }
        if self.censoring is not None and self.censoring.hazard is not None:
            out["censoring"] = {
                "family": self.censoring.hazard.family,
                "params": list(self.censoring.hazard.params),
            }
        return out


def fit_mle(
    sample: Sample,
    families: Sequence[str],
    censoring: CensoringModel | None = None,
    restarts: int = N_RESTARTS,
    start: CompetingRisksModel | None = None,
    transitions: Sequence[int] | None = None,
) -> FitResult:
    """Maximum likelihood fit of every cause-specific intensity.

    ``censoring`` of type ``Parametric`` with no hazard triggers an
    additional fit of the censoring law; a fitted ``Parametric`` is passed
    through unchanged. ``start`` adds a warm start per transition.
    ``transitions`` (1-based) restricts which blocks are optimised; the
    others are copied from ``start``.
    """
    families = [canonical_family(f) for f in families]
    if len(families) != sample.k:
        raise ValueError(f"need {sample.k} families, got {len(families)}")
    specs, logliks, degenerate = [], [], []
    converged, iterations, restarts_used = True, 0, 0
    for j, fam in enumerate(families, start=1):
        block = Block.for_transition(sample, j)
        if transitions is not None and j not in transitions:
            if start is None:
                raise ValueError("start model required when fitting a subset of transitions")
            spec = start.transitions[j - 1]
            specs.append(spec)
            logliks.append(block.loglik(spec))
            continue
        warm = start.transitions[j - 1] if start is not None else None
        bf = fit_block(block, fam, restarts=restarts, start=warm, seed=j)
        specs.append(bf.spec)
        logliks.append(bf.loglik)
        converged &= bf.converged
        iterations += bf.iterations
        restarts_used = max(restarts_used, bf.restarts_used)
        if bf.degenerate:
            degenerate.append(j)

    cens = None
    if isinstance(censoring, Parametric):
        cens = censoring if censoring.hazard is not None else fit_censoring(sample, censoring.family)
    model = CompetingRisksModel(tuple(specs), sample.horizon)
    return FitResult(
        model, float(sum(logliks)), converged, iterations, restarts_used,
        cens, tuple(degenerate), tuple(logliks),
    )


def fit_censoring(sample: Sample, censor_family: str = "exponential") -> Parametric:
    """ML fit of the censoring law with the roles of events and censorings swapped.

    Random censorings count as observed censoring times; transitions and
    end-of-follow-up censorings at the horizon are right-censored
    observations of the censoring time.
    """
    family = canonical_family(censor_family)
    mask = (sample.states == 0) & ~sample.administrative_mask()
    bf = fit_block(Block.from_arrays(sample.times, mask), family)
    return Parametric(family, bf.spec)
