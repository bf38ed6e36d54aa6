"""Competing-risks data generation.

Event times are drawn from the all-cause intensity by inversion of its
cumulative; the cause is then a multinomial draw with probabilities
``alpha_j(T) / sum_m alpha_m(T)``. Each observation is cut at its own window
end (the administrative horizon or a drawn censoring time).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Administrative, CensoringModel, Observation, Parametric, Sample
from .hazards import BEYOND_HORIZON, CompetingRisksModel, intensity, inverse_cumulative, invert_all_cause


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for ``(seed, *key)``.

    Streams for distinct keys are statistically independent, so replicates
    can be generated in any order or in parallel.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SimulationPlan:
    model: CompetingRisksModel
    n: int
    censoring: CensoringModel
    seed: int = 0
    replicate_id: int = 0
    group: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"sample size must be at least 1, got {self.n}")
        if isinstance(self.censoring, Parametric) and self.censoring.hazard is None:
            raise ValueError("simulation needs a fully specified censoring law")


def _draw_causes(model: CompetingRisksModel, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    rates = np.column_stack([np.broadcast_to(intensity(tr, t), t.shape) for tr in model.transitions])
    cum = np.cumsum(rates, axis=1)
    u = rng.random(t.size) * cum[:, -1]
    return 1 + np.minimum((cum <= u[:, None]).sum(axis=1), model.k - 1)


def _draw_targets(rng: np.random.Generator, n: int) -> np.ndarray:
    # -log(u) with u in (0, 1]; a zero target would give T = 0
    target = -np.log1p(-rng.random(n))
    while np.any(target == 0):
        zero = target == 0
        target[zero] = -np.log1p(-rng.random(int(zero.sum())))
    return target


def draw_censoring_times(censoring: Parametric, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.asarray(inverse_cumulative(censoring.hazard, _draw_targets(rng, n)), dtype=float)


def simulate_event(model: CompetingRisksModel, rng: np.random.Generator, cap=None) -> tuple[float, int]:
    """One uncensored draw ``(T, cause)``; ``(inf, 0)`` if ``T`` exceeds the search cap."""
    while True:
        target = float(_draw_targets(rng, 1)[0])
        t = float(invert_all_cause(model, target, cap=cap))
        if t == BEYOND_HORIZON:
            return t, 0
        if t <= 0:
            continue
        cause = int(_draw_causes(model, np.array([t]), rng)[0])
        return t, cause


def apply_censoring(event: tuple[float, int], censoring: CensoringModel, rng: np.random.Generator) -> Observation:
    """Cut an event ``(T, cause)`` at the administrative horizon or a drawn censoring time."""
    t, state = event
    if isinstance(censoring, Administrative):
        end = censoring.horizon
    else:
        end = float(draw_censoring_times(censoring, 1, rng)[0])
    if t > end:
        return Observation(end, 0)
    return Observation(t, state)


def simulate_arrays(
    model: CompetingRisksModel, n: int, censoring: CensoringModel, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(censoring, Administrative):
        window = np.full(n, float(censoring.horizon))
    else:
        window = draw_censoring_times(censoring, n, rng)
    target = _draw_targets(rng, n)
    t = np.asarray(invert_all_cause(model, target, cap=window), dtype=float)
    event = np.isfinite(t)
    times = np.where(event, t, window)
    states = np.zeros(n, dtype=np.int64)
    if event.any():
        states[event] = _draw_causes(model, times[event], rng)
    return times, states


def simulate_sample(plan: SimulationPlan) -> Sample:
    rng = stream(plan.seed, plan.replicate_id, plan.group)
    times, states = simulate_arrays(plan.model, plan.n, plan.censoring, rng)
    return Sample(times, states, plan.model.k, plan.model.horizon, plan.group)
