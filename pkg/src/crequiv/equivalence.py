"""Parametric bootstrap equivalence test for two competing risks models.

``run_test`` tests

    H0: max_j ||alpha1_j - alpha2_j||_inf >= delta   vs   H1: ... < delta

with the global sup-distance as statistic. ``iup_test`` runs one bootstrap
test per transition and combines them by the intersection-union principle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constrained import fit_constrained, select_bootstrap_params
from .data import Administrative, CensoringModel, Sample
from .distance import GRID_POINTS, T_MIN, global_distance, sup_norm_diff
from .hazards import CompetingRisksModel, canonical_family
from .likelihood import FitResult, fit_mle
from .simulation import simulate_arrays, stream

MIN_EFFECTIVE_FRACTION = 0.9


class BootstrapError(RuntimeError):
    """Too many bootstrap refits failed to converge."""


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class

    delta: float
    families: tuple[str, ...]
    alpha: float = 0.05
    B: int = 200
    censoring: CensoringModel | None = None
    seed: int = 0
    grid: int = GRID_POINTS
    t_min: float = T_MIN
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(canonical_family(f) for f in self.families))
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if self.B < 1:
            raise ValueError(f"B must be at least 1, got {self.B}")


@dataclass
class TestResult:
    __test__ = False

    d_hat: float
    replicates: np.ndarray
    q_alpha: float
    p_value: float
    reject: bool
    B: int
    B_effective: int
    delta: float
    alpha: float
    method: str = "global"
    per_transition: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    components: list["TestResult"] = field(default_factory=list, repr=False)

    def to_dict(self, include_replicates: bool = False) -> dict:
        out = {
            "method": self.method,
            "delta": self.delta,
            "alpha": self.alpha,
            "d_hat": self.d_hat,
            "p_value": self.p_value,
            "q_alpha": self.q_alpha,
            "reject": self.reject,
            "B": self.B,
            "B_effective": self.B_effective,
            "per_transition": self.per_transition,
            "diagnostics": self.diagnostics,
        }
        if include_replicates:
            out["replicates"] = [float(r) for r in self.replicates]
        return out


def p_value(d_hat: float, replicates) -> float:
    """Empirical CDF of the bootstrap statistics at ``d_hat``."""
    reps = np.asarray(replicates, dtype=float)
    if reps.size == 0:
        raise ValueError("no bootstrap replicates")
    return float(np.count_nonzero(reps <= d_hat)) / reps.size


def empirical_quantile(replicates, alpha: float) -> float:
    """Lower empirical quantile: the ceil(alpha * B)-th smallest replicate."""
    reps = np.sort(np.asarray(replicates, dtype=float))
    if reps.size == 0:
        raise ValueError("no bootstrap replicates")
    r = max(1, math.ceil(alpha * reps.size - 1e-12))
    return float(reps[r - 1])


def _bootstrap_censoring(censoring: CensoringModel, fit: FitResult) -> CensoringModel:
    if isinstance(censoring, Administrative):
        return censoring
    return fit.censoring


def _replicate(models, sizes, censorings, families, statistic, seed, key, b, transitions):
    refits = []
    for g, (model, n, cens) in enumerate(zip(models, sizes, censorings), start=1):
        rng = stream(seed, *key, b, g)
        times, states = simulate_arrays(model, n, cens, rng)
        sample = Sample(times, states, model.k, model.horizon, g)
        refits.append(fit_mle(sample, families, start=model, transitions=transitions))
    if not all(f.converged for f in refits):
        return None
    return statistic(refits[0].model, refits[1].model)


def _bootstrap(
    models: tuple[CompetingRisksModel, CompetingRisksModel],
    sizes: tuple[int, int],
    censorings: tuple[CensoringModel, CensoringModel],
    families: Sequence[str],
    statistic: Callable[[CompetingRisksModel, CompetingRisksModel], float],
    B: int,
    seed: int,
    key: tuple[int, ...],
    transitions: Sequence[int] | None = None,
    jobs: int = 1,
) -> tuple[np.ndarray, int]:
    """Sorted replicate statistics and the number of failed refits.

    Replicate ``b`` uses the stream ``(seed, *key, b, group)``, so the
    result does not depend on ``jobs``.
    """
    args = (models, sizes, censorings, families, statistic, seed, key)
    if jobs != 1:
        from joblib import Parallel, delayed

        out = Parallel(n_jobs=jobs)(delayed(_replicate)(*args, b, transitions) for b in range(B))
    else:
        out = [_replicate(*args, b, transitions) for b in range(B)]
    reps = [v for v in out if v is not None]
    return np.sort(np.asarray(reps, dtype=float)), len(out) - len(reps)


def _finish(d_hat, reps, failed, config: TestConfig, method, per_transition, diagnostics) -> TestResult:
    B_eff = reps.size
    if B_eff < MIN_EFFECTIVE_FRACTION * config.B:
        raise BootstrapError(
            f"only {B_eff} of {config.B} bootstrap refits converged ({failed} failed)"
        )
    p = p_value(d_hat, reps)
    q = empirical_quantile(reps, config.alpha)
    return TestResult(
        float(d_hat), reps, q, p, p < config.alpha, config.B, B_eff,
        config.delta, config.alpha, method, per_transition, diagnostics,
    )


def fit_groups(s1: Sample, s2: Sample, config: TestConfig) -> tuple[FitResult, FitResult]:
    """Unconstrained fits of both groups (including the censoring law if it is to be estimated)."""
    if s1.k != s2.k:
        raise ValueError(f"samples have different k ({s1.k} vs {s2.k})")
    if s1.horizon != s2.horizon:
        raise ValueError("samples have different horizons")
    if len(config.families) != s1.k:
        raise ValueError(f"need {s1.k} families, got {len(config.families)}")
    censoring = config.censoring or Administrative(s1.horizon)
    return fit_mle(s1, config.families, censoring), fit_mle(s2, config.families, censoring)


def run_test(
    s1: Sample,
    s2: Sample,
    config: TestConfig,
    fits: tuple[FitResult, FitResult] | None = None,
    key: tuple[int, ...] = (),
) -> TestResult:
    """Bootstrap test of the global hypotheses.

    1. ML fits of both groups and the statistic ``d_hat``.
    2. Constrained fit on the margin when ``d_hat < delta``.
    3. ``B`` parametric bootstrap samples from the (constrained) estimates,
       refitted and re-evaluated.
    4. Reject when the empirical CDF of the replicates at ``d_hat`` is
       below ``alpha``.

    ``key`` extends the random stream key so that calls on different
    datasets draw independent bootstrap samples.
    """
    censoring = config.censoring or Administrative(s1.horizon)
    f1, f2 = fits if fits is not None else fit_groups(s1, s2, config)
    dist = global_distance(f1.model, f2.model, config.grid, config.t_min)
    diagnostics = {
        "fit_converged": [f1.converged, f2.converged],
        "degenerate_states": [list(f1.degenerate_states), list(f2.degenerate_states)],
        "bootstrap_source": "unconstrained",
    }
    constrained = None
    if dist.d_hat < config.delta:
        cons = fit_constrained(
            s1, s2, config.families, config.delta, fits=(f1, f2), grid=config.grid, t_min=config.t_min
        )
        constrained = (cons.model1, cons.model2)
        diagnostics.update(
            bootstrap_source="constrained",
            constraint_residual=cons.constraint_residual,
            moved_transitions=list(cons.moved),
        )
    boot = select_bootstrap_params(dist.d_hat, config.delta, (f1.model, f2.model), constrained)
    cens = (_bootstrap_censoring(censoring, f1), _bootstrap_censoring(censoring, f2))

    def statistic(m1, m2):
        return global_distance(m1, m2, config.grid, config.t_min).d_hat

    reps, failed = _bootstrap(
        boot, (s1.n, s2.n), cens, config.families, statistic, config.B, config.seed, (*key, 0),
        jobs=config.jobs,
    )
    diagnostics["failed_replicates"] = failed
    return _finish(dist.d_hat, reps, failed, config, "global", dist.to_list(), diagnostics)


def iup_test(
    s1: Sample,
    s2: Sample,
    config: TestConfig,
    deltas: Sequence[float] | None = None,
    fits: tuple[FitResult, FitResult] | None = None,
    key: tuple[int, ...] = (),
) -> TestResult:
    """Per-transition bootstrap tests combined by the intersection-union principle.

    Transition ``j`` is tested against its own margin ``deltas[j-1]``
    (default: the global delta). The combined p-value is the largest
    individual p-value and the global null is rejected only if every
    individual null is.
    """
    censoring = config.censoring or Administrative(s1.horizon)
    f1, f2 = fits if fits is not None else fit_groups(s1, s2, config)
    k = s1.k
    deltas = [config.delta] * k if deltas is None else list(deltas)
    if len(deltas) != k:
        raise ValueError(f"need {k} per-transition thresholds, got {len(deltas)}")
    cens = (_bootstrap_censoring(censoring, f1), _bootstrap_censoring(censoring, f2))
    dist = global_distance(f1.model, f2.model, config.grid, config.t_min)

    components = []
    for j in range(1, k + 1):
        cfg = TestConfig(
            deltas[j - 1], config.families, config.alpha, config.B, config.censoring,
            config.seed, config.grid, config.t_min, config.jobs,
        )
        d_j = dist.per_transition[j - 1].value
        diagnostics = {"bootstrap_source": "unconstrained"}
        constrained = None
        if d_j < cfg.delta:
            cons = fit_constrained(
                s1, s2, config.families, cfg.delta, fits=(f1, f2), transition=j,
                grid=config.grid, t_min=config.t_min,
            )
            constrained = (cons.model1, cons.model2)
            diagnostics.update(bootstrap_source="constrained", constraint_residual=cons.constraint_residual)
        boot = select_bootstrap_params(d_j, cfg.delta, (f1.model, f2.model), constrained)

        def statistic(m1, m2, j=j):
            return sup_norm_diff(
                m1.transitions[j - 1], m2.transitions[j - 1], m1.horizon, config.grid, config.t_min
            ).value

        reps, failed = _bootstrap(
            boot, (s1.n, s2.n), cens, config.families, statistic, config.B, config.seed,
            (*key, j - 1), transitions=[j], jobs=config.jobs,
        )
        diagnostics["failed_replicates"] = failed
        comp = _finish(
            d_j, reps, failed, cfg, f"individual[{j}]",
            [dist.to_list()[j - 1]], diagnostics,
        )
        components.append(comp)

    p = max(c.p_value for c in components)
    per = []
    for j, c in enumerate(components, start=1):
        entry = dict(dist.to_list()[j - 1])
        entry.update(p_value=c.p_value, q_alpha=c.q_alpha, reject=c.reject, delta=c.delta)
        per.append(entry)
    worst = max(components, key=lambda c: c.p_value)
    return TestResult(
        dist.d_hat,
        worst.replicates,
        worst.q_alpha,
        p,
        all(c.reject for c in components),
        config.B,
        min(c.B_effective for c in components),
        config.delta,
        config.alpha,
        "iup",
        per,
        {"fit_converged": [f1.converged, f2.converged]},
        components,
    )
