"""Monte Carlo harness for the four simulation scenarios.

Scenario 1 compares the two exponential fits of the application data,
Scenario 2 uses the first of them for both groups, Scenario 3 compares the
Gompertz/Gompertz/Weibull fits and Scenario 4 uses the first of those for
both groups.

Datasets depend only on (seed, sample-size cell, censoring cell, replicate)
and are shared across the threshold ladder; bootstrap streams are shared
across thresholds as well, so rejection rates are seed-matched in delta.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constrained import ConstrainedFitError
from .data import Administrative, CensoringModel, Parametric, Sample
from .distance import GRID_POINTS, T_MIN, global_distance
from .equivalence import BootstrapError, TestConfig, fit_groups, iup_test, run_test
from .hazards import CompetingRisksModel, exponential, gompertz, weibull_from_log_shape
from .simulation import simulate_arrays, stream

HORIZON = 90.0
FAILURE_FLAG_FRACTION = 0.10

EXP_MODEL_1 = CompetingRisksModel((exponential(0.001), exponential(0.0011), exponential(0.0004)), HORIZON)
EXP_MODEL_2 = CompetingRisksModel((exponential(0.0008), exponential(0.0017), exponential(0.0009)), HORIZON)
# the Weibull pairs are printed as (log shape, scale)
GW_MODEL_1 = CompetingRisksModel(
    (gompertz(0.002, -0.016), gompertz(0.003, -0.036), weibull_from_log_shape(0.097, 2894.8)), HORIZON
)
GW_MODEL_2 = CompetingRisksModel(
    (gompertz(0.002, -0.018), gompertz(0.006, -0.043), weibull_from_log_shape(0.108, 1242.1)), HORIZON
)
EXP_FAMILIES = ("exponential",) * 3
GW_FAMILIES = ("gompertz", "gompertz", "weibull")


@dataclass(frozen=True)
class Scenario:
    id: int
    model1: CompetingRisksModel
    model2: CompetingRisksModel
    families: tuple[str, ...]
    deltas: tuple[float, ...]
    sample_sizes: tuple[tuple[int, int], ...]

    @property
    def d(self) -> float:
        return global_distance(self.model1, self.model2).d_hat


_SIZES = ((100, 100), (200, 200), (500, 500), (250, 450))
SCENARIOS = {
    1: Scenario(1, EXP_MODEL_1, EXP_MODEL_2, EXP_FAMILIES, (0.0006, 0.0008, 0.001, 0.0015), _SIZES),
    2: Scenario(2, EXP_MODEL_1, EXP_MODEL_1, EXP_FAMILIES, (0.0002, 0.0004, 0.0006, 0.0008), _SIZES),
    3: Scenario(3, GW_MODEL_1, GW_MODEL_2, GW_FAMILIES, (0.0028, 0.004, 0.005, 0.01), _SIZES),
    4: Scenario(4, GW_MODEL_1, GW_MODEL_1, GW_FAMILIES, (0.004, 0.005, 0.007, 0.01), _SIZES),
}
CENSORING_RATES = (0.001, 0.003, 0.01)


def get_scenario(sid: int) -> Scenario:
    try:
        return SCENARIOS[int(sid)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown scenario {sid!r}; choose from {sorted(SCENARIOS)}") from None


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int
    sample_sizes: tuple[tuple[int, int], ...] = ((200, 200),)
    censoring: tuple[CensoringModel, ...] = (Administrative(HORIZON),)
    deltas: tuple[float, ...] = ()
    n_reps: int = 200
    B: int = 200
    alpha: float = 0.05
    seed: int = 2024
    methods: tuple[str, ...] = ("global",)
    grid: int = GRID_POINTS
    t_min: float = T_MIN
    jobs: int = 1

    def __post_init__(self):
        get_scenario(self.scenario)
        if self.n_reps < 1 or self.B < 1:
            raise ValueError("n_reps and B must be at least 1")
        bad = set(self.methods) - {"global", "iup"}
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        for c in self.censoring:
            if isinstance(c, Parametric) and c.hazard is None:
                raise ValueError("data-generating censoring laws must be fully specified")

    @classmethod
    def full_scale(cls, scenario: int, **kw) -> "ScenarioConfig":
        """Full scenario grid (N=1000, B=250); days of CPU time."""
        sc = get_scenario(scenario)
        cens = (Administrative(HORIZON),) + tuple(
            Parametric("exponential", exponential(r)) for r in CENSORING_RATES
        )
        defaults = dict(
            sample_sizes=sc.sample_sizes, censoring=cens, deltas=sc.deltas,
            n_reps=1000, B=250, methods=("global", "iup"),
        )
        defaults.update(kw)
        return cls(scenario, **defaults)

    def resolved_deltas(self) -> tuple[float, ...]:
        return self.deltas or get_scenario(self.scenario).deltas


@dataclass
class CellResult:
    scenario: int
    n1: int
    n2: int
    censoring: str
    delta: float
    method: str
    n_reps: int
    n_valid: int
    rejections: int
    rate: float
    se: float
    mean_censored: float
    failures: int
    flagged: bool


@dataclass
class ReplicateOutcome:
    censored: float
    # (delta, method) -> reject flag, or None when the test failed
    decisions: dict = field(default_factory=dict)
    p_values: dict = field(default_factory=dict)


def _test_censoring(gen: CensoringModel) -> CensoringModel:
    # random-censoring data are analysed with an estimated exponential law
    return gen if isinstance(gen, Administrative) else Parametric("exponential", None)


def simulate_pair(
    scenario: Scenario, n1: int, n2: int, censoring: CensoringModel, seed: int, key: tuple[int, ...]
) -> tuple[Sample, Sample]:
    out = []
    for g, (model, n) in enumerate(((scenario.model1, n1), (scenario.model2, n2)), start=1):
        times, states = simulate_arrays(model, n, censoring, stream(seed, *key, g))
        out.append(Sample(times, states, model.k, model.horizon, g))
    return out[0], out[1]


def run_replicate(config: ScenarioConfig, size_idx: int, cens_idx: int, rep: int) -> ReplicateOutcome:
    sc = get_scenario(config.scenario)
    n1, n2 = config.sample_sizes[size_idx]
    gen = config.censoring[cens_idx]
    data_key = (0, size_idx, cens_idx, rep)
    s1, s2 = simulate_pair(sc, n1, n2, gen, config.seed, data_key)
    outcome = ReplicateOutcome(0.5 * (s1.censored_fraction + s2.censored_fraction))
    base = TestConfig(
        config.resolved_deltas()[0], sc.families, config.alpha, config.B, _test_censoring(gen),
        config.seed, config.grid, config.t_min,
    )
    try:
        fits = fit_groups(s1, s2, base)
    except (RuntimeError, ValueError):
        fits = None
    boot_key = (1, size_idx, cens_idx, rep)
    for delta in config.resolved_deltas():
        cfg = TestConfig(
            delta, sc.families, config.alpha, config.B, base.censoring, config.seed, config.grid, config.t_min
        )
        for method in config.methods:
            if fits is None:
                outcome.decisions[(delta, method)] = None
                continue
            fn = run_test if method == "global" else iup_test
            try:
                res = fn(s1, s2, cfg, fits=fits, key=boot_key)
            except (BootstrapError, ConstrainedFitError):
                outcome.decisions[(delta, method)] = None
                continue
            outcome.decisions[(delta, method)] = bool(res.reject)
            outcome.p_values[(delta, method)] = res.p_value
    return outcome


def _cells(config: ScenarioConfig):
    for si in range(len(config.sample_sizes)):
        for ci in range(len(config.censoring)):
            yield si, ci


def run_scenario(
    config: ScenarioConfig, progress: Callable[[str], None] | None = None
) -> tuple[list[CellResult], dict]:
    """Rejection rates for every (sample size, censoring, delta, method) cell.

    Returns the table rows and the raw per-replicate outcomes keyed by
    ``(size_idx, cens_idx)``.
    """
    outcomes = {}
    for si, ci in _cells(config):
        tasks = [(config, si, ci, r) for r in range(config.n_reps)]
        if config.jobs != 1:
            from joblib import Parallel, delayed

            reps = Parallel(n_jobs=config.jobs)(delayed(run_replicate)(*t) for t in tasks)
        else:
            reps = [run_replicate(*t) for t in tasks]
        outcomes[(si, ci)] = reps
        if progress is not None:
            progress(f"cell n={config.sample_sizes[si]} censoring={config.censoring[ci]} done")
    return summarize(config, outcomes), outcomes


def summarize(config: ScenarioConfig, outcomes: dict) -> list[CellResult]:
    rows = []
    for (si, ci), reps in outcomes.items():
        n1, n2 = config.sample_sizes[si]
        cens = np.mean([r.censored for r in reps])
        for delta in config.resolved_deltas():
            for method in config.methods:
                dec = [r.decisions[(delta, method)] for r in reps]
                valid = [d for d in dec if d is not None]
                failures = len(dec) - len(valid)
                rej = int(sum(valid))
                rate = rej / len(valid) if valid else float("nan")
                se = math.sqrt(rate * (1 - rate) / len(valid)) if valid else float("nan")
                rows.append(CellResult(
                    config.scenario, n1, n2, str(config.censoring[ci]), delta, method,
                    len(dec), len(valid), rej, rate, se, float(cens), failures,
                    failures > FAILURE_FLAG_FRACTION * len(dec),
                ))
    return rows


def to_csv(rows: Sequence[CellResult]) -> str:
    """Long format: one line per cell."""
    buf = io.StringIO()
    names = list(CellResult.__dataclass_fields__)
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def to_wide_csv(rows: Sequence[CellResult]) -> str:
    """Table layout: one line per (n1, n2, censoring), one column per delta.

    Entries read ``global (iup)`` when both methods were run.
    """
    deltas = sorted({r.delta for r in rows})
    groups: dict[tuple, dict] = {}
    for r in rows:
        key = (r.n1, r.n2, r.censoring)
        g = groups.setdefault(key, {"censored": r.mean_censored})
        g[(r.delta, r.method)] = r.rate
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n1", "n2", "censoring", "censored_pct"] + [f"delta={d:g}" for d in deltas])
    for (n1, n2, cens), g in groups.items():
        cells = []
        for d in deltas:
            glob, iup = g.get((d, "global")), g.get((d, "iup"))
            if glob is not None and iup is not None:
                cells.append(f"{glob:.3f} ({iup:.3f})")
            else:
                v = glob if glob is not None else iup
                cells.append("" if v is None else f"{v:.3f}")
        w.writerow([n1, n2, cens, f"{100 * g['censored']:.0f}"] + cells)
    return buf.getvalue()


def to_json(rows: Sequence[CellResult], config: ScenarioConfig | None = None) -> str:
    out = {"cells": [asdict(r) for r in rows]}
    if config is not None:
        out["config"] = {
            "scenario": config.scenario,
            "n_reps": config.n_reps,
            "B": config.B,
            "alpha": config.alpha,
            "seed": config.seed,
            "t_min": config.t_min,
            "grid": config.grid,
        }
    return json.dumps(out, indent=2, allow_nan=True)
