import numpy as np
import pytest
from scipy import stats

from crequiv.data import Administrative, Observation, Parametric
from crequiv.hazards import CompetingRisksModel, exponential, survival
from crequiv.likelihood import fit_mle
from crequiv.scenarios import EXP_MODEL_1
from crequiv.simulation import SimulationPlan, apply_censoring, simulate_arrays, simulate_event, simulate_sample, stream


def test_exponential_event_times():
    lam = 0.01
    m = CompetingRisksModel((exponential(lam),), 90.0)
    rng = stream(1, 0)
    t, s = simulate_arrays(m, 100_000, Parametric("exponential", exponential(1e-12)), rng)
    assert np.all(s == 1)
    se = (1 / lam) / np.sqrt(t.size)
    assert abs(t.mean() - 1 / lam) < 3 * se


def test_scalar_event_api():
    m = CompetingRisksModel((exponential(0.01), exponential(0.01)), 90.0)
    rng = stream(2)
    draws = [simulate_event(m, rng) for _ in range(4000)]
    causes = np.array([c for _, c in draws if c > 0])
    p = np.mean(causes == 1)
    assert abs(p - 0.5) < 3 * np.sqrt(0.25 / causes.size)
    # cap of 10 * horizon: T beyond 900 days is returned as the sentinel
    never = CompetingRisksModel((exponential(1e-9),), 90.0)
    assert simulate_event(never, rng) == (np.inf, 0)


def test_cause_proportions():
    rates = np.array([0.001, 0.0011, 0.0004])
    m = CompetingRisksModel(tuple(exponential(r) for r in rates), 90.0)
    t, s = simulate_arrays(m, 100_000, Parametric("exponential", exponential(1e-12)), stream(3))
    freq = np.bincount(s, minlength=4)[1:] / s.size
    p = rates / rates.sum()
    assert np.all(np.abs(freq - p) < 3 * np.sqrt(p * (1 - p) / s.size))


def test_administrative_proportions():
    # constant hazards: P(state j by 90) = rate_j / total * (1 - S(90))
    rates = np.array([0.001, 0.0011, 0.0004])
    s = simulate_sample(SimulationPlan(EXP_MODEL_1, 100_000, Administrative(90.0), seed=4))
    surv = float(survival(EXP_MODEL_1, 90.0))
    expected = np.concatenate([[surv], rates / rates.sum() * (1 - surv)])
    freq = np.bincount(s.states, minlength=4) / s.n
    assert np.all(np.abs(freq - expected) < 3 * np.sqrt(expected * (1 - expected) / s.n))
    assert np.all(s.times[s.states == 0] == 90.0)
    assert surv == pytest.approx(0.80, abs=0.005)


def test_event_time_distribution_ks():
    m = CompetingRisksModel(EXP_MODEL_1.transitions, 90.0)
    t, _ = simulate_arrays(m, 100_000, Parametric("exponential", exponential(1e-12)), stream(5))
    res = stats.kstest(t, lambda x: 1 - np.exp(-np.asarray(m.all_cause_cumulative(x))))
    assert res.statistic < 0.01


def test_random_censoring_fraction():
    s = simulate_sample(SimulationPlan(EXP_MODEL_1, 10_000, Parametric("exponential", exponential(0.003)), seed=6))
    # P(C < T) = 0.003 / (0.003 + 0.0025) for competing exponentials
    assert s.censored_fraction == pytest.approx(0.003 / 0.0055, abs=3 * np.sqrt(0.25 / s.n))


def test_apply_censoring():
    rng = stream(0)
    assert apply_censoring((120.0, 1), Administrative(90.0), rng) == Observation(90.0, 0)
    assert apply_censoring((np.inf, 0), Administrative(90.0), rng) == Observation(90.0, 0)
    assert apply_censoring((30.0, 2), Parametric("exponential", exponential(1e-12)), rng) == Observation(30.0, 2)


def test_determinism_and_plan_validation():
    plan = SimulationPlan(EXP_MODEL_1, 200, Administrative(90.0), seed=7, replicate_id=3)
    assert simulate_sample(plan) == simulate_sample(plan)
    other = SimulationPlan(EXP_MODEL_1, 200, Administrative(90.0), seed=7, replicate_id=4)
    assert simulate_sample(plan) != simulate_sample(other)
    with pytest.raises(ValueError):
        SimulationPlan(EXP_MODEL_1, 0, Administrative(90.0))
    with pytest.raises(ValueError):
        SimulationPlan(EXP_MODEL_1, 5, Parametric("exponential", None))


def test_stream_independence_of_order():
    a = [stream(9, r).random() for r in range(5)]
    b = [stream(9, r).random() for r in reversed(range(5))][::-1]
    assert a == b


def test_recovery_at_large_n():
    s = simulate_sample(SimulationPlan(EXP_MODEL_1, 100_000, Administrative(90.0), seed=8))
    fit = fit_mle(s, ("exponential",) * 3)
    for got, tr in zip(fit.model.transitions, EXP_MODEL_1.transitions):
        assert got.params[0] == pytest.approx(tr.params[0], rel=0.03)
