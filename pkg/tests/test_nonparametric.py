import numpy as np
import pytest

from crequiv.data import Sample
from crequiv.hazards import CompetingRisksModel, exponential
from crequiv.nonparametric import StepFunction, diagnostic_rows, na_confidence, nelson_aalen, rows_to_csv
from crequiv.simulation import SimulationPlan, simulate_sample
from crequiv.data import Administrative


def test_single_event():
    times = np.array([5.0] + [90.0] * 9)
    states = np.array([1] + [0] * 9)
    step = nelson_aalen(Sample(times, states, 1, 90.0), 1)
    assert step(5.0) == pytest.approx(0.1)
    assert step(4.999) == 0.0
    assert step.variance(5.0) == pytest.approx(0.01)


def test_no_events_is_zero():
    s = Sample(np.array([3.0, 90.0]), np.array([2, 0]), 2, 90.0)
    step = nelson_aalen(s, 1)
    assert step.times.size == 0
    assert step(50.0) == 0.0
    with pytest.raises(ValueError):
        nelson_aalen(s, 3)


def test_ties_aggregate_and_causes_sum():
    times = np.array([2.0, 2.0, 2.0, 4.0, 6.0, 6.0, 9.0])
    states = np.array([1, 1, 2, 0, 2, 1, 0])
    s = Sample(times, states, 2, 10.0)
    a1, a2, a = nelson_aalen(s, 1), nelson_aalen(s, 2), nelson_aalen(s)
    assert a1.times.tolist() == [2.0, 6.0]
    assert a1(2.0) == pytest.approx(2 / 7)
    assert np.all(np.diff(a1.values) > 0)
    ts = np.linspace(0, 10, 101)
    np.testing.assert_allclose(a1(ts) + a2(ts), a(ts), rtol=1e-14)


def test_band_construction():
    step = StepFunction(np.array([1.0, 2.0]), np.array([0.0, 0.2]), np.array([0.0, 0.01]))
    band = na_confidence(step)
    assert band.lower[0] == band.upper[0] == 0.0
    assert band.upper[1] / 0.2 == pytest.approx(0.2 / band.lower[1])


def test_matches_exponential_cumulative():
    m = CompetingRisksModel((exponential(0.004), exponential(0.002)), 90.0)
    s = simulate_sample(SimulationPlan(m, 20_000, Administrative(90.0), seed=1))
    for j, lam in ((1, 0.004), (2, 0.002)):
        step = nelson_aalen(s, j)
        for t in (20.0, 45.0, 80.0):
            assert abs(step(t) - lam * t) < 3 * np.sqrt(step.variance(t))


def test_coverage():
    lam, t0, hits, reps = 0.005, 45.0, 0, 1000
    m = CompetingRisksModel((exponential(lam),), 90.0)
    for r in range(reps):
        s = simulate_sample(SimulationPlan(m, 200, Administrative(90.0), seed=2, replicate_id=r))
        step = nelson_aalen(s, 1)
        i = np.searchsorted(step.times, t0, side="right") - 1
        band = na_confidence(step)
        hits += band.lower[i] <= lam * t0 <= band.upper[i]
    assert abs(hits / reps - 0.95) < 3 * np.sqrt(0.95 * 0.05 / reps)


def test_rows_export():
    s = Sample(np.array([1.0, 2.0, 90.0]), np.array([1, 1, 0]), 1, 90.0)
    rows = diagnostic_rows(s, 1, parametric=exponential(0.01))
    assert rows[0]["A_param"] == pytest.approx(0.01)
    assert rows_to_csv(rows).splitlines()[0] == "group,j,t,A_hat,lower,upper,A_param"
