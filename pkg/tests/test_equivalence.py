import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crequiv import equivalence
from crequiv.data import Parametric
from crequiv.distance import global_distance
from crequiv.equivalence import (
    BootstrapError,
    TestConfig,
    empirical_quantile,
    iup_test,
    p_value,
    run_test,
)
from crequiv.hazards import CompetingRisksModel, exponential
from crequiv.likelihood import fit_mle
from crequiv.schemas import load
from crequiv.scenarios import EXP_MODEL_1, EXP_MODEL_2

from conftest import make_sample

EXP3 = ("exponential",) * 3


def test_p_value_examples():
    assert p_value(0.5, [1, 2, 3]) == 0.0
    assert p_value(5.0, [1, 2, 3]) == 1.0
    assert p_value(2.5, [1, 2, 3, 4]) == 0.5
    assert p_value(2.0, [1, 2, 3, 4]) == 0.5  # ties count
    with pytest.raises(ValueError):
        p_value(1.0, [])


def test_quantile_convention():
    reps = np.arange(1.0, 201.0)
    assert empirical_quantile(reps, 0.05) == 10.0
    assert empirical_quantile([3.0], 0.05) == 3.0
    assert empirical_quantile([4.0, 1.0, 3.0, 2.0], 0.3) == 2.0


@given(st.lists(st.floats(0, 1), min_size=1, max_size=300), st.floats(0, 1), st.sampled_from([0.01, 0.05, 0.1]))
def test_decision_consistency(reps, d_hat, alpha):
    # reject when p < alpha; this implies d_hat < q_alpha
    p = p_value(d_hat, reps)
    q = empirical_quantile(reps, alpha)
    if p < alpha:
        assert d_hat < q
    if d_hat < q:
        assert p <= (np.ceil(alpha * len(reps) - 1e-12) - 1) / len(reps)


def test_config_validation():
    for kw in (dict(delta=0.0), dict(delta=0.001, alpha=0.5), dict(delta=0.001, B=0)):
        with pytest.raises(ValueError):
            TestConfig(families=EXP3, **kw)


def test_result_schema_and_invariants(scenario1_pair):
    s1, s2 = scenario1_pair
    res = run_test(s1, s2, TestConfig(0.0015, EXP3, B=40, seed=3))
    assert res.reject == (res.p_value < 0.05)
    assert res.p_value == p_value(res.d_hat, res.replicates)
    assert res.B_effective == 40 and res.replicates.size == 40
    assert np.all(np.diff(res.replicates) >= 0)
    jsonschema.validate(res.to_dict(include_replicates=True), load("test_result"))
    assert res.diagnostics["bootstrap_source"] == "constrained"


def test_bootstrap_source_when_far_apart(scenario1_pair):
    res = run_test(*scenario1_pair, TestConfig(0.0001, EXP3, B=20))
    assert res.diagnostics["bootstrap_source"] == "unconstrained"
    assert not res.reject


def test_large_delta_rejects(scenario1_pair):
    s1, s2 = scenario1_pair
    d = global_distance(fit_mle(s1, EXP3).model, fit_mle(s2, EXP3).model).d_hat
    res = run_test(s1, s2, TestConfig(10 * d + 0.01, EXP3, B=30))
    assert res.p_value == 0.0 and res.reject


def test_b_equal_one(scenario1_pair):
    res = run_test(*scenario1_pair, TestConfig(0.0015, EXP3, B=1))
    assert res.q_alpha == res.replicates[0]
    assert res.reject == (res.p_value < 0.05)


def test_determinism_and_jobs(scenario1_pair):
    cfg = TestConfig(0.001, EXP3, B=12, seed=5)
    a = run_test(*scenario1_pair, cfg)
    b = run_test(*scenario1_pair, cfg)
    c = run_test(*scenario1_pair, TestConfig(0.001, EXP3, B=12, seed=5, jobs=2))
    np.testing.assert_array_equal(a.replicates, b.replicates)
    np.testing.assert_array_equal(a.replicates, c.replicates)


def test_iup_is_max_of_components(scenario1_pair):
    res = iup_test(*scenario1_pair, TestConfig(0.0012, EXP3, B=30))
    ps = [t["p_value"] for t in res.per_transition]
    assert res.p_value == max(ps)
    assert res.reject == all(t["reject"] for t in res.per_transition)
    assert len(res.components) == 3
    jsonschema.validate(res.to_dict(), load("test_result"))


def test_iup_individual_thresholds(scenario1_pair):
    res = iup_test(*scenario1_pair, TestConfig(0.001, EXP3, B=10), deltas=[0.001, 0.002, 0.003])
    assert [t["delta"] for t in res.per_transition] == [0.001, 0.002, 0.003]
    with pytest.raises(ValueError):
        iup_test(*scenario1_pair, TestConfig(0.001, EXP3, B=10), deltas=[0.001])


def test_single_transition_collapse():
    m1 = CompetingRisksModel((exponential(0.002),), 90.0)
    m2 = CompetingRisksModel((exponential(0.0025),), 90.0)
    for seed in range(3):
        s1, s2 = make_sample(m1, 300, seed=seed, group=1), make_sample(m2, 300, seed=seed, group=2)
        cfg = TestConfig(0.002, ("exponential",), B=40, seed=seed)
        g, i = run_test(s1, s2, cfg), iup_test(s1, s2, cfg)
        assert g.reject == i.reject
        assert g.p_value == i.p_value
        np.testing.assert_array_equal(g.replicates, i.replicates)


def test_delta_ladder_monotone(scenario1_pair):
    s1, s2 = scenario1_pair
    fits = (fit_mle(s1, EXP3), fit_mle(s2, EXP3))
    ps = [run_test(s1, s2, TestConfig(d, EXP3, B=60, seed=1), fits=fits).p_value
          for d in np.arange(0.0004, 0.00161, 0.0002)]
    assert np.all(np.diff(ps) <= 0), ps


def test_random_censoring_uses_fitted_law():
    cens = Parametric("exponential", exponential(0.003))
    s1 = make_sample(EXP_MODEL_1, 200, censoring=cens, seed=2, group=1)
    s2 = make_sample(EXP_MODEL_2, 200, censoring=cens, seed=2, group=2)
    res = run_test(s1, s2, TestConfig(0.002, EXP3, B=20, censoring=Parametric("exponential", None)))
    assert res.B_effective == 20


def test_too_many_failed_refits(scenario1_pair, monkeypatch):
    real = equivalence.fit_mle
    calls = {"n": 0}

    def flaky(sample, families, *a, start=None, **kw):
        fit = real(sample, families, *a, start=start, **kw)
        if start is not None:
            calls["n"] += 1
            fit.converged = calls["n"] % 4 != 0  # a quarter of the refits fail
        return fit

    monkeypatch.setattr(equivalence, "fit_mle", flaky)
    with pytest.raises(BootstrapError):
        run_test(*scenario1_pair, TestConfig(0.0015, EXP3, B=20))
