import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from crequiv.hazards import (
    BEYOND_HORIZON,
    SINGULAR_CAP,
    CompetingRisksModel,
    IntensityFamily,
    ParameterDomainError,
    cumulative_intensity,
    exponential,
    from_unconstrained,
    gompertz,
    intensity,
    inverse_cumulative,
    invert_all_cause,
    shift_intensity,
    survival,
    to_unconstrained,
    weibull,
    weibull_from_log_shape,
)

rates = st.floats(1e-4, 0.05)
gomp_shapes = st.floats(-0.05, 0.05)
weib_scales = st.floats(20.0, 5000.0)
weib_shapes = st.floats(0.5, 3.0)


@st.composite
def specs(draw):
    fam = draw(st.sampled_from(["exponential", "gompertz", "weibull"]))
    if fam == "exponential":
        return exponential(draw(rates))
    if fam == "gompertz":
        return gompertz(draw(rates), draw(gomp_shapes))
    return weibull(draw(weib_scales), draw(weib_shapes))


def test_exponential_is_constant():
    assert intensity(exponential(0.001), 50.0) == 0.001
    np.testing.assert_array_equal(intensity(exponential(0.001), np.array([0.0, 1.0, 90.0])), 0.001)


def test_gompertz_values():
    g = gompertz(0.002, -0.016)
    assert intensity(g, 0.0) == pytest.approx(0.002, rel=1e-15)
    # mpmath, 30 digits
    assert intensity(g, 90.0) == pytest.approx(4.73855517364243513e-4, rel=1e-13)


def test_cumulative_examples():
    assert cumulative_intensity(weibull(2894.8, 1.1), 0.0) == 0.0
    assert cumulative_intensity(exponential(0.0011), 90.0) == pytest.approx(0.099, rel=1e-14)
    # mpmath quadrature, 30 digits
    assert cumulative_intensity(gompertz(0.003, -0.036), 90.0) == pytest.approx(0.0800696754084177, rel=1e-12)


def test_survival_examples():
    m = CompetingRisksModel((exponential(0.001), exponential(0.0011), exponential(0.0004)), 90.0)
    assert survival(m, 0.0) == 1.0
    assert survival(m, 90.0) == pytest.approx(0.798516218759377, rel=1e-13)
    s = survival(CompetingRisksModel((exponential(0.02),), 90.0), np.linspace(0, 90, 50))
    assert np.all(np.diff(s) < 0)


@pytest.mark.parametrize(
    "family,params",
    [("exponential", (0.0,)), ("exponential", (-1.0,)), ("gompertz", (0.0, 0.1)), ("weibull", (1.0, 0.0)),
     ("weibull", (-2.0, 1.0)), ("exponential", (1.0, 2.0)), ("gompertz", (float("nan"), 0.0))],
)
def test_parameter_domain(family, params):
    with pytest.raises(ParameterDomainError):
        IntensityFamily(family, params)


def test_unknown_family():
    with pytest.raises(ValueError):
        IntensityFamily("lognormal", (1.0, 1.0))


def test_weibull_singular_at_zero_is_capped():
    w = weibull(100.0, 0.7)
    assert w.singular_at_zero
    assert intensity(w, 0.0) == SINGULAR_CAP
    assert not weibull(100.0, 1.2).singular_at_zero
    assert intensity(weibull(100.0, 1.2), 0.0) == 0.0


def test_weibull_from_log_shape():
    w = weibull_from_log_shape(0.097, 2894.8)
    assert w.params == (2894.8, pytest.approx(math.exp(0.097)))


@pytest.mark.parametrize("eps", [1e-12, -1e-12, 0.0])
def test_gompertz_zero_shape_limit(eps):
    g, e = gompertz(0.003, eps), exponential(0.003)
    t = np.linspace(0, 90, 11)
    np.testing.assert_allclose(cumulative_intensity(g, t), cumulative_intensity(e, t), rtol=1e-10)
    np.testing.assert_allclose(intensity(g, t), intensity(e, t), rtol=1e-9)


@given(specs())
def test_cumulative_matches_quadrature(spec):
    ts = np.linspace(0.5, 90, 100)
    closed = cumulative_intensity(spec, ts)
    for t, a in zip(ts[::9], closed[::9]):
        num, _ = quad(lambda u: intensity(spec, u), 0, t, epsabs=0, epsrel=1e-12, limit=200)
        assert a == pytest.approx(num, rel=1e-8)
    assert np.all(np.diff(closed) >= 0)
    assert cumulative_intensity(spec, 0.0) == 0.0


def test_invert_all_cause_examples():
    m = CompetingRisksModel((exponential(0.01),), 90.0)
    assert invert_all_cause(m, 0.0) == 0.0
    assert invert_all_cause(m, 0.5) == pytest.approx(50.0, abs=1e-9)
    # cap is 10 * horizon = 900 days, A(900) = 9
    assert invert_all_cause(m, 10.0) == BEYOND_HORIZON


@given(st.lists(specs(), min_size=1, max_size=3), st.floats(1e-4, 0.5))
def test_invert_all_cause_round_trip(transitions, target):
    m = CompetingRisksModel(tuple(transitions), 90.0)
    t = invert_all_cause(m, target)
    if t == BEYOND_HORIZON:
        assert m.all_cause_cumulative(10 * 90.0) < target
    else:
        assert m.all_cause_cumulative(t) == pytest.approx(target, rel=1e-10, abs=1e-12)


def test_invert_mixed_model_with_vector_cap():
    m = CompetingRisksModel((gompertz(0.003, -0.036), weibull(1242.1, 1.11)), 90.0)
    targets = np.array([0.01, 0.05, 5.0])
    t = invert_all_cause(m, targets, cap=np.array([90.0, 90.0, 90.0]))
    assert np.isfinite(t[:2]).all() and t[2] == BEYOND_HORIZON
    np.testing.assert_allclose(m.all_cause_cumulative(t[:2]), targets[:2], rtol=1e-10)


@given(specs(), st.floats(1e-6, 2.0))
def test_inverse_cumulative(spec, target):
    t = inverse_cumulative(spec, target)
    if np.isinf(t):
        # negative Gompertz shape: the cumulative is bounded by scale / |shape|
        assert spec.family == "gompertz" and spec.params[0] / -spec.params[1] <= target
    else:
        assert cumulative_intensity(spec, t) == pytest.approx(target, rel=1e-9)


@given(specs(), st.floats(-2, 2))
def test_unconstrained_round_trip_and_shift(spec, c):
    x = to_unconstrained(spec, 90.0)
    back = from_unconstrained(spec.family, x, 90.0)
    np.testing.assert_allclose(back.params, spec.params, rtol=1e-12, atol=1e-300)
    shifted = from_unconstrained(spec.family, shift_intensity(spec.family, x, c), 90.0)
    ts = np.array([0.5, 10.0, 90.0])
    np.testing.assert_allclose(intensity(shifted, ts), math.exp(c) * intensity(spec, ts), rtol=1e-9)


def test_model_serialization():
    m = CompetingRisksModel((gompertz(0.002, -0.016), weibull(2894.8, 1.1)), 90.0)
    assert CompetingRisksModel.from_dict(m.to_dict()) == m
    assert m.k == 2
    assert m.replace(0, exponential(0.1)).transitions[0] == exponential(0.1)
