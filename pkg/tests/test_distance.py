import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crequiv.distance import global_distance, sup_norm_diff
from crequiv.hazards import CompetingRisksModel, exponential, gompertz, intensity, weibull
from crequiv.scenarios import EXP_MODEL_1, EXP_MODEL_2, GW_MODEL_1, GW_MODEL_2


@st.composite
def smooth_specs(draw, family=None):
    fam = family or draw(st.sampled_from(["exponential", "gompertz", "weibull"]))
    if fam == "exponential":
        return exponential(draw(st.floats(1e-4, 0.01)))
    if fam == "gompertz":
        return gompertz(draw(st.floats(1e-4, 0.01)), draw(st.floats(-0.05, 0.02)))
    return weibull(draw(st.floats(100.0, 5000.0)), draw(st.floats(1.0, 3.0)))


def test_exponential_pair():
    r = sup_norm_diff(exponential(0.0011), exponential(0.0017), 90.0)
    assert r.value == pytest.approx(0.0006, abs=1e-18)
    assert r.argmax_t == 1.0  # smallest t on a flat difference


def test_identical_specs():
    assert sup_norm_diff(gompertz(0.003, -0.036), gompertz(0.003, -0.036), 90.0).value == 0.0
    assert global_distance(GW_MODEL_1, GW_MODEL_1).d_hat == 0.0


def test_gompertz_pair_brute_force():
    a, b = gompertz(0.003, -0.036), gompertz(0.006, -0.043)
    ts = np.linspace(1.0, 90.0, 100_001)
    brute = np.max(np.abs(intensity(a, ts) - intensity(b, ts)))
    r = sup_norm_diff(a, b, 90.0)
    assert r.value == pytest.approx(brute, rel=1e-10)
    assert r.value == pytest.approx(0.00285354745995281, rel=1e-12)  # mpmath at t = 1
    # from t = 0 the difference is 0.003
    assert sup_norm_diff(a, b, 90.0, t_min=0.0).value == pytest.approx(0.003, rel=1e-12)


def test_scenario_distances():
    assert global_distance(EXP_MODEL_1, EXP_MODEL_2).d_hat == pytest.approx(0.0006, abs=1e-15)
    r = global_distance(GW_MODEL_1, GW_MODEL_2)
    assert 0.0025 <= r.d_hat <= 0.0032
    assert r.argmax_j == 2
    d = [s.value for s in r.per_transition]
    assert d[0] == pytest.approx(8.660985e-5, rel=1e-5)
    assert d[2] == pytest.approx(3.975992e-4, rel=1e-5)


def test_mismatch_errors():
    with pytest.raises(ValueError):
        global_distance(EXP_MODEL_1, CompetingRisksModel((exponential(0.1),), 90.0))
    with pytest.raises(ValueError):
        global_distance(EXP_MODEL_1, CompetingRisksModel(EXP_MODEL_1.transitions, 100.0))


def test_boundary_singularity_flag():
    r = sup_norm_diff(weibull(1000.0, 0.7), weibull(1000.0, 1.1), 90.0, t_min=1e-6)
    assert r.boundary_singularity and r.argmax_t == 1e-6


@given(smooth_specs(), smooth_specs())
def test_symmetry(a, b):
    assert sup_norm_diff(a, b, 90.0).value == pytest.approx(sup_norm_diff(b, a, 90.0).value, rel=1e-12, abs=1e-18)


@given(smooth_specs(), smooth_specs())
def test_grid_refinement_stability(a, b):
    d1 = sup_norm_diff(a, b, 90.0, grid=2001).value
    d2 = sup_norm_diff(a, b, 90.0, grid=4001).value
    assert d2 == pytest.approx(d1, rel=1e-8, abs=1e-15)


@given(st.lists(smooth_specs(), min_size=6, max_size=6))
def test_triangle_bound(specs):
    m1 = CompetingRisksModel(tuple(specs[:2]), 90.0)
    m2 = CompetingRisksModel(tuple(specs[2:4]), 90.0)
    m3 = CompetingRisksModel(tuple(specs[4:]), 90.0)
    d13 = global_distance(m1, m3).d_hat
    assert d13 <= global_distance(m1, m2).d_hat + global_distance(m2, m3).d_hat + 1e-14


@given(st.floats(1e-4, 0.01), st.floats(1e-4, 0.01))
def test_exponential_closed_form(a, b):
    assert sup_norm_diff(exponential(a), exponential(b), 90.0).value == abs(a - b)
