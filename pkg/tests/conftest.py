import pytest
from hypothesis import HealthCheck, settings

from crequiv.data import Administrative, Sample
from crequiv.scenarios import EXP_MODEL_1, EXP_MODEL_2
from crequiv.simulation import simulate_arrays, stream

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_sample(model, n, censoring=None, seed=0, key=(0,), group=1):
    censoring = censoring or Administrative(model.horizon)
    times, states = simulate_arrays(model, n, censoring, stream(seed, *key, group))
    return Sample(times, states, model.k, model.horizon, group)


@pytest.fixture
def scenario1_pair():
    return make_sample(EXP_MODEL_1, 500, seed=11, group=1), make_sample(EXP_MODEL_2, 500, seed=11, group=2)
