import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viabkernel.errors import ModelEvaluationError, ValidationError
from viabkernel.model import (
    Control,
    LotkaVolterraParams,
    State,
    Thresholds,
    config_acceptable,
    effort_floor,
    identity_model,
    lv_model,
    state_in_v0,
    step,
)

from conftest import PERU, PERU_TH


def test_kappa_from_carrying_capacity():
    p = LotkaVolterraParams(R=2.25, L=0.945, alpha=1.22e-6, beta=4.845e-8, K=37_285e3)
    assert p.kappa == pytest.approx(67_113e3, rel=1e-4)
    assert PERU.K == pytest.approx(37_285e3, rel=1e-4)


def test_r1_at_floor_without_harvest(peru_model):
    assert peru_model.r1(7e6, 2e5, 0.0) == pytest.approx(1.771321, abs=1e-6)


def test_r2_ignores_predator(peru_model):
    assert peru_model.r2(1e7, 0.0, 0.1) == peru_model.r2(1e7, 1e6, 0.1)


def test_efforts_at_hint_kill_growth(peru_model):
    e = peru_model.control_upper_hint
    for y in (1e6, 7e6, 2e7):
        assert peru_model.r1(y, 2e5, e) <= 0
        assert peru_model.r2(y, 2e5, e) <= 0


@pytest.mark.parametrize(
    "kw",
    [
        dict(R=1.0, L=0.5, alpha=1.0, beta=1.0, K=1.0),
        dict(R=2.0, L=1.0, alpha=1.0, beta=1.0, K=1.0),
        dict(R=2.0, L=0.5, alpha=0.0, beta=1.0, K=1.0),
        dict(R=2.0, L=0.5, alpha=1.0, beta=-1.0, K=1.0),
        dict(R=2.0, L=0.5, alpha=1.0, beta=1.0, K=math.nan),
    ],
)
def test_invalid_params_rejected(kw):
    with pytest.raises(ValidationError):
        LotkaVolterraParams(**kw)


def test_validation_lists_every_violation():
    with pytest.raises(ValidationError) as exc:
        LotkaVolterraParams(R=0.5, L=2.0, alpha=1.0, beta=1.0, K=1.0)
    assert len(exc.value.violations) == 2


def test_negative_threshold_rejected():
    with pytest.raises(ValidationError):
        Thresholds(-1.0, 0.0, 0.0, 0.0)


def test_config_acceptable_examples():
    th = PERU_TH
    assert config_acceptable(th, State(7e6, 2e5), Control(2e6 / 7e6, 5e3 / 2e5))
    assert not config_acceptable(th, State(7e6, 2e5), Control(0.2, 0.025))
    zero = Thresholds(0, 0, 0, 0)
    assert config_acceptable(zero, State(0.0, 5.0), Control(0.0, 3.0))


def test_state_in_v0_examples():
    assert state_in_v0(PERU_TH, State(7e6, 2e5))
    assert not state_in_v0(PERU_TH, State(7e6 - 1, 2e5))
    assert state_in_v0(PERU_TH, State(7e6, 2e5))


def test_step_lv():
    m = lv_model(PERU)
    s = step(m, State(1e7, 3e5), Control(0.2, 0.1))
    assert s.y == pytest.approx(1e7 * (2.25 - 2.25e7 / PERU.kappa - 1.22e-6 * 3e5 - 0.2))
    assert s.z == pytest.approx(3e5 * (0.945 + 4.845e-8 * 1e7 - 0.1))


def test_step_rejects_nonfinite():
    with pytest.raises(ModelEvaluationError):
        step(lv_model(PERU), State(math.inf, 1.0), Control(0.0, 0.0))


def test_identity_model_fixed_points():
    m = identity_model()
    assert step(m, State(3.0, 4.0), Control(9.0, 9.0)) == State(3.0, 4.0)


def test_effort_floor_edges():
    assert effort_floor(0.0, 0.0) == 0.0
    assert effort_floor(1.0, 0.0) == math.inf
    np.testing.assert_array_equal(effort_floor(2.0, np.array([1.0, 4.0])), [2.0, 0.5])


@settings(max_examples=300, deadline=None)
@given(
    st.floats(1e-3, 1e9, allow_nan=False),
    st.floats(1e-3, 1e9, allow_nan=False),
)
def test_effort_floor_delivers_catch(catch, biomass):
    e = float(effort_floor(catch, biomass))
    assert e * biomass >= catch
    assert np.nextafter(e, 0.0) * biomass < catch or np.nextafter(e, 0.0) * biomass >= catch * (1 - 1e-15)
