import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viabkernel.errors import PreconditionError, ValidationError
from viabkernel.kernel_analytic import (
    check_conditions_generic,
    kernel_member_generic,
    kernel_member_no_dd,
    lv_kernel_boundary,
    lv_kernel_member,
    lv_max_catch_thresholds,
    lv_sustainable_catch_bound,
    lv_threshold_conditions,
    lv_upper_z,
)
from viabkernel.model import GrowthModel, State, Thresholds, identity_model, lv_model

from conftest import PERU, PERU_TH


def test_peru_conditions(peru_model):
    rep = check_conditions_generic(peru_model, PERU_TH)
    assert rep.satisfied
    assert rep.which_proposition == "lotka_volterra"
    assert rep.r1_at_floor == pytest.approx(1.485607, abs=1e-6)


def test_raised_catch_floor_breaks_conditions(peru_model):
    th = Thresholds(7e6, 2e5, 7e6 * PERU.R, 5e3)
    rep = check_conditions_generic(peru_model, th)
    assert rep.r1_at_floor <= 0 and not rep.satisfied


def test_zero_floor_positive_catch_is_domain_error(peru_model):
    with pytest.raises(ValidationError):
        check_conditions_generic(peru_model, Thresholds(0.0, 2e5, 1.0, 0.0))


def test_generic_membership_examples(peru_model):
    th = PERU_TH
    assert kernel_member_generic(peru_model, th, State(7e6, 2e5))
    assert not kernel_member_generic(peru_model, th, State(7e6 - 1, 2e5))
    assert not kernel_member_generic(peru_model, th, State(7e6, 6.5e5))


def test_generic_requires_conditions(peru_model):
    with pytest.raises(PreconditionError):
        kernel_member_generic(peru_model, Thresholds(7e6, 2e5, 7e6 * PERU.R, 5e3), State(1e7, 3e5))


def test_no_dd_examples(peru_model):
    assert kernel_member_no_dd(peru_model, PERU_TH, State(7e6, 2e5))
    assert not kernel_member_no_dd(peru_model, PERU_TH, State(7e6, 2e6))


def test_no_dd_needs_flags():
    m = GrowthModel(r1=lambda y, z, v: 2.0 - v, r2=lambda y, z, w: 2.0 - w)
    with pytest.raises(PreconditionError):
        kernel_member_no_dd(m, PERU_TH, State(7e6, 2e5))


def test_lv_membership_examples():
    assert lv_kernel_member(PERU, PERU_TH, State(7e6, 2e5))
    assert not lv_kernel_member(PERU, PERU_TH, State(7e6, 5.99e5))
    assert float(lv_upper_z(PERU, PERU_TH, 7e6)) == pytest.approx(598_020, rel=1e-4)


def test_lv_pinch_at_max_catch():
    c1 = lv_max_catch_thresholds(PERU, 7e6, 2e5).c1_star
    th = Thresholds(7e6, 2e5, c1, 5e3)
    assert float(lv_upper_z(PERU, th, 7e6)) == pytest.approx(2e5, rel=1e-9)


def test_lv_membership_precondition():
    with pytest.raises(PreconditionError):
        lv_kernel_member(PERU, Thresholds(7e6, 2e5, 6e6, 5e3), State(1e7, 3e5))


def test_threshold_conditions():
    assert (1 - PERU.L) / PERU.beta == pytest.approx(1_135_191, abs=1)
    z_hi = (PERU.R - 1) / PERU.alpha - PERU.R * (1 - PERU.L) / (PERU.alpha * PERU.beta * PERU.kappa)
    assert z_hi == pytest.approx(993_395, abs=1)
    assert lv_threshold_conditions(PERU, 7e6, 2e5)
    assert not lv_threshold_conditions(PERU, 0.0, 2e5)
    assert lv_threshold_conditions(PERU, 7e6, z_hi)


def test_max_catch_thresholds():
    st_ = lv_max_catch_thresholds(PERU, 7e6, 2e5)
    assert st_.c1_star == pytest.approx(5_399_247, abs=5)
    assert st_.c2_star == pytest.approx(56_830, abs=1)
    y_low = (1 - PERU.L) / PERU.beta
    assert lv_max_catch_thresholds(PERU, y_low, 2e5).c2_star == pytest.approx(0.0, abs=1e-9)
    zero = lv_max_catch_thresholds(PERU, 7e6, 0.0)
    assert zero.c2_star == 0.0
    assert zero.c1_star == pytest.approx(7e6 * (PERU.R - PERU.R * 7e6 / PERU.kappa - 1))


def test_sustainable_catch_bound():
    c1 = lv_max_catch_thresholds(PERU, 7e6, 2e5).c1_star
    assert lv_sustainable_catch_bound(PERU, PERU_TH, State(7e6, 2e5)) == pytest.approx(c1, rel=1e-12)
    assert lv_sustainable_catch_bound(PERU, PERU_TH, State(1e7, 3e5)) == pytest.approx(5_399_247, abs=5)
    assert lv_sustainable_catch_bound(PERU, PERU_TH, State(7e6, 5e6)) == 0.0
    with pytest.raises(PreconditionError):
        lv_sustainable_catch_bound(PERU, PERU_TH, State(1.0, 1.0))


def test_boundary_samples():
    pts = lv_kernel_boundary(PERU, PERU_TH, 50)
    assert len(pts) == 50
    assert pts[0][0] == 7e6 and pts[0][1] == pytest.approx(598_020, rel=1e-4)
    y_end, z_end = pts[-1]
    assert z_end == pytest.approx(2e5, abs=1.0)
    assert float(lv_upper_z(PERU, PERU_TH, y_end + 1.0)) < 2e5
    two = lv_kernel_boundary(PERU, PERU_TH, 2)
    assert two[0] == pts[0] and two[1] == pts[-1]
    assert all(a[0] < b[0] for a, b in zip(pts, pts[1:]))


def test_boundary_empty_kernel():
    # c1 <= c1_star is the same inequality as bound(y_min) >= z_min, so a
    # kernel without its floor corner is reported as a precondition failure
    th = Thresholds(7e6, 9.5e5, 0.0, 0.0)
    assert float(lv_upper_z(PERU, th, 7e6)) < 9.5e5
    with pytest.raises(PreconditionError):
        lv_kernel_boundary(PERU, th, 10)


def test_identity_model_kernel_is_v0():
    th = Thresholds(1.0, 2.0, 0.0, 0.0)
    m = identity_model()
    assert kernel_member_generic(m, th, State(1.0, 2.0))
    assert not kernel_member_generic(m, th, State(0.5, 2.0))


def test_vectorized_membership_matches_scalar(rng):
    y = rng.uniform(5e6, 3e7, 200)
    z = rng.uniform(0, 1e6, 200)
    vec = lv_kernel_member(PERU, PERU_TH, (y, z))
    assert list(vec) == [lv_kernel_member(PERU, PERU_TH, State(a, b)) for a, b in zip(y, z)]


@settings(max_examples=200, deadline=None)
@given(st.floats(7e6, 6e7), st.floats(2e5, 1.2e6))
def test_lv_formula_matches_generic(y, z):
    m = lv_model(PERU)
    assert lv_kernel_member(PERU, PERU_TH, State(y, z)) == kernel_member_generic(m, PERU_TH, State(y, z))


@settings(max_examples=200, deadline=None)
@given(st.floats(7e6, 6e7), st.floats(2e5, 1.2e6))
def test_membership_monotone_in_z(y, z):
    # lowering the predator never leaves the kernel while above its floor
    if lv_kernel_member(PERU, PERU_TH, State(y, z)):
        assert lv_kernel_member(PERU, PERU_TH, State(y, 0.5 * (z + 2e5)))
