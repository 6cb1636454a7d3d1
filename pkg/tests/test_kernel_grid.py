import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viabkernel.errors import ValidationError
from viabkernel.kernel_analytic import lv_kernel_member
from viabkernel.kernel_grid import (
    GridSpec,
    KernelGrid,
    compare_rasters,
    compute_v0_grid,
    is_viability_domain,
    iterate_kernel,
    raster_from_csv,
    raster_from_rle,
    raster_to_csv,
    raster_to_rle,
    sample_efforts,
)
from viabkernel.model import Thresholds, identity_model, lv_model

from conftest import PERU, PERU_SPEC, PERU_TH


@pytest.fixture(scope="module")
def peru_grid():
    return iterate_kernel(PERU_SPEC, lv_model(PERU, PERU_SPEC.y_hi), PERU_TH)


def test_gridspec_validation():
    with pytest.raises(ValidationError):
        GridSpec(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        GridSpec(0.0, 1.0, 0.0, 1.0, control_samples_v=1)


def test_cell_index():
    spec = GridSpec(0.0, 10.0, 0.0, 5.0, ny=10, nz=5)
    iy, iz = spec.cell_index(np.array([0.0, 9.99, 10.0, -0.1]), np.array([0.5, 4.9, 1.0, 1.0]))
    assert list(iy) == [0, 9, -1, -1]
    assert list(iz) == [0, 4, 1, 1]


def test_v0_quadrant():
    th = Thresholds(1.0, 2.0, 0.0, 0.0)
    spec = GridSpec(0.0, 2.0, 0.0, 4.0, ny=10, nz=10)
    v0 = compute_v0_grid(spec, th)
    Y, Z = np.meshgrid(spec.y_centers(), spec.z_centers(), indexing="ij")
    np.testing.assert_array_equal(v0.member, (Y >= 1.0) & (Z >= 2.0))


def test_v0_all_zero_thresholds():
    spec = GridSpec(0.0, 1.0, 0.0, 1.0, ny=5, nz=5)
    assert compute_v0_grid(spec, Thresholds(0, 0, 0, 0)).member.all()


def test_v0_peru_area_fraction():
    spec = GridSpec(0.0, 2e7, 0.0, 1e6, ny=100, nz=100)
    v0 = compute_v0_grid(spec, PERU_TH)
    cols = v0.member.any(axis=1).sum()
    rows = v0.member.any(axis=0).sum()
    assert abs(cols - 65) <= 2 and abs(rows - 80) <= 2
    assert v0.count == cols * rows


def test_sample_efforts_geometric_and_nested():
    s = sample_efforts(np.array([0.1, 0.0, 5.0]), 3.0, 5)
    assert s[0, 0] == 0.1 and s[0, -1] == 3.0
    np.testing.assert_allclose(s[0, 1:] / s[0, :-1], s[0, 1] / s[0, 0])
    np.testing.assert_allclose(s[1], np.linspace(0, 3, 5))
    assert np.isnan(s[2]).all()
    fine = sample_efforts(np.array([0.1]), 3.0, 9)
    np.testing.assert_allclose(fine[0, ::2], s[0], rtol=1e-14)


def test_peru_converges_and_matches_closed_form(peru_grid):
    assert peru_grid.converged and peru_grid.iterations <= 5
    agreement = compare_rasters(peru_grid, lambda Y, Z: lv_kernel_member(PERU, PERU_TH, (Y, Z)))
    assert agreement.outside_band == 0
    assert agreement.fraction <= 0.02


def test_converged_raster_is_viability_domain(peru_grid):
    assert is_viability_domain(peru_grid, lv_model(PERU, PERU_SPEC.y_hi), PERU_TH)


def test_v0_is_not_viability_domain():
    v0 = compute_v0_grid(PERU_SPEC, PERU_TH)
    assert not is_viability_domain(v0, lv_model(PERU, PERU_SPEC.y_hi), PERU_TH)


def test_empty_raster_is_viability_domain():
    g = KernelGrid(PERU_SPEC, np.zeros((200, 200), dtype=bool))
    assert is_viability_domain(g, lv_model(PERU), PERU_TH)


def test_empty_kernel_when_floor_beyond_box():
    g = iterate_kernel(PERU_SPEC, lv_model(PERU), Thresholds(3e7, 2e5, 0.0, 0.0))
    assert g.empty and g.iterations == 0 and g.converged


def test_identity_kernel_is_v0():
    spec = GridSpec(0.0, 10.0, 0.0, 10.0, ny=20, nz=20)
    th = Thresholds(3.0, 4.0, 0.0, 0.0)
    g = iterate_kernel(spec, identity_model(), th)
    assert g.converged and g.iterations == 1
    np.testing.assert_array_equal(g.member, compute_v0_grid(spec, th).member)


def test_iteration_shrinks_monotonically():
    model = lv_model(PERU, PERU_SPEC.y_hi)
    spec = GridSpec(6e6, 2e7, 1e5, 1e6, ny=60, nz=60, control_samples_v=12, control_samples_w=12)
    v0 = compute_v0_grid(spec, PERU_TH).member
    v1 = iterate_kernel(spec, model, PERU_TH, max_iter=1).member
    assert not (v1 & ~v0).any()


def test_threads_give_same_raster(monkeypatch):
    spec = GridSpec(6e6, 2e7, 1e5, 1e6, ny=50, nz=50, control_samples_v=10, control_samples_w=10)
    model = lv_model(PERU, spec.y_hi)
    single = iterate_kernel(spec, model, PERU_TH).member
    monkeypatch.setenv("VIABKERNEL_THREADS", "4")
    np.testing.assert_array_equal(iterate_kernel(spec, model, PERU_TH).member, single)


def test_csv_and_rle_round_trip(peru_grid):
    text = raster_to_csv(peru_grid)
    assert text.startswith("y,z,member\n")
    np.testing.assert_array_equal(raster_from_csv(text, PERU_SPEC), peru_grid.member)
    np.testing.assert_array_equal(raster_from_rle(raster_to_rle(peru_grid.member)), peru_grid.member)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=4, max_size=64).filter(lambda xs: len(xs) % 4 == 0))
def test_rle_round_trip_property(flags):
    m = np.array(flags).reshape(4, -1)
    np.testing.assert_array_equal(raster_from_rle(raster_to_rle(m)), m)
