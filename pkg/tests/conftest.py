import math

import numpy as np
import pytest

from viabkernel.estimation import synthetic_observations
from viabkernel.kernel_analytic import lv_kernel_boundary, lv_upper_z
from viabkernel.kernel_grid import GridSpec
from viabkernel.model import LotkaVolterraParams, State, Thresholds, lv_model

PERU = LotkaVolterraParams.from_kappa(2.25, 0.945, 1.220e-6, 4.845e-8, 67_113e3)
PERU_TH = Thresholds(7e6, 2e5, 2e6, 5e3)
PERU_SPEC = GridSpec(6e6, 2e7, 1e5, 1e6, ny=200, nz=200, control_samples_v=32, control_samples_w=32)

SYNTH_S0 = State(1.2e7, 3e5)
SYNTH_EFFORTS = [(0.3 + 0.15 * math.sin(1.3 * t), 0.4 + 0.1 * math.cos(0.9 * t)) for t in range(10)]


def kernel_samples(rng, n, p=PERU, th=PERU_TH):
    """Uniform draws from the closed-form Lotka-Volterra kernel by rejection."""
    boundary = lv_kernel_boundary(p, th, 400)
    y_hi = boundary[-1][0]
    z_hi = max(z for _, z in boundary) * 1.01
    out = []
    while len(out) < n:
        y = rng.uniform(th.y_min, y_hi, 4 * n)
        z = rng.uniform(th.z_min, z_hi, 4 * n)
        keep = z <= lv_upper_z(p, th, y)
        out += [State(float(a), float(b)) for a, b in zip(y[keep], z[keep])]
    return out[:n]


@pytest.fixture(scope="session")
def peru():
    return PERU


@pytest.fixture(scope="session")
def peru_th():
    return PERU_TH


@pytest.fixture(scope="session")
def peru_model():
    return lv_model(PERU, y_max=PERU_SPEC.y_hi)


@pytest.fixture(scope="session")
def synthetic_obs():
    return synthetic_observations(PERU, SYNTH_S0, SYNTH_EFFORTS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    acceptance = __import__("sys").modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
