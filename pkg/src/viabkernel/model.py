"""Controlled two-species harvest dynamics and the acceptable set.

The state is a pair of biomasses ``(y, z)`` in tonnes and the control a pair
of harvesting efforts ``(v, w)`` per period.  Catches are ``v*y`` and ``w*z``.
One step of the dynamics multiplies each biomass by its growth coefficient::

    y' = y * r1(y, z, v)
    z' = z * r2(y, z, w)

Growth coefficients are plain callables that must broadcast over numpy
arrays, so the same model drives both scalar simulation and grid sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ModelEvaluationError, ValidationError


class State(NamedTuple):
    y: float
    z: float


class Control(NamedTuple):
    v: float
    w: float


@dataclass(frozen=True)
class Thresholds:
    """Biomass floors ``y_min``, ``z_min`` (t) and catch floors (t/period)."""

    y_min: float
    z_min: float
    catch1_min: float
    catch2_min: float

    def __post_init__(self):
        bad = [
            f"{name} must be finite and >= 0 (got {getattr(self, name)!r})"
            for name in ("y_min", "z_min", "catch1_min", "catch2_min")
            if not (math.isfinite(getattr(self, name)) and getattr(self, name) >= 0)
        ]
        if bad:
            raise ValidationError(bad)


@dataclass(frozen=True)
class LotkaVolterraParams:
    """Discrete Lotka-Volterra parameters with density dependence in the prey.

    ``K`` is the prey carrying capacity; ``kappa = R*K/(R-1)`` is always
    derived from it.  Use :meth:`from_kappa` when ``kappa`` is the quantity
    at hand.
    """

    R: float
    L: float
    alpha: float
    beta: float
    K: float

    def __post_init__(self):
        bad = []
        if not self.R > 1:
            bad.append(f"R must be > 1 (got {self.R!r})")
        if not 0 < self.L < 1:
            bad.append(f"L must lie in (0, 1) (got {self.L!r})")
        for name in ("alpha", "beta", "K"):
            value = getattr(self, name)
            if not value > 0:
                bad.append(f"{name} must be > 0 (got {value!r})")
        for name in ("R", "L", "alpha", "beta", "K"):
            if not math.isfinite(getattr(self, name)):
                bad.append(f"{name} must be finite")
        if bad:
            raise ValidationError(bad)

    @property
    def kappa(self) -> float:
        return self.R * self.K / (self.R - 1.0)

    @classmethod
    def from_kappa(cls, R, L, alpha, beta, kappa):
        if not R > 1:
            raise ValidationError(f"R must be > 1 (got {R!r})")
        return cls(R=R, L=L, alpha=alpha, beta=beta, K=kappa * (R - 1.0) / R)

    def as_vector(self) -> np.ndarray:
        """Parameters in fitting order ``(R, L, alpha, beta, kappa)``."""
        return np.array([self.R, self.L, self.alpha, self.beta, self.kappa])

    @classmethod
    def from_vector(cls, x):
        return cls.from_kappa(*(float(t) for t in x))


@dataclass(frozen=True)
class GrowthModel:
    """Pair of growth coefficients plus the structural facts the closed forms rely on.

    ``r1_control_slope``/``r2_control_slope`` are set when a coefficient is
    affine in its effort (``r(., e) = r(., 0) + slope*e``); they enable
    closed-form effort roots.  ``params`` keeps the Lotka-Volterra
    parameters when the model was built by :func:`lv_model`.
    """

    r1: Callable
    r2: Callable
    r1_decreasing_in_v: bool = True
    r2_decreasing_in_w: bool = True
    r2_depends_on_z: bool = True
    r2_increasing_in_y: bool = False
    control_upper_hint: float = 10.0
    r1_control_slope: Optional[float] = None
    r2_control_slope: Optional[float] = None
    params: Optional[LotkaVolterraParams] = field(default=None, compare=False)
    name: str = "generic"


def lv_model(p: LotkaVolterraParams, y_max: Optional[float] = None) -> GrowthModel:
    """Growth model of the harvested Lotka-Volterra system.

    ``y_max`` is the largest prey biomass of the state box of interest; it
    only sets ``control_upper_hint`` and defaults to ``kappa``.
    """
    if not isinstance(p, LotkaVolterraParams):
        raise ValidationError("lv_model expects LotkaVolterraParams")
    R, L, alpha, beta, kappa = p.R, p.L, p.alpha, p.beta, p.kappa
    if y_max is None:
        y_max = kappa

    def r1(y, z, v):
        return R - (R / kappa) * y - alpha * z - v

    def r2(y, z, w):
        return L + beta * y - w + 0.0 * z

    return GrowthModel(
        r1=r1,
        r2=r2,
        r1_decreasing_in_v=True,
        r2_decreasing_in_w=True,
        r2_depends_on_z=False,
        r2_increasing_in_y=True,
        control_upper_hint=max(R, L + beta * y_max) + 1.0,
        r1_control_slope=-1.0,
        r2_control_slope=-1.0,
        params=p,
        name="lotka_volterra",
    )


def identity_model() -> GrowthModel:
    """Dynamics that leave every state in place whatever the effort."""

    def one(a, b, e):
        return np.ones(np.broadcast(a, b, e).shape)[()] * 1.0

    return GrowthModel(
        r1=one,
        r2=one,
        r2_depends_on_z=False,
        control_upper_hint=1.0,
        name="identity",
    )


def step(model: GrowthModel, s: State, u: Control) -> State:
    """Advance one period.  Negative biomasses are returned as is."""
    if not (math.isfinite(s[0]) and math.isfinite(s[1])):
        raise ModelEvaluationError("non-finite state", s, u)
    y, z = float(s[0]), float(s[1])
    v, w = float(u[0]), float(u[1])
    g1 = float(model.r1(y, z, v))
    g2 = float(model.r2(y, z, w))
    if not (math.isfinite(g1) and math.isfinite(g2)):
        raise ModelEvaluationError("growth coefficient is not finite", State(y, z), Control(v, w))
    return State(y * g1, z * g2)


def effort_floor(catch_min, biomass):
    """Smallest float effort ``e`` with ``e*biomass >= catch_min``.

    Zero catch floor gives zero effort; a positive floor on a non-positive
    biomass gives ``inf`` (no finite effort delivers the catch).  Works
    elementwise on arrays.
    """
    catch_min = np.asarray(catch_min, dtype=float)
    biomass = np.asarray(biomass, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(biomass > 0, catch_min / np.where(biomass > 0, biomass, 1.0), np.inf)
    e = np.where(catch_min == 0, 0.0, e)
    # float rounding can leave e*biomass a few ulps short of the floor
    for _ in range(4):
        with np.errstate(invalid="ignore"):
            short = np.isfinite(e) & (e * biomass < catch_min)
        if not short.any():
            break
        e = np.where(short, np.nextafter(e, np.inf), e)
    return e[()] if e.ndim == 0 else e


def config_acceptable(th: Thresholds, s: State, u: Control) -> bool:
    y, z = s
    v, w = u
    return bool(y >= th.y_min and z >= th.z_min and v * y >= th.catch1_min and w * z >= th.catch2_min)


def state_in_v0(th: Thresholds, s: State) -> bool:
    """Biomass floors only; effort feasibility at zero biomass is left to the kernel code."""
    return bool(s[0] >= th.y_min and s[1] >= th.z_min)
