"""Viable efforts, feedback selections and trajectory simulation.

At a kernel state the viable efforts are those in the box
``[c1/y, v_hat] x [c2/z, w_hat]`` whose successor is again in the kernel,
where ``v_hat``/``w_hat`` drive each biomass exactly to its floor in one
period.  ``(v_hat, w_hat)`` is always viable: it lands on ``(y_min, z_min)``.
The floor efforts ``(c1/y, c2/z)`` are acceptable but need not be viable
(a large predator stock can outgrow the kernel under floor effort).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import (
    ModelContractError,
    ModelEvaluationError,
    NoSolutionError,
    PolicyError,
    PreconditionError,
    ValidationError,
)
from .kernel_analytic import check_conditions_generic, kernel_member_generic, lv_kernel_member
from .model import Control, GrowthModel, State, Thresholds, config_acceptable, effort_floor, step

logger = logging.getLogger(__name__)

BISECT_RTOL = 1e-10
BISECT_MAXITER = 200
PROJECTION_HALVINGS = 60
# inward nudge on bisected efforts, relative to the box width; keeps successors off the kernel boundary
BOUNDARY_MARGIN = 1e-9

MIN_EFFORT = "min_effort"
MAX_EFFORT = "max_effort"
MIDPOINT = "midpoint"
POLICY_KINDS = (MIN_EFFORT, MAX_EFFORT, MIDPOINT)


@dataclass(frozen=True)
class ControlBox:
    v_lo: float
    v_hi: float
    w_lo: float
    w_hi: float

    def contains(self, u: Control) -> bool:
        return bool(self.v_lo <= u[0] <= self.v_hi and self.w_lo <= u[1] <= self.w_hi)

    @property
    def midpoint(self) -> Control:
        return Control(0.5 * (self.v_lo + self.v_hi), 0.5 * (self.w_lo + self.w_hi))


@dataclass
class Trajectory:
    states: List[State] = field(default_factory=list)
    controls: List[Control] = field(default_factory=list)
    acceptable: List[bool] = field(default_factory=list)

    @property
    def first_violation(self) -> Optional[int]:
        for t, ok in enumerate(self.acceptable):
            if not ok:
                return t
        return None

    def to_csv(self) -> str:
        lines = ["t,y,z,v,w,acceptable"]
        for t, s in enumerate(self.states):
            if t < len(self.controls):
                u = self.controls[t]
                ok = int(self.acceptable[t])
                lines.append(f"{t},{float(s.y)!r},{float(s.z)!r},{float(u.v)!r},{float(u.w)!r},{ok}")
            else:
                lines.append(f"{t},{float(s.y)!r},{float(s.z)!r},,,")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FeedbackPolicy:
    kind: str
    kernel: Callable[[State], bool]

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValidationError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")


def analytic_kernel(model: GrowthModel, th: Thresholds) -> Callable[[State], bool]:
    """Closed-form kernel predicate for ``model``: the Lotka-Volterra curve when available."""
    if model.params is not None:
        p = model.params
        return lambda s: lv_kernel_member(p, th, s)
    return lambda s: kernel_member_generic(model, th, s)


def _largest_root(g, lo, hi):
    """Largest ``e`` in ``[lo, hi]`` with ``g(e) >= 0`` for ``g`` decreasing, ``g(lo) >= 0 > g(hi)``."""
    for _ in range(BISECT_MAXITER):
        if hi - lo <= BISECT_RTOL * max(abs(hi), 1.0):
            break
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def _hat_effort(coef, biomass, target, floor, slope, hint, other, which):
    """Effort sending ``biomass * coef(e)`` to ``target``, never below ``floor``."""
    def g(e):
        return biomass * float(coef(e)) - target

    if g(floor) < 0:
        raise NoSolutionError(f"{which}: floor effort already drives biomass below its floor")
    if slope is not None:
        e = (target / biomass - float(coef(0.0))) / slope
        e = max(e, floor)
        # rounding may leave the successor a few ulps under the floor
        for _ in range(64):
            if g(e) >= 0 or e <= floor:
                break
            e = float(np.nextafter(e, -np.inf))
        return max(e, floor)
    hi = max(hint, floor)
    if g(hi) >= 0:
        raise ModelContractError(
            f"{which}: coefficient does not drop the biomass to its floor at effort {hi!r} ({other})"
        )
    return _largest_root(g, floor, hi)


def hat_controls(model: GrowthModel, th: Thresholds, s: State):
    """Largest efforts ``(v_hat, w_hat)`` whose successor sits exactly on the biomass floors."""
    y, z = float(s[0]), float(s[1])
    if not (y >= th.y_min and z >= th.z_min and y > 0 and z > 0):
        raise NoSolutionError(f"state {(y, z)} is outside the biomass floors")
    v_lo = float(effort_floor(th.catch1_min, y))
    w_lo = float(effort_floor(th.catch2_min, z))
    v_hat = _hat_effort(
        lambda v: model.r1(y, z, v), y, th.y_min, v_lo, model.r1_control_slope,
        model.control_upper_hint, f"y={y!r}, z={z!r}", "prey",
    )
    w_hat = _hat_effort(
        lambda w: model.r2(y, z, w), z, th.z_min, w_lo, model.r2_control_slope,
        model.control_upper_hint, f"y={y!r}, z={z!r}", "predator",
    )
    return v_hat, w_hat


def control_box(model: GrowthModel, th: Thresholds, s: State) -> ControlBox:
    v_hat, w_hat = hat_controls(model, th, s)
    return ControlBox(
        float(effort_floor(th.catch1_min, s[0])), v_hat,
        float(effort_floor(th.catch2_min, s[1])), w_hat,
    )


def _require_hypotheses(model, th):
    report = check_conditions_generic(model, th)
    if not report.satisfied:
        raise PreconditionError("growth conditions at the floor point fail; viable-control set unknown")


def _member_in_box(model, th, s, box, u, kernel=None):
    if not box.contains(u):
        return False
    nxt = step(model, s, u)
    if kernel is None:
        return bool(kernel_member_generic(model, th, nxt))
    return bool(kernel(nxt))


def viable_control_member(model: GrowthModel, th: Thresholds, s: State, u: Control) -> bool:
    _require_hypotheses(model, th)
    box = control_box(model, th, s)
    return _member_in_box(model, th, s, box, Control(float(u[0]), float(u[1])))


def _bisect_smallest(ok, lo, hi):
    """Smallest parameter in ``[lo, hi]`` passing ``ok`` given ``ok(hi)`` and not ``ok(lo)``."""
    for _ in range(PROJECTION_HALVINGS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _least_viable(model, th, s, box, kernel):
    """Lowest-effort viable control: floor if viable, else raise predator effort, then prey effort."""
    def ok(v, w):
        return _member_in_box(model, th, s, box, Control(v, w), kernel)

    if ok(box.v_lo, box.w_lo):
        return Control(box.v_lo, box.w_lo)
    if ok(box.v_lo, box.w_hi):
        w = _bisect_smallest(lambda w: ok(box.v_lo, w), box.w_lo, box.w_hi)
        nudged = min(w + BOUNDARY_MARGIN * (box.w_hi - box.w_lo), box.w_hi)
        return Control(box.v_lo, nudged if ok(box.v_lo, nudged) else w)
    if ok(box.v_hi, box.w_hi):
        v = _bisect_smallest(lambda v: ok(v, box.w_hi), box.v_lo, box.v_hi)
        nudged = min(v + BOUNDARY_MARGIN * (box.v_hi - box.v_lo), box.v_hi)
        return Control(nudged if ok(nudged, box.w_hi) else v, box.w_hi)
    raise ModelContractError(f"no viable effort found at {tuple(s)}")


def feedback(policy: FeedbackPolicy, model: GrowthModel, th: Thresholds, s: State) -> Control:
    """Viable effort pair selected by ``policy`` at kernel state ``s``.

    ``min_effort`` returns the floor efforts when they are viable and
    otherwise the smallest increase (predator effort first) that restores
    viability.  ``midpoint`` starts at the box centre and halves the
    distance to the ``min_effort`` control, ``v`` first, then ``w``.
    """
    s = State(float(s[0]), float(s[1]))
    if not policy.kernel(s):
        raise PolicyError(f"state {tuple(s)} is not in the kernel")
    _require_hypotheses(model, th)
    box = control_box(model, th, s)
    if policy.kind == MAX_EFFORT:
        u = Control(box.v_hi, box.w_hi)
        if _member_in_box(model, th, s, box, u, policy.kernel):
            return u
        return _least_viable(model, th, s, box, policy.kernel)
    target = _least_viable(model, th, s, box, policy.kernel)
    if policy.kind == MIN_EFFORT:
        return target
    v, w = box.midpoint
    for _ in range(PROJECTION_HALVINGS):
        if _member_in_box(model, th, s, box, Control(v, w), policy.kernel):
            return Control(v, w)
        v = target.v + 0.5 * (v - target.v)
    for _ in range(PROJECTION_HALVINGS):
        if _member_in_box(model, th, s, box, Control(v, w), policy.kernel):
            return Control(v, w)
        w = target.w + 0.5 * (w - target.w)
    return target


def _fallback_control(th, s):
    v = float(effort_floor(th.catch1_min, s[0])) if s[0] > 0 else 0.0
    w = float(effort_floor(th.catch2_min, s[1])) if s[1] > 0 else 0.0
    return Control(v if math.isfinite(v) else 0.0, w if math.isfinite(w) else 0.0)


def simulate(model: GrowthModel, th: Thresholds, policy: FeedbackPolicy, s0: State, horizon: int) -> Trajectory:
    """Closed-loop run over ``horizon`` periods.

    Outside the kernel the floor efforts are applied; violations are
    recorded in ``acceptable`` and the run continues.
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    traj = Trajectory(states=[State(float(s0[0]), float(s0[1]))])
    s = traj.states[0]
    for _ in range(horizon):
        in_kernel = bool(np.isfinite(s).all()) and bool(policy.kernel(s))
        u = feedback(policy, model, th, s) if in_kernel else _fallback_control(th, s)
        traj.controls.append(u)
        traj.acceptable.append(config_acceptable(th, s, u))
        try:
            s = step(model, s, u)
        except ModelEvaluationError:
            s = State(math.nan, math.nan)
        traj.states.append(s)
    return traj
