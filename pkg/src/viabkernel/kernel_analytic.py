"""Closed-form viability kernels of the harvested two-species model.

Three levels of generality:

* generic growth coefficients decreasing in effort, kernel valid when both
  coefficients at the floor point ``(y_min, z_min)`` under floor efforts are
  at least one (:func:`check_conditions_generic`);
* predator without density dependence, where the predator inequality is
  implied by the others (:func:`kernel_member_no_dd`);
* the Lotka-Volterra model, where the kernel is the region under an
  explicit curve (:func:`lv_kernel_member`, :func:`lv_kernel_boundary`).

Membership predicates accept scalars or numpy arrays for ``s``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ValidationError
from .model import GrowthModel, LotkaVolterraParams, State, Thresholds, effort_floor

logger = logging.getLogger(__name__)

GENERIC = "generic"
NO_DENSITY_DEPENDENCE = "no_density_dependence"
LOTKA_VOLTERRA = "lotka_volterra"


@dataclass(frozen=True)
class ConditionReport:
    r1_at_floor: float
    r2_at_floor: float
    satisfied: bool
    which_proposition: str = GENERIC

    def as_text(self) -> str:
        return "\n".join(
            [
                f"which_proposition = {self.which_proposition}",
                f"r1_at_floor = {self.r1_at_floor:.6g}",
                f"r2_at_floor = {self.r2_at_floor:.6g}",
                f"satisfied = {str(self.satisfied).lower()}",
            ]
        )


@dataclass(frozen=True)
class MaxCatchThresholds:
    """Largest catch floors compatible with the growth conditions (may be negative)."""

    c1_star: float
    c2_star: float


def check_conditions_generic(model: GrowthModel, th: Thresholds) -> ConditionReport:
    if th.y_min <= 0 and th.catch1_min > 0:
        raise ValidationError("y_min must be > 0 when catch1_min > 0")
    if th.z_min <= 0 and th.catch2_min > 0:
        raise ValidationError("z_min must be > 0 when catch2_min > 0")
    v = effort_floor(th.catch1_min, th.y_min)
    w = effort_floor(th.catch2_min, th.z_min)
    r1 = float(model.r1(th.y_min, th.z_min, v))
    r2 = float(model.r2(th.y_min, th.z_min, w))
    if model.params is not None:
        tag = LOTKA_VOLTERRA
    elif not model.r2_depends_on_z:
        tag = NO_DENSITY_DEPENDENCE
    else:
        tag = GENERIC
    return ConditionReport(r1, r2, r1 >= 1 and r2 >= 1, tag)


def _require_conditions(model, th):
    report = check_conditions_generic(model, th)
    if not report.satisfied:
        raise PreconditionError(
            "growth coefficients at the floor point are below one "
            f"(r1={report.r1_at_floor:.6g}, r2={report.r2_at_floor:.6g}); "
            "the closed-form kernel does not apply"
        )
    return report


def _floor_inequalities(model, th, y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    in_v0 = (y >= th.y_min) & (z >= th.z_min)
    # outside V0 the floor efforts may be undefined; mask them to a safe point
    ys = np.where(in_v0, y, max(th.y_min, 1.0))
    zs = np.where(in_v0, z, max(th.z_min, 1.0))
    v = effort_floor(th.catch1_min, ys)
    w = effort_floor(th.catch2_min, zs)
    prey_ok = ys * model.r1(ys, zs, v) >= th.y_min
    pred_ok = zs * model.r2(ys, zs, w) >= th.z_min
    return in_v0, prey_ok, pred_ok


def _result(mask):
    mask = np.asarray(mask)
    return bool(mask) if mask.ndim == 0 else mask


def kernel_member_generic(model: GrowthModel, th: Thresholds, s) -> bool:
    _require_conditions(model, th)
    in_v0, prey_ok, pred_ok = _floor_inequalities(model, th, s[0], s[1])
    return _result(in_v0 & prey_ok & pred_ok)


def kernel_member_no_dd(model: GrowthModel, th: Thresholds, s) -> bool:
    """Membership when the predator coefficient ignores ``z`` and grows with ``y``."""
    if model.r2_depends_on_z or not model.r2_increasing_in_y:
        raise PreconditionError(
            "model does not declare a predator coefficient independent of z and increasing in y"
        )
    _require_conditions(model, th)
    in_v0, prey_ok, _ = _floor_inequalities(model, th, s[0], s[1])
    return _result(in_v0 & prey_ok)


def lv_threshold_conditions(p: LotkaVolterraParams, y_min: float, z_min: float) -> bool:
    y_low = (1.0 - p.L) / p.beta
    z_high = (p.R - 1.0) / p.alpha - p.R * (1.0 - p.L) / (p.alpha * p.beta * p.kappa)
    return bool(y_min >= y_low and z_min <= z_high)


def lv_max_catch_thresholds(p: LotkaVolterraParams, y_min: float, z_min: float) -> MaxCatchThresholds:
    c1 = y_min * (p.R - (p.R / p.kappa) * y_min - p.alpha * z_min - 1.0)
    c2 = z_min * (p.L + p.beta * y_min - 1.0)
    return MaxCatchThresholds(c1, c2)


def lv_preconditions(p: LotkaVolterraParams, th: Thresholds) -> list:
    """Violated hypotheses of the Lotka-Volterra kernel formula (empty when it applies)."""
    problems = []
    if not lv_threshold_conditions(p, th.y_min, th.z_min):
        problems.append("biomass floors violate y_min >= (1-L)/beta or the z_min upper bound")
    stars = lv_max_catch_thresholds(p, th.y_min, th.z_min)
    if th.catch1_min > stars.c1_star:
        problems.append(f"catch1_min={th.catch1_min:.6g} exceeds c1_star={stars.c1_star:.6g}")
    if th.catch2_min > stars.c2_star:
        problems.append(f"catch2_min={th.catch2_min:.6g} exceeds c2_star={stars.c2_star:.6g}")
    return problems


def lv_upper_z(p: LotkaVolterraParams, th: Thresholds, y):
    """Upper predator bound of the Lotka-Volterra kernel at prey biomass ``y``."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = (p.R * (p.kappa - y) / p.kappa - (th.catch1_min + th.y_min) / y) / p.alpha
    return out[()] if out.ndim == 0 else out


def lv_kernel_member(p: LotkaVolterraParams, th: Thresholds, s) -> bool:
    problems = lv_preconditions(p, th)
    if problems:
        raise PreconditionError("; ".join(problems))
    y = np.asarray(s[0], dtype=float)
    z = np.asarray(s[1], dtype=float)
    ys = np.where(y >= th.y_min, y, max(th.y_min, 1.0))
    mask = (y >= th.y_min) & (z >= th.z_min) & (z <= lv_upper_z(p, th, ys))
    return _result(mask)


def lv_sustainable_catch_bound(p: LotkaVolterraParams, th: Thresholds, s: State) -> float:
    """Largest prey catch floor keeping ``s`` in the kernel, capped by ``c1_star``, floored at 0."""
    y, z = s
    if not (y >= th.y_min and z >= th.z_min):
        raise PreconditionError(f"state {tuple(s)} is outside the biomass floors")
    c1_star = lv_max_catch_thresholds(p, th.y_min, th.z_min).c1_star
    local = y * (p.R - p.R * y / p.kappa - p.alpha * z) - th.y_min
    return max(0.0, min(c1_star, local))


def lv_kernel_boundary(p: LotkaVolterraParams, th: Thresholds, n: int, tol: float = 1.0) -> list:
    """Samples of the kernel's upper curve, ``n`` points ordered by increasing ``y``.

    The prey range ends at the largest ``y`` where the curve is still above
    ``z_min`` (bisection to ``tol`` tonnes).  Returns ``[]`` when the kernel
    is empty.
    """
    if n < 2:
        raise ValidationError("n must be >= 2")
    problems = lv_preconditions(p, th)
    if problems:
        raise PreconditionError("; ".join(problems))

    def bound(y):
        return float(lv_upper_z(p, th, y))

    if th.y_min <= 0 or bound(th.y_min) < th.z_min:
        logger.warning("empty kernel: upper curve at y_min lies below z_min")
        return []
    # the curve is concave in y and negative at y = kappa, so one crossing lies in between
    lo, hi = th.y_min, p.kappa
    while bound(hi) >= th.z_min:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bound(mid) >= th.z_min:
            lo = mid
        else:
            hi = mid
    ys = np.linspace(th.y_min, lo, n)
    return [(float(y), max(th.z_min, bound(y))) for y in ys]
