"""Lotka-Volterra parameter fitting from biomass and catch series.

The objective is a weighted sum of squared one-step-ahead residuals: each
observed state is pushed one period forward with the observed efforts
(catch / biomass) and compared with the next observation.  It is minimised
by Polak-Ribiere conjugate gradient over transformed coordinates that keep
every iterate admissible::

    theta = (log(R - 1), logit(L), log(alpha), log(beta), log(kappa))

Gradients come from central differences of the objective.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DataError, ViabilityError
from .model import Control, LotkaVolterraParams, State, lv_model, step

logger = logging.getLogger(__name__)

PARAM_NAMES = ("R", "L", "alpha", "beta", "kappa")
OBS_HEADER = ("year", "y_obs", "z_obs", "catch_y", "catch_z")
WEIGHT_HEADER = ("weight_y", "weight_z")


@dataclass(frozen=True)
class ObservationSeries:
    years: np.ndarray
    y_obs: np.ndarray
    z_obs: np.ndarray
    catch_y: np.ndarray
    catch_z: np.ndarray
    weights_y: Optional[np.ndarray] = None
    weights_z: Optional[np.ndarray] = None

    def __post_init__(self):
        arrays = {}
        for name in ("years", "y_obs", "z_obs", "catch_y", "catch_z", "weights_y", "weights_z"):
            value = getattr(self, name)
            if value is not None:
                arrays[name] = np.asarray(value, dtype=float)
                object.__setattr__(self, name, arrays[name])
        n = len(arrays["years"])
        if n < 3:
            raise DataError(f"need at least 3 observations, got {n}")
        for name, arr in arrays.items():
            if arr.shape != (n,):
                raise DataError(f"{name} has length {arr.shape[0]}, expected {n}")
            if not np.isfinite(arr).all():
                raise DataError(f"{name} contains non-finite values")
        for name in ("catch_y", "catch_z", "weights_y", "weights_z"):
            if name in arrays and (arrays[name] < 0).any():
                raise DataError(f"{name} must be nonnegative")
        for bio, catch in (("y_obs", "catch_y"), ("z_obs", "catch_z")):
            bad = np.nonzero((arrays[bio] <= 0) & (arrays[catch] > 0))[0]
            if bad.size:
                raise DataError(f"{bio} is not positive at row {int(bad[0])} where {catch} is recorded")
        # default weighting makes residuals relative to the observed biomass
        if self.weights_y is None:
            object.__setattr__(self, "weights_y", _inverse_square(arrays["y_obs"]))
        if self.weights_z is None:
            object.__setattr__(self, "weights_z", _inverse_square(arrays["z_obs"]))

    def __len__(self):
        return len(self.years)

    @classmethod
    def from_csv(cls, text: str) -> "ObservationSeries":
        reader = csv.reader(io.StringIO(text))
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty observation file") from None
        if tuple(header[:5]) != OBS_HEADER or header[5:] not in ([], list(WEIGHT_HEADER)):
            raise DataError(f"bad header {header}; expected {','.join(OBS_HEADER)}[,{','.join(WEIGHT_HEADER)}]")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {lineno}: expected {len(header)} columns, got {len(row)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(f"row {lineno}, column {col!r}: cannot parse {cell!r}") from None
            rows.append(values)
        if not rows:
            raise DataError("observation file has no data rows")
        cols = np.array(rows).T
        weights = (cols[5], cols[6]) if len(header) == 7 else (None, None)
        return cls(cols[0], cols[1], cols[2], cols[3], cols[4], *weights)

    def to_csv(self, with_weights: bool = True) -> str:
        header = OBS_HEADER + (WEIGHT_HEADER if with_weights else ())
        lines = [",".join(header)]
        for i in range(len(self)):
            row = [self.years[i], self.y_obs[i], self.z_obs[i], self.catch_y[i], self.catch_z[i]]
            if with_weights:
                row += [self.weights_y[i], self.weights_z[i]]
            lines.append(",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def _inverse_square(x):
    with np.errstate(divide="ignore"):
        return np.where(x != 0, 1.0 / np.where(x != 0, x, 1.0) ** 2, 0.0)


def efforts_from_observations(obs: ObservationSeries):
    """Per-year efforts ``(v, w)`` as catch over biomass (zero when nothing was caught)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(obs.catch_y > 0, obs.catch_y / np.where(obs.y_obs > 0, obs.y_obs, 1.0), 0.0)
        w = np.where(obs.catch_z > 0, obs.catch_z / np.where(obs.z_obs > 0, obs.z_obs, 1.0), 0.0)
    return v, w


def synthetic_observations(p: LotkaVolterraParams, s0: State, efforts, years=None) -> ObservationSeries:
    """Noise-free series from ``s0`` under the given effort sequence.

    ``len(efforts)`` periods are simulated, giving one more observation than
    efforts; nothing is caught in the final year.
    """
    model = lv_model(p)
    states = [State(float(s0[0]), float(s0[1]))]
    for v, w in efforts:
        states.append(step(model, states[-1], Control(v, w)))
    y = np.array([s.y for s in states])
    z = np.array([s.z for s in states])
    v = np.array([e[0] for e in efforts] + [0.0])
    w = np.array([e[1] for e in efforts] + [0.0])
    if years is None:
        years = np.arange(len(states), dtype=float)
    return ObservationSeries(np.asarray(years, dtype=float), y, z, v * y, w * z)


def _ssr_vector(x, obs, v, w):
    R, L, alpha, beta, kappa = x
    y, z = obs.y_obs[:-1], obs.z_obs[:-1]
    y_hat = y * (R - (R / kappa) * y - alpha * z - v[:-1])
    z_hat = z * (L + beta * y - w[:-1])
    ry = y_hat - obs.y_obs[1:]
    rz = z_hat - obs.z_obs[1:]
    return float(np.sum(obs.weights_y[1:] * ry * ry) + np.sum(obs.weights_z[1:] * rz * rz))


def weighted_ssr(p: LotkaVolterraParams, obs: ObservationSeries) -> float:
    v, w = efforts_from_observations(obs)
    return _ssr_vector(p.as_vector(), obs, v, w)


def _admissible(x):
    R, L, alpha, beta, kappa = x
    return R > 1 and 0 < L < 1 and alpha > 0 and beta > 0 and kappa > 0


def central_gradient(obs: ObservationSeries, p: LotkaVolterraParams, h: float = 1e-5,
                     diagnostics: Optional[list] = None) -> np.ndarray:
    """Central-difference gradient of :func:`weighted_ssr` in ``(R, L, alpha, beta, kappa)``.

    Each coordinate moves by ``h * max(|x_i|, tiny)``; the step is halved
    until both probes stay admissible, and every shrink is appended to
    ``diagnostics`` when given.
    """
    if not h > 0:
        raise ValueError("h must be > 0")
    v, w = efforts_from_observations(obs)
    x0 = p.as_vector()
    grad = np.empty(5)
    for i in range(5):
        scale = max(abs(x0[i]), 1e-300)
        step_i = h * scale
        for _ in range(60):
            xp, xm = x0.copy(), x0.copy()
            xp[i] += step_i
            xm[i] -= step_i
            if _admissible(xp) and _admissible(xm):
                break
            step_i *= 0.5
            if diagnostics is not None:
                diagnostics.append(f"{PARAM_NAMES[i]}: step shrunk to {step_i:.3g}")
        grad[i] = (_ssr_vector(xp, obs, v, w) - _ssr_vector(xm, obs, v, w)) / (2.0 * step_i)
    return grad


def to_theta(p: LotkaVolterraParams) -> np.ndarray:
    return np.array([
        math.log(p.R - 1.0),
        math.log(p.L / (1.0 - p.L)),
        math.log(p.alpha),
        math.log(p.beta),
        math.log(p.kappa),
    ])


def from_theta(theta) -> LotkaVolterraParams:
    a, b, c, d, e = (float(t) for t in theta)
    return LotkaVolterraParams.from_kappa(
        1.0 + math.exp(a), 1.0 / (1.0 + math.exp(-b)), math.exp(c), math.exp(d), math.exp(e)
    )


def _theta_jacobian(p):
    """Diagonal of d(R, L, alpha, beta, kappa) / d(theta)."""
    return np.array([p.R - 1.0, p.L * (1.0 - p.L), p.alpha, p.beta, p.kappa])


@dataclass
class FitOptions:
    tol: float = 1e-6
    max_iter: int = 500
    h: float = 1e-5
    restart_every: int = 5
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    line_xtol: float = 1e-6


@dataclass
class FitResult:
    params: LotkaVolterraParams
    objective: float
    iterations: int
    converged: bool
    gradient_norm: float
    history: List[float] = field(default_factory=list)

    def as_text(self) -> str:
        p = self.params
        lines = [
            f"R = {p.R!r}",
            f"L = {p.L!r}",
            f"alpha = {p.alpha!r}",
            f"beta = {p.beta!r}",
            f"kappa = {p.kappa!r}",
            f"K = {p.K!r}",
            f"objective = {self.objective!r}",
            f"iterations = {self.iterations}",
            f"converged = {str(self.converged).lower()}",
            f"gradient_norm = {self.gradient_norm!r}",
        ]
        return "\n".join(lines) + "\n"


class FitAborted(ViabilityError):
    """Non-finite objective during the search; ``trace`` holds the objective history."""

    def __init__(self, message, trace):
        self.trace = list(trace)
        super().__init__(f"{message} after {len(self.trace)} iterations")


def _trial_step(phi, f0, t1, xtol):
    """First trial of the backtracking search: Brent line minimum of ``phi`` bracketed from ``(0, t1)``."""
    def safe(t):
        value = phi(t)
        return value if math.isfinite(value) else 1e300

    try:
        res = minimize_scalar(safe, bracket=(0.0, t1), method="brent", options={"xtol": xtol, "maxiter": 100})
    except (ValueError, RuntimeError, FloatingPointError):
        return t1
    return float(res.x) if res.x > 0 and res.fun <= f0 else t1


def fit_conjugate_gradient(obs: ObservationSeries, init: LotkaVolterraParams,
                           opts: Optional[FitOptions] = None) -> FitResult:
    opts = opts or FitOptions()

    def objective(theta):
        return weighted_ssr(from_theta(theta), obs)

    def gradient(theta):
        p = from_theta(theta)
        return central_gradient(obs, p, opts.h) * _theta_jacobian(p)

    theta = to_theta(init)
    f = objective(theta)
    g = gradient(theta)
    history = [f]
    gnorm = float(np.max(np.abs(g)))
    if not math.isfinite(f):
        raise FitAborted("objective is not finite at the initial point", history)
    if opts.max_iter <= 0:
        return FitResult(init, f, 0, False, gnorm, history)
    d = -g
    g_prev = None
    step0 = 1.0
    it = 0
    while it < opts.max_iter and gnorm > opts.tol:
        it += 1
        slope = float(g @ d)
        if slope >= 0:
            d = -g
            slope = float(g @ d)
        trial = min(1.0, max(step0, 1e-4)) / max(1.0, float(np.max(np.abs(d))))
        t = _trial_step(lambda a: objective(theta + a * d), f, trial, opts.line_xtol)
        for _ in range(opts.max_backtracks):
            f_new = objective(theta + t * d)
            if math.isfinite(f_new) and f_new <= f + opts.armijo_c * t * slope:
                break
            t *= opts.backtrack
        else:
            logger.info("line search failed at iteration %d; stopping", it)
            break
        if not math.isfinite(f_new):
            raise FitAborted("objective became non-finite", history)
        assert f_new <= f, "accepted step increased the objective"
        theta = theta + t * d
        f = f_new
        history.append(f)
        g_prev, g = g, gradient(theta)
        gnorm = float(np.max(np.abs(g)))
        step0 = max(t * float(np.max(np.abs(d))), 1e-12)
        if it % opts.restart_every == 0:
            d = -g
            continue
        beta_pr = max(0.0, float(g @ (g - g_prev)) / float(g_prev @ g_prev))
        d = -g + beta_pr * d
        if float(g @ d) >= 0:
            d = -g
    return FitResult(from_theta(theta), f, it, gnorm <= opts.tol, gnorm, history)
