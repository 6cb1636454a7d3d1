"""Run configuration: flat ``section.key = value`` text files.

Blank lines and ``#`` comments are ignored.  Numbers accept scientific
notation and ``_`` digit separators (``7_000_000``, ``67_113e3``).  Example::

    model.type = lotka_volterra
    model.R = 2.25
    model.kappa = 67_113e3
    thresholds.y_min = 7_000_000

A relative ``fit.data`` path is resolved against the directory of the
config file; ``output.dir`` is relative to the working directory.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ValidationError
from .kernel_grid import GridSpec
from .model import GrowthModel, LotkaVolterraParams, Thresholds, identity_model, lv_model
from .viable_control import POLICY_KINDS

MODEL_TYPES = ("lotka_volterra", "identity")
LV_KEYS = ("R", "L", "alpha", "beta", "kappa")


@dataclass(frozen=True)
class ModelSection:
    type: str = "lotka_volterra"
    R: Optional[float] = None
    L: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    kappa: Optional[float] = None

    def params(self) -> Optional[LotkaVolterraParams]:
        if self.type != "lotka_volterra":
            return None
        return LotkaVolterraParams.from_kappa(self.R, self.L, self.alpha, self.beta, self.kappa)

    def build(self, y_max: Optional[float] = None) -> GrowthModel:
        if self.type == "identity":
            return identity_model()
        return lv_model(self.params(), y_max)


@dataclass(frozen=True)
class GridSection:
    spec: GridSpec
    max_iter: int = 100


@dataclass(frozen=True)
class SimulateSection:
    y0: float
    z0: float
    horizon: int = 100
    policy: str = "min_effort"


@dataclass(frozen=True)
class FitSection:
    data: Optional[str] = None
    tol: float = 1e-6
    max_iter: int = 500
    h: float = 1e-5
    init: Optional[tuple] = None


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    svg: bool = False
    boundary_samples: int = 200


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection
    thresholds: Thresholds
    grid: Optional[GridSection] = None
    simulate: Optional[SimulateSection] = None
    fit: Optional[FitSection] = None
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: Path = field(default=Path("."), compare=False)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _number(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _integer(key, text):
    value = _number(key, text)
    if not math.isfinite(value) or value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(value)


def _boolean(key, text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.count(".") != 1 or not all(key.split(".")):
            raise ConfigError(f"line {lineno}: key {key!r} must look like section.key")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


_KNOWN = {
    "model": {"type", "R", "L", "alpha", "beta", "kappa", "K"},
    "thresholds": {"y_min", "z_min", "catch1_min", "catch2_min"},
    "grid": {f.name for f in dataclasses.fields(GridSpec)} | {"max_iter"},
    "simulate": {"y0", "z0", "horizon", "policy"},
    "fit": {"data", "tol", "max_iter", "h"} | {f"init_{k}" for k in LV_KEYS},
    "output": {"dir", "svg", "boundary_samples"},
}


def parse_config(text: str, base_dir=".") -> RunConfig:
    pairs = read_pairs(text)
    sections = {}
    for key, value in pairs.items():
        section, name = key.split(".")
        if section not in _KNOWN:
            raise ConfigError(f"unknown section {section!r}")
        if name not in _KNOWN[section]:
            raise ConfigError(f"unknown key {key!r}")
        sections.setdefault(section, {})[name] = value
    try:
        return _build(sections, Path(base_dir))
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def _build(sections, base_dir):
    m = sections.get("model", {})
    mtype = m.get("type", "lotka_volterra")
    if mtype not in MODEL_TYPES:
        raise ConfigError(f"model.type must be one of {MODEL_TYPES}, got {mtype!r}")
    lv = {}
    if mtype == "lotka_volterra":
        for k in ("R", "L", "alpha", "beta"):
            if k not in m:
                raise ConfigError(f"model.{k} is required for lotka_volterra")
            lv[k] = _number(f"model.{k}", m[k])
        if ("kappa" in m) == ("K" in m):
            raise ConfigError("give exactly one of model.kappa or model.K")
        if "kappa" in m:
            lv["kappa"] = _number("model.kappa", m["kappa"])
        else:
            K = _number("model.K", m["K"])
            lv["kappa"] = lv["R"] * K / (lv["R"] - 1.0) if lv["R"] != 1 else float("nan")
    model = ModelSection(type=mtype, **lv)
    model.params()  # validates parameter invariants

    t = sections.get("thresholds", {})
    missing = [k for k in ("y_min", "z_min", "catch1_min", "catch2_min") if k not in t]
    if missing:
        raise ConfigError(f"missing thresholds: {', '.join('thresholds.' + k for k in missing)}")
    thresholds = Thresholds(**{k: _number(f"thresholds.{k}", v) for k, v in t.items()})

    grid = None
    if "grid" in sections:
        g = dict(sections["grid"])
        max_iter = _integer("grid.max_iter", g.pop("max_iter", "100"))
        if max_iter < 1:
            raise ConfigError("grid.max_iter must be >= 1")
        kw = {}
        for f in dataclasses.fields(GridSpec):
            if f.name in g:
                conv = _integer if f.type in ("int", int) else _number
                kw[f.name] = conv(f"grid.{f.name}", g[f.name])
        for k in ("y_lo", "y_hi", "z_lo", "z_hi"):
            if k not in kw:
                raise ConfigError(f"grid.{k} is required")
        grid = GridSection(GridSpec(**kw), max_iter)

    simulate = None
    if "simulate" in sections:
        s = sections["simulate"]
        if "y0" not in s or "z0" not in s:
            raise ConfigError("simulate.y0 and simulate.z0 are required")
        policy = s.get("policy", "min_effort")
        if policy not in POLICY_KINDS:
            raise ConfigError(f"simulate.policy must be one of {POLICY_KINDS}")
        horizon = _integer("simulate.horizon", s.get("horizon", "100"))
        if horizon < 1:
            raise ConfigError("simulate.horizon must be >= 1")
        simulate = SimulateSection(_number("simulate.y0", s["y0"]), _number("simulate.z0", s["z0"]), horizon, policy)

    fit = None
    if "fit" in sections:
        f = sections["fit"]
        init_keys = [f"init_{k}" for k in LV_KEYS]
        present = [k for k in init_keys if k in f]
        if present and len(present) != len(init_keys):
            raise ConfigError("give all of fit.init_R, init_L, init_alpha, init_beta, init_kappa or none")
        init = tuple(_number(f"fit.{k}", f[k]) for k in init_keys) if present else None
        if init is not None:
            LotkaVolterraParams.from_kappa(*init)
        fit = FitSection(
            data=f.get("data"),
            tol=_number("fit.tol", f.get("tol", "1e-6")),
            max_iter=_integer("fit.max_iter", f.get("max_iter", "500")),
            h=_number("fit.h", f.get("h", "1e-5")),
            init=init,
        )
        if fit.max_iter < 0 or not fit.tol > 0 or not fit.h > 0:
            raise ConfigError("fit.max_iter must be >= 0, fit.tol and fit.h > 0")

    o = sections.get("output", {})
    output = OutputSection(
        dir=o.get("dir", "out"),
        svg=_boolean("output.svg", o.get("svg", "false")),
        boundary_samples=_integer("output.boundary_samples", o.get("boundary_samples", "200")),
    )
    if output.boundary_samples < 2:
        raise ConfigError("output.boundary_samples must be >= 2")
    return RunConfig(model, thresholds, grid, simulate, fit, output, base_dir)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; :func:`parse_config` of it gives back an equal config."""
    lines = [f"model.type = {cfg.model.type}"]
    if cfg.model.type == "lotka_volterra":
        lines += [f"model.{k} = {getattr(cfg.model, k)!r}" for k in LV_KEYS]
    lines += [f"thresholds.{k} = {getattr(cfg.thresholds, k)!r}"
              for k in ("y_min", "z_min", "catch1_min", "catch2_min")]
    if cfg.grid is not None:
        lines += [f"grid.{f.name} = {getattr(cfg.grid.spec, f.name)!r}" for f in dataclasses.fields(GridSpec)]
        lines.append(f"grid.max_iter = {cfg.grid.max_iter}")
    if cfg.simulate is not None:
        s = cfg.simulate
        lines += [f"simulate.y0 = {s.y0!r}", f"simulate.z0 = {s.z0!r}",
                  f"simulate.horizon = {s.horizon}", f"simulate.policy = {s.policy}"]
    if cfg.fit is not None:
        f = cfg.fit
        if f.data is not None:
            lines.append(f"fit.data = {f.data}")
        lines += [f"fit.tol = {f.tol!r}", f"fit.max_iter = {f.max_iter}", f"fit.h = {f.h!r}"]
        if f.init is not None:
            lines += [f"fit.init_{k} = {v!r}" for k, v in zip(LV_KEYS, f.init)]
    o = cfg.output
    lines += [f"output.dir = {o.dir}", f"output.svg = {str(o.svg).lower()}",
              f"output.boundary_samples = {o.boundary_samples}"]
    return "\n".join(lines) + "\n"


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("viabkernel") / "data" / name))


def load_config(path) -> RunConfig:
    """Read a config file; a bare name like ``peru.cfg`` falls back to the bundled copy."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_path(p.name)
        if p.parent == Path(".") and bundled.exists():
            p = bundled
        else:
            raise ConfigError(f"config file not found: {path}")
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=p.parent)
