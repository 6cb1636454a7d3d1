"""Command-line front end.

Subcommands::

    viabkernel check    --config peru.cfg
    viabkernel kernel   --config peru.cfg --out out/ --svg
    viabkernel simulate --config peru.cfg --out out/
    viabkernel fit      --config peru.cfg --data observations.csv

Exit status: 0 success, 1 condition or constraint failure, 2 nonconvergence,
64 usage or configuration error.  Set ``VIABKERNEL_THREADS`` to spread the
grid sweeps over several threads.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import FitSection, RunConfig, load_config
from .errors import ConfigError, DataError, PreconditionError, ValidationError, ViabilityError
from .estimation import FitOptions, ObservationSeries, efforts_from_observations, fit_conjugate_gradient
from .kernel_analytic import (
    check_conditions_generic,
    kernel_member_generic,
    lv_kernel_boundary,
    lv_kernel_member,
    lv_max_catch_thresholds,
    lv_preconditions,
    lv_threshold_conditions,
)
from .kernel_grid import compare_rasters, iterate_kernel, raster_to_csv, raster_to_rle
from .model import LotkaVolterraParams, State
from .viable_control import FeedbackPolicy, analytic_kernel, simulate

logger = logging.getLogger("viabkernel")

EXIT_OK = 0
EXIT_CONSTRAINT = 1
EXIT_NONCONVERGED = 2
EXIT_USAGE = 64


def fmt(x) -> str:
    return f"{x:.6g}"


@dataclass
class RunReport:
    command: str
    lines: List[str] = field(default_factory=list)
    files: List[Path] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK

    def add(self, key, value):
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = fmt(value)
        self.lines.append(f"{key} = {value}")

    def write(self, path: Path, text: str):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files.append(path)

    def render(self) -> str:
        out = list(self.lines)
        out += [f"file = {p}" for p in self.files]
        out += [f"time_{k}_s = {fmt(v)}" for k, v in self.timings.items()]
        out.append(f"exit_status = {self.exit_code}")
        return "\n".join(out)


def _boundary_csv(points) -> str:
    return "y,z\n" + "".join(f"{y!r},{z!r}\n" for y, z in points)


def _lv_boundary(cfg: RunConfig):
    p = cfg.model.params()
    if p is None or lv_preconditions(p, cfg.thresholds):
        return None
    return lv_kernel_boundary(p, cfg.thresholds, cfg.output.boundary_samples)


def cmd_check(cfg: RunConfig, out_dir: Optional[Path] = None, svg: bool = False) -> RunReport:
    rep = RunReport("check")
    th = cfg.thresholds
    model = cfg.model.build()
    cond = check_conditions_generic(model, th)
    violations = []
    rep.lines.append(cond.as_text())
    if not cond.satisfied:
        violations.append("growth coefficients at the floor point are below one")
    p = cfg.model.params()
    if p is not None:
        lv_ok = lv_threshold_conditions(p, th.y_min, th.z_min)
        stars = lv_max_catch_thresholds(p, th.y_min, th.z_min)
        rep.add("lv_threshold_conditions", lv_ok)
        rep.add("c1_star", stars.c1_star)
        rep.add("c2_star", stars.c2_star)
        rep.add("catch1_min", th.catch1_min)
        rep.add("catch2_min", th.catch2_min)
        if not lv_ok:
            violations.append(
                f"biomass floors outside y_min >= {fmt((1 - p.L) / p.beta)} "
                f"and z_min <= {fmt((p.R - 1) / p.alpha - p.R * (1 - p.L) / (p.alpha * p.beta * p.kappa))}"
            )
        if th.catch1_min > stars.c1_star:
            violations.append(f"catch1_min {fmt(th.catch1_min)} > c1_star {fmt(stars.c1_star)}")
        if th.catch2_min > stars.c2_star:
            violations.append(f"catch2_min {fmt(th.catch2_min)} > c2_star {fmt(stars.c2_star)}")
    for v in violations:
        rep.add("violation", v)
    rep.add("status", "ok" if not violations else "violated")
    rep.exit_code = EXIT_OK if not violations else EXIT_CONSTRAINT
    return rep


def cmd_kernel(cfg: RunConfig, out_dir: Path, svg: bool = False) -> RunReport:
    if cfg.grid is None:
        raise ConfigError("the kernel command needs a [grid] section (grid.y_lo, grid.y_hi, ...)")
    rep = RunReport("kernel")
    th, spec = cfg.thresholds, cfg.grid.spec
    model = cfg.model.build(y_max=spec.y_hi)
    t0 = time.perf_counter()
    grid = iterate_kernel(spec, model, th, cfg.grid.max_iter)
    rep.timings["grid"] = time.perf_counter() - t0
    rep.add("cells", spec.ny * spec.nz)
    rep.add("member_cells", grid.count)
    rep.add("iterations", grid.iterations)
    rep.add("converged", grid.converged)
    if grid.empty:
        rep.add("note", "kernel raster is empty")
    rep.write(out_dir / "kernel_grid.csv", raster_to_csv(grid))
    rep.write(out_dir / "kernel_grid.rle", raster_to_rle(grid.member))

    boundary = None
    p = cfg.model.params()
    mask_fn = None
    if p is not None:
        problems = lv_preconditions(p, th)
        if problems:
            rep.add("note", "closed-form kernel not applicable: " + "; ".join(problems))
        else:
            boundary = lv_kernel_boundary(p, th, cfg.output.boundary_samples)
            rep.write(out_dir / "kernel_boundary.csv", _boundary_csv(boundary))
            mask_fn = lambda Y, Z: lv_kernel_member(p, th, (Y, Z))  # noqa: E731
    elif check_conditions_generic(model, th).satisfied:
        mask_fn = lambda Y, Z: kernel_member_generic(model, th, (Y, Z))  # noqa: E731
    if mask_fn is not None:
        agreement = compare_rasters(grid, mask_fn, band=2)
        rep.add("symmetric_difference_fraction", agreement.fraction)
        rep.add("disagreements_outside_band", agreement.outside_band)
        rep.write(out_dir / "kernel_agreement.txt", agreement.as_text())
    if svg:
        from .plotting import plot_kernel

        path = out_dir / "kernel.svg"
        plot_kernel(path, grid=grid, boundary=boundary, thresholds=th, title="viability kernel")
        rep.files.append(path)
    rep.exit_code = EXIT_OK if grid.converged else EXIT_NONCONVERGED
    return rep


def cmd_simulate(cfg: RunConfig, out_dir: Path, svg: bool = False) -> RunReport:
    if cfg.simulate is None:
        raise ConfigError("the simulate command needs simulate.y0 and simulate.z0")
    rep = RunReport("simulate")
    th, sim = cfg.thresholds, cfg.simulate
    model = cfg.model.build()
    policy = FeedbackPolicy(sim.policy, analytic_kernel(model, th))
    t0 = time.perf_counter()
    traj = simulate(model, th, policy, State(sim.y0, sim.z0), sim.horizon)
    rep.timings["simulate"] = time.perf_counter() - t0
    rep.write(out_dir / "trajectory.csv", traj.to_csv())
    rep.add("policy", sim.policy)
    rep.add("horizon", sim.horizon)
    first = traj.first_violation
    if first is None:
        rep.lines.append("viable over horizon")
    else:
        rep.lines.append(f"first violation at t={first}")
    if svg:
        from .plotting import plot_kernel

        path = out_dir / "trajectory.svg"
        plot_kernel(path, boundary=_lv_boundary(cfg), thresholds=th, trajectory=traj, title="trajectory")
        rep.files.append(path)
    rep.exit_code = EXIT_OK if first is None else EXIT_CONSTRAINT
    return rep


def cmd_fit(cfg: RunConfig, out_dir: Path, svg: bool = False, data_path=None) -> RunReport:
    rep = RunReport("fit")
    fit = cfg.fit or FitSection()
    if data_path is None:
        if fit.data is None:
            raise ConfigError("no observation file: set fit.data or pass --data")
        data_path = cfg.resolve(fit.data)
    try:
        text = Path(data_path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read observation file {data_path}: {exc}") from None
    obs = ObservationSeries.from_csv(text)
    if fit.init is not None:
        init = LotkaVolterraParams.from_kappa(*fit.init)
    elif cfg.model.params() is not None:
        init = cfg.model.params()
    else:
        raise ConfigError("fit needs fit.init_* values or Lotka-Volterra model parameters")
    t0 = time.perf_counter()
    result = fit_conjugate_gradient(obs, init, FitOptions(tol=fit.tol, max_iter=fit.max_iter, h=fit.h))
    rep.timings["fit"] = time.perf_counter() - t0
    rep.write(out_dir / "fit_result.txt", result.as_text())
    log = "iteration,objective\n" + "".join(f"{i},{f!r}\n" for i, f in enumerate(result.history))
    rep.write(out_dir / "fit_log.csv", log)
    for name, value in zip(("R", "L", "alpha", "beta", "kappa", "K"), (*result.params.as_vector(), result.params.K)):
        rep.add(name, float(value))
    rep.add("objective", result.objective)
    rep.add("iterations", result.iterations)
    rep.add("converged", result.converged)
    rep.add("gradient_norm", result.gradient_norm)
    if svg:
        from .plotting import plot_fit, plot_objective

        p = result.params
        v, w = efforts_from_observations(obs)
        y, z = obs.y_obs[:-1], obs.z_obs[:-1]
        pred_y = y * (p.R - p.R * y / p.kappa - p.alpha * z - v[:-1])
        pred_z = z * (p.L + p.beta * y - w[:-1])
        plot_fit(out_dir / "fit.svg", obs, pred_y, pred_z)
        plot_objective(out_dir / "fit_objective.svg", np.array(result.history))
        rep.files += [out_dir / "fit.svg", out_dir / "fit_objective.svg"]
    rep.exit_code = EXIT_OK if result.converged else EXIT_NONCONVERGED
    return rep


COMMANDS = {"check": cmd_check, "kernel": cmd_kernel, "simulate": cmd_simulate, "fit": cmd_fit}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="run configuration file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (overrides output.dir)")
    common.add_argument("--svg", action="store_true", default=argparse.SUPPRESS, help="also write SVG figures")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="viabkernel",
        description="Viability kernels, viable harvesting controls and Lotka-Volterra fitting.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.add_parser("check", parents=[common], help="check growth and threshold conditions")
    sub.add_parser("kernel", parents=[common], help="grid kernel, closed-form boundary and agreement")
    sub.add_parser("simulate", parents=[common], help="simulate a feedback policy")
    p_fit = sub.add_parser("fit", parents=[common], help="fit Lotka-Volterra parameters to observations")
    p_fit.add_argument("--data", help="observation CSV (overrides fit.data)")
    return parser


class _UsageExit(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    opts = vars(args)
    logging.basicConfig(
        level=logging.INFO if opts.get("verbose") else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if "config" not in opts:
        print("viabkernel: error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(opts["config"])
        out_dir = Path(opts.get("out") or cfg.output.dir)
        svg = bool(opts.get("svg")) or cfg.output.svg
        if args.command == "fit":
            report = cmd_fit(cfg, out_dir, svg, data_path=opts.get("data"))
        else:
            report = COMMANDS[args.command](cfg, out_dir, svg)
    except (ConfigError, ValidationError, DataError) as exc:
        print(f"viabkernel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"viabkernel: precondition failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except ViabilityError as exc:
        print(f"viabkernel: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    print(report.render())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
