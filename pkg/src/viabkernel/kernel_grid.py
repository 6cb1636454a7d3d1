"""Viability kernel approximation on a state raster.

Starting from the raster of the state constraint set, each sweep keeps a cell
when some sampled acceptable effort pair sends its centre into a member cell
of the previous raster.  Sweeps stop when the raster no longer changes, in
which case it is a (discrete) viability domain.

The raster is an approximation with no guaranteed inclusion direction with
respect to the true kernel: it depends on cell-centre tests and on the
effort samples.
"""

from __future__ import annotations

import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ModelEvaluationError, ValidationError
from .model import GrowthModel, Thresholds, effort_floor

logger = logging.getLogger(__name__)

THREADS_ENV = "VIABKERNEL_THREADS"


@dataclass(frozen=True)
class GridSpec:
    y_lo: float
    y_hi: float
    z_lo: float
    z_hi: float
    ny: int = 200
    nz: int = 200
    control_samples_v: int = 32
    control_samples_w: int = 32
    v_max: float = 3.0
    w_max: float = 3.0

    def __post_init__(self):
        bad = []
        if not self.y_lo < self.y_hi:
            bad.append("y_lo must be < y_hi")
        if not self.z_lo < self.z_hi:
            bad.append("z_lo must be < z_hi")
        if self.ny < 2 or self.nz < 2:
            bad.append("ny and nz must be >= 2")
        if self.control_samples_v < 2 or self.control_samples_w < 2:
            bad.append("control sample counts must be >= 2")
        if not (self.v_max > 0 and self.w_max > 0):
            bad.append("v_max and w_max must be > 0")
        if bad:
            raise ValidationError(bad)

    @property
    def dy(self) -> float:
        return (self.y_hi - self.y_lo) / self.ny

    @property
    def dz(self) -> float:
        return (self.z_hi - self.z_lo) / self.nz

    def y_centers(self) -> np.ndarray:
        return self.y_lo + (np.arange(self.ny) + 0.5) * self.dy

    def z_centers(self) -> np.ndarray:
        return self.z_lo + (np.arange(self.nz) + 0.5) * self.dz

    def cell_index(self, y, z):
        """Indices of the cells containing ``(y, z)``; ``-1`` outside the box."""
        iy = np.floor((np.asarray(y) - self.y_lo) / self.dy)
        iz = np.floor((np.asarray(z) - self.z_lo) / self.dz)
        iy = np.where((iy >= 0) & (iy < self.ny), iy, -1)
        iz = np.where((iz >= 0) & (iz < self.nz), iz, -1)
        iy = np.where(np.isfinite(iy), iy, -1).astype(np.int64)
        iz = np.where(np.isfinite(iz), iz, -1).astype(np.int64)
        return iy, iz


@dataclass(frozen=True)
class KernelGrid:
    spec: GridSpec
    member: np.ndarray
    iterations: int = 0
    converged: bool = False

    @property
    def count(self) -> int:
        return int(self.member.sum())

    @property
    def empty(self) -> bool:
        return not self.member.any()


def sample_efforts(floor, cap, n):
    """Effort samples for each entry of ``floor``: shape ``floor.shape + (n,)``.

    Geometric on ``[floor, cap]`` for positive floors, linear on ``[0, cap]``
    for zero floors.  A floor above the cap leaves no sample (all ``nan``).
    Sample sets for ``n`` and ``2n-1`` points are nested.
    """
    floor = np.asarray(floor, dtype=float)
    t = np.linspace(0.0, 1.0, n)
    out = np.empty(floor.shape + (n,))
    pos = floor > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log(cap / np.where(pos, floor, 1.0))
        geo = floor[..., None] * np.exp(ratio[..., None] * t)
    out[...] = np.where(pos[..., None], geo, cap * t)
    # pin the ends exactly so the floor sample keeps its acceptability
    out[..., 0] = floor
    out[..., -1] = np.where(floor <= cap, cap, np.nan)
    out[~np.isfinite(floor) | (floor > cap)] = np.nan
    return out


def compute_v0_grid(spec: GridSpec, th: Thresholds) -> KernelGrid:
    Y, Z = np.meshgrid(spec.y_centers(), spec.z_centers(), indexing="ij")
    member = (Y >= th.y_min) & (Z >= th.z_min)
    if th.catch1_min > 0:
        member &= Y > 0
    if th.catch2_min > 0:
        member &= Z > 0
    return KernelGrid(spec, member, iterations=0, converged=False)


def _thread_count():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _sweep_rows(rows, spec, model, th, prev, ys, zs):
    """Updated membership for raster rows ``rows`` given the frozen raster ``prev``."""
    out = np.zeros((len(rows), spec.nz), dtype=bool)
    for k, i in enumerate(rows):
        cols = np.nonzero(prev[i])[0]
        if cols.size == 0:
            continue
        y = ys[i]
        z = zs[cols]
        v = sample_efforts(effort_floor(th.catch1_min, y), spec.v_max, spec.control_samples_v)
        w = sample_efforts(effort_floor(th.catch2_min, z), spec.w_max, spec.control_samples_w)
        with np.errstate(invalid="ignore", over="ignore"):
            y_next = y * model.r1(y, z[:, None], v[None, :])
            z_next = z[:, None] * model.r2(y, z[:, None], w)
        y_next = np.broadcast_to(y_next, (cols.size, spec.control_samples_v))
        bad_v = ~np.isfinite(y_next) & np.isfinite(v)[None, :]
        bad_w = ~np.isfinite(z_next) & np.isfinite(w)
        if bad_v.any() or bad_w.any():
            raise ModelEvaluationError("growth coefficient is not finite on the grid", (y, None), None)
        iy, _ = spec.cell_index(y_next, spec.z_lo)
        _, iz = spec.cell_index(spec.y_lo, z_next)
        # acceptability of the sampled efforts is explicit, not assumed from sampling
        ok_v = np.isfinite(v)[None, :] & (v[None, :] * y >= th.catch1_min) & (iy >= 0)
        ok_w = np.isfinite(w) & (w * z[:, None] >= th.catch2_min) & (iz >= 0)
        # gather prev[iy[c, a], iz[c, b]] for every cell c and effort pair (a, b)
        hit = prev[np.where(ok_v, iy, 0)[:, :, None], np.where(ok_w, iz, 0)[:, None, :]]
        hit &= ok_v[:, :, None] & ok_w[:, None, :]
        out[k, cols] = hit.any(axis=(1, 2))
    return out


def sweep(spec: GridSpec, model: GrowthModel, th: Thresholds, prev: np.ndarray) -> np.ndarray:
    """One synchronous update of the raster ``prev``."""
    ys, zs = spec.y_centers(), spec.z_centers()
    rows = [i for i in range(spec.ny) if prev[i].any()]
    out = np.zeros_like(prev, dtype=bool)
    if not rows:
        return out
    threads = _thread_count()
    if threads == 1:
        out[rows] = _sweep_rows(rows, spec, model, th, prev, ys, zs)
    else:
        chunks = [rows[j::threads] for j in range(threads) if rows[j::threads]]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(lambda c: (c, _sweep_rows(c, spec, model, th, prev, ys, zs)), chunks)
            for chunk, res in results:
                out[chunk] = res
    return out


def iterate_kernel(spec: GridSpec, model: GrowthModel, th: Thresholds, max_iter: int = 100) -> KernelGrid:
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    current = compute_v0_grid(spec, th).member
    if not current.any():
        return KernelGrid(spec, current, iterations=0, converged=True)
    for k in range(1, max_iter + 1):
        nxt = sweep(spec, model, th, current)
        assert not (nxt & ~current).any(), "raster grew between sweeps"
        if np.array_equal(nxt, current):
            logger.info("raster stationary after %d sweeps (%d cells)", k, int(nxt.sum()))
            return KernelGrid(spec, nxt, iterations=k, converged=True)
        current = nxt
        logger.debug("sweep %d: %d member cells", k, int(current.sum()))
    return KernelGrid(spec, current, iterations=max_iter, converged=False)


def is_viability_domain(grid: KernelGrid, model: GrowthModel, th: Thresholds) -> bool:
    member = np.asarray(grid.member, dtype=bool)
    if member.shape != (grid.spec.ny, grid.spec.nz):
        raise ValidationError("raster shape does not match its grid spec")
    if not member.any():
        return True
    return bool(np.array_equal(sweep(grid.spec, model, th, member), member))


@dataclass(frozen=True)
class Agreement:
    """Cell-wise comparison of a grid raster with a reference membership raster."""

    cells: int
    disagreements: int
    outside_band: int
    band: int

    @property
    def fraction(self) -> float:
        return self.disagreements / self.cells

    def as_text(self) -> str:
        return (
            f"cells = {self.cells}\n"
            f"symmetric_difference = {self.disagreements}\n"
            f"symmetric_difference_fraction = {self.fraction!r}\n"
            f"band_cells = {self.band}\n"
            f"disagreements_outside_band = {self.outside_band}\n"
        )


def reference_raster(spec: GridSpec, mask_fn, pad: int = 0) -> np.ndarray:
    """``mask_fn(Y, Z)`` on the cell centres, extended by ``pad`` cells beyond each box edge."""
    ys = spec.y_lo + (np.arange(-pad, spec.ny + pad) + 0.5) * spec.dy
    zs = spec.z_lo + (np.arange(-pad, spec.nz + pad) + 0.5) * spec.dz
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    return np.asarray(mask_fn(Y, Z), dtype=bool)


def compare_rasters(grid: KernelGrid, mask_fn, band: int = 2) -> Agreement:
    """Symmetric difference against ``mask_fn`` and how many mismatches lie farther than
    ``band`` cells (Chebyshev distance) from the reference boundary."""
    ref = reference_raster(grid.spec, mask_fn, pad=band)
    k = 2 * band + 1
    windows = np.lib.stride_tricks.sliding_window_view(ref, (k, k))
    near_boundary = windows.any(axis=(2, 3)) & ~windows.all(axis=(2, 3))
    inner = ref[band:-band, band:-band] if band else ref
    diff = inner ^ grid.member
    return Agreement(
        cells=int(diff.size),
        disagreements=int(diff.sum()),
        outside_band=int((diff & ~near_boundary).sum()),
        band=band,
    )


def raster_to_csv(grid: KernelGrid) -> str:
    """``y,z,member`` rows, y-major, shortest round-trip floats."""
    buf = io.StringIO()
    buf.write("y,z,member\n")
    ys, zs = grid.spec.y_centers(), grid.spec.z_centers()
    for i, y in enumerate(ys):
        for j, z in enumerate(zs):
            buf.write(f"{float(y)!r},{float(z)!r},{int(grid.member[i, j])}\n")
    return buf.getvalue()


def raster_from_csv(text: str, spec: GridSpec) -> np.ndarray:
    lines = text.strip().splitlines()
    if lines[0].strip() != "y,z,member":
        raise ValidationError("raster CSV must start with header 'y,z,member'")
    flags = [int(line.rsplit(",", 1)[1]) for line in lines[1:]]
    if len(flags) != spec.ny * spec.nz:
        raise ValidationError(f"expected {spec.ny * spec.nz} rows, got {len(flags)}")
    return np.array(flags, dtype=bool).reshape(spec.ny, spec.nz)


def raster_to_rle(member: np.ndarray) -> str:
    """Compact text form: ``ny nz`` then alternating run lengths, starting with non-members."""
    flat = np.asarray(member, dtype=bool).ravel()
    runs = []
    current, length = False, 0
    for flag in flat:
        if flag == current:
            length += 1
        else:
            runs.append(length)
            current, length = flag, 1
    runs.append(length)
    ny, nz = member.shape
    return f"{ny} {nz}\n{' '.join(map(str, runs))}\n"


def raster_from_rle(text: str) -> np.ndarray:
    head, body = text.strip().split("\n", 1)
    ny, nz = map(int, head.split())
    flat = []
    flag = False
    for run in body.split():
        flat.extend([flag] * int(run))
        flag = not flag
    if len(flat) != ny * nz:
        raise ValidationError(f"run lengths cover {len(flat)} cells, expected {ny * nz}")
    return np.array(flat, dtype=bool).reshape(ny, nz)
