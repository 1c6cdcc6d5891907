"""Non-equilibrium density ensembles on the lattice.

A density is evolved by backtracking: every lattice point is integrated
from the output time back to t = 0, and since the ratio f = rho/|psi|^2 is
conserved along trajectories, the evolved density at the lattice point is
|psi(x,t)|^2 * f(x(0), 0).  Points whose backtracking fails are masked out,
as are the lattice points within the excluded margin of coarse cells along
the walls (the velocity field diverges near the wall nodes and those points
dominate the cost while contributing almost nothing).

Relaxation is quantified by the coarse-grained H-function: the relative
entropy of the cell-averaged density against the cell-averaged equilibrium,
both averaged over the same backtrackable points so the masking bias
cancels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _engine
from .guidance import GuidanceSpec
from .integrate import IntegratorConfig, Status
from .wavefield import BOX_SIDE, MODE_NORM, WaveState

# Overlapping smoothing windows used for the figure grids.
SMOOTH_POINTS = 105
SMOOTH_SPACING = math.pi / 128
SMOOTH_OFFSET = 3 * math.pi / 32
SMOOTH_HALF_WINDOW = math.pi / 32

_NOT_ATTEMPTED = -1


class DensitySpec(enum.Enum):
    """Initial ensemble densities: equilibrium, the ground-state density,
    and its four quadrant contractions."""

    EQUILIBRIUM = "equilibrium"
    RHO0 = "rho0"
    RHO1 = "rho1"
    RHO2 = "rho2"
    RHO3 = "rho3"
    RHO4 = "rho4"

    @staticmethod
    def parse(name: str) -> "DensitySpec":
        return DensitySpec(str(name).strip().lower())


# Quadrant origin of each contracted density.
_QUADRANT = {
    DensitySpec.RHO1: (0.0, 0.0),
    DensitySpec.RHO2: (math.pi / 2, 0.0),
    DensitySpec.RHO3: (0.0, math.pi / 2),
    DensitySpec.RHO4: (math.pi / 2, math.pi / 2),
}


@dataclass(frozen=True)
class LatticeGeometry:
    """R x R lattice of cell-centered points with C x C coarse cells."""

    resolution: int = 1024
    cells: int = 32
    margin: int = 2

    def __post_init__(self):
        if self.resolution % self.cells != 0:
            raise ValueError("lattice resolution must be divisible by the cell count")
        if self.margin < 0 or 2 * self.margin >= self.cells:
            raise ValueError("margin must leave at least one interior cell strip")

    @property
    def spacing(self) -> float:
        return BOX_SIDE / self.resolution

    @property
    def block(self) -> int:
        return self.resolution // self.cells

    def coords(self) -> np.ndarray:
        """Lattice coordinates (k + 1/2) * pi / R along one axis."""
        return (np.arange(self.resolution) + 0.5) * self.spacing

    def attempted_mask(self) -> np.ndarray:
        """True where a lattice point is outside the excluded wall margin."""
        idx = np.arange(self.resolution) // self.block
        keep = (idx >= self.margin) & (idx < self.cells - self.margin)
        return np.outer(keep, keep)


@dataclass
class DensityField:
    """Density values on the lattice with a validity mask."""

    geometry: LatticeGeometry
    values: np.ndarray          # (R, R); nan where mask is False
    mask: np.ndarray            # (R, R) bool
    time: float

    @property
    def resolution(self) -> int:
        return self.geometry.resolution

    def masked_total(self) -> float:
        """Mass estimate: sum of valid values times the lattice cell area."""
        return float(np.sum(self.values[self.mask]) * self.geometry.spacing ** 2)


@dataclass
class CoarseField:
    """Cell-averaged density; cells with no valid lattice points carry nan."""

    values: np.ndarray          # (C, C)
    counts: np.ndarray          # (C, C) valid lattice points per cell
    excluded_margin: int

    @property
    def cells(self) -> int:
        return self.values.shape[0]

    @property
    def cell_area(self) -> float:
        return (BOX_SIDE / self.cells) ** 2


@dataclass
class SmoothedGrid:
    """Window-averaged density on the fixed 105 x 105 figure grid."""

    points: np.ndarray          # (105,) coordinates along each axis
    values: np.ndarray          # (105, 105); nan where the window had no valid points
    counts: np.ndarray


@dataclass
class BacktrackResult:
    """Backtracked origins of all attempted lattice points at one time."""

    geometry: LatticeGeometry
    time: float
    spec: GuidanceSpec
    origins: np.ndarray         # (R, R, 2); nan where not attempted or failed
    status: np.ndarray          # (R, R) int; -1 marks margin points (not attempted)
    steps: np.ndarray           # (R, R) int

    @property
    def ok_mask(self) -> np.ndarray:
        return self.status == int(Status.OK)

    @property
    def attempted(self) -> np.ndarray:
        return self.status != _NOT_ATTEMPTED

    @property
    def backtrack_pct(self) -> float:
        attempted = int(np.sum(self.attempted))
        return 100.0 * float(np.sum(self.ok_mask)) / attempted


@dataclass(frozen=True)
class RelaxationReport:
    hbar: float
    backtrack_pct: float
    time: float
    spec: GuidanceSpec
    density: DensitySpec


def initial_density(spec: DensitySpec, state: WaveState, x):
    """Initial density at points x (shape (..., 2) or a single pair)."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 1
    x1 = arr[..., 0]
    x2 = arr[..., 1]
    if spec is DensitySpec.EQUILIBRIUM:
        out = state.density(x1, x2, 0.0)
    elif spec is DensitySpec.RHO0:
        out = MODE_NORM ** 2 * np.sin(x1) ** 2 * np.sin(x2) ** 2
    else:
        ox, oy = _QUADRANT[spec]
        u = 2.0 * (x1 - ox)
        w = 2.0 * (x2 - oy)
        inside = ((x1 >= ox) & (x1 <= ox + math.pi / 2)
                  & (x2 >= oy) & (x2 <= oy + math.pi / 2))
        out = np.where(inside, 4.0 * MODE_NORM ** 2 * np.sin(u) ** 2 * np.sin(w) ** 2, 0.0)
    return float(out) if scalar else out


def backtrack_lattice(state: WaveState, spec: GuidanceSpec, t: float,
                      cfg: IntegratorConfig = IntegratorConfig(),
                      geometry: LatticeGeometry = LatticeGeometry(),
                      workers: Optional[int] = None,
                      engine: Optional[str] = None) -> BacktrackResult:
    """Backtrack every attempted lattice point from time t to time 0."""
    if t < 0:
        raise ValueError("output time must be >= 0")
    R = geometry.resolution
    coords = geometry.coords()
    attempted = geometry.attempted_mask()
    status = np.full((R, R), _NOT_ATTEMPTED, dtype=np.int32)
    origins = np.full((R, R, 2), np.nan)
    steps = np.zeros((R, R), dtype=np.int64)

    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    if t == 0.0:
        status[attempted] = int(Status.OK)
        origins[attempted, 0] = xx[attempted]
        origins[attempted, 1] = yy[attempted]
        return BacktrackResult(geometry, t, spec, origins, status, steps)

    pts = np.column_stack([xx[attempted], yy[attempted]])
    out, st, ns = _engine.backtrack_points(
        state, spec.mu, spec.f_choice.code, spec.density_floor,
        pts, t, 0.0, cfg, workers=workers, engine=engine)
    status[attempted] = st
    steps[attempted] = ns
    ok = st == int(Status.OK)
    full_ok = np.zeros((R, R), dtype=bool)
    full_ok[attempted] = ok
    origins[full_ok, 0] = out[ok, 0]
    origins[full_ok, 1] = out[ok, 1]
    return BacktrackResult(geometry, t, spec, origins, status, steps)


def density_from_backtrack(bt: BacktrackResult, dspec: DensitySpec,
                           state: WaveState) -> DensityField:
    """Evolved density from conserved f = rho/|psi|^2 at the backtracked origins."""
    g = bt.geometry
    coords = g.coords()
    ok = bt.ok_mask
    values = np.full((g.resolution, g.resolution), np.nan)
    dens_t = state.density_grid(coords, coords, bt.time)
    origins = bt.origins[ok]
    rho0 = initial_density(dspec, state, origins)
    dens0 = state.density(origins[:, 0], origins[:, 1], 0.0)
    values[ok] = dens_t[ok] * (rho0 / dens0)
    return DensityField(geometry=g, values=values, mask=ok, time=bt.time)


def evolve_density(state: WaveState, spec: GuidanceSpec, dspec: DensitySpec, t: float,
                   cfg: IntegratorConfig = IntegratorConfig(),
                   geometry: LatticeGeometry = LatticeGeometry(),
                   workers: Optional[int] = None) -> DensityField:
    """Backtrack the lattice and evaluate one evolved density on it."""
    bt = backtrack_lattice(state, spec, t, cfg, geometry, workers)
    return density_from_backtrack(bt, dspec, state)


def equilibrium_field(state: WaveState, t: float, geometry: LatticeGeometry,
                      mask: np.ndarray) -> DensityField:
    """|psi(x, t)|^2 on the lattice, restricted to the given validity mask."""
    coords = geometry.coords()
    values = state.density_grid(coords, coords, t)
    values = np.where(mask, values, np.nan)
    return DensityField(geometry=geometry, values=values, mask=mask.copy(), time=t)


def coarse_grain(field: DensityField) -> CoarseField:
    """Average over the non-overlapping coarse cells, valid points only."""
    g = field.geometry
    C, b = g.cells, g.block
    vals = np.where(field.mask, field.values, 0.0)
    sums = vals.reshape(C, b, C, b).sum(axis=(1, 3))
    counts = field.mask.reshape(C, b, C, b).sum(axis=(1, 3))
    values = np.full((C, C), np.nan)
    nonzero = counts > 0
    values[nonzero] = sums[nonzero] / counts[nonzero]
    return CoarseField(values=values, counts=counts, excluded_margin=g.margin)


def _check_matching_cells(rho: CoarseField, eq: CoarseField) -> np.ndarray:
    if rho.values.shape != eq.values.shape or rho.excluded_margin != eq.excluded_margin:
        raise ValueError("coarse fields have different geometry")
    valid_rho = rho.counts > 0
    valid_eq = eq.counts > 0
    if not np.array_equal(valid_rho, valid_eq):
        raise ValueError("coarse fields have different valid-cell sets")
    return valid_rho


def hbar(rho_coarse: CoarseField, eq_coarse: CoarseField) -> float:
    """Coarse-grained H-function: sum over valid cells of area * rho * ln(rho/eq).

    Empty-density cells contribute zero (x ln x -> 0); slightly negative
    totals are possible numerically.
    """
    valid = _check_matching_cells(rho_coarse, eq_coarse)
    r = rho_coarse.values[valid]
    e = eq_coarse.values[valid]
    if np.any(e <= 0.0):
        raise ValueError("equilibrium coarse density must be positive on valid cells")
    terms = np.zeros_like(r)
    pos = r > 0.0
    terms[pos] = r[pos] * np.log(r[pos] / e[pos])
    return float(rho_coarse.cell_area * np.sum(terms))


def fine_H(rho: DensityField, eq: DensityField) -> float:
    """Lattice-sum H-function on the raw (uncoarsened) values.

    Computed over the points where both fields are valid; conserved in time
    up to lattice and masking error, which makes it a useful diagnostic.
    """
    if rho.geometry != eq.geometry:
        raise ValueError("density fields have different geometry")
    both = rho.mask & eq.mask
    r = rho.values[both]
    e = eq.values[both]
    if np.any(e <= 0.0):
        raise ValueError("equilibrium density must be positive on valid points")
    terms = np.zeros_like(r)
    pos = r > 0.0
    terms[pos] = r[pos] * np.log(r[pos] / e[pos])
    return float(rho.geometry.spacing ** 2 * np.sum(terms))


def _window_bounds(centers: np.ndarray, half: float, g: LatticeGeometry):
    """Inclusive lattice-index bounds of |x - c| <= half along one axis."""
    lo = np.ceil((centers - half) / g.spacing - 0.5 - 1e-12).astype(int)
    hi = np.floor((centers + half) / g.spacing - 0.5 + 1e-12).astype(int)
    return np.clip(lo, 0, g.resolution - 1), np.clip(hi, 0, g.resolution - 1)


def smooth(field: DensityField) -> SmoothedGrid:
    """Overlapping window averages on the fixed 105 x 105 figure grid.

    Windows are squares of side pi/16 centered at (k pi/128 + 3 pi/32);
    the average runs over the valid lattice points inside each window.
    """
    g = field.geometry
    centers = np.arange(SMOOTH_POINTS) * SMOOTH_SPACING + SMOOTH_OFFSET
    lo, hi = _window_bounds(centers, SMOOTH_HALF_WINDOW, g)

    vals = np.where(field.mask, field.values, 0.0)
    # 2D prefix sums with a zero border for O(1) window sums.
    pv = np.zeros((g.resolution + 1, g.resolution + 1))
    pc = np.zeros_like(pv)
    pv[1:, 1:] = np.cumsum(np.cumsum(vals, axis=0), axis=1)
    pc[1:, 1:] = np.cumsum(np.cumsum(field.mask.astype(float), axis=0), axis=1)

    def rect(p, i0, i1, j0, j1):
        return p[i1 + 1, j1 + 1] - p[i0, j1 + 1] - p[i1 + 1, j0] + p[i0, j0]

    values = np.full((SMOOTH_POINTS, SMOOTH_POINTS), np.nan)
    counts = np.zeros((SMOOTH_POINTS, SMOOTH_POINTS), dtype=np.int64)
    for a in range(SMOOTH_POINTS):
        for b in range(SMOOTH_POINTS):
            n = rect(pc, lo[a], hi[a], lo[b], hi[b])
            counts[a, b] = int(round(n))
            if n > 0:
                values[a, b] = rect(pv, lo[a], hi[a], lo[b], hi[b]) / n
    return SmoothedGrid(points=centers, values=values, counts=counts)


def write_field(field: DensityField, path, spec_label: str, density_label: str) -> None:
    """Plain-text density grid: header lines then row-major values, nan = masked."""
    with open(path, "w") as fh:
        fh.write(f"# resolution: {field.resolution}\n")
        fh.write(f"# time: {field.time!r}\n")
        fh.write(f"# guidance: {spec_label}\n")
        fh.write(f"# density: {density_label}\n")
        fh.write(f"# valid: {int(np.sum(field.mask))} / {field.mask.size}\n")
        for row in field.values:
            fh.write(" ".join(format(v, ".17g") for v in row))
            fh.write("\n")


def write_smoothed(grid: SmoothedGrid, path, time: float,
                   spec_label: str, density_label: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# points: {grid.points.size}\n")
        fh.write(f"# first: {grid.points[0]!r}\n")
        fh.write(f"# spacing: {SMOOTH_SPACING!r}\n")
        fh.write(f"# time: {time!r}\n")
        fh.write(f"# guidance: {spec_label}\n")
        fh.write(f"# density: {density_label}\n")
        for row in grid.values:
            fh.write(" ".join(format(v, ".17g") for v in row))
            fh.write("\n")
