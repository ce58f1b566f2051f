"""Basin-of-attraction rasterization.

Each grid cell's center is iterated forward; a cell is assigned to a
registered attractor once its orbit stays within ``prox_tol`` of that
attractor's point set for one full period (guarding against slow passes
near saddles).  Orbits exceeding the escape radius are divergent; orbits
that exhaust the iteration budget are unknown.

All per-point arithmetic is elementwise, so labels are independent of how
the grid is batched across rows or threads.
"""
from __future__ import annotations

import colorsys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidWindowError
from .mapcore import Point2, Rect, eval_map, eval_map_arrays
from .orbits import SRkOrbit
from .params import MapParams
from .stability import StabilityClass

__all__ = [
    "UNKNOWN",
    "DIVERGENT",
    "Attractor",
    "AttractorRegistry",
    "ClassifyLimits",
    "IterationStats",
    "BasinGrid",
    "classify_point",
    "classify_batch",
    "raster",
    "grid_centers",
    "write_ppm",
    "legend_csv",
    "labels_csv",
]

UNKNOWN = -1
DIVERGENT = -2

_REGISTRY_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ClassifyLimits:
    max_iter: int = 20000
    escape_radius: float = 10.0
    prox_tol: float = 1e-5


@dataclass(frozen=True)
class Attractor:
    id: int
    label: str
    points: np.ndarray  # (period, 2)
    period: int
    color: tuple[int, int, int]


def _palette_color(index: int) -> tuple[int, int, int]:
    """Deterministic distinct colors, never black or white."""
    hue = (index * 0.61803398875) % 1.0
    sat = 0.85 if index % 2 == 0 else 0.6
    val = 0.95 if index % 3 else 0.75
    r, g, b = colorsys.hsv_to_rgb(hue, sat, val)
    return (int(round(r * 255)), int(round(g * 255)), int(round(b * 255)))


class AttractorRegistry:
    """Registered periodic attractors with unique ids and colors."""

    def __init__(self) -> None:
        self.entries: list[Attractor] = []

    def add(
        self,
        params: MapParams,
        points: list[Point2] | np.ndarray,
        label: str | None = None,
        color: tuple[int, int, int] | None = None,
    ) -> Attractor:
        """Register one periodic orbit; re-verifies periodicity under the map."""
        pts = np.asarray([(p[0], p[1]) for p in points], dtype=float)
        period = pts.shape[0]
        p = Point2(float(pts[0, 0]), float(pts[0, 1]))
        for _ in range(period):
            p = eval_map(params, p)
        residual = max(abs(p.x - pts[0, 0]), abs(p.y - pts[0, 1]))
        if residual > _REGISTRY_RESIDUAL_TOL:
            raise ValueError(
                f"orbit is not periodic under the map (residual {residual:.3e})"
            )
        new_id = len(self.entries)
        if color is None:
            color = _palette_color(new_id)
        if color in {(0, 0, 0), (255, 255, 255)}:
            raise ValueError("attractor colors must differ from black and white")
        if any(color == e.color for e in self.entries):
            raise ValueError(f"duplicate attractor color {color}")
        attractor = Attractor(
            id=new_id,
            label=label if label is not None else f"attr{new_id}",
            points=pts,
            period=period,
            color=color,
        )
        self.entries.append(attractor)
        return attractor

    @classmethod
    def from_orbits(
        cls, params: MapParams, orbits: list[SRkOrbit]
    ) -> "AttractorRegistry":
        """Registry of the asymptotically stable orbits in a scan result."""
        registry = cls()
        for orbit in orbits:
            if orbit.stability is not StabilityClass.ASYMPTOTICALLY_STABLE:
                continue
            registry.add(params, list(orbit.points), label=f"sr{orbit.k}")
        return registry

    def __len__(self) -> int:
        return len(self.entries)

    def all_points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(points, owner attractor id, period of owner) stacked over entries."""
        pts = np.concatenate([e.points for e in self.entries])
        owner = np.concatenate(
            [np.full(e.period, e.id, dtype=np.int64) for e in self.entries]
        )
        period = np.concatenate(
            [np.full(e.period, e.period, dtype=np.int64) for e in self.entries]
        )
        return pts, owner, period


@dataclass
class IterationStats:
    total_points: int = 0
    classified: int = 0
    divergent: int = 0
    unknown: int = 0
    max_iterations: int = 0
    mean_iterations: float = 0.0


@dataclass
class BasinGrid:
    window: Rect
    nx: int
    ny: int
    labels: np.ndarray  # (nx, ny) int32; [ix, iy] with iy increasing upward
    stats: IterationStats


def classify_batch(
    params: MapParams,
    registry: AttractorRegistry,
    points: np.ndarray,
    limits: ClassifyLimits = ClassifyLimits(),
) -> tuple[np.ndarray, np.ndarray]:
    """Labels and iteration counts for an (N, 2) batch of start points.

    Labels are attractor ids, or UNKNOWN / DIVERGENT.
    """
    if len(registry) == 0:
        raise ValueError("registry must contain at least one attractor")
    reg_pts, owner, owner_period = registry.all_points()
    tree = cKDTree(reg_pts)

    n = points.shape[0]
    labels = np.full(n, UNKNOWN, dtype=np.int32)
    iters = np.zeros(n, dtype=np.int64)

    x = points[:, 0].astype(float).copy()
    y = points[:, 1].astype(float).copy()
    idx = np.arange(n)
    candidate = np.full(n, -1, dtype=np.int64)
    run = np.zeros(n, dtype=np.int64)

    def check_proximity(step: int) -> None:
        """Update candidate/run and retire points that completed a period."""
        nonlocal x, y, idx, candidate, run
        dist, nearest = tree.query(
            np.column_stack((x, y)),
            k=1,
            p=np.inf,
            distance_upper_bound=limits.prox_tol * (1.0 + 1e-12),
        )
        near = np.isfinite(dist)
        att = np.where(near, owner[np.minimum(nearest, len(owner) - 1)], -1)
        same = near & (att == candidate)
        run = np.where(same, run + 1, np.where(near, 1, 0))
        candidate = att
        done = near & (run >= owner_period[np.minimum(nearest, len(owner) - 1)])
        if done.any():
            labels[idx[done]] = candidate[done].astype(np.int32)
            iters[idx[done]] = step
            keep = ~done
            x, y, idx = x[keep], y[keep], idx[keep]
            candidate, run = candidate[keep], run[keep]

    # Initial escape check (step 0) before any iteration.
    escaped = (np.abs(x) > limits.escape_radius) | (np.abs(y) > limits.escape_radius)
    if escaped.any():
        labels[idx[escaped]] = DIVERGENT
        keep = ~escaped
        x, y, idx = x[keep], y[keep], idx[keep]
        candidate, run = candidate[keep], run[keep]
    check_proximity(0)

    for step in range(1, limits.max_iter + 1):
        if idx.size == 0:
            break
        x, y = eval_map_arrays(params, x, y)
        bad = ~(np.isfinite(x) & np.isfinite(y))
        escaped = bad | (np.abs(x) > limits.escape_radius) | (
            np.abs(y) > limits.escape_radius
        )
        if escaped.any():
            labels[idx[escaped]] = DIVERGENT
            iters[idx[escaped]] = step
            keep = ~escaped
            x, y, idx = x[keep], y[keep], idx[keep]
            candidate, run = candidate[keep], run[keep]
        if idx.size == 0:
            break
        check_proximity(step)

    iters[idx] = limits.max_iter
    return labels, iters


def classify_point(
    params: MapParams,
    registry: AttractorRegistry,
    p: Point2,
    limits: ClassifyLimits = ClassifyLimits(),
) -> int:
    """Label of a single start point (same engine as the raster)."""
    labels, _ = classify_batch(
        params, registry, np.array([[p[0], p[1]]], dtype=float), limits
    )
    return int(labels[0])


def grid_centers(window: Rect, nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center coordinates (1D arrays of length nx and ny)."""
    xs = window.xmin + (np.arange(nx) + 0.5) * (window.width / nx)
    ys = window.ymin + (np.arange(ny) + 0.5) * (window.height / ny)
    return xs, ys


def raster(
    params: MapParams,
    registry: AttractorRegistry,
    window: Rect,
    nx: int,
    ny: int,
    limits: ClassifyLimits = ClassifyLimits(),
    threads: int = 1,
) -> BasinGrid:
    """Classify every cell center of an nx-by-ny grid over the window.

    Rows are independent work units; the result is identical for any
    thread count because every cell's orbit is computed elementwise.
    """
    if window.is_empty():
        raise InvalidWindowError(f"empty raster window {window}")
    if nx < 2 or ny < 2:
        raise InvalidWindowError("resolution must be at least 2x2")
    xs, ys = grid_centers(window, nx, ny)
    labels = np.empty((nx, ny), dtype=np.int32)
    iter_sum = 0
    iter_max = 0
    row_ids = list(range(ny))

    def run_rows(rows: list[int]) -> tuple[int, int]:
        # One batch for the whole chunk; per-cell results are elementwise,
        # so chunking does not affect any label.
        if not rows:
            return 0, 0
        pts = np.concatenate(
            [np.column_stack((xs, np.full(nx, ys[iy]))) for iy in rows]
        )
        chunk_labels, chunk_iters = classify_batch(params, registry, pts, limits)
        for pos, iy in enumerate(rows):
            labels[:, iy] = chunk_labels[pos * nx : (pos + 1) * nx]
        return int(chunk_iters.sum()), int(chunk_iters.max())

    if threads <= 1:
        iter_sum, iter_max = run_rows(row_ids)
    else:
        chunks = [row_ids[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part_sum, part_max in pool.map(run_rows, chunks):
                iter_sum += part_sum
                iter_max = max(iter_max, part_max)

    total = nx * ny
    stats = IterationStats(
        total_points=total,
        classified=int((labels >= 0).sum()),
        divergent=int((labels == DIVERGENT).sum()),
        unknown=int((labels == UNKNOWN).sum()),
        max_iterations=iter_max,
        mean_iterations=iter_sum / total,
    )
    return BasinGrid(window=window, nx=nx, ny=ny, labels=labels, stats=stats)


# -- output -------------------------------------------------------------------


def write_ppm(grid: BasinGrid, registry: AttractorRegistry, path: str) -> None:
    """Binary P6 pixmap; row 0 is the top of the window (largest y).

    Unknown cells are black, divergent cells white, attractor cells use
    their registry color.  Byte-exact for identical grids.
    """
    color_table = np.zeros((len(registry) + 2, 3), dtype=np.uint8)
    color_table[0] = (0, 0, 0)  # UNKNOWN

    color_table[1] = (255, 255, 255)  # DIVERGENT
    for entry in registry.entries:
        color_table[entry.id + 2] = entry.color
    index = np.where(
        grid.labels == UNKNOWN,
        0,
        np.where(grid.labels == DIVERGENT, 1, grid.labels + 2),
    )
    # labels[ix, iy] -> image rows top to bottom: iy = ny-1 .. 0.
    image = color_table[index.T[::-1]]
    header = f"P6\n{grid.nx} {grid.ny}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(image.tobytes())


def legend_csv(registry: AttractorRegistry) -> str:
    lines = ["id,label,r,g,b,period"]
    for e in registry.entries:
        lines.append(f"{e.id},{e.label},{e.color[0]},{e.color[1]},{e.color[2]},{e.period}")
    return "\n".join(lines) + "\n"


def labels_csv(grid: BasinGrid) -> str:
    """Raw label grid, one row per iy (bottom to top), comma-separated ix."""
    lines = ["# rows are iy = 0..ny-1 (bottom to top), columns ix = 0..nx-1"]
    for iy in range(grid.ny):
        lines.append(",".join(str(int(v)) for v in grid.labels[:, iy]))
    return "\n".join(lines) + "\n"


def basin_fractions(grid: BasinGrid) -> dict[int, float]:
    """Fraction of cells per label (including UNKNOWN and DIVERGENT)."""
    total = grid.nx * grid.ny
    values, counts = np.unique(grid.labels, return_counts=True)
    return {int(v): int(c) / total for v, c in zip(values, counts)}
