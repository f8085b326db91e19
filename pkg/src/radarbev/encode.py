"""Point cloud -> dense BEV maps and attribute read-back.

A cloud becomes three maps: binary occupancy blurred with the Gaussian
kernel (density), plus RCS and Doppler maps that are piecewise constant over
the Voronoi tessellation of the detections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    BevMap,
    Channel,
    CHANNEL_RANGES,
    DENSITY_RANGE,
    GaussianKernel,
    GridSpec,
    RadarPointCloud,
    denormalize_value,
    normalize_value,
    world_to_cell,
)


@dataclass(frozen=True)
class OccupancyMap:
    """Binary raster of detections; owner holds the point index per occupied
    cell (-1 elsewhere, lowest index wins on collisions)."""

    grid: GridSpec
    occupied: np.ndarray
    owner: np.ndarray

    def occupied_cells(self) -> np.ndarray:
        """(K, 2) array of occupied (row, col) cells in row-major order."""
        return np.argwhere(self.occupied)


def rasterize(cloud: RadarPointCloud, grid: GridSpec) -> OccupancyMap:
    """Mark one cell per in-range detection; off-grid points are dropped.

    Co-located detections collapse to a single occupied cell owned by the
    lowest point index.
    """
    occupied = np.zeros((grid.size, grid.size), dtype=bool)
    owner = np.full((grid.size, grid.size), -1, dtype=np.int32)
    for idx, p in enumerate(cloud.points):
        cell = world_to_cell(p.x, p.y, grid)
        if cell is None or occupied[cell]:
            continue
        occupied[cell] = True
        owner[cell] = idx
    return OccupancyMap(grid, occupied, owner)


def density_map(occ: OccupancyMap, kernel: GaussianKernel) -> BevMap:
    """Blur binary occupancy with the unit-peak kernel, clip to [0, 1].

    Zero padding at the borders; an isolated detection peaks at exactly 1.0
    in its own cell. The recovery solver applies the identical operator.
    """
    blurred = kernels.gaussian_conv2d(occ.occupied.astype(float), kernel.weights_1d())
    values = np.clip(blurred, 0.0, 1.0)
    return BevMap(occ.grid, Channel.DENSITY, values, DENSITY_RANGE)


def in_range_indices(cloud: RadarPointCloud, grid: GridSpec) -> list[int]:
    """Indices of points that land on the grid, in original order."""
    return [i for i, p in enumerate(cloud.points)
            if world_to_cell(p.x, p.y, grid) is not None]


def voronoi_attribute_map(cloud: RadarPointCloud, grid: GridSpec,
                          channel: Channel) -> BevMap:
    """Nearest-detection attribute per cell (RCS or Doppler channel).

    Distances run from cell centers to the continuous detection coordinates,
    so attribute boundaries keep sub-cell accuracy; ties go to the lowest
    point index. Raises on an empty (after in-range filtering) cloud.
    """
    if channel not in (Channel.RCS, Channel.DOPPLER):
        raise ValueError(f"attribute channel must be RCS or Doppler, got {channel}")
    keep = in_range_indices(cloud, grid)
    if not keep:
        raise ValueError("no detections to tessellate")
    pts = [cloud.points[i] for i in keep]
    px = np.array([p.x for p in pts])
    py = np.array([p.y for p in pts])
    attr = np.array([p.rcs if channel is Channel.RCS else p.doppler for p in pts])

    centers = grid.cell_centers()
    labels = kernels.nearest_site_labels(centers, centers, px, py)
    rng = CHANNEL_RANGES[channel]
    values = normalize_value(attr, rng)[labels]
    return BevMap(grid, channel, values, rng)


def encode_cloud(cloud: RadarPointCloud, grid: GridSpec,
                 kernel: GaussianKernel) -> tuple[BevMap, BevMap, BevMap]:
    """Full encode: (density, rcs, doppler) maps for one cloud."""
    occ = rasterize(cloud, grid)
    dens = density_map(occ, kernel)
    rcs = voronoi_attribute_map(cloud, grid, Channel.RCS)
    dop = voronoi_attribute_map(cloud, grid, Channel.DOPPLER)
    return dens, rcs, dop


def sample_attributes(cells, rcs_map: BevMap, doppler_map: BevMap) -> list[tuple[float, float]]:
    """Denormalized (rcs, doppler) at each (row, col) cell.

    Maps must share the grid and carry the right channels; out-of-bounds
    cells raise.
    """
    if rcs_map.grid != doppler_map.grid:
        raise ValueError("rcs and doppler maps must share a grid")
    if rcs_map.channel is not Channel.RCS or doppler_map.channel is not Channel.DOPPLER:
        raise ValueError("maps must carry the RCS and Doppler channels")
    size = rcs_map.grid.size
    out = []
    for row, col in cells:
        if not (0 <= row < size and 0 <= col < size):
            raise IndexError(f"cell ({row}, {col}) outside {size}x{size} grid")
        out.append((float(denormalize_value(rcs_map.values[row, col], rcs_map.range)),
                    float(denormalize_value(doppler_map.values[row, col], doppler_map.range))))
    return out
