"""Geometric BEV conditioning: attributed 3-D points to maps, and
Doppler-like radial velocities from frame-to-frame correspondences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BevMap,
    Channel,
    CHANNEL_RANGES,
    GridSpec,
    normalize_value,
    world_to_cell,
)

MAX_POINT_HEIGHT = 5.0  # meters; drops overhead structure (bridges, trees)


@dataclass(frozen=True)
class AttributedPoint3D:
    """Ego-frame 3-D point carrying a payload (scalar, label, or color)."""

    x: float
    y: float
    z: float
    payload: object = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("point coordinates must be finite")


@dataclass(frozen=True)
class Correspondence:
    """The same scene point observed at t and t + dt."""

    p_t: AttributedPoint3D
    p_t_next: AttributedPoint3D
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


def max_z_winners(points: list[AttributedPoint3D], grid: GridSpec) -> np.ndarray:
    """Per-cell index of the surviving point with maximum height.

    Points above MAX_POINT_HEIGHT or off the grid are dropped; -1 marks
    empty cells. Equal heights resolve to the lowest point index, keeping
    the result permutation-stable under the documented tie rule.
    """
    winner = np.full((grid.size, grid.size), -1, dtype=np.int64)
    best_z = np.full((grid.size, grid.size), -np.inf)
    for idx, p in enumerate(points):
        if p.z > MAX_POINT_HEIGHT:
            continue
        cell = world_to_cell(p.x, p.y, grid)
        if cell is None:
            continue
        if p.z > best_z[cell]:
            best_z[cell] = p.z
            winner[cell] = idx
    return winner


def project_to_bev(points: list[AttributedPoint3D], grid: GridSpec,
                   channel: Channel = Channel.APPEARANCE) -> BevMap:
    """Rasterize scalar payloads: the highest point in each cell wins.

    Payloads must already be normalized scalars in [0, 1]; untouched cells
    keep the background value 0. Vector payloads (e.g. RGB) are projected
    per component by reusing max_z_winners.
    """
    winner = max_z_winners(points, grid)
    values = np.zeros((grid.size, grid.size))
    hit = winner >= 0
    if hit.any():
        payloads = np.array([float(p.payload) for p in points], dtype=float)
        values[hit] = payloads[winner[hit]]
    return BevMap(grid, channel, values, CHANNEL_RANGES[channel])


def radial_velocity(c: Correspondence) -> float:
    """Signed radial speed of a correspondence (positive = receding).

    The 3-D displacement rate is projected onto the planar radial direction
    of p_t; a p_t at the origin has no radial direction and raises.
    """
    px, py = c.p_t.x, c.p_t.y
    norm = math.hypot(px, py)
    if norm <= 1e-6:
        raise ValueError("undefined radial direction: p_t at ego origin")
    vx = (c.p_t_next.x - c.p_t.x) / c.dt
    vy = (c.p_t_next.y - c.p_t.y) / c.dt
    return (vx * px + vy * py) / norm


def radial_velocity_map(cs: list[Correspondence], grid: GridSpec) -> BevMap:
    """Rasterize correspondence radial velocities onto the grid.

    Cells holding several correspondences keep the one whose p_t has
    maximum height, mirroring the appearance/semantic projection rule (the
    5 m height filter applies here too). Values are normalized with the
    Doppler range; empty cells keep the background 0 level.
    """
    rng = CHANNEL_RANGES[Channel.RADIAL_VELOCITY]
    points = [c.p_t for c in cs]
    winner = max_z_winners(points, grid)
    values = np.zeros((grid.size, grid.size))
    for row, col in np.argwhere(winner >= 0):
        v = radial_velocity(cs[winner[row, col]])
        values[row, col] = normalize_value(v, rng)
    return BevMap(grid, Channel.RADIAL_VELOCITY, values, rng)
