"""Domain types shared by every stage: points, grids, value ranges, BEV maps.

Conventions fixed here and relied on everywhere else:

* ego frame: x forward, y left, units meters; elevation is discarded.
* raster layout: rows index y, columns index x, both increasing with the
  coordinate; cell (i, j) covers the half-open square
  [-extent + j*res, -extent + (j+1)*res) x [-extent + i*res, ...).
* map values are stored normalized in [0, 1]; the attached ValueRange gives
  the physical meaning of 0 and 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Channel(enum.Enum):
    DENSITY = "density"
    RCS = "rcs"
    DOPPLER = "doppler"
    APPEARANCE = "appearance"
    SEMANTIC = "semantic"
    RADIAL_VELOCITY = "radial_velocity"


class BoxClass(enum.Enum):
    CAR = "Car"
    TRUCK = "Truck"
    TRAILER = "Trailer"
    OTHER = "Other"


# Classes that count as foreground for box-level metrics.
FOREGROUND_CLASSES = (BoxClass.CAR, BoxClass.TRUCK, BoxClass.TRAILER)
FOREGROUND_MIN_VISIBILITY = 0.6


@dataclass(frozen=True)
class RadarPoint:
    """One radar detection: planar position plus RCS and Doppler."""

    x: float        # meters, forward
    y: float        # meters, left
    rcs: float      # dBsm
    doppler: float  # m/s, signed radial (positive = receding)

    def __post_init__(self):
        for name in ("x", "y", "rcs", "doppler"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"RadarPoint.{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class RadarPointCloud:
    """Ordered detection list; index order is the tie-break key downstream."""

    points: tuple[RadarPoint, ...]
    frame_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def xy(self) -> np.ndarray:
        """(N, 2) array of planar coordinates."""
        if not self.points:
            return np.zeros((0, 2))
        return np.array([(p.x, p.y) for p in self.points], dtype=float)

    def rcs(self) -> np.ndarray:
        return np.array([p.rcs for p in self.points], dtype=float)

    def doppler(self) -> np.ndarray:
        return np.array([p.doppler for p in self.points], dtype=float)

    def as_array(self) -> np.ndarray:
        """(N, 4) array of (x, y, rcs, doppler) rows."""
        if not self.points:
            return np.zeros((0, 4))
        return np.array([(p.x, p.y, p.rcs, p.doppler) for p in self.points],
                        dtype=float)

    @staticmethod
    def from_array(arr: np.ndarray, frame_id: str = "") -> "RadarPointCloud":
        pts = tuple(RadarPoint(float(r[0]), float(r[1]), float(r[2]), float(r[3]))
                    for r in np.asarray(arr, dtype=float).reshape(-1, 4))
        return RadarPointCloud(pts, frame_id)


@dataclass(frozen=True)
class GridSpec:
    """Square BEV raster over [-extent, extent) in both axes."""

    extent: float = 50.0  # half-width, meters
    size: int = 512       # cells per side

    def __post_init__(self):
        if not (self.extent > 0 and self.size > 0):
            raise ValueError(f"invalid grid: extent={self.extent}, size={self.size}")

    @property
    def resolution(self) -> float:
        return 2.0 * self.extent / self.size

    def cell_centers(self) -> np.ndarray:
        """(size,) coordinates of cell centers along one axis."""
        res = self.resolution
        return -self.extent + (np.arange(self.size, dtype=float) + 0.5) * res

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        res = self.resolution
        return (-self.extent + (col + 0.5) * res,
                -self.extent + (row + 0.5) * res)


def world_to_cell(x: float, y: float, grid: GridSpec) -> tuple[int, int] | None:
    """Map a world point to its (row, col) cell, or None when off-grid.

    Cells are half-open, so every in-range point lands in exactly one cell
    and the upper boundary (x == extent) is out of range.
    """
    res = grid.resolution
    col = math.floor((x + grid.extent) / res)
    row = math.floor((y + grid.extent) / res)
    if 0 <= row < grid.size and 0 <= col < grid.size:
        return row, col
    return None


@dataclass(frozen=True)
class ValueRange:
    """Linear map between physical units and the normalized [0, 1] domain."""

    min: float
    max: float

    def __post_init__(self):
        if not (self.max > self.min):
            raise ValueError(f"ValueRange requires max > min, got [{self.min}, {self.max}]")

    @property
    def span(self) -> float:
        return self.max - self.min


# Sensor value ranges used for normalization throughout.
RCS_RANGE = ValueRange(-20.0, 66.0)        # dBsm
DOPPLER_RANGE = ValueRange(-120.0, 120.0)  # m/s
DENSITY_RANGE = ValueRange(0.0, 1.0)
UNIT_RANGE = ValueRange(0.0, 1.0)

CHANNEL_RANGES = {
    Channel.DENSITY: DENSITY_RANGE,
    Channel.RCS: RCS_RANGE,
    Channel.DOPPLER: DOPPLER_RANGE,
    Channel.RADIAL_VELOCITY: DOPPLER_RANGE,
    Channel.APPEARANCE: UNIT_RANGE,
    Channel.SEMANTIC: UNIT_RANGE,
}


def normalize_value(v, rng: ValueRange):
    """Clip into [min, max] and map linearly to [0, 1].

    Accepts scalars or arrays; rejects non-finite input.
    """
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot normalize non-finite value")
    out = (np.clip(arr, rng.min, rng.max) - rng.min) / rng.span
    return float(out) if np.isscalar(v) or arr.ndim == 0 else out


def denormalize_value(u, rng: ValueRange):
    """Inverse of normalize_value on [0, 1] (exact in continuous form)."""
    arr = np.asarray(u, dtype=float)
    out = rng.min + arr * rng.span
    return float(out) if np.isscalar(u) or arr.ndim == 0 else out


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats -> 8-bit levels {0..255} (round-to-nearest)."""
    return np.clip(np.rint(np.asarray(values, dtype=float) * 255.0), 0, 255).astype(np.uint8)


def dequantize_u8(levels: np.ndarray) -> np.ndarray:
    """8-bit levels -> [0, 1] floats; round trip through quantize_u8 is exact."""
    return np.asarray(levels, dtype=float) / 255.0


@dataclass(frozen=True)
class BevMap:
    """Single-channel scalar field over a GridSpec, values normalized to [0, 1]."""

    grid: GridSpec
    channel: Channel
    values: np.ndarray
    range: ValueRange

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size, self.grid.size):
            raise ValueError(f"values shape {v.shape} does not match grid size {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("BevMap values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("BevMap values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    def physical(self) -> np.ndarray:
        """Values in physical units."""
        return denormalize_value(self.values, self.range)


@dataclass(frozen=True)
class GaussianKernel:
    """Fixed, known blur shared by the encoder and the recovery solver.

    Unit peak (center weight exactly 1), truncated at radius ceil(3*sigma);
    sigma is measured in grid cells. The weights array is symmetric under
    180-degree rotation, so the convolution operator is self-adjoint.
    """

    sigma: float
    radius: int = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        radius = math.ceil(3.0 * self.sigma)
        k = np.arange(-radius, radius + 1, dtype=float)
        rr, cc = np.meshgrid(k, k, indexing="ij")
        weights = np.exp(-(rr * rr + cc * cc) / (2.0 * self.sigma * self.sigma))
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "weights", weights)

    def weights_1d(self) -> np.ndarray:
        """Separable factor: weights == outer(w1d, w1d) up to float rounding."""
        k = np.arange(-self.radius, self.radius + 1, dtype=float)
        return np.exp(-(k * k) / (2.0 * self.sigma * self.sigma))

    @property
    def weight_sum(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class BoundingBox:
    """Oriented BEV rectangle; length runs along the heading (yaw) axis."""

    cx: float
    cy: float
    length: float
    width: float
    yaw: float
    cls: BoxClass = BoxClass.OTHER
    visibility: float = 1.0

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError("box length and width must be positive")
        if not (0.0 <= self.visibility <= 1.0):
            raise ValueError("visibility must lie in [0, 1]")

    def to_box_frame(self, xy: np.ndarray) -> np.ndarray:
        """World (N, 2) -> box frame: translate by (-cx, -cy), rotate by -yaw."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        dx = xy[:, 0] - self.cx
        dy = xy[:, 1] - self.cy
        return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=1)

    def contains(self, xy: np.ndarray) -> np.ndarray:
        """Boundary-inclusive point-in-box test; returns a bool mask."""
        uv = self.to_box_frame(xy)
        return ((np.abs(uv[:, 0]) <= self.length / 2.0)
                & (np.abs(uv[:, 1]) <= self.width / 2.0))

    def is_foreground(self) -> bool:
        return (self.cls in FOREGROUND_CLASSES
                and self.visibility > FOREGROUND_MIN_VISIBILITY)
