"""Radar point cloud <-> BEV map toolkit.

Encodes sparse radar detections as dense bird's-eye-view maps (Gaussian
density, Voronoi RCS/Doppler), recovers point clouds from density maps by
non-negative sparse deconvolution (IRL1 over FISTA) or by sampling/peak
baselines, projects attributed 3-D points and motion correspondences to BEV
conditioning maps, and scores recovered clouds with a full geometric /
attribute / distribution metric suite.
"""

from .core import (
    BevMap,
    BoundingBox,
    BoxClass,
    Channel,
    GaussianKernel,
    GridSpec,
    RadarPoint,
    RadarPointCloud,
    ValueRange,
    RCS_RANGE,
    DOPPLER_RANGE,
    DENSITY_RANGE,
    denormalize_value,
    normalize_value,
    world_to_cell,
)

__version__ = "0.1.0"

__all__ = [
    "BevMap",
    "BoundingBox",
    "BoxClass",
    "Channel",
    "GaussianKernel",
    "GridSpec",
    "RadarPoint",
    "RadarPointCloud",
    "ValueRange",
    "RCS_RANGE",
    "DOPPLER_RANGE",
    "DENSITY_RANGE",
    "denormalize_value",
    "normalize_value",
    "world_to_cell",
    "__version__",
]
