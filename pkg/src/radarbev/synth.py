"""Seeded synthetic scenes: ground-truth clouds, boxes, and perturbed
"prediction" clouds for exercising the recovery solver and the metric suite
at desk scale."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoundingBox,
    BoxClass,
    DOPPLER_RANGE,
    GridSpec,
    RCS_RANGE,
    RadarPoint,
    RadarPointCloud,
)


@dataclass(frozen=True)
class ClassSpec:
    length_range: tuple[float, float]
    width_range: tuple[float, float]
    rcs_mean: float       # dBsm
    rcs_spread: float     # dBsm
    speed_range: tuple[float, float]  # m/s, along heading


DEFAULT_CLASS_SPECS: dict[BoxClass, ClassSpec] = {
    BoxClass.CAR: ClassSpec((4.0, 5.5), (1.8, 2.1), 10.0, 5.0, (0.0, 30.0)),
    BoxClass.TRUCK: ClassSpec((8.0, 12.0), (2.4, 2.9), 25.0, 5.0, (0.0, 25.0)),
    BoxClass.TRAILER: ClassSpec((10.0, 14.0), (2.5, 2.9), 20.0, 6.0, (0.0, 25.0)),
}


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 0
    n_objects: int = 5
    n_clutter: int = 25
    points_per_object: int = 5
    min_separation: float = 3.0  # cells, between every pair of points
    grid: GridSpec = GridSpec()
    class_specs: dict[BoxClass, ClassSpec] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_SPECS))
    clutter_rcs_mean: float = 0.0
    clutter_rcs_spread: float = 5.0
    placement_margin: float = 0.85  # box centers within +-margin*extent
    ego_clearance: float = 5.0      # keep boxes off the ego vehicle
    max_retries: int = 2000

    def __post_init__(self):
        if self.min_separation < 1.0:
            raise ValueError("min_separation must be >= 1 cell")
        if self.n_objects < 0 or self.n_clutter < 0 or self.points_per_object < 1:
            raise ValueError("counts must be non-negative")

    @property
    def n_points(self) -> int:
        return self.n_objects * self.points_per_object + self.n_clutter


def _box_corners(box: BoundingBox) -> np.ndarray:
    """(4, 2) world corners, counterclockwise starting at front-left."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    hl, hw = box.length / 2.0, box.width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([box.cx, box.cy])


def _facing_edges(box: BoundingBox) -> list[tuple[np.ndarray, np.ndarray]]:
    """Edges whose outward normal points toward the ego origin."""
    corners = _box_corners(box)
    edges = []
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        mid = (a + b) / 2.0
        tangent = b - a
        normal = np.array([tangent[1], -tangent[0]])  # outward for ccw order
        if normal @ mid < 0:  # faces the origin
            edges.append((a, b))
    return edges


def _separated(p: np.ndarray, accepted: list[np.ndarray], sep: float) -> bool:
    return all(np.hypot(p[0] - q[0], p[1] - q[1]) >= sep for q in accepted)


def generate_scene(cfg: SceneConfig) -> tuple[RadarPointCloud, list[BoundingBox]]:
    """Deterministic scene for a seed: oriented boxes with surface returns on
    their ego-facing perimeter, plus static clutter.

    Every pair of points keeps at least min_separation cells of distance;
    Doppler is the object's rigid velocity projected on the point's radial
    direction. Raises RuntimeError when the separation constraint cannot be
    met within the retry budget.
    """
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid
    sep_m = cfg.min_separation * grid.resolution
    inset = 0.05  # meters; keeps perimeter returns strictly inside the box

    classes = sorted(cfg.class_specs, key=lambda c: c.value)
    boxes: list[BoundingBox] = []
    velocities: list[np.ndarray] = []
    for _ in range(cfg.n_objects):
        spec = None
        for _ in range(cfg.max_retries):
            cls = classes[int(rng.integers(len(classes)))]
            spec = cfg.class_specs[cls]
            length = float(rng.uniform(*spec.length_range))
            width = float(rng.uniform(*spec.width_range))
            diag = math.hypot(length, width) / 2.0
            bound = cfg.placement_margin * grid.extent - diag
            if bound <= 0:
                continue  # box cannot fit this grid
            cx, cy = rng.uniform(-bound, bound, size=2)
            yaw = float(rng.uniform(-math.pi, math.pi))
            cand = BoundingBox(float(cx), float(cy), length, width, yaw,
                               cls, visibility=1.0)
            if math.hypot(cand.cx, cand.cy) < cfg.ego_clearance + diag:
                continue
            ok = all(math.hypot(cand.cx - b.cx, cand.cy - b.cy)
                     > diag + math.hypot(b.length, b.width) / 2.0
                     for b in boxes)
            if ok:
                boxes.append(cand)
                speed = float(rng.uniform(*spec.speed_range))
                velocities.append(speed * np.array([math.cos(yaw), math.sin(yaw)]))
                break
        else:
            raise RuntimeError("could not place non-overlapping boxes "
                               "within the retry budget")

    points: list[RadarPoint] = []
    accepted: list[np.ndarray] = []
    spilled = 0  # object points that did not fit their facing perimeter
    for box, vel in zip(boxes, velocities):
        spec = cfg.class_specs[box.cls]
        edges = _facing_edges(box)
        if not edges:  # ego-aligned degenerate case
            corners = _box_corners(box)
            edges = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
        # uniform by arc length over the facing perimeter, rejecting draws
        # that violate the separation constraint
        lengths = [float(np.linalg.norm(b - a)) for a, b in edges]
        total = sum(lengths)
        for _ in range(cfg.points_per_object):
            for _ in range(cfg.max_retries):
                s = float(rng.uniform(0.0, total))
                for ei, (a, b) in enumerate(edges):
                    ln = lengths[ei]
                    if s <= ln or ei == len(edges) - 1:
                        p = a + min(s / ln, 1.0) * (b - a)
                        break
                    s -= ln
                # pull slightly toward the box center so containment tests
                # are robust to rounding
                center = np.array([box.cx, box.cy])
                direction = center - p
                p = p + direction / np.linalg.norm(direction) * inset
                if abs(p[0]) >= grid.extent or abs(p[1]) >= grid.extent:
                    continue
                if not _separated(p, accepted, sep_m):
                    continue
                accepted.append(p)
                r = math.hypot(p[0], p[1])
                doppler = float(vel @ p / r) if r > 1e-6 else 0.0
                rcs = float(np.clip(rng.normal(spec.rcs_mean, spec.rcs_spread),
                                    RCS_RANGE.min, RCS_RANGE.max))
                points.append(RadarPoint(float(p[0]), float(p[1]), rcs, doppler))
                break
            else:
                # a barely visible box may not fit all its surface returns;
                # move the remainder to clutter so the total stays exact
                spilled += 1

    for _ in range(cfg.n_clutter + spilled):
        for _ in range(cfg.max_retries):
            p = rng.uniform(-0.98 * grid.extent, 0.98 * grid.extent, size=2)
            if not _separated(p, accepted, sep_m):
                continue
            accepted.append(p)
            rcs = float(np.clip(rng.normal(cfg.clutter_rcs_mean,
                                           cfg.clutter_rcs_spread),
                                RCS_RANGE.min, RCS_RANGE.max))
            points.append(RadarPoint(float(p[0]), float(p[1]), rcs, 0.0))
            break
        else:
            raise RuntimeError("could not satisfy min separation for clutter "
                               "within the retry budget")

    return RadarPointCloud(tuple(points), f"synth-{cfg.seed}"), boxes


def perturb_scene(cloud: RadarPointCloud, seed: int, jitter_loc: float = 0.0,
                  jitter_rcs: float = 0.0, jitter_doppler: float = 0.0,
                  drop_rate: float = 0.0, spawn_rate: float = 0.0,
                  extent: float = 50.0) -> RadarPointCloud:
    """Controlled degradation of a cloud: Gaussian jitter per field,
    Bernoulli drops, and Poisson(spawn_rate * n) uniform spurious points.

    All perturbations at 0 return the cloud unchanged. Deterministic per
    seed; the draw order is jitters, then drops, then spawns.
    """
    if not (0.0 <= drop_rate <= 1.0) or spawn_rate < 0.0:
        raise ValueError("drop_rate must be in [0, 1] and spawn_rate >= 0")
    rng = np.random.default_rng(seed)
    n = len(cloud)
    arr = cloud.as_array()
    if n > 0:
        arr[:, 0] += rng.normal(0.0, jitter_loc, size=n)
        arr[:, 1] += rng.normal(0.0, jitter_loc, size=n)
        arr[:, 2] += rng.normal(0.0, jitter_rcs, size=n)
        arr[:, 3] += rng.normal(0.0, jitter_doppler, size=n)
        keep = rng.random(n) >= drop_rate
        arr = arr[keep]
    n_spawn = int(rng.poisson(spawn_rate * n)) if n > 0 else 0
    spawned = np.zeros((n_spawn, 4))
    if n_spawn > 0:
        spawned[:, 0] = rng.uniform(-0.98 * extent, 0.98 * extent, n_spawn)
        spawned[:, 1] = rng.uniform(-0.98 * extent, 0.98 * extent, n_spawn)
        spawned[:, 2] = rng.uniform(RCS_RANGE.min, RCS_RANGE.max, n_spawn)
        spawned[:, 3] = rng.uniform(DOPPLER_RANGE.min, DOPPLER_RANGE.max, n_spawn)
    out = np.vstack([arr, spawned])
    return RadarPointCloud.from_array(out, f"{cloud.frame_id}/perturbed")
