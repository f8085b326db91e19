"""Evaluation metrics for recovered/generated radar point clouds.

Covers the entire-area metrics (Chamfer distances, IoU at a matching radius,
distance-attribute precision/recall/F1, per-attribute MMD) and the
foreground ones driven by annotated boxes (per-box Chamfer, density
similarity, hit rate, per-class canonical MMD). Metrics that are undefined
on a frame (empty cloud, zero denominator) stay undefined: they are skipped
and counted in the aggregates, never coerced to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import (
    BoundingBox,
    DOPPLER_RANGE,
    RCS_RANGE,
    RadarPoint,
    RadarPointCloud,
    ValueRange,
    normalize_value,
)

# Fixed sensor ranges for CD-Full normalization; per-cloud ranges would make
# the metric discontinuous in single outlier points.
CD_FULL_XY_RANGE = ValueRange(-50.0, 50.0)


@dataclass(frozen=True)
class DaThresholds:
    loc: float = 1.0      # meters
    rcs: float = 8.0      # dBsm
    doppler: float = 2.5  # m/s

    def __post_init__(self):
        if not (self.loc > 0 and self.rcs > 0 and self.doppler > 0):
            raise ValueError("all DA thresholds must be positive")


@dataclass(frozen=True)
class MmdConfig:
    """Multi-scale RBF kernel: sum of num_kernels Gaussians at bandwidths
    h_l = h_base * 2^(l-3), with h_base the mean squared distance over all
    distinct pairs of the joint set."""

    num_kernels: int = 5

    def __post_init__(self):
        if self.num_kernels < 1:
            raise ValueError("num_kernels must be >= 1")

    def bandwidths(self, h_base: float) -> np.ndarray:
        ls = np.arange(1, self.num_kernels + 1, dtype=float)
        return h_base * np.power(2.0, ls - 3.0)


def _pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sum(diff * diff, axis=2)


def chamfer_loc(p1: RadarPointCloud, p2: RadarPointCloud) -> float | None:
    """Two-way mean nearest-neighbor distance over (x, y), averaged over the
    two directions; undefined when either cloud is empty."""
    if len(p1) == 0 or len(p2) == 0:
        return None
    d2 = _pairwise_sq_dists(p1.xy(), p2.xy())
    d = np.sqrt(d2)
    return float((d.min(axis=1).mean() + d.min(axis=0).mean()) / 2.0)


def _normalized_4vec(cloud: RadarPointCloud) -> np.ndarray:
    arr = cloud.as_array()
    out = np.empty_like(arr)
    out[:, 0] = normalize_value(arr[:, 0], CD_FULL_XY_RANGE)
    out[:, 1] = normalize_value(arr[:, 1], CD_FULL_XY_RANGE)
    out[:, 2] = normalize_value(arr[:, 2], RCS_RANGE)
    out[:, 3] = normalize_value(arr[:, 3], DOPPLER_RANGE)
    return out


def chamfer_full(p1: RadarPointCloud, p2: RadarPointCloud) -> float | None:
    """Chamfer distance over (x, y, rcs, doppler), each min-max normalized
    with the fixed sensor ranges so all four share scale."""
    if len(p1) == 0 or len(p2) == 0:
        return None
    a, b = _normalized_4vec(p1), _normalized_4vec(p2)
    d = np.sqrt(_pairwise_sq_dists(a, b))
    return float((d.min(axis=1).mean() + d.min(axis=0).mean()) / 2.0)


def iou_at(p1: RadarPointCloud, p2: RadarPointCloud, delta: float = 1.0) -> float | None:
    """Point cloud IoU at a matching radius: IoU = P*R / (P + R - P*R).

    Precision counts p1 points with a p2 point strictly within delta; recall
    is symmetric. Undefined when either cloud is empty.
    """
    if len(p1) == 0 or len(p2) == 0:
        return None
    d = np.sqrt(_pairwise_sq_dists(p1.xy(), p2.xy()))
    prec = float((d.min(axis=1) < delta).mean())
    rec = float((d.min(axis=0) < delta).mean())
    if prec == 0.0 and rec == 0.0:
        return 0.0
    return prec * rec / (prec + rec - prec * rec)


def density_similarity(n: int, m: int) -> float:
    """min/max point-count ratio; two empty clouds count as a perfect 1."""
    if n == 0 and m == 0:
        return 1.0
    return min(n, m) / max(n, m)


def hit_rate(boxes: list[BoundingBox], gt: RadarPointCloud,
             syn: RadarPointCloud) -> float | None:
    """Fraction of gt-occupied foreground boxes that also hold a synthetic
    point; undefined when no foreground box contains a gt point."""
    gt_xy, syn_xy = gt.xy(), syn.xy()
    occupied = 0
    hit = 0
    for box in boxes:
        if not box.is_foreground():
            continue
        if len(gt) == 0 or not box.contains(gt_xy).any():
            continue
        occupied += 1
        if len(syn) > 0 and box.contains(syn_xy).any():
            hit += 1
    if occupied == 0:
        return None
    return hit / occupied


@dataclass(frozen=True)
class DaResult:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def da_match(gt: RadarPointCloud, syn: RadarPointCloud,
             th: DaThresholds = DaThresholds()) -> DaResult:
    """Distance-attribute matching via maximum-cardinality assignment.

    A gt/syn pair is matchable only when planar distance, |RCS difference|
    and |Doppler difference| all fall within their thresholds; TP is the
    size of a maximum bipartite matching over those pairs, which removes
    any dependence on point ordering.
    """
    n_gt, n_syn = len(gt), len(syn)
    tp = 0
    if n_gt > 0 and n_syn > 0:
        d2 = _pairwise_sq_dists(gt.xy(), syn.xy())
        edges = (d2 <= th.loc * th.loc)
        edges &= np.abs(gt.rcs()[:, None] - syn.rcs()[None, :]) <= th.rcs
        edges &= np.abs(gt.doppler()[:, None] - syn.doppler()[None, :]) <= th.doppler
        if edges.any():
            matching = maximum_bipartite_matching(
                csr_matrix(edges.astype(np.int8)), perm_type="column")
            tp = int((matching >= 0).sum())
    fn = n_gt - tp
    fp = n_syn - tp
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return DaResult(tp, fp, fn, precision, recall, f1)


def mmd(x: np.ndarray, y: np.ndarray, cfg: MmdConfig = MmdConfig()) -> float:
    """Biased squared MMD with the multi-scale RBF kernel.

    Diagonal terms are included, so identical sets score exactly 0. When
    every vector in the joint set coincides (h_base = 0) the statistic is
    defined as 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("mmd expects (n, d) arrays; use mmd_1d for scalars")
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("mmd requires non-empty inputs")
    if x.shape[1] != y.shape[1]:
        raise ValueError("x and y must share the feature dimension")

    joint = np.vstack([x, y])
    dj = _pairwise_sq_dists(joint, joint)
    n = joint.shape[0]
    if n < 2:
        return 0.0
    h_base = float(dj.sum() / (n * n - n))  # mean over distinct pairs
    if h_base == 0.0:
        return 0.0
    hs = cfg.bandwidths(h_base)

    def kmean(a, b):
        d2 = _pairwise_sq_dists(a, b)
        total = 0.0
        for h in hs:
            total += float(np.mean(np.exp(-d2 / h)))
        return total

    return kmean(x, x) + kmean(y, y) - 2.0 * kmean(x, y)


def mmd_1d(x: np.ndarray, y: np.ndarray, cfg: MmdConfig = MmdConfig()) -> float:
    """MMD over scalar attributes (column-vector convenience wrapper)."""
    return mmd(np.asarray(x, dtype=float).reshape(-1, 1),
               np.asarray(y, dtype=float).reshape(-1, 1), cfg)


def foreground_boxes(boxes: list[BoundingBox]) -> list[BoundingBox]:
    """Boxes that qualify for foreground metrics, input order preserved."""
    return [b for b in boxes if b.is_foreground()]


def foreground_slice(cloud: RadarPointCloud,
                     boxes: list[BoundingBox]) -> list[RadarPointCloud]:
    """Per qualifying box, the sub-cloud inside it (boundary inclusive).

    A point inside overlapping boxes is assigned to every containing box.
    Returned list parallels foreground_boxes(boxes).
    """
    xy = cloud.xy()
    out = []
    for bi, box in enumerate(foreground_boxes(boxes)):
        if len(cloud) == 0:
            out.append(RadarPointCloud((), f"{cloud.frame_id}/box{bi}"))
            continue
        mask = box.contains(xy)
        pts = tuple(p for p, keep in zip(cloud.points, mask) if keep)
        out.append(RadarPointCloud(pts, f"{cloud.frame_id}/box{bi}"))
    return out


def canonicalize(points: RadarPointCloud, box: BoundingBox) -> RadarPointCloud:
    """Express a sub-cloud in the box frame (center at origin, heading on +x).

    RCS and Doppler pass through unchanged.
    """
    if len(points) == 0:
        return points
    uv = box.to_box_frame(points.xy())
    pts = tuple(RadarPoint(float(u), float(v), p.rcs, p.doppler)
                for (u, v), p in zip(uv, points.points))
    return RadarPointCloud(pts, points.frame_id)


@dataclass(frozen=True)
class EvalConfig:
    da: DaThresholds = DaThresholds()
    iou_delta: float = 1.0
    mmd: MmdConfig = MmdConfig()


@dataclass
class FrameMetrics:
    """All per-frame metric values; None marks an undefined entry."""

    frame_id: str
    entire: dict[str, float | None]
    foreground: dict[str, float | None]
    # canonical per-class foreground points, pooled later for dataset MMD
    class_points: dict[str, dict[str, list[np.ndarray]]] = field(default_factory=dict)

    def flat(self) -> dict[str, float | None]:
        out = {f"entire.{k}": v for k, v in self.entire.items()}
        out.update({f"foreground.{k}": v for k, v in self.foreground.items()})
        return out


def evaluate_frame(gt: RadarPointCloud, syn: RadarPointCloud,
                   boxes: list[BoundingBox],
                   config: EvalConfig = EvalConfig()) -> FrameMetrics:
    """Score one synthetic cloud against its ground truth."""
    da = da_match(gt, syn, config.da)
    entire: dict[str, float | None] = {
        "cd_loc": chamfer_loc(syn, gt),
        "cd_full": chamfer_full(syn, gt),
        "iou": iou_at(syn, gt, config.iou_delta),
        "da_precision": da.precision,
        "da_recall": da.recall,
        "da_f1": da.f1,
        "n_gt": len(gt),
        "n_syn": len(syn),
    }
    if len(gt) > 0 and len(syn) > 0:
        entire["mmd_loc"] = mmd(syn.xy(), gt.xy(), config.mmd)
        entire["mmd_rcs"] = mmd_1d(syn.rcs(), gt.rcs(), config.mmd)
        entire["mmd_doppler"] = mmd_1d(syn.doppler(), gt.doppler(), config.mmd)
    else:
        entire["mmd_loc"] = entire["mmd_rcs"] = entire["mmd_doppler"] = None

    fg_boxes = foreground_boxes(boxes)
    gt_slices = foreground_slice(gt, boxes)
    syn_slices = foreground_slice(syn, boxes)
    box_cd_loc, box_cd_full, box_ds = [], [], []
    class_points: dict[str, dict[str, list[np.ndarray]]] = {}
    for box, gs, ss in zip(fg_boxes, gt_slices, syn_slices):
        box_ds.append(density_similarity(len(gs), len(ss)))
        cl = chamfer_loc(ss, gs)
        if cl is not None:  # both sub-clouds non-empty
            box_cd_loc.append(cl)
            box_cd_full.append(chamfer_full(ss, gs))
        slot = class_points.setdefault(
            box.cls.value, {"gt": [], "syn": []})
        for key, sub in (("gt", gs), ("syn", ss)):
            if len(sub) > 0:
                slot[key].append(canonicalize(sub, box).as_array())

    foreground: dict[str, float | None] = {
        "cd_loc": float(np.mean(box_cd_loc)) if box_cd_loc else None,
        "cd_full": float(np.mean(box_cd_full)) if box_cd_full else None,
        "density_similarity": float(np.mean(box_ds)) if box_ds else None,
        "hit_rate": hit_rate(boxes, gt, syn),
        "n_boxes": len(fg_boxes),
        "n_boxes_with_points": len(box_cd_loc),
    }
    return FrameMetrics(gt.frame_id, entire, foreground, class_points)


@dataclass
class MetricsReport:
    """Per-frame values plus mean/std aggregates and pooled class MMDs."""

    per_frame: list[FrameMetrics]
    aggregate: dict[str, dict[str, float | int]]
    foreground_mmd: dict[str, dict[str, float | int | None]]

    def to_dict(self) -> dict:
        return {
            "frames": [
                {"frame_id": f.frame_id, "entire": f.entire,
                 "foreground": f.foreground}
                for f in self.per_frame
            ],
            "aggregate": self.aggregate,
            "foreground_mmd": self.foreground_mmd,
        }


def aggregate_frames(frames: list[FrameMetrics]) -> dict[str, dict[str, float | int]]:
    """Mean and population std per metric; undefined entries are counted,
    not coerced."""
    keys: list[str] = []
    for f in frames:
        for k in f.flat():
            if k not in keys:
                keys.append(k)
    out: dict[str, dict[str, float | int]] = {}
    for k in keys:
        vals = [f.flat().get(k) for f in frames]
        defined = [v for v in vals if v is not None]
        entry: dict[str, float | int] = {
            "count": len(defined),
            "undefined": len(vals) - len(defined),
        }
        if defined:
            arr = np.asarray(defined, dtype=float)
            entry["mean"] = float(arr.mean())
            entry["std"] = float(arr.std())  # population std
        out[k] = entry
    return out


def pooled_class_mmd(frames: list[FrameMetrics],
                     cfg: MmdConfig = MmdConfig()) -> dict[str, dict[str, float | int | None]]:
    """Per-class MMD triples over canonicalized foreground points pooled
    across frames; None when a class lacks gt or syn points."""
    pools: dict[str, dict[str, list[np.ndarray]]] = {}
    for f in frames:
        for cls, slot in f.class_points.items():
            dest = pools.setdefault(cls, {"gt": [], "syn": []})
            dest["gt"].extend(slot["gt"])
            dest["syn"].extend(slot["syn"])
    out: dict[str, dict[str, float | int | None]] = {}
    for cls, slot in sorted(pools.items()):
        gt = np.vstack(slot["gt"]) if slot["gt"] else np.zeros((0, 4))
        syn = np.vstack(slot["syn"]) if slot["syn"] else np.zeros((0, 4))
        entry: dict[str, float | int | None] = {
            "gt_points": int(gt.shape[0]),
            "syn_points": int(syn.shape[0]),
        }
        if gt.shape[0] > 0 and syn.shape[0] > 0:
            entry["loc"] = mmd(syn[:, :2], gt[:, :2], cfg)
            entry["rcs"] = mmd_1d(syn[:, 2], gt[:, 2], cfg)
            entry["doppler"] = mmd_1d(syn[:, 3], gt[:, 3], cfg)
        else:
            entry["loc"] = entry["rcs"] = entry["doppler"] = None
        out[cls] = entry
    return out


def evaluate_dataset(frame_results: list[FrameMetrics],
                     cfg: MmdConfig = MmdConfig()) -> MetricsReport:
    """Fold per-frame metrics into a report; independent of frame order up
    to the per-frame list itself."""
    return MetricsReport(
        per_frame=frame_results,
        aggregate=aggregate_frames(frame_results),
        foreground_mmd=pooled_class_mmd(frame_results, cfg),
    )
