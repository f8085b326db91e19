"""File codecs: point-cloud CSV/JSONL, boxes JSON, PNG map + JSON sidecar,
attributed-point and correspondence CSV, and the evaluation manifest.

All writers are atomic (write to a temp file in the target directory, then
rename), and every codec round-trips exactly at its declared precision:
clouds keep 6 significant digits, maps keep their 8-bit levels bit for bit.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    BevMap,
    BoundingBox,
    BoxClass,
    Channel,
    GridSpec,
    RadarPoint,
    RadarPointCloud,
    ValueRange,
    dequantize_u8,
    quantize_u8,
)
from .scene import AttributedPoint3D, Correspondence

CLOUD_HEADER = ["x", "y", "rcs", "doppler"]


class ParseError(ValueError):
    """A file exists but does not match its declared format."""


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(v: float) -> str:
    return f"{v:.6g}"


# ---------------------------------------------------------------------------
# point clouds

def write_cloud_csv(cloud: RadarPointCloud, path: str | Path) -> None:
    lines = [",".join(CLOUD_HEADER)]
    for p in cloud.points:
        lines.append(",".join(_fmt(v) for v in (p.x, p.y, p.rcs, p.doppler)))
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_cloud_csv(path: str | Path, frame_id: str | None = None) -> RadarPointCloud:
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or [c.strip() for c in rows[0]] != CLOUD_HEADER:
        raise ParseError(f"{path}: expected header {','.join(CLOUD_HEADER)}")
    points = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"{path}:{i}: expected 4 columns, got {len(row)}")
        try:
            points.append(RadarPoint(*(float(v) for v in row)))
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: {exc}") from exc
    return RadarPointCloud(tuple(points), frame_id or path.stem)


def write_cloud_jsonl(cloud: RadarPointCloud, path: str | Path) -> None:
    lines = [json.dumps({"x": p.x, "y": p.y, "rcs": p.rcs, "doppler": p.doppler})
             for p in cloud.points]
    _atomic_write_text(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def read_cloud_jsonl(path: str | Path, frame_id: str | None = None) -> RadarPointCloud:
    path = Path(path)
    points = []
    with open(path) as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                points.append(RadarPoint(float(rec["x"]), float(rec["y"]),
                                         float(rec["rcs"]), float(rec["doppler"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{i}: {exc}") from exc
    return RadarPointCloud(tuple(points), frame_id or path.stem)


def write_cloud(cloud: RadarPointCloud, path: str | Path) -> None:
    """Dispatch on extension: .csv or .jsonl."""
    path = Path(path)
    if path.suffix == ".jsonl":
        write_cloud_jsonl(cloud, path)
    elif path.suffix == ".csv":
        write_cloud_csv(cloud, path)
    else:
        raise ParseError(f"unsupported cloud format: {path.suffix}")


def read_cloud(path: str | Path, frame_id: str | None = None) -> RadarPointCloud:
    path = Path(path)
    if path.suffix == ".jsonl":
        return read_cloud_jsonl(path, frame_id)
    if path.suffix == ".csv":
        return read_cloud_csv(path, frame_id)
    raise ParseError(f"unsupported cloud format: {path.suffix}")


# ---------------------------------------------------------------------------
# boxes

def write_boxes(boxes: list[BoundingBox], path: str | Path) -> None:
    recs = [{"cx": b.cx, "cy": b.cy, "length": b.length, "width": b.width,
             "yaw": b.yaw, "class": b.cls.value, "visibility": b.visibility}
            for b in boxes]
    _atomic_write_text(Path(path), json.dumps(recs, indent=2) + "\n")


def read_boxes(path: str | Path) -> list[BoundingBox]:
    path = Path(path)
    try:
        with open(path) as f:
            recs = json.load(f)
        return [BoundingBox(float(r["cx"]), float(r["cy"]), float(r["length"]),
                            float(r["width"]), float(r["yaw"]),
                            BoxClass(r["class"]), float(r["visibility"]))
                for r in recs]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# BEV maps: 8-bit grayscale PNG plus a JSON sidecar describing grid,
# channel, and value range

def sidecar_path(png_path: str | Path) -> Path:
    return Path(png_path).with_suffix(".json")


def write_map(bev: BevMap, png_path: str | Path) -> None:
    png_path = Path(png_path)
    img = Image.fromarray(quantize_u8(bev.values), mode="L")
    import io as _io
    buf = _io.BytesIO()
    img.save(buf, format="PNG")
    _atomic_write_bytes(png_path, buf.getvalue())
    meta = {
        "grid": {"extent": bev.grid.extent, "size": bev.grid.size},
        "channel": bev.channel.value,
        "range": {"min": bev.range.min, "max": bev.range.max},
    }
    _atomic_write_text(sidecar_path(png_path), json.dumps(meta, indent=2) + "\n")


def read_map(png_path: str | Path) -> BevMap:
    png_path = Path(png_path)
    try:
        with open(sidecar_path(png_path)) as f:
            meta = json.load(f)
        grid = GridSpec(float(meta["grid"]["extent"]), int(meta["grid"]["size"]))
        channel = Channel(meta["channel"])
        rng = ValueRange(float(meta["range"]["min"]), float(meta["range"]["max"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{sidecar_path(png_path)}: {exc}") from exc
    levels = np.asarray(Image.open(png_path).convert("L"))
    if levels.shape != (grid.size, grid.size):
        raise ParseError(f"{png_path}: image shape {levels.shape} does not "
                         f"match sidecar grid size {grid.size}")
    return BevMap(grid, channel, dequantize_u8(levels), rng)


# ---------------------------------------------------------------------------
# scene conditioning inputs

def read_attributed_points(path: str | Path) -> list[AttributedPoint3D]:
    """CSV `x,y,z,payload...` -> points; one payload column is a scalar,
    three are a color triple."""
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:3] != ["x", "y", "z"]:
        raise ParseError(f"{path}: expected header starting with x,y,z")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: {exc}") from exc
        if len(vals) == 4:
            payload: object = vals[3]
        elif len(vals) == 6:
            payload = tuple(vals[3:6])
        else:
            raise ParseError(f"{path}:{i}: expected 4 or 6 columns")
        out.append(AttributedPoint3D(vals[0], vals[1], vals[2], payload))
    return out


def read_correspondences(path: str | Path) -> list[Correspondence]:
    """CSV `x,y,z,x2,y2,z2,dt` -> correspondences."""
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != ["x", "y", "z", "x2", "y2", "z2", "dt"]:
        raise ParseError(f"{path}: expected header x,y,z,x2,y2,z2,dt")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            v = [float(c) for c in row]
            if len(v) != 7:
                raise ValueError(f"expected 7 columns, got {len(v)}")
            out.append(Correspondence(AttributedPoint3D(v[0], v[1], v[2]),
                                      AttributedPoint3D(v[3], v[4], v[5]), v[6]))
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# manifest

@dataclass(frozen=True)
class FrameEntry:
    frame_id: str
    gt_cloud: Path
    boxes: Path
    syn_cloud: Path | None = None
    maps: dict[str, Path] | None = None  # keys: density, rcs, doppler


def read_manifest(path: str | Path) -> list[FrameEntry]:
    path = Path(path)
    base = path.parent
    try:
        with open(path) as f:
            doc = json.load(f)
        entries = []
        seen = set()
        for rec in doc["frames"]:
            fid = str(rec["frame_id"])
            if fid in seen:
                raise ValueError(f"duplicate frame_id {fid!r}")
            seen.add(fid)
            syn = rec.get("syn_cloud")
            maps = rec.get("maps")
            if (syn is None) == (maps is None):
                raise ValueError(f"frame {fid!r} needs exactly one of "
                                 "syn_cloud or maps")
            entries.append(FrameEntry(
                frame_id=fid,
                gt_cloud=base / rec["gt_cloud"],
                boxes=base / rec["boxes"],
                syn_cloud=base / syn if syn else None,
                maps={k: base / v for k, v in maps.items()} if maps else None,
            ))
        return entries
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_manifest(entries: list[dict], path: str | Path) -> None:
    _atomic_write_text(Path(path), json.dumps({"frames": entries}, indent=2) + "\n")


def write_json(obj, path: str | Path) -> None:
    _atomic_write_text(Path(path), json.dumps(obj, indent=2, sort_keys=True) + "\n")
