"""Command-line surface: encode, recover, eval, synth, sweep.

Exit codes: 0 success, 2 parse/usage errors, 3 precondition violations,
4 solver or generation failures. Progress and errors go to stderr; data
only ever goes to files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as rio
from . import kernels
from .core import BevMap, BoxClass, Channel, GaussianKernel, GridSpec
from .encode import encode_cloud
from .metrics import DaThresholds, EvalConfig, MmdConfig, chamfer_loc, evaluate_dataset, evaluate_frame
from .recover import (
    DeconvParams,
    cells_to_cloud,
    estimate_point_count,
    extract_points,
    irl1_deconvolve,
    recover_peak,
    recover_peak_random,
    recover_random,
)
from .synth import DEFAULT_CLASS_SPECS, ClassSpec, SceneConfig, generate_scene, perturb_scene

EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_SOLVER = 4

METHODS = ("deconv", "random", "peak", "peak_random")

# Flag defaults, also overridable through --config JSON (flags win).
DEFAULTS = {
    "extent": 50.0,
    "size": 512,
    "sigma": 2.0,
    "lam": 0.0018,
    "fista_iters": 300,
    "irl1_iters": 5,
    "threshold": 0.1,
    "epsilon": 0.01,
    "da_loc": 1.0,
    "da_rcs": 8.0,
    "da_doppler": 2.5,
    "iou_delta": 1.0,
    "mmd_kernels": 5,
}


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def resolve_options(args: argparse.Namespace,
                    overrides: dict | None = None) -> dict:
    """defaults < per-command overrides < config file < explicit flags."""
    merged = dict(DEFAULTS)
    if overrides:
        merged.update(overrides)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise rio.ParseError(f"{config_path}: {exc}") from exc
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise rio.ParseError(f"{config_path}: unknown keys {sorted(unknown)}")
        merged.update(doc)
    for key in DEFAULTS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    return merged


def _deconv_params(opt: dict) -> DeconvParams:
    return DeconvParams(lam=opt["lam"], fista_iters=int(opt["fista_iters"]),
                        irl1_iters=int(opt["irl1_iters"]),
                        extract_threshold=opt["threshold"],
                        reweight_epsilon=opt["epsilon"])


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--extent", type=float, default=None, help="grid half-width, meters")
    p.add_argument("--size", type=int, default=None, help="grid cells per side")
    p.add_argument("--sigma", type=float, default=None, help="blur sigma, cells")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="sparsity weight")
    p.add_argument("--fista-iters", type=int, default=None)
    p.add_argument("--irl1-iters", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None,
                   help="spike extraction threshold")
    p.add_argument("--epsilon", type=float, default=None,
                   help="IRL1 reweighting epsilon")


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None,
                   help="JSON file overriding defaults (flags win)")


# ---------------------------------------------------------------------------
# encode

def cmd_encode(args: argparse.Namespace) -> int:
    opt = resolve_options(args)
    grid = GridSpec(opt["extent"], int(opt["size"]))
    kernel = GaussianKernel(opt["sigma"])
    cloud = rio.read_cloud(args.cloud)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix or Path(args.cloud).stem
    dens, rcs, dop = encode_cloud(cloud, grid, kernel)
    for bev, name in ((dens, "density"), (rcs, "rcs"), (dop, "doppler")):
        rio.write_map(bev, out_dir / f"{prefix}_{name}.png")
    _log(f"encoded {len(cloud)} points -> {out_dir}/{prefix}_{{density,rcs,doppler}}.png")
    return 0


# ---------------------------------------------------------------------------
# recover

def _recover_cloud(dens: BevMap, rcs: BevMap, dop: BevMap, method: str,
                   params: DeconvParams, sigma: float, seed: int,
                   count: int | None, frame_id: str = ""):
    """Run one recovery method; returns (cloud, diagnostics dict)."""
    kernel = GaussianKernel(sigma)
    diag: dict = {"method": method, "backend": kernels.backend_name()}
    t0 = time.perf_counter()
    if method == "deconv":
        result = irl1_deconvolve(dens, kernel, params)
        cloud = extract_points(result.sparse, params.extract_threshold, rcs, dop,
                               frame_id)
        diag["round_objectives"] = result.round_objectives
    else:
        n = count if count is not None else estimate_point_count(dens, kernel)
        if method == "random":
            n = min(n, int(np.count_nonzero(dens.values)))
            cells = recover_random(dens, n, seed)
        elif method == "peak":
            cells = recover_peak(dens, params.extract_threshold)
        elif method == "peak_random":
            nonzero = int(np.count_nonzero(dens.values))
            n = min(n, nonzero)
            cells = recover_peak_random(dens, n, params.extract_threshold, seed)
        else:
            raise ValueError(f"unknown recovery method {method!r}")
        cloud = cells_to_cloud(cells, dens.grid, rcs, dop, frame_id)
    diag["extracted"] = len(cloud)
    diag["wall_time"] = time.perf_counter() - t0
    return cloud, diag


def _load_map_triple(density, rcs, doppler) -> tuple[BevMap, BevMap, BevMap]:
    dens = rio.read_map(density)
    rcs_m = rio.read_map(rcs)
    dop_m = rio.read_map(doppler)
    if dens.channel is not Channel.DENSITY:
        raise ValueError(f"{density}: expected a density map, got {dens.channel.value}")
    for m, path in ((rcs_m, rcs), (dop_m, doppler)):
        if m.grid != dens.grid:
            raise ValueError(f"{path}: grid does not match density map")
    return dens, rcs_m, dop_m


def cmd_recover(args: argparse.Namespace) -> int:
    opt = resolve_options(args)
    dens, rcs_m, dop_m = _load_map_triple(args.density, args.rcs, args.doppler)
    params = _deconv_params(opt)
    cloud, diag = _recover_cloud(dens, rcs_m, dop_m, args.method, params,
                                 opt["sigma"], args.seed, args.count,
                                 frame_id=Path(args.out).stem)
    rio.write_cloud(cloud, args.out)
    if args.diagnostics:
        rio.write_json(diag, args.diagnostics)
    _log(f"{args.method}: {len(cloud)} points -> {args.out} "
         f"({diag['wall_time']:.2f}s)")
    return 0


# ---------------------------------------------------------------------------
# eval

def _eval_one_frame(entry: rio.FrameEntry, opt: dict, method: str,
                    seed: int, count: int | None):
    gt = rio.read_cloud(entry.gt_cloud, frame_id=entry.frame_id)
    boxes = rio.read_boxes(entry.boxes)
    if entry.syn_cloud is not None:
        syn = rio.read_cloud(entry.syn_cloud, frame_id=entry.frame_id)
    else:
        dens, rcs_m, dop_m = _load_map_triple(
            entry.maps["density"], entry.maps["rcs"], entry.maps["doppler"])
        syn, _ = _recover_cloud(dens, rcs_m, dop_m, method,
                                _deconv_params(opt), opt["sigma"], seed, count,
                                frame_id=entry.frame_id)
    config = EvalConfig(
        da=DaThresholds(opt["da_loc"], opt["da_rcs"], opt["da_doppler"]),
        iou_delta=opt["iou_delta"],
        mmd=MmdConfig(int(opt["mmd_kernels"])),
    )
    return evaluate_frame(gt, syn, boxes, config)


def cmd_eval(args: argparse.Namespace) -> int:
    opt = resolve_options(args)
    entries = rio.read_manifest(args.manifest)
    if not entries:
        raise ValueError("manifest lists no frames")
    work = [(e, opt, args.recover_method, args.seed, args.count) for e in entries]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            frames = list(pool.map(_eval_one_frame_star, work))
    else:
        frames = [_eval_one_frame_star(w) for w in work]
    report = evaluate_dataset(frames, MmdConfig(int(opt["mmd_kernels"])))
    doc = report.to_dict()
    doc["config"] = {k: opt[k] for k in ("da_loc", "da_rcs", "da_doppler",
                                         "iou_delta", "mmd_kernels")}
    rio.write_json(doc, args.out)
    if args.per_frame_csv:
        _write_frame_csv(report, args.per_frame_csv)
    _log(f"evaluated {len(frames)} frames -> {args.out}")
    return 0


def _eval_one_frame_star(w):
    return _eval_one_frame(*w)


def _write_frame_csv(report, path) -> None:
    keys: list[str] = []
    for f in report.per_frame:
        for k in f.flat():
            if k not in keys:
                keys.append(k)
    lines = [",".join(["frame_id"] + keys)]
    for f in report.per_frame:
        flat = f.flat()
        row = [f.frame_id]
        for k in keys:
            v = flat.get(k)
            row.append("" if v is None else f"{v:.6g}")
        lines.append(",".join(row))
    rio._atomic_write_text(Path(path), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# synth

def _scene_config_from_json(doc: dict, grid: GridSpec, seed: int) -> SceneConfig:
    specs = dict(DEFAULT_CLASS_SPECS)
    if "classes" in doc:
        specs = {}
        for name, rec in doc["classes"].items():
            specs[BoxClass(name)] = ClassSpec(
                tuple(rec["length_range"]), tuple(rec["width_range"]),
                float(rec["rcs_mean"]), float(rec["rcs_spread"]),
                tuple(rec["speed_range"]))
    kwargs = {k: doc[k] for k in ("n_objects", "n_clutter", "points_per_object",
                                  "min_separation", "placement_margin",
                                  "ego_clearance") if k in doc}
    return SceneConfig(seed=seed, grid=grid, class_specs=specs, **kwargs)


def cmd_synth(args: argparse.Namespace) -> int:
    opt = resolve_options(args)
    grid = GridSpec(opt["extent"], int(opt["size"]))
    doc = {}
    if args.scene_config:
        try:
            with open(args.scene_config) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise rio.ParseError(f"{args.scene_config}: {exc}") from exc
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i in range(args.count):
        cfg = _scene_config_from_json(doc, grid, seed=args.seed + i)
        cloud, boxes = generate_scene(cfg)
        fid = f"{i:04d}"
        rio.write_cloud(cloud, out_dir / f"gt_{fid}.csv")
        rio.write_boxes(boxes, out_dir / f"boxes_{fid}.json")
        entry = {"frame_id": fid, "gt_cloud": f"gt_{fid}.csv",
                 "boxes": f"boxes_{fid}.json"}
        if args.perturb:
            syn = perturb_scene(cloud, seed=args.seed + i + 10_000,
                                jitter_loc=args.jitter_loc,
                                jitter_rcs=args.jitter_rcs,
                                jitter_doppler=args.jitter_doppler,
                                drop_rate=args.drop_rate,
                                spawn_rate=args.spawn_rate,
                                extent=grid.extent)
            rio.write_cloud(syn, out_dir / f"syn_{fid}.csv")
            entry["syn_cloud"] = f"syn_{fid}.csv"
        manifest.append(entry)
    rio.write_manifest(manifest, out_dir / "manifest.json")
    _log(f"wrote {args.count} scenes -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# sweep

def _sweep_scene_config(seed: int, grid: GridSpec) -> SceneConfig:
    # compact car-only scenes sized for the sweep grid
    specs = {BoxClass.CAR: ClassSpec((4.0, 5.0), (1.8, 2.1), 10.0, 5.0, (0.0, 20.0))}
    return SceneConfig(seed=seed, n_objects=3, n_clutter=18, points_per_object=4,
                       min_separation=3.0, grid=grid, class_specs=specs,
                       ego_clearance=2.0, placement_margin=0.8)


def _sweep_cell(task):
    sigma, method, seeds, grid_args, params = task
    grid = GridSpec(*grid_args)
    kernel = GaussianKernel(sigma)
    cds, cerrs = [], []
    for seed in seeds:
        cloud, _ = generate_scene(_sweep_scene_config(seed, grid))
        dens, rcs_m, dop_m = encode_cloud(cloud, grid, kernel)
        rec, _ = _recover_cloud(dens, rcs_m, dop_m, method, params, sigma,
                                seed=seed, count=None)
        cd = chamfer_loc(cloud, rec)
        cds.append(np.nan if cd is None else cd)
        cerrs.append(abs(len(rec) - len(cloud)) / len(cloud))
    return sigma, method, float(np.nanmean(cds)), float(np.mean(cerrs))


def cmd_sweep(args: argparse.Namespace) -> int:
    # desk-scale grid by default; the paper-scale 512 grid would make the
    # full cartesian sweep take hours
    opt = resolve_options(args, overrides={"extent": 12.5, "size": 128})
    sigmas = [float(s) for s in args.sigmas.split(",") if s]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    grid_args = (opt["extent"], int(opt["size"]))
    params = _deconv_params(opt)
    seeds = list(range(args.seed, args.seed + args.scenes))
    tasks = [(sigma, method, seeds, grid_args, params)
             for sigma in sigmas for method in methods]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, tasks))
    else:
        rows = [_sweep_cell(t) for t in tasks]
    lines = ["sigma,method,mean_cd_loc,mean_count_err"]
    for sigma, method, cd, cerr in rows:
        lines.append(f"{sigma:.6g},{method},{cd:.6g},{cerr:.6g}")
    rio._atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    _log(f"swept {len(sigmas)} sigmas x {len(methods)} methods x "
         f"{args.scenes} scenes -> {args.out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="radarbev",
        description="radar point cloud <-> BEV map toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="cloud -> density/rcs/doppler maps")
    p.add_argument("--cloud", required=True, help="input cloud (.csv/.jsonl)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--prefix", default=None, help="output name prefix")
    _add_grid_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("recover", help="density map -> cloud")
    p.add_argument("--density", required=True, help="density map PNG")
    p.add_argument("--rcs", required=True, help="RCS map PNG")
    p.add_argument("--doppler", required=True, help="Doppler map PNG")
    p.add_argument("--out", required=True, help="output cloud (.csv/.jsonl)")
    p.add_argument("--method", choices=METHODS, default="deconv")
    p.add_argument("--count", type=int, default=None,
                   help="point budget for sampling methods (default: mass estimate)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--diagnostics", default=None, help="diagnostics JSON path")
    _add_grid_flags(p)
    _add_solver_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("eval", help="score synthetic clouds against ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="metrics report JSON")
    p.add_argument("--per-frame-csv", default=None)
    p.add_argument("--recover-method", choices=METHODS, default="deconv",
                   help="recovery for frames that list maps")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--da-loc", dest="da_loc", type=float, default=None)
    p.add_argument("--da-rcs", dest="da_rcs", type=float, default=None)
    p.add_argument("--da-doppler", dest="da_doppler", type=float, default=None)
    p.add_argument("--iou-delta", dest="iou_delta", type=float, default=None)
    p.add_argument("--mmd-kernels", dest="mmd_kernels", type=int, default=None)
    _add_grid_flags(p)
    _add_solver_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic scenes")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=1, help="number of scenes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scene-config", default=None,
                   help="scene JSON (objects, clutter, separation, classes)")
    p.add_argument("--perturb", action="store_true",
                   help="also write perturbed syn_*.csv clouds")
    p.add_argument("--jitter-loc", type=float, default=0.0)
    p.add_argument("--jitter-rcs", type=float, default=0.0)
    p.add_argument("--jitter-doppler", type=float, default=0.0)
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--spawn-rate", type=float, default=0.0)
    _add_grid_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="sigma x recovery-method ablation")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--sigmas", default="0.5,1,1.5,2,2.5,3")
    p.add_argument("--methods", default="deconv,random,peak,peak_random")
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_grid_flags(p)
    _add_solver_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except rio.ParseError as exc:
        _log(f"parse error: {exc}")
        return EXIT_PARSE
    except (ValueError, IndexError, KeyError, FileNotFoundError) as exc:
        _log(f"precondition violation: {exc}")
        return EXIT_PRECONDITION
    except RuntimeError as exc:
        _log(f"solver failure: {exc}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
