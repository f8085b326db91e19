import numpy as np
import pytest

from radarbev.core import GridSpec, RadarPointCloud
from radarbev.metrics import da_match
from radarbev.scene import AttributedPoint3D, Correspondence, radial_velocity
from radarbev.synth import SceneConfig, generate_scene, perturb_scene


def test_empty_config():
    cloud, boxes = generate_scene(SceneConfig(seed=0, n_objects=0, n_clutter=0))
    assert len(cloud) == 0 and boxes == []


def test_exact_point_count_and_determinism():
    cfg = SceneConfig(seed=123, n_objects=4, n_clutter=20, points_per_object=5)
    a, boxes_a = generate_scene(cfg)
    b, boxes_b = generate_scene(cfg)
    assert len(a) == cfg.n_points == 40
    assert a == b
    assert boxes_a == boxes_b


def test_different_seeds_differ():
    a, _ = generate_scene(SceneConfig(seed=1))
    b, _ = generate_scene(SceneConfig(seed=2))
    assert a != b


def test_min_separation_respected():
    cfg = SceneConfig(seed=3, n_objects=3, n_clutter=30, min_separation=3.0)
    cloud, _ = generate_scene(cfg)
    xy = cloud.xy()
    sep = cfg.min_separation * cfg.grid.resolution
    d = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    assert d.min() >= sep


def test_points_inside_roi_and_boxes():
    cfg = SceneConfig(seed=4, n_objects=3, n_clutter=10)
    cloud, boxes = generate_scene(cfg)
    xy = cloud.xy()
    assert (np.abs(xy) < cfg.grid.extent).all()
    # object points (first n_objects * ppo) sit inside their own box
    ppo = cfg.points_per_object
    for bi, box in enumerate(boxes):
        pts = xy[bi * ppo:(bi + 1) * ppo]
        if len(pts):
            assert box.contains(pts).all()


def test_doppler_matches_radial_velocity_convention():
    cfg = SceneConfig(seed=5, n_objects=4, n_clutter=0)
    cloud, boxes = generate_scene(cfg)
    ppo = cfg.points_per_object
    # reconstruct each object's velocity from two of its points, then check
    # every point against the scene module's radial projection
    for bi in range(len(boxes)):
        pts = cloud.points[bi * ppo:(bi + 1) * ppo]
        for p in pts:
            r = np.hypot(p.x, p.y)
            rhat = np.array([p.x, p.y]) / r
            # v is along the box heading; recover speed from the projection
            yaw = boxes[bi].yaw
            heading = np.array([np.cos(yaw), np.sin(yaw)])
            denom = float(heading @ rhat)
            if abs(denom) < 1e-6:
                continue
            speed = p.doppler / denom
            vel = speed * heading
            dt = 0.25
            c = Correspondence(
                AttributedPoint3D(p.x, p.y, 0.0),
                AttributedPoint3D(p.x + vel[0] * dt, p.y + vel[1] * dt, 0.0), dt)
            assert radial_velocity(c) == pytest.approx(p.doppler, abs=1e-9)


def test_separation_failure_raises():
    # 2000 points at 10-cell separation cannot fit a 64-cell grid
    cfg = SceneConfig(seed=6, n_objects=0, n_clutter=2000, min_separation=10.0,
                      grid=GridSpec(6.25, 64), max_retries=50)
    with pytest.raises(RuntimeError, match="retry budget"):
        generate_scene(cfg)


def test_perturb_identity():
    cloud, _ = generate_scene(SceneConfig(seed=7, n_objects=2, n_clutter=10))
    out = perturb_scene(cloud, seed=99)
    assert out.points == cloud.points


def test_perturb_drop_all():
    cloud, _ = generate_scene(SceneConfig(seed=8, n_objects=2, n_clutter=10))
    out = perturb_scene(cloud, seed=1, drop_rate=1.0)
    assert len(out) == 0


def test_perturb_deterministic():
    cloud, _ = generate_scene(SceneConfig(seed=9, n_objects=1, n_clutter=15))
    a = perturb_scene(cloud, seed=5, jitter_loc=0.2, drop_rate=0.2, spawn_rate=0.3)
    b = perturb_scene(cloud, seed=5, jitter_loc=0.2, drop_rate=0.2, spawn_rate=0.3)
    assert a == b


def test_perturb_small_jitter_keeps_da_recall():
    # 0.1 m jitter stays far inside the 1 m matching radius, so the identity
    # pairing survives on separation-respecting scenes
    for seed in range(5):
        cloud, _ = generate_scene(SceneConfig(seed=seed, n_objects=3, n_clutter=20))
        syn = perturb_scene(cloud, seed=seed + 100, jitter_loc=0.1)
        assert da_match(cloud, syn).recall == 1.0


def test_perturb_monotone_jitter_recall():
    seeds = range(50)
    means = []
    for jitter in (0.1, 0.4, 0.8):
        recalls = []
        for seed in seeds:
            cloud, _ = generate_scene(SceneConfig(seed=seed, n_objects=2,
                                                  n_clutter=12))
            syn = perturb_scene(cloud, seed=seed + 1000, jitter_loc=jitter)
            recalls.append(da_match(cloud, syn).recall)
        means.append(np.mean(recalls))
    assert means[0] >= means[1] >= means[2]


def test_perturb_rejects_bad_rates():
    cloud = RadarPointCloud((), "t")
    with pytest.raises(ValueError):
        perturb_scene(cloud, seed=0, drop_rate=1.5)
    with pytest.raises(ValueError):
        perturb_scene(cloud, seed=0, spawn_rate=-0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        SceneConfig(min_separation=0.5)
    with pytest.raises(ValueError):
        SceneConfig(points_per_object=0)
