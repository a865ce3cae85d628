import json

import numpy as np
import pytest

from lodsketch.capture import (
    DEFAULT_PLAN,
    OrbitPlan,
    camera_pose,
    export_plan_json,
    generate_orbit_plan,
    look_at,
)


def test_default_plan_counts():
    assert len(DEFAULT_PLAN.azimuths) == 36
    assert DEFAULT_PLAN.elevations == [0, 10, 20, 30, 40, 50, 60]
    assert DEFAULT_PLAN.n_views == 252


def test_view_index_ordering():
    plan = DEFAULT_PLAN
    assert plan.angles(0) == (0, 0)
    assert plan.angles(1) == (0, 10)
    assert plan.angles(7) == (10, 0)
    assert plan.angles(251) == (350, 60)
    for idx in (0, 5, 100, 251):
        assert plan.index_of(*plan.angles(idx)) == idx
    with pytest.raises((IndexError, ValueError)):
        plan.angles(252)


def test_pose_geometry():
    p = camera_pose(0, 0, 10)
    np.testing.assert_allclose(p.position, [10, 0, 0], atol=1e-12)
    np.testing.assert_allclose(p.forward, [-1, 0, 0], atol=1e-12)
    p = camera_pose(90, 0, 10)
    np.testing.assert_allclose(p.position, [0, 10, 0], atol=1e-12)
    p = camera_pose(0, 30, 4, target=(1, 2, 3))
    np.testing.assert_allclose(p.position, [1 + 4 * np.cos(np.pi / 6), 2, 3 + 2], atol=1e-12)
    # up vector has a positive world-Z component above the horizon
    assert p.rotation[2, 1] > 0


@pytest.mark.parametrize("el", [-90, 90, 95])
def test_pose_rejects_poles(el):
    with pytest.raises(ValueError):
        camera_pose(0, el, 10)


def test_look_at_degenerate():
    with pytest.raises(ValueError):
        look_at((1, 1, 1), (1, 1, 1))
    with pytest.raises(ValueError):
        look_at((0, 0, 5), (0, 0, 0))


def test_all_poses_orthonormal():
    for pose in generate_orbit_plan():
        R = pose.rotation
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-9
        assert abs(np.linalg.det(R) - 1) < 1e-9
        assert abs(np.linalg.norm(pose.position) - 10) < 1e-9


def test_export_roundtrip(tmp_path):
    plan = OrbitPlan(azimuth_step=90, azimuth_end=270, elevation_step=30, elevation_end=30, radius=3)
    poses = generate_orbit_plan(plan)
    assert len(poses) == 8
    path = tmp_path / "plan.json"
    text = export_plan_json(poses, path)
    data = json.loads(path.read_text())
    assert data == json.loads(text)
    assert [d["view_index"] for d in data] == list(range(8))
    R = np.array(data[3]["rotation"]).reshape(3, 3)
    np.testing.assert_allclose(R, poses[3].rotation)
    assert OrbitPlan.from_dict(plan.to_dict()) == plan
