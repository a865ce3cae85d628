import numpy as np
import pytest

from lodsketch.capture import camera_pose
from lodsketch.synthrender import (
    DEPTH_BACKGROUND,
    BuildingSpec,
    Mass,
    Mesh,
    Roof,
    bbox_iou,
    camera_setup,
    generate_building,
    render,
    silhouette,
)

import oracles


def project(points, pose, fov, w, h):
    """Pinhole projection to pixel coordinates, written out independently."""
    f = 1 / np.tan(np.radians(fov) / 2)
    out = []
    for p in points:
        d = np.asarray(p, float) - pose.position
        x, y, z = d @ pose.rotation[:, 0], d @ pose.rotation[:, 1], d @ pose.rotation[:, 2]
        out.append(((f * x / (-z) * h / w + 1) * w / 2, (1 - f * y / (-z)) * h / 2))
    return out


def box_corners(origin, extent):
    ox, oy, oz = origin
    ex, ey, ez = extent
    return [(ox + i * ex, oy + j * ey, oz + k * ez) for i in (0, 1) for j in (0, 1) for k in (0, 1)]


@pytest.mark.parametrize("az,el", [(0, 0), (30, 20), (135, 45), (250, 10)])
def test_box_silhouette_matches_convex_hull(az, el):
    spec = BuildingSpec(0, (Mass((-2.0, -1.5, 0.0), (4.0, 3.0, 3.0)),))
    mesh = generate_building(spec, 1)
    pose = camera_pose(az, el, 12.0, (0, 0, 1.5))
    w = h = 80
    res = render(mesh, pose, 50, w, h)
    hull = oracles.convex_hull(project(box_corners((-2, -1.5, 0), (4, 3, 3)), pose, 50, w, h))
    want = oracles.polygon_pixel_count(hull, w, h)
    got = int(silhouette(res.rgb).sum())
    assert abs(got - want) <= 0.01 * want


def test_lod_triangle_counts_and_nesting():
    spec = BuildingSpec(0, (Mass((0.0, 0.0, 0.0), (4.0, 3.0, 3.0), Roof("gable", 0.3)),))
    m1, m2, m3 = (generate_building(spec, lv) for lv in (1, 2, 3))
    assert m1.n_triangles == 12
    assert m2.n_triangles == 12 + 6
    assert m3.n_triangles >= m2.n_triangles
    hip = BuildingSpec(0, (Mass((0.0, 0.0, 0.0), (4.0, 3.0, 3.0), Roof("hip", 0.3)),))
    assert generate_building(hip, 2).n_triangles == 18


def test_building_from_seed_is_deterministic():
    assert BuildingSpec.from_seed(5) == BuildingSpec.from_seed(5)
    specs = [BuildingSpec.from_seed(s) for s in range(20)]
    assert {len(s.masses) for s in specs} <= {1, 2, 3}
    for s in specs:
        base = s.masses[0].extent[2]
        for m in s.masses:
            assert m.roof.height <= 0.1 * base + 1e-12


def test_render_depth_and_zbuffer():
    spec = BuildingSpec(0, (Mass((-1.0, -1.0, 0.0), (2.0, 2.0, 2.0)),))
    mesh = generate_building(spec, 1)
    pose = camera_pose(0, 0, 6.0, (0, 0, 1.0))
    res = render(mesh, pose, 40, 64, 64, near=1.0, far=11.0)
    hit = res.face_ids >= 0
    assert np.array_equal(hit, silhouette(res.rgb))
    assert np.all(res.depth[~hit] == DEPTH_BACKGROUND)
    # the front face sits 5 units from the eye straight ahead
    c = res.eye_depth[32, 32]
    assert c == pytest.approx(5.0, abs=0.05)
    assert res.depth[32, 32] == int(np.floor((c - 1.0) / 10.0 * 65534 + 0.5))


def test_nearer_triangle_wins_regardless_of_order():
    # two parallel squares facing +X, the nearer one red
    def quad(x, color):
        v = [(x, -1, -1), (x, 1, -1), (x, 1, 1), (x, -1, 1)]
        return v, color
    pose = camera_pose(0, 0, 10.0)
    for order in ((0.0, 2.0), (2.0, 0.0)):
        verts, tris, cols = [], [], []
        for x in order:
            v, color = quad(x, (255, 0, 0) if x == 2.0 else (0, 0, 255))
            base = len(verts)
            verts += v
            tris += [(base, base + 1, base + 2), (base, base + 2, base + 3)]
            cols += [color, color]
        res = render(Mesh(verts, tris, cols), pose, 40, 32, 32)
        px = res.rgb[16, 16]
        assert px[0] > 0 and px[2] == 0


def test_near_plane_clipping_keeps_visible_part():
    # a floor plane passing behind the camera must still render in front
    verts = [(-50, -50, -1), (50, -50, -1), (50, 50, -1), (-50, 50, -1)]
    mesh = Mesh(verts, [(0, 1, 2), (0, 2, 3)], [(100, 100, 100)] * 2)
    res = render(mesh, camera_pose(0, 10, 5.0), 60, 48, 48, near=0.5, far=200)
    sil = silhouette(res.rgb)
    assert sil[-1].all() and not sil[0].any()


def test_camera_setup_frames_all_lods():
    for seed in range(4):
        spec = BuildingSpec.from_seed(seed)
        cs = camera_setup(spec)
        for lv in (1, 2, 3):
            lo, hi = generate_building(spec, lv).bounds()
            assert np.all(np.linalg.norm(np.array([lo, hi]) - cs["target"], axis=1) < cs["radius"])
        assert 0 < cs["near"] < cs["far"]


def test_bbox_iou():
    a = np.zeros((10, 10), bool)
    a[2:6, 2:6] = True
    b = np.zeros((10, 10), bool)
    b[4:8, 2:6] = True
    assert bbox_iou(a, a) == 1.0
    assert bbox_iou(a, b) == pytest.approx(8 / 24)
    assert bbox_iou(a, np.zeros_like(a)) == 0.0
