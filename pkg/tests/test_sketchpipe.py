import numpy as np
import pytest

from lodsketch import imagecore as ic
from lodsketch.capture import camera_pose
from lodsketch.imagecore import StructuringElement
from lodsketch.sketchpipe import (
    Lod1SketchParams,
    SketchParams,
    extract_full_detail_sketch,
    extract_lod1_sketch,
    line_pixel_count,
    parse_level,
    sketch_for_level,
)
from lodsketch.synthrender import BuildingSpec, Mass, generate_building, render
from scipy import ndimage


def test_constant_image_is_white_at_default_params():
    for v in (0, 77, 128, 255):
        out = extract_full_detail_sketch(np.full((20, 20, 3), v, np.uint8))
        assert np.all(out == 255)


def test_pure_shading_keeps_constant_gray():
    # alpha=1 passes the grayscale straight through, so "white" only holds for small alpha
    out = extract_full_detail_sketch(np.full((20, 20, 3), 60, np.uint8), SketchParams(alpha=1.0, beta=0.0))
    assert np.all(out == 60)


def test_background_stays_white_and_edges_dark():
    img = np.full((40, 40, 3), 255, np.uint8)
    img[10:30, 10:30] = (90, 120, 150)
    out = extract_full_detail_sketch(img)
    assert np.all(out[:5] == 255) and np.all(out[:, :5] == 255)
    assert out[10, 20] < 60 and out[20, 9] < 60


def test_pipeline_order_matches_manual_composition():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (18, 18, 3)).astype(np.uint8)
    p = SketchParams(alpha=0.3, beta=0.2, blackhat_se=StructuringElement("cross", 5), blackhat_gain=0.5)
    g = ic.to_grayscale(img)
    e = ic.invert_edges(ic.gradient_magnitude(*ic.sobel(g)))
    o = ic.enhance_contrast(ic.blend_shadow(e, g, 0.3), 0.2)
    want = ic.darken_fine_lines(o, StructuringElement("cross", 5), 0.5)
    np.testing.assert_array_equal(extract_full_detail_sketch(img, p), want)


def test_params_validation_and_roundtrip():
    with pytest.raises(ValueError):
        SketchParams(alpha=1.2)
    with pytest.raises(ValueError):
        Lod1SketchParams(canny_low=200, canny_high=100)
    p = SketchParams(0.2, 0.7, StructuringElement("cross", 5), 2.0)
    assert SketchParams.from_dict(p.to_dict()) == p


def test_parse_level():
    assert parse_level("lod2") == 2 and parse_level(3) == 3 and parse_level("1") == 1
    with pytest.raises(ValueError):
        parse_level(4)
    with pytest.raises(ValueError):
        parse_level("lodx")


def test_line_pixel_count():
    g = np.array([[0, 127, 128, 255]], np.uint8)
    assert line_pixel_count(g) == 2
    assert line_pixel_count(np.array([[True, False, True]])) == 2


def face_boundary(ids):
    """Pixels whose 4-neighbour belongs to a different face group (or is background)."""
    pad = np.pad(ids, 1, mode="edge")
    c = pad[1:-1, 1:-1]
    diff = np.zeros(ids.shape, bool)
    for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
        diff |= pad[1 + dr:1 + dr + ids.shape[0], 1 + dc:1 + dc + ids.shape[1]] != c
    return diff


def test_lod1_sketch_traces_shoebox_edges():
    spec = BuildingSpec(0, (Mass((-3.0, -2.0, 0.0), (6.0, 4.0, 5.0)),))
    mesh = generate_building(spec, 1)
    # distinct gray per box face so every face boundary has real contrast
    palette = np.array([[240] * 3, [40] * 3, [140] * 3, [90] * 3, [200] * 3, [10] * 3], np.uint8)
    mesh.face_color = np.repeat(palette, 2, axis=0)
    res = render(mesh, camera_pose(35, 45, 18.0, (0, 0, 2.5)), 50, 96, 96)
    # two triangles per quad: group face ids by quad
    quads = np.where(res.face_ids >= 0, res.face_ids // 2, -1)
    truth = face_boundary(quads)
    sk = extract_lod1_sketch(res.rgb)
    assert sk.dtype == bool and sk.any()
    # every stroke lies on a true face edge, and nearly every edge is traced
    dist_to_truth = ndimage.distance_transform_edt(~truth)
    assert dist_to_truth[sk].max() <= 2.0
    dist_to_sketch = ndimage.distance_transform_edt(~sk)
    assert (dist_to_sketch[truth] <= 2.0).mean() >= 0.95
    # 1-pixel strokes: no 2x2 fully-on blocks
    blocks = sk[:-1, :-1] & sk[1:, :-1] & sk[:-1, 1:] & sk[1:, 1:]
    assert not blocks.any()


def test_sketch_for_level_routes():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
    assert sketch_for_level(img, 1).dtype == bool
    np.testing.assert_array_equal(sketch_for_level(img, "lod3"), extract_full_detail_sketch(img))


def test_white_box_on_gray_matches_stage_oracles():
    import oracles
    img = np.full((32, 32, 3), 120, np.uint8)
    img[8:24, 10:22] = 255
    g = ic.to_grayscale(img).astype(np.float64)
    gx, gy = oracles.sobel_oracle(g)
    e = np.clip(np.floor(255 - np.minimum(np.hypot(gx, gy), 255) + 0.5), 0, 255)
    s = 0.9 * e + 0.1 * g
    o = np.clip(np.floor((s - 128) * 2 + 128 + 0.5), 0, 255).astype(np.uint8)
    want = np.clip(o.astype(np.int64) - oracles.blackhat_oracle(o), 0, 255)
    np.testing.assert_array_equal(extract_full_detail_sketch(img).astype(np.int64), want)


def test_flat_neighbourhoods_map_to_white():
    rng = np.random.default_rng(8)
    img = np.repeat(np.repeat(rng.integers(0, 256, (6, 6, 3)), 8, axis=0), 8, axis=1).astype(np.uint8)
    out = extract_full_detail_sketch(img)
    flat = np.ones(img.shape[:2], bool)
    pad = np.pad(img, ((2, 2), (2, 2), (0, 0)), mode="edge")
    for dr in range(5):
        for dc in range(5):
            flat &= np.all(pad[dr:dr + 48, dc:dc + 48] == img, axis=-1)
    assert flat.sum() > 500
    assert np.all(out[flat] == 255)
