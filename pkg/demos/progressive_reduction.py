"""LoD3 -> LoD2 -> LoD1 with the classical proxy backend.

LoD2: small flat-colored regions (windows, doors) are repainted with the
surrounding facade color. LoD1: the LoD2 sketch is binarized and replaced
by one filled box per depth layer. Line counts should fall stage by stage
while the overall silhouette stays put.

    python demos/progressive_reduction.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from lodsketch.capture import camera_pose
from lodsketch.pngio import write_png
from lodsketch.reduce import ProxyBackend, abstract_lod2_to_lod1, reduce_lod3_to_lod2
from lodsketch.sketchpipe import extract_full_detail_sketch, extract_lod1_sketch, line_pixel_count
from lodsketch.synthrender import BuildingSpec, bbox_iou, camera_setup, generate_building, render, silhouette

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/progressive")
out.mkdir(parents=True, exist_ok=True)
backend = ProxyBackend()

for seed in (0, 1, 2):
    spec = BuildingSpec.from_seed(seed)
    cs = camera_setup(spec)
    pose = camera_pose(30, 20, cs["radius"], cs["target"])
    r3 = render(generate_building(spec, 3), pose, 50, 192, 192, cs["near"], cs["far"])
    r2 = render(generate_building(spec, 2), pose, 50, 192, 192, cs["near"], cs["far"])

    sk3 = extract_full_detail_sketch(r3.rgb)
    gen2 = reduce_lod3_to_lod2(r3.rgb, backend)
    sk2 = extract_full_detail_sketch(gen2)
    gen1 = abstract_lod2_to_lod1(sk2, r2.depth, backend)
    sk1 = extract_lod1_sketch(gen1)

    row = np.concatenate([sk3, sk2, np.where(sk1, 0, 255).astype(np.uint8)], axis=1)
    write_png(out / f"seed{seed}_progression.png", row)
    counts = [line_pixel_count(s) for s in (sk3, sk2, sk1)]
    iou = bbox_iou(silhouette(gen2), gen1 < 255)
    print(f"seed {seed}: line pixels LoD3 {counts[0]:5d} -> LoD2 {counts[1]:5d} -> LoD1 {counts[2]:5d}, "
          f"LoD2/LoD1 bbox IoU {iou:.3f}")
