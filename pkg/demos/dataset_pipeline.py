"""End-to-end dataset build on a reduced orbit: synth, sketch, reduce, evaluate, validate.

The full 36 x 7 orbit is what ``lodsketch synth`` uses; here 4 azimuths x 2
elevations keep the run to a few seconds.

    python demos/dataset_pipeline.py [out_dir]
"""
import sys
from pathlib import Path

from lodsketch import pipeline
from lodsketch.capture import OrbitPlan
from lodsketch.contact_sheet import contact_sheet
from lodsketch.dataset import Manifest, validate
from lodsketch.pngio import write_png

root = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/dataset")
plan = OrbitPlan(azimuth_end=270, azimuth_step=90, elevation_end=30, elevation_step=30)

man, res = pipeline.synth(root, groups=2, seed=1, size=128, plan=plan)
print(f"synth: {res.written} files for {len(man.groups)} groups x 3 LoDs x {plan.n_views} views x 2 modalities")

for level in (3, 2, 1):
    pipeline.sketch(Manifest.read(root), level)
for stage in ("3to2", "2to1"):
    r = pipeline.reduce(Manifest.read(root), pipeline.ReduceConfig(stage=stage))
    print(f"reduce {stage}: wrote {r.written}, skipped {r.skipped}, failures {len(r.failures)}")

man = Manifest.read(root)
for stage in ("3to2", "2to1"):
    for compare in ("consecutive", "groundtruth"):
        _, rows, _, (jsonl, _) = pipeline.evaluate(man, stage, compare)
        mean = rows[0]
        print(f"{stage:5s} {compare:12s} SSIM {mean['ssim']:.3f}  MSE {mean['mse']:8.1f}  "
              f"HD {mean['normalized_hd_pct']:5.2f}%  -> {Path(jsonl).name}")

rep = validate(man)
print("validation ok:", rep.ok, "| images per model:", sorted(set(rep.images_per_model.values())))
sheet, missing = contact_sheet(man, "g000", 1)
write_png(root / "reports" / "contact_g000_001.png", sheet)
print("contact sheet:", sheet.shape, "missing cells:", missing)
