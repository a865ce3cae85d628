"""Image-similarity metrics and how the reported percentages are formed.

Hausdorff distance is divided by the image diagonal, MSE by 255**2. The
same arithmetic turns pixel-level numbers into the percentages quoted for
512x512 outputs.

    python demos/metric_normalization.py
"""
import numpy as np

from lodsketch import metrics as mt

print(f"diagonal of a 512x512 image: {mt.diagonal(512, 512):.2f} px")
for hd in (181.90, 441.65):
    print(f"HD {hd:7.2f} px -> {mt.normalized_hd(hd, 512, 512):5.1f}% of the diagonal")
for m in (5150, 4240):
    print(f"MSE {m} -> {mt.mse_fraction(m):.1f}% of the 8-bit maximum")

# two line drawings: a square and the same square shifted by 3 px
a = np.full((64, 64), 255, np.uint8)
b = a.copy()
a[16, 16:48] = a[47, 16:48] = 0
a[16:48, 16] = a[16:48, 47] = 0
b[19, 19:51] = b[50, 19:51] = 0
b[19:51, 19] = b[19:51, 50] = 0
r = mt.evaluate_pair(a, b)
print(f"shifted square: SSIM {r.ssim:.4f}, MSE {r.mse:.1f}, HD {r.hd_px:.3f} px "
      f"({r.normalized_hd_pct:.2f}% of diagonal)")
blank = np.full((64, 64), 255, np.uint8)
print("blank vs drawing:", mt.evaluate_pair(blank, a).hd_absent_reason)
