"""
Image augmentation
==================

Shear, rotation, elastic distortion and control-point warps on a
glyph-like synthetic line, plus the 16-image test-time grid.
"""

import tempfile
from pathlib import Path

import numpy as np

from ctcr.augment import (
    border_control_points,
    elastic,
    geometric_warp,
    random_geometric,
    rotate,
    shear,
    train_sampler,
    tta_grid,
    write_image,
    write_sidecar,
)
from ctcr.synthetic import glyph_image

rng = np.random.default_rng(0)
img = glyph_image("a short line", rng)
print("input", img.shape)

# shear and rotation widen the canvas so no ink is lost
print("shear 0.5 ->", shear(img, 0.5).shape)
print("rotate 2.5 ->", rotate(img, 2.5).shape)

# elastic and geometric warps keep the size
e = elastic(img, sigma=4.0, alpha=20.0, seed=1)
pts, disp = random_geometric(img.shape, rng)
g = geometric_warp(img, pts, disp)
print("elastic", e.shape, "geometric", g.shape, "control points", len(border_control_points(img.shape)))

# training: half the draws keep the image as is
kinds = [train_sampler(img, rng)[1] for _ in range(200)]
print("untouched:", sum(k is None for k in kinds), "of", len(kinds))

out = Path(tempfile.mkdtemp())
for i, (spec, aug) in enumerate(tta_grid(img), 1):
    write_image(out / f"tta{i:02d}.png", aug)
    write_sidecar(out / f"tta{i:02d}.png", "line.png", spec)
    print(i, spec.label(), aug.shape)
print("written to", out)
