"""Synthetic two-domain fixtures — coloured rectangles on a bright scene versus a dark, foggy one.

The source domain has bright backgrounds and saturated objects; the target domain shows the same
kinds of objects darkened and washed towards a cool fog grey. The two differ mostly in global
appearance, which is what the builtin embedding sees, so they make a quick end-to-end check of the
selection pressure.

    source, target = synth.make_fixture(n_source=400, n_target=8, seed=1)
    synth.write_fixture("data/toy", source, target)      # data/toy/source, data/toy/target
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset.io import save_dataset
from .dataset.labels import BoxLabel, DatasetSplit, LabeledImage

__all__ = ["make_fixture", "make_image", "write_fixture", "CATEGORY_COLORS"]

CATEGORY_COLORS = ((220, 40, 40), (40, 180, 60), (40, 80, 220), (230, 200, 30), (160, 50, 190))
FOG = np.array([120.0, 128.0, 140.0])


def make_image(rng: np.random.Generator, domain: str, image_id: str, *, num_categories: int = 3,
               size_range: tuple[int, int] = (64, 128), max_objects: int = 3) -> LabeledImage:
    """One random scene of 1 to ``max_objects`` rectangles."""
    width = int(rng.integers(size_range[0], size_range[1] + 1))
    height = int(rng.integers(size_range[0], size_range[1] + 1))
    if domain == "source":
        background = rng.uniform(185, 240) + rng.uniform(-10, 10, size=3)
    else:
        background = rng.uniform(35, 75) + rng.uniform(-5, 5, size=3)
    canvas = np.empty((height, width, 3), dtype=np.float64)
    canvas[:] = background

    labels = []
    for _ in range(int(rng.integers(1, max_objects + 1))):
        category = int(rng.integers(num_categories))
        w = int(rng.integers(max(2, width // 6), max(3, width // 2) + 1))
        h = int(rng.integers(max(2, height // 6), max(3, height // 2) + 1))
        x0 = int(rng.integers(0, width - w + 1))
        y0 = int(rng.integers(0, height - h + 1))
        color = np.array(CATEGORY_COLORS[category % len(CATEGORY_COLORS)], dtype=np.float64)
        canvas[y0:y0 + h, x0:x0 + w] = color
        labels.append(BoxLabel.from_pixels(x0, y0, x0 + w, y0 + h, width, height,
                                           [1.0 if c == category else 0.0 for c in range(num_categories)],
                                           category))
    if domain == "target":
        canvas = 0.65 * (0.45 * canvas) + 0.35 * FOG
    canvas += rng.normal(0.0, 3.0, size=canvas.shape)
    pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
    return LabeledImage(pixels, tuple(labels), domain, image_id)


def make_fixture(n_source: int = 400, n_target: int = 8, *, num_categories: int = 3, seed: int = 0,
                 size_range: tuple[int, int] = (64, 128)) -> tuple[DatasetSplit, DatasetSplit]:
    """A bright source split and a dark, fog-tinted target split over ``num_categories`` classes."""
    if n_source < 1 or n_target < 1:
        raise ValueError("both splits need at least one image")
    if not 1 <= num_categories <= len(CATEGORY_COLORS):
        raise ValueError(f"num_categories must be in 1..{len(CATEGORY_COLORS)}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    names = tuple(f"class_{i}" for i in range(num_categories))
    source = [make_image(rng, "source", f"src_{i:05d}", num_categories=num_categories, size_range=size_range)
              for i in range(n_source)]
    target = [make_image(rng, "target", f"tgt_{i:03d}", num_categories=num_categories, size_range=size_range)
              for i in range(n_target)]
    return DatasetSplit(tuple(source), "source", names), DatasetSplit(tuple(target), "target", names)


def write_fixture(root: str | Path, source: DatasetSplit, target: DatasetSplit, *,
                  overwrite: bool = False) -> tuple[Path, Path]:
    root = Path(root)
    save_dataset(source, root / "source", overwrite=overwrite)
    save_dataset(target, root / "target", overwrite=overwrite)
    return root / "source", root / "target"
