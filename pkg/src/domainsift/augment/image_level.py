"""Image-level domain-aware augmentation: splice, reallocation, and the two combined.

- :func:`domain_splice` — a 2x2 mosaic of ``m`` source and ``n = 4 - m`` target images
  (``m, n >= 1``). The tiles are laid out on a doubled ``2·side`` canvas around a centre point
  jittered over the middle half of each axis, each tile scaled so its long edge is ``side`` and
  cropped to its quadrant; the canvas is then reduced 2x to ``side x side``. Boxes follow their
  tile's placement; a box keeping less than ``min_area_frac`` of its area after cropping is dropped.
- :func:`domain_reallocation` — a per-pixel blend ``λ·a + (1-λ)·b`` of one source and one target
  image of equal size, ``λ ~ Beta(α, α)``. Both label sets are kept, confidences scaled by ``λ`` and
  ``1-λ``.
- :func:`splice_then_reallocate` — reallocation of two independent splice mosaics.
- :func:`proportion_sample` — no mixing at all: one letterboxed image from either domain.

Every function is a pure function of its inputs and the generator it is handed.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Sequence

import numpy as np
from PIL import Image

from ..dataset.labels import BoxLabel, LabeledImage
from ..dataset.letterbox import FILL_VALUE, resize_letterbox, resize_pixels
from ..errors import DataError
from .placement import TilePlacement
from .sample import AugmentedSample, Contribution

__all__ = ["domain_splice", "domain_reallocation", "splice_then_reallocate", "proportion_sample",
           "blend_pixels", "mosaic_placements"]

log = logging.getLogger(__name__)


def _rng(rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


def _choose(pool: Sequence[LabeledImage], count: int, rng: np.random.Generator) -> list[LabeledImage]:
    """``count`` images from ``pool``, distinct whenever the pool is large enough."""
    picks = rng.choice(len(pool), size=count, replace=len(pool) < count)
    return [pool[int(i)] for i in picks]


def mosaic_placements(sizes: Sequence[tuple[int, int]], side: int,
                      center: tuple[int, int]) -> list[TilePlacement]:
    """Placements of four ``(width, height)`` tiles on a ``2·side`` canvas around ``center``.

    Tile ``q`` sits top-left, top-right, bottom-left, bottom-right of the centre for ``q = 0..3``,
    scaled so its long edge is ``side`` (rounded to whole pixels), and is cropped to the canvas."""
    big = 2 * side
    xc, yc = center
    placements = []
    for q, (width, height) in enumerate(sizes):
        s = side / max(width, height)
        tw, th = max(1, round(width * s)), max(1, round(height * s))
        ox = xc - tw if q in (0, 2) else xc
        oy = yc - th if q in (0, 1) else yc
        crop = (float(max(ox, 0)), float(max(oy, 0)), float(min(ox + tw, big)), float(min(oy + th, big)))
        placements.append(TilePlacement(tw / width, th / height, float(ox), float(oy), crop))
    return placements


def domain_splice(pool_source: Sequence[LabeledImage], pool_target: Sequence[LabeledImage],
                  canvas_side: int = 640, rng: np.random.Generator | None = None, *,
                  m: int | None = None, min_area_frac: float = 0.2, fill: int = FILL_VALUE,
                  sample_id: str = "splice", warnings: Counter | None = None) -> AugmentedSample:
    """A 2x2 cross-domain mosaic of ``m`` source and ``4 - m`` target images.

    ``m`` is drawn from ``{1, 2, 3}`` when not given; ``0`` or ``4`` is refused because both
    domains must appear. A mosaic whose boxes were all cropped away is still returned."""
    rng = _rng(rng)
    if not pool_source or not pool_target:
        raise ValueError("domain_splice needs at least one source and one target image")
    if canvas_side < 2:
        raise ValueError(f"canvas_side must be at least 2, got {canvas_side}")
    if m is None:
        m = int(rng.integers(1, 4))
    if not 1 <= m <= 3:
        raise ValueError(f"m = {m}: a splice needs m, n >= 1 with m + n = 4 so both domains appear")

    picked = _choose(pool_source, m, rng) + _choose(pool_target, 4 - m, rng)
    tiles = [picked[int(i)] for i in rng.permutation(4)]
    lo, hi = canvas_side // 2, 2 * canvas_side - canvas_side // 2
    center = (int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)))
    placements = mosaic_placements([(t.width, t.height) for t in tiles], canvas_side, center)

    big = 2 * canvas_side
    canvas = np.full((big, big, 3), fill, dtype=np.uint8)
    for tile, placement in zip(tiles, placements):
        tw = round(tile.width * placement.scale_x)
        th = round(tile.height * placement.scale_y)
        pixels = resize_pixels(tile.pixels, tw, th)
        x0, y0, x1, y1 = (int(v) for v in placement.crop)
        ox, oy = int(placement.offset_x), int(placement.offset_y)
        canvas[y0:y1, x0:x1] = pixels[y0 - oy:y1 - oy, x0 - ox:x1 - ox]
    reduced = np.asarray(Image.fromarray(canvas).reduce(2), dtype=np.uint8)

    labels: list[BoxLabel] = []
    origins: list[int] = []
    provenance: list[Contribution] = []
    clipped = dropped = 0
    for index, (tile, placement) in enumerate(zip(tiles, placements)):
        final = placement.scaled(0.5)
        provenance.append(Contribution(tile.id, tile.domain_tag, 1.0, 1.0, final))
        for box in tile.labels:
            rect = final.place(box.to_pixels(tile.width, tile.height), min_area_frac)
            if rect is None:
                clipped += 1
                continue
            x0, y0, x1, y1 = rect
            if x1 - x0 < 1.0 or y1 - y0 < 1.0:
                dropped += 1
                continue
            labels.append(BoxLabel.from_pixels(x0, y0, x1, y1, canvas_side, canvas_side,
                                               box.class_conf, box.category))
            origins.append(index)
    if warnings is not None:
        warnings["clipped_boxes"] += clipped
        warnings["dropped_boxes"] += dropped
    image = LabeledImage(reduced, tuple(labels), "augmented", sample_id)
    return AugmentedSample(image, tuple(provenance), "splice", tuple(origins))


def blend_pixels(a: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """``round(λ·a + (1-λ)·b)`` per channel, in double precision."""
    out = lam * a.astype(np.float64) + (1.0 - lam) * b.astype(np.float64)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _blend(first: AugmentedSample, second: AugmentedSample, lam: float, recipe: str,
           sample_id: str) -> AugmentedSample:
    a, b = first.image, second.image
    if a.pixels.shape != b.pixels.shape:
        raise DataError(f"cannot blend a {a.width}x{a.height} image with a {b.width}x{b.height} one; "
                        f"letterbox both to the same side first")
    labels = [box.scaled_conf(lam) for box in a.labels] + [box.scaled_conf(1.0 - lam) for box in b.labels]
    provenance = [c.weighted(lam) for c in first.provenance] + [c.weighted(1.0 - lam) for c in second.provenance]
    shift = len(first.provenance)
    origins = list(first.label_origins) + [i + shift for i in second.label_origins]
    image = LabeledImage(blend_pixels(a.pixels, b.pixels, lam), tuple(labels), "augmented", sample_id)
    return AugmentedSample(image, tuple(provenance), recipe, tuple(origins),
                           exchanged=first.exchanged + second.exchanged)


def _as_sample(img: LabeledImage) -> AugmentedSample:
    """Wrap a plain image so it can enter a blend; the wrapper is never returned."""
    wrapped = LabeledImage(img.pixels, img.labels, "augmented", img.id)
    return AugmentedSample(wrapped, (Contribution(img.id, img.domain_tag),), "proportion",
                           (0,) * len(img.labels))


def domain_reallocation(a: LabeledImage, b: LabeledImage, alpha: float = 1.0,
                        rng: np.random.Generator | None = None, *,
                        sample_id: str = "reallocation") -> AugmentedSample:
    """Blend one source and one target image of equal size with ``λ ~ Beta(alpha, alpha)``.

    ``a`` gets pixel and confidence weight ``λ``, ``b`` gets ``1 - λ``; a draw of exactly 0 or 1
    is kept as is."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if {a.domain_tag, b.domain_tag} != {"source", "target"}:
        raise ValueError(f"reallocation pairs a source with a target image, got "
                         f"{a.domain_tag!r} and {b.domain_tag!r}")
    lam = float(_rng(rng).beta(alpha, alpha))
    return _blend(_as_sample(a), _as_sample(b), lam, "reallocation", sample_id)


def splice_then_reallocate(pool_source: Sequence[LabeledImage], pool_target: Sequence[LabeledImage],
                           canvas_side: int = 640, rng: np.random.Generator | None = None, *,
                           alpha: float = 1.0, min_area_frac: float = 0.2,
                           sample_id: str = "splice_reallocation",
                           warnings: Counter | None = None) -> AugmentedSample:
    """Two independent splice mosaics, blended with ``λ ~ Beta(alpha, alpha)``."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rng = _rng(rng)
    first = domain_splice(pool_source, pool_target, canvas_side, rng, min_area_frac=min_area_frac,
                          warnings=warnings)
    second = domain_splice(pool_source, pool_target, canvas_side, rng, min_area_frac=min_area_frac,
                           warnings=warnings)
    lam = float(rng.beta(alpha, alpha))
    return _blend(first, second, lam, "splice_reallocation", sample_id)


def proportion_sample(pool_source: Sequence[LabeledImage], pool_target: Sequence[LabeledImage],
                      canvas_side: int = 640, rng: np.random.Generator | None = None, *,
                      sample_id: str = "proportion", warnings: Counter | None = None) -> AugmentedSample:
    """One letterboxed image, from either domain with equal probability."""
    rng = _rng(rng)
    if not pool_source or not pool_target:
        raise ValueError("proportion sampling needs both domains")
    pool = pool_source if rng.random() < 0.5 else pool_target
    img = resize_letterbox(pool[int(rng.integers(len(pool)))], canvas_side, warnings=warnings)
    image = LabeledImage(img.pixels, img.labels, "augmented", sample_id)
    return AugmentedSample(image, (Contribution(img.id, img.domain_tag),), "proportion",
                           (0,) * len(img.labels))
