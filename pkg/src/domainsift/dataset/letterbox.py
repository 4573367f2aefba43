"""Letterboxing — fit an image into a ``side x side`` square without distorting it.

The image is scaled by ``min(side / W, side / H)``, centred, and the rest is padded with a flat grey
(114, 114, 114). Boxes are moved with the pixels; one that shrinks below a pixel in either direction
is dropped and counted under ``"dropped_boxes"``.
"""

from __future__ import annotations

import logging
from collections import Counter

import numpy as np
from PIL import Image

from .labels import BoxLabel, LabeledImage

__all__ = ["resize_letterbox", "resize_pixels", "FILL_VALUE"]

log = logging.getLogger(__name__)

FILL_VALUE = 114


def resize_pixels(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resample of an ``H x W x 3`` array to ``height x width``."""
    if pixels.shape[1] == width and pixels.shape[0] == height:
        return np.asarray(pixels)
    im = Image.fromarray(np.ascontiguousarray(pixels))
    return np.asarray(im.resize((width, height), Image.Resampling.BILINEAR), dtype=np.uint8)


def resize_letterbox(img: LabeledImage, side: int = 640, *, fill: int = FILL_VALUE,
                     warnings: Counter | None = None) -> LabeledImage:
    """Scale ``img`` to fit ``side x side``, pad symmetrically with ``fill`` and remap its boxes."""
    if side < 2:
        raise ValueError(f"side must be at least 2, got {side}")
    if img.width == side and img.height == side:
        return img
    ratio = min(side / img.width, side / img.height)
    new_w = min(side, max(1, round(img.width * ratio)))
    new_h = min(side, max(1, round(img.height * ratio)))
    left, top = (side - new_w) // 2, (side - new_h) // 2

    canvas = np.full((side, side, 3), fill, dtype=np.uint8)
    canvas[top:top + new_h, left:left + new_w] = resize_pixels(img.pixels, new_w, new_h)

    sx, sy = new_w / img.width, new_h / img.height
    labels: list[BoxLabel] = []
    dropped = 0
    for box in img.labels:
        x0, y0, x1, y1 = box.to_pixels(img.width, img.height)
        x0, x1 = x0 * sx + left, x1 * sx + left
        y0, y1 = y0 * sy + top, y1 * sy + top
        if x1 - x0 < 1.0 or y1 - y0 < 1.0:
            dropped += 1
            continue
        x0, y0 = max(x0, 0.0), max(y0, 0.0)
        x1, y1 = min(x1, float(side)), min(y1, float(side))
        labels.append(BoxLabel.from_pixels(x0, y0, x1, y1, side, side, box.class_conf, box.category))
    if dropped:
        log.debug("letterbox of %s dropped %d degenerate boxes", img.id, dropped)
        if warnings is not None:
            warnings["dropped_boxes"] += dropped
    return LabeledImage(canvas, tuple(labels), img.domain_tag, img.id)
