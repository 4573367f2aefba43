"""The **augment** area — cross-domain candidates from source and target images.

Image-level recipes build whole new images (:func:`domain_splice`, :func:`domain_reallocation`,
:func:`splice_then_reallocate`, :func:`proportion_sample`); box-level exchange
(:func:`exchange_boxes`) then swaps same-class box content between domains.

    rng = numpy.random.default_rng(7)
    sample = augment.domain_splice(source.images, target.images, 640, rng)
    image, n = augment.exchange_boxes(sample.image, target.images, "gaussian", rng=rng)
"""

from __future__ import annotations

from .box_level import (
    EXCHANGE_MODES,
    BoxPair,
    WeightMap,
    exchange,
    exchange_boxes,
    gaussian_sigmas,
    gaussian_weight_map,
    pair_boxes,
    pixel_rect,
    weight_map,
)
from .image_level import (
    blend_pixels,
    domain_reallocation,
    domain_splice,
    mosaic_placements,
    proportion_sample,
    splice_then_reallocate,
)
from .placement import TilePlacement
from .sample import RECIPES, AugmentedSample, Contribution

__all__ = [
    "TilePlacement", "Contribution", "AugmentedSample", "RECIPES",
    "domain_splice", "domain_reallocation", "splice_then_reallocate", "proportion_sample",
    "blend_pixels", "mosaic_placements",
    "WeightMap", "BoxPair", "EXCHANGE_MODES", "pair_boxes", "pixel_rect",
    "gaussian_sigmas", "gaussian_weight_map", "weight_map", "exchange", "exchange_boxes",
]
