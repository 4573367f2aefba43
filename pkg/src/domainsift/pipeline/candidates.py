"""Candidate generation — ``n_a`` augmented samples per epoch, each reproducible on its own.

Candidate ``i`` of epoch ``n`` draws everything from ``default_rng(SeedSequence([seed, n, i]))`` and
is named ``e<nnn>_c<iiiii>``, so any one candidate can be regenerated without the others and the
result does not depend on ``workers``.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Sequence as SequenceABC
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np
from tqdm import tqdm

from ..augment import (
    RECIPES,
    AugmentedSample,
    domain_reallocation,
    domain_splice,
    exchange_boxes,
    proportion_sample,
    splice_then_reallocate,
)
from ..dataset.labels import DatasetSplit, LabeledImage
from ..dataset.letterbox import resize_letterbox
from ..errors import DataError
from .config import PipelineConfig

__all__ = ["candidate_id", "candidate_rng", "make_candidate", "generate_candidates"]

log = logging.getLogger(__name__)


def candidate_id(epoch: int, index: int) -> str:
    return f"e{epoch:03d}_c{index:05d}"


def candidate_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, index]))


class _ExchangingPool(SequenceABC):
    """A read-only view of ``images`` that exchanges box content into each image as it is drawn."""

    def __init__(self, images: Sequence[LabeledImage], donors: Sequence[LabeledImage],
                 config: PipelineConfig, rng: np.random.Generator, warnings: Counter) -> None:
        self._images = images
        self._donors = donors
        self._config = config
        self._rng = rng
        self._warnings = warnings
        self.exchanged = 0

    def __len__(self) -> int:
        return len(self._images)

    def __getitem__(self, index):  # type: ignore[override]
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        image, done = exchange_boxes(self._images[index], self._donors, self._config.box_mode,
                                     alpha_m=self._config.alpha_m, p_exchange=self._config.p_exchange,
                                     rng=self._rng, warnings=self._warnings)
        self.exchanged += done
        return image


def _pools(source: Sequence[LabeledImage], target: Sequence[LabeledImage], config: PipelineConfig,
           rng: np.random.Generator, warnings: Counter):
    """Source and target pools, with the receiving domain wrapped for source-stage exchange."""
    if config.box_mode == "off" or config.box_stage != "source":
        return source, target, None
    if config.exchange_from == "target":
        pool = _ExchangingPool(source, target, config, rng, warnings)
        return pool, target, pool
    pool = _ExchangingPool(target, source, config, rng, warnings)
    return source, pool, pool


def make_candidate(source: Sequence[LabeledImage], target: Sequence[LabeledImage], config: PipelineConfig,
                   epoch: int, index: int, *, warnings: Counter | None = None) -> AugmentedSample:
    """Candidate ``index`` of ``epoch``: a recipe drawn from the mix, then optional box exchange."""
    counter: Counter = Counter() if warnings is None else warnings
    rng = candidate_rng(config.seed, epoch, index)
    recipe = RECIPES[int(rng.choice(len(RECIPES), p=config.recipe_weights()))]
    name = candidate_id(epoch, index)
    pool_s, pool_t, exchanging = _pools(source, target, config, rng, counter)
    side = config.canvas_side

    if recipe == "splice":
        sample = domain_splice(pool_s, pool_t, side, rng, min_area_frac=config.min_area_frac,
                               sample_id=name, warnings=counter)
    elif recipe == "splice_reallocation":
        sample = splice_then_reallocate(pool_s, pool_t, side, rng, alpha=config.alpha,
                                        min_area_frac=config.min_area_frac, sample_id=name,
                                        warnings=counter)
    elif recipe == "reallocation":
        a = resize_letterbox(pool_s[int(rng.integers(len(pool_s)))], side, warnings=counter)
        b = resize_letterbox(pool_t[int(rng.integers(len(pool_t)))], side, warnings=counter)
        sample = domain_reallocation(a, b, config.alpha, rng, sample_id=name)
    else:
        sample = proportion_sample(pool_s, pool_t, side, rng, sample_id=name, warnings=counter)

    if exchanging is not None:
        sample = sample.with_image(sample.image, exchanged=exchanging.exchanged)
    elif config.box_mode != "off":
        donors = target if config.exchange_from == "target" else source
        hosts = [i for i, origin in enumerate(sample.label_origins)
                 if sample.provenance[origin].origin_domain != config.exchange_from]
        image, done = exchange_boxes(sample.image, donors, config.box_mode, alpha_m=config.alpha_m,
                                     p_exchange=config.p_exchange, rng=rng, warnings=counter, hosts=hosts)
        sample = sample.with_image(image, exchanged=done)
    return sample


def generate_candidates(source: DatasetSplit, target: DatasetSplit, config: PipelineConfig, epoch: int, *,
                        warnings: Counter | None = None, progress: bool = False) -> list[AugmentedSample]:
    """``config.candidates_per_epoch`` candidates for ``epoch``, in index order.

    Degenerate boxes dropped along the way are counted in ``warnings`` but never reduce the number
    of candidates."""
    if len(target) == 0:
        raise DataError("the target split is empty; at least one target image is needed")
    if len(source) == 0:
        raise DataError("the source split is empty")
    if source.num_categories != target.num_categories:
        raise DataError(f"source has {source.num_categories} categories, target has {target.num_categories}")
    n = config.candidates_per_epoch

    def one(index: int) -> tuple[AugmentedSample, Counter]:
        local: Counter = Counter()
        return make_candidate(source.images, target.images, config, epoch, index, warnings=local), local

    bar = dict(total=n, desc=f"epoch {epoch}", unit="cand", disable=not progress, leave=False)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(tqdm(pool.map(one, range(n)), **bar))
    else:
        results = [one(i) for i in tqdm(range(n), **bar)]

    samples = []
    for sample, local in results:
        samples.append(sample)
        if warnings is not None:
            warnings.update(local)
    log.debug("epoch %d: generated %d candidates (%s)", epoch, n,
              ", ".join(f"{r}={sum(s.recipe == r for s in samples)}" for r in RECIPES))
    return samples
