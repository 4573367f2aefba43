"""Box-level cross-domain exchange.

A host box ``b^s`` and a same-class donor box ``b^t`` from the other domain are brought to the host
box's pixel size (the donor patch is resampled bilinearly) and combined per pixel as

    b_aug(p, q) = β(p, q) · b^s(p, q) + (1 - β(p, q)) · b^t(p, q)

with ``β`` from a :class:`WeightMap`:

- ``direct``   — β = 0 everywhere: the donor patch replaces the host content;
- ``mixture``  — one β_mix ~ Beta(α_m, α_m) for the whole box;
- ``gaussian`` — β(p, q) = exp(-((p - μx)²/σx² + (q - μy)²/σy²)) centred in the box, with
  σx = (w/W)·√(hw/2π) and σy = (h/H)·√(hw/2π), so a small box in a large image keeps less of its
  own surroundings than a large one.

The host box keeps its geometry; its confidences become ``β̄·conf_host + (1 - β̄)·conf_donor`` where
β̄ is the mean of the map. Pixels outside exchanged boxes are never touched.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from ..dataset.labels import BoxLabel, LabeledImage
from ..dataset.letterbox import resize_pixels

__all__ = ["WeightMap", "BoxPair", "EXCHANGE_MODES", "gaussian_sigmas", "gaussian_weight_map", "weight_map",
           "pair_boxes", "exchange", "exchange_boxes", "pixel_rect"]

log = logging.getLogger(__name__)

EXCHANGE_MODES = ("direct", "mixture", "gaussian")


@dataclass(frozen=True, eq=False)
class WeightMap:
    """An ``h x w`` array of blend weights β in ``[0, 1]`` and the parameters that made it."""

    values: np.ndarray
    mode: str
    beta_mix: float | None = None
    sigma_x: float | None = None
    sigma_y: float | None = None
    mu_x: float | None = None
    mu_y: float | None = None

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def value_at(self, p: float, q: float) -> float:
        """β at local position ``(p, q)``, which need not be a pixel centre."""
        if self.mode == "gaussian":
            assert self.sigma_x and self.sigma_y and self.mu_x is not None and self.mu_y is not None
            return _gaussian(p, q, self.mu_x, self.mu_y, self.sigma_x, self.sigma_y)
        return 0.0 if self.mode == "direct" else float(self.beta_mix or 0.0)


def _gaussian(p, q, mu_x: float, mu_y: float, sigma_x: float, sigma_y: float):
    dx = (p - mu_x) ** 2 / sigma_x ** 2
    dy = (q - mu_y) ** 2 / sigma_y ** 2
    return np.exp(-(dx + dy)) if isinstance(dx + dy, np.ndarray) else math.exp(-(dx + dy))


def gaussian_sigmas(w: float, h: float, W: float, H: float) -> tuple[float, float]:
    """``(σx, σy)`` for a ``w x h`` box in a ``W x H`` image."""
    common = math.sqrt(h * w / (2.0 * math.pi))
    return w / W * common, h / H * common


def gaussian_weight_map(w: int, h: int, W: int, H: int) -> WeightMap:
    """The scale-aware Gaussian weight map of a ``w x h`` box inside a ``W x H`` image.

    The centre sits at ``((w-1)/2, (h-1)/2)`` in 0-based pixel coordinates, so the map is exactly
    symmetric about both axes."""
    if not (2 <= w <= W and 2 <= h <= H):
        raise ValueError(f"need 2 <= w <= W and 2 <= h <= H, got w={w}, h={h}, W={W}, H={H}")
    sigma_x, sigma_y = gaussian_sigmas(w, h, W, H)
    mu_x, mu_y = (w - 1) / 2.0, (h - 1) / 2.0
    p = np.arange(w, dtype=np.float64)[None, :]
    q = np.arange(h, dtype=np.float64)[:, None]
    values = _gaussian(p, q, mu_x, mu_y, sigma_x, sigma_y)
    return WeightMap(values, "gaussian", sigma_x=sigma_x, sigma_y=sigma_y, mu_x=mu_x, mu_y=mu_y)


def weight_map(mode: str, w: int, h: int, W: int, H: int, *, alpha_m: float = 1.0,
               rng: np.random.Generator | None = None) -> WeightMap:
    """The weight map for exchange ``mode`` over a ``w x h`` box in a ``W x H`` image."""
    if mode == "direct":
        return WeightMap(np.zeros((h, w)), "direct")
    if mode == "mixture":
        if alpha_m <= 0:
            raise ValueError(f"alpha_m must be positive, got {alpha_m}")
        beta = float((rng if rng is not None else np.random.default_rng()).beta(alpha_m, alpha_m))
        return WeightMap(np.full((h, w), beta), "mixture", beta_mix=beta)
    if mode == "gaussian":
        return gaussian_weight_map(w, h, W, H)
    raise ValueError(f"unknown exchange mode {mode!r}; choose from {EXCHANGE_MODES}")


@dataclass(frozen=True)
class BoxPair:
    """A host box and its same-class donor, with the host box's pixel size as the common size.

    ``src`` is ``(host image id, box index)``; ``tgt`` is ``(position in the donor list, box index)``."""

    src: tuple[str, int]
    tgt: tuple[int, int]
    common_w: int
    common_h: int
    category: int

    def __post_init__(self) -> None:
        if self.common_w < 2 or self.common_h < 2:
            raise ValueError(f"paired boxes need at least 2x2 pixels, got {self.common_w}x{self.common_h}")


def pixel_rect(box: BoxLabel, width: int, height: int) -> tuple[int, int, int, int]:
    """The whole-pixel rectangle ``(x0, y0, x1, y1)`` covered by ``box``, clamped to the image."""
    x0, y0, x1, y1 = box.to_pixels(width, height)
    return (min(max(round(x0), 0), width), min(max(round(y0), 0), height),
            min(max(round(x1), 0), width), min(max(round(y1), 0), height))


def pair_boxes(source_img: LabeledImage, target_imgs: Sequence[LabeledImage],
               rng: np.random.Generator | None = None, *, p_exchange: float = 0.5,
               hosts: Collection[int] | None = None) -> list[BoxPair]:
    """Pick, for each host box with probability ``p_exchange``, a random donor box of the same class.

    ``hosts`` limits which box indices may receive content. Host boxes without a same-class donor,
    or smaller than 2x2 pixels, are skipped."""
    if not 0.0 <= p_exchange <= 1.0:
        raise ValueError(f"p_exchange must lie in [0, 1], got {p_exchange}")
    rng = rng if rng is not None else np.random.default_rng()
    donors: dict[int, list[tuple[int, int]]] = {}
    for i, img in enumerate(target_imgs):
        for j, box in enumerate(img.labels):
            donors.setdefault(box.category, []).append((i, j))

    pairs = []
    for index, box in enumerate(source_img.labels):
        if hosts is not None and index not in hosts:
            continue
        if rng.random() >= p_exchange:
            continue
        partners = donors.get(box.category)
        if not partners:
            continue
        tgt = partners[int(rng.integers(len(partners)))]
        x0, y0, x1, y1 = pixel_rect(box, source_img.width, source_img.height)
        if x1 - x0 < 2 or y1 - y0 < 2:
            continue
        pairs.append(BoxPair((source_img.id, index), tgt, x1 - x0, y1 - y0, box.category))
    return pairs


def exchange(host: LabeledImage, donor: LabeledImage, pair: BoxPair, mode: str, alpha_m: float = 1.0,
             rng: np.random.Generator | None = None, *, warnings: Counter | None = None) -> LabeledImage:
    """Blend the donor box of ``pair`` into the host box per ``mode``; returns the patched host.

    A donor box with no whole pixel to resample from leaves the host unchanged and is counted
    under ``"skipped_exchanges"``."""
    host_index, donor_box_index = pair.src[1], pair.tgt[1]
    host_box = host.labels[host_index]
    donor_box = donor.labels[donor_box_index]
    x0, y0, x1, y1 = pixel_rect(host_box, host.width, host.height)
    cw, ch = x1 - x0, y1 - y0
    if (cw, ch) != (pair.common_w, pair.common_h):
        raise ValueError(f"pair expects a {pair.common_w}x{pair.common_h} host box, found {cw}x{ch}")
    dx0, dy0, dx1, dy1 = pixel_rect(donor_box, donor.width, donor.height)
    if dx1 - dx0 < 1 or dy1 - dy0 < 1:
        log.warning("skipping exchange into %s: donor box %d of %s has no pixels", host.id,
                    donor_box_index, donor.id)
        if warnings is not None:
            warnings["skipped_exchanges"] += 1
        return host

    patch = resize_pixels(donor.pixels[dy0:dy1, dx0:dx1], cw, ch).astype(np.float64)
    weights = weight_map(mode, cw, ch, host.width, host.height, alpha_m=alpha_m, rng=rng)
    beta = weights.values[:, :, None]
    region = host.pixels[y0:y1, x0:x1].astype(np.float64)
    pixels = np.array(host.pixels)
    pixels[y0:y1, x0:x1] = np.clip(np.rint(beta * region + (1.0 - beta) * patch), 0, 255).astype(np.uint8)

    labels = list(host.labels)
    labels[host_index] = host_box.blended_conf(donor_box, weights.mean)
    return LabeledImage(pixels, tuple(labels), host.domain_tag, host.id)


def exchange_boxes(host: LabeledImage, donors: Sequence[LabeledImage], mode: str, *,
                   alpha_m: float = 1.0, p_exchange: float = 0.5, rng: np.random.Generator | None = None,
                   warnings: Counter | None = None,
                   hosts: Collection[int] | None = None) -> tuple[LabeledImage, int]:
    """Pair the host's boxes with ``donors`` and exchange each pair in turn.

    Returns the patched image and the number of exchanges applied."""
    rng = rng if rng is not None else np.random.default_rng()
    pairs = pair_boxes(host, donors, rng, p_exchange=p_exchange, hosts=hosts)
    done = 0
    for pair in pairs:
        patched = exchange(host, donors[pair.tgt[0]], pair, mode, alpha_m, rng, warnings=warnings)
        done += patched is not host
        host = patched
    if warnings is not None and done:
        warnings["exchanges"] += done
    return host, done
