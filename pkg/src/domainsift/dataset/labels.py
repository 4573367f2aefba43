"""The dataset data model — :class:`BoxLabel`, :class:`LabeledImage` and :class:`DatasetSplit`.

Geometry and confidences only: an image knows its pixels, its boxes and which domain it came from,
and nothing about how it is augmented or scored. Every value is immutable once built (pixel arrays
are handed out read-only), so images can be shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Literal, Sequence

import numpy as np

Domain = Literal["source", "target", "augmented"]
DOMAINS: tuple[str, ...] = ("source", "target", "augmented")


@dataclass(frozen=True)
class BoxLabel:
    """One annotated object: a soft confidence per category plus a normalised ``cx, cy, w, h`` box.

    ``category`` is the annotated class. It defaults to the argmax of ``class_conf`` and is kept
    explicitly so a box whose confidence was scaled to 0 still knows what it was."""

    class_conf: tuple[float, ...]
    cx: float
    cy: float
    w: float
    h: float
    category: int = -1

    def __post_init__(self) -> None:
        conf = tuple(float(c) for c in self.class_conf)
        object.__setattr__(self, "class_conf", conf)
        if not conf:
            raise ValueError("class_conf must have at least one entry")
        if any(not (0.0 <= c <= 1.0) for c in conf):
            raise ValueError(f"class_conf entries must lie in [0, 1], got {conf}")
        if sum(conf) > 1.0 + 1e-9:
            raise ValueError(f"class_conf must sum to at most 1, got {sum(conf):g}")
        if self.category == -1:
            object.__setattr__(self, "category", int(np.argmax(conf)))
        if not (0 <= self.category < len(conf)):
            raise ValueError(f"category {self.category} outside 0..{len(conf) - 1}")
        for name in ("cx", "cy"):
            value = float(getattr(self, name))
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} out of range: {value:g}")
            object.__setattr__(self, name, value)
        for name in ("w", "h"):
            value = float(getattr(self, name))
            if not (0.0 < value <= 1.0):
                raise ValueError(f"{name} out of range: {value:g}")
            object.__setattr__(self, name, value)

    @classmethod
    def one_hot(cls, category: int, num_categories: int, cx: float, cy: float, w: float, h: float,
                conf: float = 1.0) -> "BoxLabel":
        """A box whose only non-zero confidence is ``conf`` on ``category``."""
        vec = [0.0] * num_categories
        vec[category] = conf
        return cls(tuple(vec), cx, cy, w, h, category=category)

    @classmethod
    def from_pixels(cls, x0: float, y0: float, x1: float, y1: float, width: int, height: int,
                    class_conf: Sequence[float], category: int = -1) -> "BoxLabel":
        """Build a box from pixel corners on a ``width x height`` image."""
        return cls(tuple(class_conf), (x0 + x1) / 2 / width, (y0 + y1) / 2 / height,
                   (x1 - x0) / width, (y1 - y0) / height, category=category)

    @property
    def num_categories(self) -> int:
        return len(self.class_conf)

    @property
    def confidence(self) -> float:
        """The confidence of the annotated category."""
        return self.class_conf[self.category]

    @property
    def is_one_hot(self) -> bool:
        return self.confidence == 1.0 and all(c == 0.0 for i, c in enumerate(self.class_conf)
                                              if i != self.category)

    def to_pixels(self, width: int, height: int) -> tuple[float, float, float, float]:
        """Corner coordinates ``(x0, y0, x1, y1)`` in pixels on a ``width x height`` image."""
        return ((self.cx - self.w / 2) * width, (self.cy - self.h / 2) * height,
                (self.cx + self.w / 2) * width, (self.cy + self.h / 2) * height)

    def scaled_conf(self, factor: float) -> "BoxLabel":
        """A copy with every confidence multiplied by ``factor`` (a λ weight in ``[0, 1]``)."""
        return replace(self, class_conf=tuple(c * factor for c in self.class_conf))

    def blended_conf(self, other: "BoxLabel", beta: float) -> "BoxLabel":
        """A copy whose confidences are ``beta * self + (1 - beta) * other``; geometry is kept."""
        if other.num_categories != self.num_categories:
            raise ValueError("cannot blend boxes with different category counts")
        conf = tuple(beta * a + (1.0 - beta) * b for a, b in zip(self.class_conf, other.class_conf))
        return replace(self, class_conf=conf)


@dataclass(frozen=True, eq=False)
class LabeledImage:
    """A pixel raster (``H x W x 3`` uint8), its boxes, its domain and a stable ``id``."""

    pixels: np.ndarray
    labels: tuple[BoxLabel, ...] = ()
    domain_tag: str = "source"
    id: str = ""

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be an H x W x 3 uint8 array, got {pixels.shape} {pixels.dtype}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError("an image needs at least one pixel")
        if self.domain_tag not in DOMAINS:
            raise ValueError(f"domain_tag must be one of {DOMAINS}, got {self.domain_tag!r}")
        view = pixels.view()
        view.flags.writeable = False
        object.__setattr__(self, "pixels", view)
        object.__setattr__(self, "labels", tuple(self.labels))
        height, width = pixels.shape[:2]
        for box in self.labels:
            # one pixel of slack for rounding in upstream tools
            if (box.cx - box.w / 2 < -1.0 / width or box.cx + box.w / 2 > 1.0 + 1.0 / width
                    or box.cy - box.h / 2 < -1.0 / height or box.cy + box.h / 2 > 1.0 + 1.0 / height):
                raise ValueError(f"box {box} extends outside the {width}x{height} image {self.id!r}")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    def with_labels(self, labels: Sequence[BoxLabel]) -> "LabeledImage":
        return LabeledImage(self.pixels, tuple(labels), self.domain_tag, self.id)

    def __repr__(self) -> str:
        return (f"LabeledImage({self.id!r}, {self.width}x{self.height}, {self.domain_tag}, "
                f"{len(self.labels)} boxes)")


@dataclass(frozen=True)
class DatasetSplit:
    """The images of one domain plus the shared category names.

    A target split may be tiny (a handful of images); every member's ``domain_tag`` must equal
    ``role``."""

    images: tuple[LabeledImage, ...]
    role: str
    category_names: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "category_names", tuple(self.category_names))
        if self.role not in DOMAINS:
            raise ValueError(f"role must be one of {DOMAINS}, got {self.role!r}")
        n_categories = len(self.category_names)
        for img in self.images:
            if img.domain_tag != self.role:
                raise ValueError(f"image {img.id!r} is tagged {img.domain_tag!r} in a {self.role!r} split")
            for box in img.labels:
                if box.num_categories != n_categories:
                    raise ValueError(f"image {img.id!r} has a box over {box.num_categories} categories; "
                                     f"the split has {n_categories}")

    @property
    def num_categories(self) -> int:
        return len(self.category_names)

    def __len__(self) -> int:
        return len(self.images)

    def __iter__(self) -> Iterator[LabeledImage]:
        return iter(self.images)

    def by_id(self) -> dict[str, LabeledImage]:
        return {img.id: img for img in self.images}
