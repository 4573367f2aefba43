"""Augmented samples and where they came from.

An :class:`AugmentedSample` is a new labelled image plus its provenance: one :class:`Contribution`
per input image, recording the pixel weight ``lam`` and the confidence weight ``lam_cls`` it entered
with. ``label_origins[i]`` is the index of the contribution that produced ``image.labels[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..dataset.labels import LabeledImage
from .placement import TilePlacement

RECIPES = ("splice", "reallocation", "splice_reallocation", "proportion")


@dataclass(frozen=True)
class Contribution:
    """One input image's share of an augmented sample."""

    origin_id: str
    origin_domain: str
    lam: float = 1.0
    lam_cls: float = 1.0
    placement: TilePlacement | None = None

    def weighted(self, factor: float) -> "Contribution":
        """The same contribution after a further blend with weight ``factor``."""
        return replace(self, lam=self.lam * factor, lam_cls=self.lam_cls * factor)


@dataclass(frozen=True, eq=False)
class AugmentedSample:
    image: LabeledImage
    provenance: tuple[Contribution, ...]
    recipe: str
    label_origins: tuple[int, ...] = ()
    exchanged: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "label_origins", tuple(self.label_origins))
        if self.image.domain_tag != "augmented":
            raise ValueError(f"an augmented sample must be tagged 'augmented', got {self.image.domain_tag!r}")
        if self.recipe not in RECIPES:
            raise ValueError(f"unknown recipe {self.recipe!r}; choose from {RECIPES}")
        if len(self.label_origins) != len(self.image.labels):
            raise ValueError("label_origins must name one contribution per label")
        if any(not (0 <= i < len(self.provenance)) for i in self.label_origins):
            raise ValueError("label_origins points outside the provenance")
        if self.recipe == "reallocation" and sum(c.lam for c in self.provenance) > 1.0 + 1e-9:
            raise ValueError("reallocation weights must sum to at most 1")
        if self.recipe == "splice" and any(c.lam not in (0.0, 1.0) for c in self.provenance):
            raise ValueError("splice tiles carry a weight of exactly 0 or 1")

    @property
    def id(self) -> str:
        return self.image.id

    def count(self, domain: str) -> int:
        """How many contributions came from ``domain``."""
        return sum(1 for c in self.provenance if c.origin_domain == domain)

    @property
    def n_source(self) -> int:
        return self.count("source")

    @property
    def n_target(self) -> int:
        return self.count("target")

    def with_image(self, image: LabeledImage, exchanged: int = 0) -> "AugmentedSample":
        return replace(self, image=image, exchanged=self.exchanged + exchanged)
