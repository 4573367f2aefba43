"""Tile placement — the per-image affine map of a mosaic, as scale plus translation.

A :class:`TilePlacement` sends a pixel ``(x, y)`` of its tile image to
``(x * scale_x + offset_x, y * scale_y + offset_y)`` on the canvas, and only the part of the tile
inside ``crop`` survives. Boxes travel by mapping their corner points with the same map and clipping
to ``crop``.
"""

from __future__ import annotations

from dataclasses import dataclass

Rect = tuple[float, float, float, float]


@dataclass(frozen=True)
class TilePlacement:
    """Scale and offset of one tile on a canvas, and the canvas rectangle it may occupy."""

    scale_x: float
    scale_y: float
    offset_x: float
    offset_y: float
    crop: Rect

    def __post_init__(self) -> None:
        if self.scale_x <= 0 or self.scale_y <= 0:
            raise ValueError(f"scales must be positive, got {self.scale_x}, {self.scale_y}")
        x0, y0, x1, y1 = self.crop
        if x1 < x0 or y1 < y0:
            raise ValueError(f"crop {self.crop} is inverted")

    def map_point(self, x: float, y: float) -> tuple[float, float]:
        return x * self.scale_x + self.offset_x, y * self.scale_y + self.offset_y

    def map_box(self, box: Rect) -> Rect:
        """The corners of ``box`` (tile pixels) on the canvas, before cropping."""
        x0, y0 = self.map_point(box[0], box[1])
        x1, y1 = self.map_point(box[2], box[3])
        return x0, y0, x1, y1

    def clip(self, rect: Rect) -> Rect | None:
        """``rect`` (canvas pixels) cut to :attr:`crop`; ``None`` when nothing is left."""
        cx0, cy0, cx1, cy1 = self.crop
        x0, y0 = max(rect[0], cx0), max(rect[1], cy0)
        x1, y1 = min(rect[2], cx1), min(rect[3], cy1)
        if x1 <= x0 or y1 <= y0:
            return None
        return x0, y0, x1, y1

    def place(self, box: Rect, min_area_frac: float = 0.0) -> Rect | None:
        """Map and clip ``box``; ``None`` if less than ``min_area_frac`` of its mapped area survives."""
        mapped = self.map_box(box)
        clipped = self.clip(mapped)
        if clipped is None:
            return None
        full = (mapped[2] - mapped[0]) * (mapped[3] - mapped[1])
        kept = (clipped[2] - clipped[0]) * (clipped[3] - clipped[1])
        if full <= 0 or kept < min_area_frac * full:
            return None
        return clipped

    def scaled(self, factor: float) -> "TilePlacement":
        """This placement followed by a uniform rescale of the whole canvas by ``factor``."""
        x0, y0, x1, y1 = self.crop
        return TilePlacement(self.scale_x * factor, self.scale_y * factor,
                             self.offset_x * factor, self.offset_y * factor,
                             (x0 * factor, y0 * factor, x1 * factor, y1 * factor))
