"""Report chart — the only module that touches drawsvg.

:func:`distance_chart` stacks one panel per epoch: the distance histogram with kept and rejected
candidates stacked in each bin, and under it a single bar splitting the epoch's candidates by recipe.
Saving to ``.svg`` needs nothing; ``.pdf`` / ``.png`` go through cairosvg, falling back to ``.svg``
(with a warning) when it is absent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import drawsvg as draw

from .color import KEPT, REJECTED, palette
from .style import ChartStyle

__all__ = ["Canvas", "EpochHistogram", "distance_chart"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochHistogram:
    """Histogram of one epoch's distances: ``len(edges) == len(kept) + 1``."""

    epoch: int
    edges: tuple[float, ...]
    kept: tuple[int, ...]
    rejected: tuple[int, ...]
    recipes: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.kept) + sum(self.rejected)


class Canvas:
    """A fixed-size pixel page."""

    def __init__(self, width: float, height: float, style: ChartStyle) -> None:
        self.style = style
        self.width, self.height = width, height
        self._d = draw.Drawing(width, height, origin=(0, 0))
        if style.background:
            self._d.append(draw.Rectangle(0, 0, width, height, fill=style.background))

    def line(self, x1, y1, x2, y2, color: str, width: float) -> None:
        self._d.append(draw.Line(x1, y1, x2, y2, stroke=color, stroke_width=width))

    def text(self, x, y, s: str, *, anchor="start", size: float | None = None, weight="normal",
             color: str | None = None) -> None:
        self._d.append(draw.Text(s, size or self.style.font_size, x, y,
                                 fill=color or self.style.label_color, font_family=self.style.font_family,
                                 text_anchor=anchor, dominant_baseline="central", font_weight=weight))

    def rect(self, x, y, w, h, *, fill, stroke="none", stroke_width=0.0) -> None:
        if w > 0 and h > 0:
            self._d.append(draw.Rectangle(x, y, w, h, fill=fill, stroke=stroke, stroke_width=stroke_width))

    def as_svg(self) -> str:
        return str(self._d.as_svg())

    def save(self, path: str | Path) -> Path:
        """Write the chart; the format follows the extension."""
        path = Path(path)
        ext = path.suffix.lower()
        svg = self.as_svg()
        if ext == ".svg":
            path.write_text(svg)
            return path
        if ext in (".pdf", ".png"):
            try:
                import cairosvg
            except ImportError:
                fallback = path.with_suffix(".svg")
                fallback.write_text(svg)
                log.warning("cairosvg not installed; wrote %s instead of %s (install domainsift[export])",
                            fallback.name, path.name)
                return fallback
            data = svg.encode()
            if ext == ".pdf":
                cairosvg.svg2pdf(bytestring=data, write_to=str(path))
            else:
                cairosvg.svg2png(bytestring=data, write_to=str(path), scale=2.0)
            return path
        raise ValueError(f"unsupported output extension {path.suffix!r}; use .svg, .pdf or .png")


def _panel(c: Canvas, hist: EpochHistogram, top: float, colors: dict[str, str]) -> None:
    s = c.style
    left, w, h = s.margin, s.panel_width, s.panel_height
    c.text(left, top - 14, f"epoch {hist.epoch}: {sum(hist.kept)} kept, {sum(hist.rejected)} rejected",
           size=s.title_size, weight="bold")
    peak = max([k + r for k, r in zip(hist.kept, hist.rejected)] + [1])
    n_bins = len(hist.kept)
    bar_w = w / n_bins
    base = top + h
    for i, (k, r) in enumerate(zip(hist.kept, hist.rejected)):
        x = left + i * bar_w
        kh, rh = h * k / peak, h * r / peak
        c.rect(x, base - kh, bar_w, kh, fill=KEPT, stroke=s.bar_stroke, stroke_width=s.bar_stroke_width)
        c.rect(x, base - kh - rh, bar_w, rh, fill=REJECTED, stroke=s.bar_stroke,
               stroke_width=s.bar_stroke_width)
    c.line(left, base, left + w, base, s.axis_color, s.axis_width)
    c.line(left, top, left, base, s.axis_color, s.axis_width)
    c.text(left, base + 10, f"{hist.edges[0]:.4g}", anchor="start")
    c.text(left + w, base + 10, f"{hist.edges[-1]:.4g}", anchor="end")
    c.text(left - 6, top, str(peak), anchor="end")

    y = base + 24
    total = sum(hist.recipes.values()) or 1
    x = left
    for recipe, count in hist.recipes.items():
        seg = w * count / total
        c.rect(x, y, seg, s.recipe_bar_height, fill=colors[recipe])
        if seg > 60:
            c.text(x + 4, y + s.recipe_bar_height / 2, f"{recipe} {count}", size=s.font_size - 2,
                   color="#ffffff")
        x += seg


def distance_chart(histograms: Sequence[EpochHistogram], style: ChartStyle | None = None) -> Canvas:
    """One histogram panel per epoch, top to bottom in epoch order."""
    style = style or ChartStyle()
    block = style.panel_height + style.recipe_bar_height + 24 + style.gap + 14
    width = style.panel_width + 2 * style.margin
    height = 2 * style.margin + block * max(len(histograms), 1)
    canvas = Canvas(width, height, style)
    colors = palette([r for h in histograms for r in h.recipes],
                     order=("splice", "reallocation", "splice_reallocation", "proportion"))
    for i, hist in enumerate(histograms):
        _panel(canvas, hist, style.margin + 14 + i * block, colors)
    return canvas
