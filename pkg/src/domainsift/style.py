"""Style — the visual knobs of the report chart.

One small dataclass; pass a customised ``ChartStyle`` to :func:`~domainsift.chart.distance_chart`
to restyle it.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ChartStyle:
    panel_width: float = 420.0
    panel_height: float = 180.0
    margin: float = 48.0
    gap: float = 36.0                   # vertical space between epoch panels
    recipe_bar_height: float = 14.0
    bar_stroke: str = "#ffffff"
    bar_stroke_width: float = 0.6
    axis_color: str = "#555555"
    axis_width: float = 0.8
    font_family: str = "Helvetica"
    font_size: float = 11.0
    title_size: float = 13.0
    label_color: str = "#222222"
    background: str | None = "white"
