"""Colour — fixed palettes for the report chart.

Paul Tol's colour-blind-safe "bright" set, assigned in a stable order so the same recipe always gets
the same colour across runs.
"""

from __future__ import annotations

from typing import Iterable

KEPT = "#4477AA"
REJECTED = "#BBBBBB"

# the rest of the set, for recipes
_PALETTE = ["#EE6677", "#228833", "#CCBB44", "#66CCEE", "#AA3377"]


def palette(labels: Iterable, order: Iterable | None = None) -> dict:
    """A ``{label: hex colour}`` map; labels listed in ``order`` come first, the rest sorted."""
    labels = set(labels)
    ordered = [x for x in (order or ()) if x in labels]
    ordered += sorted(labels - set(ordered), key=str)
    return {label: _PALETTE[i % len(_PALETTE)] for i, label in enumerate(ordered)}
