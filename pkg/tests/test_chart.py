"""Chart: histograms render to SVG, and formats without cairosvg fall back to SVG."""

import sys

import pytest

from domainsift.chart import EpochHistogram, distance_chart
from domainsift.color import KEPT, REJECTED, palette


def _hist(epoch=1):
    return EpochHistogram(epoch, (0.0, 0.5, 1.0), (3, 1), (0, 2), {"splice": 4, "reallocation": 2})


def test_chart_draws_kept_and_rejected_bars():
    svg = distance_chart([_hist(1), _hist(2)]).as_svg()
    assert svg.lstrip().startswith("<")
    assert KEPT in svg and REJECTED in svg
    assert "epoch 2: 4 kept, 2 rejected" in svg


def test_recipes_keep_their_colour_across_runs():
    a = palette(["reallocation", "splice"], order=("splice", "reallocation"))
    b = palette(["splice", "reallocation", "proportion"], order=("splice", "reallocation", "proportion"))
    assert a["splice"] == b["splice"] and a["reallocation"] == b["reallocation"]
    assert KEPT not in a.values() and REJECTED not in a.values()


def test_svg_save(tmp_path):
    out = distance_chart([_hist()]).save(tmp_path / "d.svg")
    assert out.read_text().lstrip().startswith("<")


def test_png_without_cairosvg_falls_back_to_svg(tmp_path, monkeypatch):
    monkeypatch.setitem(sys.modules, "cairosvg", None)
    out = distance_chart([_hist()]).save(tmp_path / "d.png")
    assert out == tmp_path / "d.svg" and out.exists()


def test_unknown_extension_is_refused(tmp_path):
    with pytest.raises(ValueError, match="unsupported"):
        distance_chart([_hist()]).save(tmp_path / "d.gif")
