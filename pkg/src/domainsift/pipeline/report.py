"""Run report — distance histograms, kept/rejected counts, recipe mix and warnings per epoch.

Reads only what :func:`~domainsift.pipeline.run_loop` wrote: ``summary.json`` and each epoch's
``scores.csv`` and ``provenance.csv``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..chart import EpochHistogram, distance_chart
from ..errors import DataError
from ..selection import read_scores
from .loop import epoch_dir_name

__all__ = ["Report", "report", "BINS"]

log = logging.getLogger(__name__)

BINS = 10
_BAR = 40


@dataclass(frozen=True)
class Report:
    text: str
    histograms: tuple[EpochHistogram, ...]
    warnings: dict[str, int]
    csv_path: Path
    chart_path: Path | None = None


def _histogram(epoch: int, run_dir: Path) -> EpochHistogram:
    out = run_dir / epoch_dir_name(epoch)
    scored = read_scores(out / "scores.csv")
    if not scored:
        raise DataError(f"{out / 'scores.csv'} lists no candidates")
    distances = np.array([s.distance for s in scored])
    _, edges = np.histogram(distances, bins=BINS)
    kept, _ = np.histogram(distances[[s.kept for s in scored]], bins=edges)
    rejected, _ = np.histogram(distances[[not s.kept for s in scored]], bins=edges)

    prov = out / "provenance.csv"
    if not prov.is_file():
        raise DataError(f"no provenance file at {prov}")
    recipes: dict[str, str] = {}
    with open(prov, newline="") as handle:
        for row in csv.DictReader(handle):
            recipes[row["candidate_id"]] = row["recipe"]
    counts: dict[str, int] = {}
    for recipe in recipes.values():
        counts[recipe] = counts.get(recipe, 0) + 1
    return EpochHistogram(epoch, tuple(float(e) for e in edges), tuple(int(k) for k in kept),
                          tuple(int(r) for r in rejected), dict(sorted(counts.items())))


def _block(hist: EpochHistogram, entry: dict) -> list[str]:
    lines = [f"epoch {hist.epoch}: {hist.total} candidates, {sum(hist.kept)} kept, {sum(hist.rejected)} rejected"]
    for name in ("kept", "rejected"):
        stats = entry.get(name) or {}
        if stats.get("count"):
            lines.append(f"  {name:<8} distance min {stats['min']:.6g}  mean {stats['mean']:.6g}  "
                         f"max {stats['max']:.6g}")
    peak = max([k + r for k, r in zip(hist.kept, hist.rejected)] + [1])
    for i, (k, r) in enumerate(zip(hist.kept, hist.rejected)):
        close = "]" if i == len(hist.kept) - 1 else ")"
        label = f"[{hist.edges[i]:.4g}, {hist.edges[i + 1]:.4g}{close}"
        bar = "#" * round(_BAR * k / peak) + "." * round(_BAR * r / peak)
        lines.append(f"  {label:<24} {k:>5} {r:>5}  {bar}")
    lines.append("  recipes: " + ", ".join(f"{name} {n}" for name, n in hist.recipes.items()))
    warnings = entry.get("warnings") or {}
    if warnings:
        lines.append("  warnings: " + ", ".join(f"{name} {n}" for name, n in sorted(warnings.items())))
    return lines


def report(run_dir: str | Path, *, chart: str | Path | None = None) -> Report:
    """Summarise a run directory as text, write ``report.csv`` beside it and optionally a chart.

    ``chart`` is a path ending in ``.svg``, ``.pdf`` or ``.png``."""
    run_dir = Path(run_dir)
    summary_path = run_dir / "summary.json"
    if not summary_path.is_file():
        raise DataError(f"{run_dir} is not a run directory (no summary.json)")
    try:
        summary = json.loads(summary_path.read_text())
        entries = summary["epochs"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{summary_path}: unreadable summary ({exc})") from None
    if not entries:
        raise DataError(f"{summary_path} records no epochs")

    histograms = []
    lines = []
    totals: dict[str, int] = {}
    for entry in entries:
        hist = _histogram(int(entry["epoch"]), run_dir)
        histograms.append(hist)
        lines.extend(_block(hist, entry))
        for name, n in (entry.get("warnings") or {}).items():
            totals[name] = totals.get(name, 0) + int(n)
    lines.append(f"total kept: {summary.get('total_kept', sum(sum(h.kept) for h in histograms))}")
    lines.append("warning totals: " + (", ".join(f"{k} {v}" for k, v in sorted(totals.items())) or "none"))

    csv_path = run_dir / "report.csv"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "bin", "lo", "hi", "kept", "rejected"])
        for hist in histograms:
            for i, (k, r) in enumerate(zip(hist.kept, hist.rejected)):
                writer.writerow([hist.epoch, i, format(hist.edges[i], ".17g"),
                                 format(hist.edges[i + 1], ".17g"), k, r])

    chart_path = distance_chart(histograms).save(chart) if chart is not None else None
    log.debug("report of %s: %d epochs", run_dir, len(histograms))
    return Report("\n".join(lines) + "\n", tuple(histograms), dict(sorted(totals.items())), csv_path,
                  chart_path)
