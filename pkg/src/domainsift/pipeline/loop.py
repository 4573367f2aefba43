"""The epoch loop — generate, embed, score, filter and emit, ``T`` times.

Each epoch writes ``epoch_<nnn>/`` in the run directory: the kept candidates as a dataset
(``images/``, ``labels/``, ``classes.txt``) plus ``scores.csv`` (every candidate, in rank order) and
``provenance.csv`` (one row per contributing input image). A trainer picks the kept set up from
there; training itself never happens in this process.

With a file provider the loop also writes every candidate to ``candidates_<nnn>/`` before waiting
for the epoch's embedding file, which must cover those candidates and all target images.
"""

from __future__ import annotations

import csv
import json
import logging
import re
import shutil
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..augment.sample import RECIPES, AugmentedSample
from ..dataset.io import save_dataset
from ..dataset.labels import DatasetSplit
from ..embedding import EmbeddingProvider, FileProvider, make_provider
from ..errors import DataError
from ..selection import ScoredCandidate, apply_filter, score_candidates, write_scores
from .candidates import generate_candidates
from .config import PipelineConfig

__all__ = ["DistanceStats", "EpochState", "RunSummary", "run_epoch", "run_loop", "epoch_dir_name",
           "write_provenance", "PROVENANCE_COLUMNS"]

log = logging.getLogger(__name__)

PROVENANCE_COLUMNS = ("candidate_id", "recipe", "kept", "slot", "origin_id", "origin_domain",
                      "lam", "lam_cls", "exchanged")

# what a run writes into its directory, and removes again on overwrite
_OWNED_DIR = re.compile(r"(epoch|candidates)_\d{3,}")
_OWNED_FILES = frozenset({"config.yaml", "summary.json", "summary.csv", "report.csv"})


def epoch_dir_name(epoch: int, prefix: str = "epoch") -> str:
    return f"{prefix}_{epoch:03d}"


def _g(value: float) -> str:
    return format(value, ".17g")


@dataclass(frozen=True)
class DistanceStats:
    count: int
    min: float | None = None
    mean: float | None = None
    max: float | None = None

    @classmethod
    def of(cls, values: Sequence[float]) -> "DistanceStats":
        if not values:
            return cls(0)
        arr = np.asarray(values, dtype=np.float64)
        return cls(len(values), float(arr.min()), float(arr.mean()), float(arr.max()))


@dataclass(frozen=True)
class EpochState:
    """What one epoch kept and how the distances fell."""

    epoch: int
    kept_ids: tuple[str, ...]
    scored: tuple[ScoredCandidate, ...]
    kept: DistanceStats
    rejected: DistanceStats
    recipes: dict[str, dict[str, int]] = field(default_factory=dict)
    target_tiles: dict[str, float | None] = field(default_factory=dict)
    warnings: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "epoch": self.epoch,
            "n_candidates": len(self.scored),
            "n_kept": len(self.kept_ids),
            "kept": vars(self.kept),
            "rejected": vars(self.rejected),
            "recipes": self.recipes,
            "target_tiles": self.target_tiles,
            "warnings": dict(sorted(self.warnings.items())),
        }


@dataclass(frozen=True)
class RunSummary:
    config: PipelineConfig
    epochs: tuple[EpochState, ...]

    @property
    def total_kept(self) -> int:
        return sum(len(e.kept_ids) for e in self.epochs)

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.config.to_dict(), "total_kept": self.total_kept,
                "epochs": [e.to_dict() for e in self.epochs]}

    def write(self, run_dir: str | Path) -> None:
        """``summary.json`` and a one-row-per-epoch ``summary.csv``; both byte-stable for a given run."""
        run_dir = Path(run_dir)
        (run_dir / "summary.json").write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                                              newline="\n")
        with open(run_dir / "summary.csv", "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["epoch", "n_candidates", "n_kept", "kept_mean", "kept_max",
                             "rejected_mean", "rejected_min", "warnings"])
            for e in self.epochs:
                writer.writerow([e.epoch, len(e.scored), len(e.kept_ids), _opt(e.kept.mean), _opt(e.kept.max),
                                 _opt(e.rejected.mean), _opt(e.rejected.min), sum(e.warnings.values())])


def _opt(value: float | None) -> str:
    return "" if value is None else _g(value)


def write_provenance(path: Path, candidates: Sequence[AugmentedSample], kept: set[str]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PROVENANCE_COLUMNS)
        for sample in candidates:
            for slot, c in enumerate(sample.provenance):
                writer.writerow([sample.id, sample.recipe, int(sample.id in kept), slot, c.origin_id,
                                 c.origin_domain, _g(c.lam), _g(c.lam_cls), sample.exchanged])


def _recipe_table(candidates: Sequence[AugmentedSample], kept: set[str]) -> dict[str, dict[str, int]]:
    table = {r: {"kept": 0, "rejected": 0} for r in RECIPES}
    for s in candidates:
        table[s.recipe]["kept" if s.id in kept else "rejected"] += 1
    return {r: counts for r, counts in table.items() if counts["kept"] or counts["rejected"]}


def _target_tiles(candidates: Sequence[AugmentedSample], kept: set[str]) -> dict[str, float | None]:
    """Mean number of target tiles per splice candidate, kept vs rejected."""
    groups: dict[str, list[int]] = {"kept": [], "rejected": []}
    for s in candidates:
        if s.recipe == "splice":
            groups["kept" if s.id in kept else "rejected"].append(s.n_target)
    return {name: (float(np.mean(v)) if v else None) for name, v in groups.items()}


def run_epoch(candidates: Sequence[AugmentedSample], target: DatasetSplit, provider: EmbeddingProvider,
              config: PipelineConfig, *, epoch: int = 1, out_dir: str | Path | None = None,
              warnings: Counter | None = None) -> EpochState:
    """Embed, score and filter one epoch's candidates; write ``out_dir`` when given."""
    counter: Counter = Counter() if warnings is None else warnings
    cand_vecs = provider.embed([c.image for c in candidates], epoch)
    target_vecs = provider.embed(target.images, epoch)
    scored = score_candidates(cand_vecs, target_vecs, config.metric, warnings=counter)
    ranked = apply_filter(scored, config.shrinkage)
    kept_ids = tuple(s.candidate_id for s in ranked if s.kept)
    kept = set(kept_ids)

    state = EpochState(
        epoch=epoch,
        kept_ids=kept_ids,
        scored=tuple(ranked),
        kept=DistanceStats.of([s.distance for s in ranked if s.kept]),
        rejected=DistanceStats.of([s.distance for s in ranked if not s.kept]),
        recipes=_recipe_table(candidates, kept),
        target_tiles=_target_tiles(candidates, kept),
        warnings=dict(counter),
    )
    if out_dir is not None:
        out = Path(out_dir)
        by_id = {c.id: c for c in candidates}
        images = tuple(by_id[i].image for i in kept_ids)
        save_dataset(DatasetSplit(images, "augmented", target.category_names), out)
        write_scores(out / "scores.csv", ranked)
        write_provenance(out / "provenance.csv", candidates, kept)
    log.info("epoch %d: kept %d of %d (kept mean %.6g, rejected mean %s)", epoch, len(kept_ids),
             len(ranked), state.kept.mean, "-" if state.rejected.mean is None else f"{state.rejected.mean:.6g}")
    return state


def _clear_run_dir(run_dir: Path, overwrite: bool) -> None:
    if not run_dir.is_dir() or not any(run_dir.iterdir()):
        return
    if not overwrite:
        raise DataError(f"run directory {run_dir} is not empty; choose a new one or overwrite it "
                        f"(dsift run --force)")
    for path in sorted(run_dir.iterdir()):
        if path.is_dir() and _OWNED_DIR.fullmatch(path.name):
            shutil.rmtree(path)
        elif path.is_file() and path.name in _OWNED_FILES:
            path.unlink()
        else:
            continue
        log.debug("removed %s from an earlier run", path)


def run_loop(source: DatasetSplit, target: DatasetSplit, config: PipelineConfig, run_dir: str | Path, *,
             provider: EmbeddingProvider | None = None, progress: bool = False,
             overwrite: bool = False) -> RunSummary:
    """Run ``config.epochs`` epochs into ``run_dir`` and write the summary files.

    A non-empty ``run_dir`` raises :class:`DataError` unless ``overwrite`` is set, in which case the
    epoch, candidate, config, summary and report outputs of the earlier run are removed first.
    Anything else in the directory is left alone."""
    config.validate()
    run_dir = Path(run_dir)
    _clear_run_dir(run_dir, overwrite)
    run_dir.mkdir(parents=True, exist_ok=True)
    config.dump(run_dir / "config.yaml")
    if provider is None:
        provider = make_provider(config.provider, config.embedding_dim, timeout=config.timeout,
                                 poll_interval=config.poll_interval)

    states = []
    pool: list[AugmentedSample] | None = None
    for epoch in range(1, config.epochs + 1):
        counter: Counter = Counter()
        if pool is None or not config.frozen_pool:
            pool = generate_candidates(source, target, config, epoch, warnings=counter, progress=progress)
        if provider.refreshable:
            if isinstance(provider, FileProvider):
                provider.expect(epoch)
            split = DatasetSplit(tuple(c.image for c in pool), "augmented", target.category_names)
            save_dataset(split, run_dir / epoch_dir_name(epoch, "candidates"))
        states.append(run_epoch(pool, target, provider, config, epoch=epoch,
                                out_dir=run_dir / epoch_dir_name(epoch), warnings=counter))

    summary = RunSummary(config, tuple(states))
    summary.write(run_dir)
    return summary
