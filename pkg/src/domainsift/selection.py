"""Selection — distance of each candidate to the target set, and the shrinkage filter.

Two distances, both computed by one vectorised routine over a candidate matrix:

- ``mmd``: squared Euclidean distance from the candidate to the mean target embedding,
  ``‖mean(T) - c‖²``;
- ``cosine``: ``Σ_j (1 - cos(t_j, c))`` over the targets. A zero vector has similarity 0 with
  everything (a contribution of 1) and is counted under ``"zero_norm_embeddings"``.

The filter keeps the ``floor(n·k)`` candidates closest to the target set, ties going to the
smaller candidate id.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import EmbeddingVector
from .errors import ConfigError, DataError

__all__ = ["ScoredCandidate", "FilterConfig", "METRICS", "mmd_sq", "cosine_dist", "distances",
           "score_candidates", "filter_top_k", "apply_filter", "shrunk_size", "read_scores",
           "write_scores", "SCORE_COLUMNS"]

log = logging.getLogger(__name__)

METRICS = ("mmd", "cosine")
SCORE_COLUMNS = ("candidate_id", "distance", "rank", "kept")


@dataclass(frozen=True)
class ScoredCandidate:
    candidate_id: str
    distance: float
    rank: int = 0
    kept: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.distance) and self.distance >= 0.0):
            raise ValueError(f"{self.candidate_id}: distance must be finite and >= 0, got {self.distance}")


@dataclass(frozen=True)
class FilterConfig:
    """Shrinkage ratio ``k`` in ``(0, 1]`` and the distance metric."""

    k: float = 0.8
    metric: str = "mmd"

    def __post_init__(self) -> None:
        _check_k(self.k)
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}; choose from {METRICS}")


def _check_k(k: float) -> None:
    if not (0.0 < k <= 1.0):
        raise ConfigError(f"shrinkage ratio k must lie in (0, 1], got {k}")


def shrunk_size(n: int, k: float) -> int:
    """``floor(n·k)`` with ``k`` taken as the decimal it is written as, so ``0.29`` is exactly 29/100
    and not its binary neighbour just below."""
    return math.floor(n * Fraction(repr(float(k))))


def _matrix(vectors: Sequence[EmbeddingVector] | Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    rows = [v.values if isinstance(v, EmbeddingVector) else np.asarray(v, dtype=np.float64)
            for v in vectors]
    if not rows:
        return np.empty((0, 0))
    if len({r.shape for r in rows}) != 1 or rows[0].ndim != 1:
        raise ValueError("embedding dimension mismatch")
    return np.stack(rows).astype(np.float64, copy=False)


def distances(candidates: np.ndarray, targets: np.ndarray, metric: str = "mmd", *,
              warnings: Counter | None = None) -> np.ndarray:
    """Distances of each row of ``candidates`` (``n x d``) to the target rows (``m x d``)."""
    if targets.shape[0] == 0:
        raise ValueError("the target set is empty")
    if candidates.shape[1] != targets.shape[1]:
        raise ValueError(f"embedding dimension mismatch: candidates have {candidates.shape[1]}, "
                         f"targets have {targets.shape[1]}")
    if metric == "mmd":
        diff = candidates - targets.mean(axis=0)
        return np.einsum("ij,ij->i", diff, diff)
    if metric == "cosine":
        c_norm = np.linalg.norm(candidates, axis=1)
        t_norm = np.linalg.norm(targets, axis=1)
        zero = int((c_norm == 0).sum() + (t_norm == 0).sum())
        if zero:
            log.warning("%d zero-norm embedding(s) in a cosine comparison; their similarity is 0", zero)
            if warnings is not None:
                warnings["zero_norm_embeddings"] += zero
        denom = np.outer(c_norm, t_norm)
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = np.where(denom > 0, (candidates @ targets.T) / np.where(denom > 0, denom, 1.0), 0.0)
        return (1.0 - np.clip(sims, -1.0, 1.0)).sum(axis=1)
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def mmd_sq(candidate: EmbeddingVector | np.ndarray, targets: Sequence[EmbeddingVector] | np.ndarray) -> float:
    """Squared distance from ``candidate`` to the mean of ``targets``."""
    return float(distances(_matrix([candidate]), _matrix(targets), "mmd")[0])


def cosine_dist(candidate: EmbeddingVector | np.ndarray, targets: Sequence[EmbeddingVector] | np.ndarray,
                *, warnings: Counter | None = None) -> float:
    """``Σ (1 - cos)`` between ``candidate`` and every target."""
    return float(distances(_matrix([candidate]), _matrix(targets), "cosine", warnings=warnings)[0])


def _ranked(scored: Sequence[ScoredCandidate]) -> list[ScoredCandidate]:
    return sorted(scored, key=lambda s: (s.distance, s.candidate_id))


def score_candidates(candidates: Sequence[EmbeddingVector], targets: Sequence[EmbeddingVector],
                     metric: str = "mmd", *, warnings: Counter | None = None) -> list[ScoredCandidate]:
    """Score and rank every candidate; the result is in rank order, nothing marked kept yet."""
    if not candidates:
        raise DataError("no candidates to score")
    ids = [c.source_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise DataError("candidate ids must be unique")
    values = distances(_matrix(candidates), _matrix(targets), metric, warnings=warnings)
    scored = [ScoredCandidate(i, float(d)) for i, d in zip(ids, values)]
    return [replace(s, rank=r) for r, s in enumerate(_ranked(scored), start=1)]


def filter_top_k(scored: Sequence[ScoredCandidate], k: float) -> list[str]:
    """Ids of the ``floor(n·k)`` nearest candidates, nearest first."""
    _check_k(k)
    if not scored:
        raise DataError("no scored candidates to filter")
    keep = shrunk_size(len(scored), k)
    if keep == 0:
        raise ConfigError(f"shrinkage ratio eliminates all candidates (k={k}, n={len(scored)})")
    return [s.candidate_id for s in _ranked(scored)[:keep]]


def apply_filter(scored: Sequence[ScoredCandidate], k: float) -> list[ScoredCandidate]:
    """All candidates in rank order with ``rank`` renumbered from 1 and ``kept`` set."""
    kept = set(filter_top_k(scored, k))
    return [replace(s, rank=r, kept=s.candidate_id in kept)
            for r, s in enumerate(_ranked(scored), start=1)]


def write_scores(path: str | Path, scored: Sequence[ScoredCandidate]) -> None:
    """Write ``candidate_id,distance,rank,kept`` rows in rank order (distances to 17 digits)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for s in sorted(scored, key=lambda s: s.rank):
            writer.writerow([s.candidate_id, format(s.distance, ".17g"), s.rank, int(s.kept)])


def read_scores(path: str | Path) -> list[ScoredCandidate]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no score file at {path}")
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != SCORE_COLUMNS:
            raise DataError(f"{path}: expected columns {','.join(SCORE_COLUMNS)}")
        out = []
        for number, row in enumerate(reader, start=2):
            try:
                out.append(ScoredCandidate(row["candidate_id"], float(row["distance"]),
                                           int(row["rank"]), row["kept"] == "1"))
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{number}: {exc}") from None
    return out
