"""The **pipeline** area — the epoch loop that generates, scores, filters and emits candidates.

    from domainsift import pipeline
    config = pipeline.load_config("run.yaml", seed=7)
    summary = pipeline.run_loop(source, target, config, "runs/fog")
    print(pipeline.report("runs/fog").text)
"""

from __future__ import annotations

from .candidates import candidate_id, candidate_rng, generate_candidates, make_candidate
from .config import BOX_MODES, BOX_STAGES, EXCHANGE_DIRECTIONS, PipelineConfig, load_config
from .loop import DistanceStats, EpochState, RunSummary, epoch_dir_name, run_epoch, run_loop
from .report import Report, report

__all__ = [
    "PipelineConfig", "load_config", "BOX_MODES", "BOX_STAGES", "EXCHANGE_DIRECTIONS",
    "candidate_id", "candidate_rng", "make_candidate", "generate_candidates",
    "DistanceStats", "EpochState", "RunSummary", "epoch_dir_name", "run_epoch", "run_loop",
    "Report", "report",
]
