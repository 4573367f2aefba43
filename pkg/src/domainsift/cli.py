"""``dsift`` — generate, score and filter cross-domain candidates from the command line.

    dsift synth data/toy                                  # a bright source / foggy target fixture
    dsift run --source data/toy/source --target data/toy/target --out runs/toy --seed 7
    dsift report runs/toy --chart runs/toy/report.svg

    dsift augment --source S --target T --out cands --seed 7 -n 200    # one epoch's candidates
    dsift score cands --target T --out scores.csv                       # distances, nothing dropped
    dsift filter scores.csv -k 0.8 --out kept.csv                       # keep the nearest 80%
    dsift embed cands T --out emb/epoch_001.txt                         # builtin embeddings to a file

Exit codes: 0 success, 2 configuration error, 3 data error, 4 embedding-provider timeout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .dataset.io import load_dataset, load_domains, save_dataset
from .dataset.labels import DatasetSplit
from .embedding import BuiltinProvider, make_provider, save_embedding_file
from .errors import DataError, DomainsiftError, exit_code
from .pipeline.candidates import generate_candidates
from .pipeline.config import BOX_MODES, BOX_STAGES, EXCHANGE_DIRECTIONS, PipelineConfig, load_config
from .pipeline.loop import run_loop, write_provenance
from .pipeline.report import report
from .selection import METRICS, apply_filter, read_scores, score_candidates, write_scores
from .synth import make_fixture, write_fixture

log = logging.getLogger("domainsift")


def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags override --config)")
    g.add_argument("--config", metavar="YAML", help="run configuration file")
    g.add_argument("--epochs", type=int)
    g.add_argument("-n", "--candidates", type=int, dest="candidates_per_epoch", metavar="N",
                   help="candidates per epoch")
    g.add_argument("-k", "--shrinkage", type=float, help="fraction of candidates kept, in (0, 1]")
    g.add_argument("--metric", choices=METRICS)
    g.add_argument("--mix", metavar="R=W,...", help="recipe weights, e.g. splice=2,reallocation=1")
    g.add_argument("--box-mode", choices=BOX_MODES)
    g.add_argument("--box-stage", choices=BOX_STAGES)
    g.add_argument("--exchange-from", choices=EXCHANGE_DIRECTIONS)
    g.add_argument("--canvas-side", type=int)
    g.add_argument("--provider", metavar="SPEC", help="'builtin' or 'file:<path with {epoch}>'")
    g.add_argument("--timeout", type=float, help="seconds to wait for an epoch's embedding file")
    g.add_argument("--frozen-pool", action="store_const", const=True, default=None,
                   help="reuse the first epoch's candidates in every epoch")
    g.add_argument("--workers", type=int)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dsift", description="Cross-domain augmentation with target-aware filtering.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    p.add_argument("-V", "--version", action="version", version=f"dsift {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="the full epoch loop")
    run.add_argument("--source", required=True, metavar="DIR")
    run.add_argument("--target", required=True, metavar="DIR")
    run.add_argument("--out", required=True, metavar="RUN_DIR")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--force", action="store_true", help="replace the outputs of an earlier run in RUN_DIR")
    _config_flags(run)

    aug = sub.add_parser("augment", help="generate one epoch's candidates")
    aug.add_argument("--source", required=True, metavar="DIR")
    aug.add_argument("--target", required=True, metavar="DIR")
    aug.add_argument("--out", required=True, metavar="DIR")
    aug.add_argument("--seed", type=int)
    aug.add_argument("--epoch", type=int, default=1)
    aug.add_argument("--force", action="store_true", help="replace a dataset already in DIR")
    _config_flags(aug)

    score = sub.add_parser("score", help="distance of each candidate to the target set")
    score.add_argument("candidates", metavar="DIR")
    score.add_argument("--target", required=True, metavar="DIR")
    score.add_argument("--out", required=True, metavar="CSV")
    score.add_argument("--metric", choices=METRICS, default="mmd")
    score.add_argument("--provider", default="builtin", metavar="SPEC")
    score.add_argument("--epoch", type=int, default=1)
    score.add_argument("--timeout", type=float, default=600.0)
    score.add_argument("-k", "--shrinkage", type=float, help="also mark the kept candidates")

    filt = sub.add_parser("filter", help="keep the nearest candidates of a score file")
    filt.add_argument("scores", metavar="CSV")
    filt.add_argument("-k", "--shrinkage", type=float, default=0.8)
    filt.add_argument("--out", metavar="CSV", help="write the re-ranked scores with kept flags")

    rep = sub.add_parser("report", help="summarise a run directory")
    rep.add_argument("run_dir", metavar="RUN_DIR")
    rep.add_argument("--chart", metavar="FILE", help="also draw the histograms (.svg/.pdf/.png)")

    syn = sub.add_parser("synth", help="write a synthetic bright-source / foggy-target fixture")
    syn.add_argument("out", metavar="DIR")
    syn.add_argument("--n-source", type=int, default=400)
    syn.add_argument("--n-target", type=int, default=8)
    syn.add_argument("--categories", type=int, default=3)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--force", action="store_true", help="replace a fixture already in DIR")

    emb = sub.add_parser("embed", help="write builtin embeddings of dataset directories to a file")
    emb.add_argument("dirs", nargs="+", metavar="DIR")
    emb.add_argument("--out", required=True, metavar="FILE")
    emb.add_argument("--epoch", type=int, default=1)
    return p


def _config(args: argparse.Namespace) -> PipelineConfig:
    names = ("epochs", "candidates_per_epoch", "shrinkage", "metric", "mix", "box_mode", "box_stage",
             "exchange_from", "canvas_side", "provider", "timeout", "frozen_pool", "workers", "seed")
    return load_config(args.config, **{name: getattr(args, name, None) for name in names})


def _run(args: argparse.Namespace) -> int:
    config = _config(args)
    source, target = load_domains(args.source, args.target, workers=config.workers)
    summary = run_loop(source, target, config, args.out, progress=args.verbose > 0, overwrite=args.force)
    for state in summary.epochs:
        print(f"epoch {state.epoch}: kept {len(state.kept_ids)} of {len(state.scored)}, "
              f"mean distance {state.kept.mean:.6g}")
    print(args.out)
    return 0


def _augment(args: argparse.Namespace) -> int:
    config = _config(args)
    source, target = load_domains(args.source, args.target, workers=config.workers)
    warnings: Counter = Counter()
    samples = generate_candidates(source, target, config, args.epoch, warnings=warnings,
                                  progress=args.verbose > 0)
    out = Path(args.out)
    save_dataset(DatasetSplit(tuple(s.image for s in samples), "augmented", target.category_names), out,
                 overwrite=args.force)
    write_provenance(out / "provenance.csv", samples, set())
    if warnings:
        log.info("warnings: %s", dict(sorted(warnings.items())))
    print(f"{len(samples)} candidates in {out}")
    return 0


def _score(args: argparse.Namespace) -> int:
    candidates = load_dataset(args.candidates, "augmented")
    target = load_dataset(args.target, "target")
    provider = make_provider(args.provider, timeout=args.timeout)
    warnings: Counter = Counter()
    scored = score_candidates(provider.embed(candidates.images, args.epoch),
                              provider.embed(target.images, args.epoch), args.metric, warnings=warnings)
    if args.shrinkage is not None:
        scored = apply_filter(scored, args.shrinkage)
    write_scores(args.out, scored)
    print(args.out)
    return 0


def _filter(args: argparse.Namespace) -> int:
    ranked = apply_filter(read_scores(args.scores), args.shrinkage)
    if args.out:
        write_scores(args.out, ranked)
    for s in ranked:
        if s.kept:
            print(s.candidate_id)
    return 0


def _report(args: argparse.Namespace) -> int:
    result = report(args.run_dir, chart=args.chart)
    sys.stdout.write(result.text)
    if result.chart_path is not None:
        print(result.chart_path)
    return 0


def _synth(args: argparse.Namespace) -> int:
    try:
        source, target = make_fixture(args.n_source, args.n_target, num_categories=args.categories, seed=args.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    for path in write_fixture(args.out, source, target, overwrite=args.force):
        print(path)
    return 0


def _embed(args: argparse.Namespace) -> int:
    provider = BuiltinProvider()
    vectors = []
    for directory in args.dirs:
        vectors.extend(provider.embed(load_dataset(directory, "augmented").images, args.epoch))
    try:
        count = save_embedding_file(args.out, vectors)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print(f"{count} embeddings in {args.out}")
    return 0


_COMMANDS = {"run": _run, "augment": _augment, "score": _score, "filter": _filter, "report": _report,
             "synth": _synth, "embed": _embed}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except DomainsiftError as exc:
        print(f"dsift: error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"dsift: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
