"""The epoch loop end to end on small synthetic fixtures.

The ``slow`` tests run the bright-source / foggy-target experiment at full size: 400 source and 8
target images, 500 candidates per epoch. They check that filtering actually favours candidates built
from more target content, and that the kept set moves outward smoothly as ``k`` grows. They use a
64-pixel canvas to stay quick; one epoch is repeated at the default 640."""

from collections import Counter

import numpy as np
import pytest
import yaml

from domainsift.dataset import LabeledImage, load_dataset, read_image
from domainsift.embedding import BuiltinProvider, EmbeddingVector, FileProvider, embed_builtin, save_embedding_file
from domainsift.errors import ConfigError, DataError, ProviderError, ProviderTimeout
from domainsift.pipeline import (
    PipelineConfig,
    candidate_id,
    generate_candidates,
    load_config,
    make_candidate,
    report,
    run_epoch,
    run_loop,
)
from domainsift.synth import make_fixture


@pytest.fixture(scope="module")
def fixture():
    return make_fixture(30, 4, seed=1, size_range=(32, 48))


def _config(**kw):
    base = dict(epochs=1, candidates_per_epoch=20, canvas_side=32, seed=5)
    base.update(kw)
    return PipelineConfig(**base).validate()


# --- configuration --------------------------------------------------------

def test_defaults_are_valid():
    config = PipelineConfig().validate()
    assert config.kept_per_epoch == 80
    assert config.recipe_weights() == pytest.approx([1 / 3, 1 / 3, 1 / 3, 0.0])


def test_unknown_keys_are_refused():
    with pytest.raises(ConfigError, match="unknown config key"):
        PipelineConfig.from_mapping({"epoch": 3})


@pytest.mark.parametrize("overrides, message", [
    (dict(shrinkage=0.0), "shrinkage"),
    (dict(candidates_per_epoch=3, shrinkage=0.2), "eliminates all candidates"),
    (dict(metric="kl"), "metric"),
    (dict(box_mode="poisson"), "box_mode"),
    (dict(mix="splice=0"), "must not all be zero"),
    (dict(mix="splice"), "not name=weight"),
    (dict(mix="mosaic=1"), "unknown recipe"),
    (dict(provider="file:emb.txt"), "provider"),
    (dict(embedding_dim=64), "192-dim"),
    (dict(epochs=0), "epochs"),
    (dict(workers=1.5), "workers"),
])
def test_bad_values_are_config_errors(overrides, message):
    with pytest.raises(ConfigError, match=message):
        PipelineConfig().with_overrides(**overrides)


def test_yaml_file_with_flag_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("epochs: 5\nbox_mode: off\nmix: {splice: 2, reallocation: 1}\nshrinkage: 0.5\n")
    config = load_config(path, shrinkage=0.6, metric=None)
    assert config.epochs == 5
    assert config.box_mode == "off"
    assert config.shrinkage == 0.6
    assert config.metric == "mmd"
    assert config.recipe_weights() == pytest.approx([2 / 3, 1 / 3, 0.0, 0.0])


def test_broken_config_files(tmp_path):
    with pytest.raises(ConfigError, match="no config file"):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(tmp_path / "list.yaml")


def test_dumped_config_loads_back(tmp_path):
    config = PipelineConfig.from_mapping({"box_mode": "gaussian", "mix": {"splice": 1}})
    config.dump(tmp_path / "config.yaml")
    assert load_config(tmp_path / "config.yaml") == config
    assert yaml.safe_load((tmp_path / "config.yaml").read_text())["box_mode"] == "gaussian"


# --- candidates -----------------------------------------------------------

def test_generates_exactly_n_candidates(fixture):
    source, target = fixture
    warnings = Counter()
    samples = generate_candidates(source, target, _config(candidates_per_epoch=50), 2, warnings=warnings)
    assert len(samples) == 50
    assert [s.id for s in samples] == [candidate_id(2, i) for i in range(50)]
    assert all((s.image.width, s.image.height) == (32, 32) for s in samples)


def test_all_splice_means_four_contributors(fixture):
    source, target = fixture
    samples = generate_candidates(source, target, _config(mix={"splice": 1.0}), 1)
    assert all(s.recipe == "splice" and len(s.provenance) == 4 for s in samples)


def test_each_candidate_is_reproducible_alone(fixture):
    source, target = fixture
    config = _config(box_mode="mixture")
    samples = generate_candidates(source, target, config, 1)
    again = make_candidate(source.images, target.images, config, 1, 7)
    assert np.array_equal(again.image.pixels, samples[7].image.pixels)
    assert again.image.labels == samples[7].image.labels


def test_worker_count_does_not_change_candidates(fixture):
    source, target = fixture
    serial = generate_candidates(source, target, _config(), 1)
    threaded = generate_candidates(source, target, _config(workers=4), 1)
    assert all(np.array_equal(a.image.pixels, b.image.pixels) for a, b in zip(serial, threaded))
    assert [s.provenance for s in serial] == [s.provenance for s in threaded]


@pytest.mark.parametrize("stage, direction", [("composite", "target"), ("composite", "source"),
                                              ("source", "target"), ("source", "source")])
def test_box_exchange_runs_at_every_stage(fixture, stage, direction):
    source, target = fixture
    config = _config(box_mode="gaussian", box_stage=stage, exchange_from=direction, p_exchange=1.0,
                     canvas_side=64, candidates_per_epoch=30)
    samples = generate_candidates(source, target, config, 1)
    assert sum(s.exchanged for s in samples) > 0


def test_empty_target_is_a_data_error(fixture):
    source, target = fixture
    empty = type(target)((), "target", target.category_names)
    with pytest.raises(DataError, match="target split is empty"):
        generate_candidates(source, empty, _config(), 1)


# --- one epoch ------------------------------------------------------------

def test_k_one_keeps_everything(fixture):
    source, target = fixture
    config = _config(candidates_per_epoch=10, shrinkage=1.0)
    state = run_epoch(generate_candidates(source, target, config, 1), target, BuiltinProvider(), config)
    assert len(state.kept_ids) == 10
    assert state.rejected.count == 0


def test_ten_at_point_eight_keeps_eight(fixture, tmp_path):
    source, target = fixture
    config = _config(candidates_per_epoch=10)
    candidates = generate_candidates(source, target, config, 1)
    state = run_epoch(candidates, target, BuiltinProvider(), config, out_dir=tmp_path / "e")
    assert len(state.kept_ids) == 8
    assert state.kept.max <= state.rejected.min
    assert sorted(p.stem for p in (tmp_path / "e" / "images").iterdir()) == sorted(state.kept_ids)
    rows = (tmp_path / "e" / "scores.csv").read_text().splitlines()
    assert len(rows) == 11


def test_provider_missing_an_id_fails(fixture, tmp_path):
    source, target = fixture
    config = _config(candidates_per_epoch=4, shrinkage=1.0)
    candidates = generate_candidates(source, target, config, 1)
    save_embedding_file(tmp_path / "e1.txt", [embed_builtin(img) for img in target])
    provider = FileProvider(str(tmp_path / "e{epoch}.txt"))
    with pytest.raises(DataError, match="no embedding for 4"):
        run_epoch(candidates, target, provider, config)


# --- the loop -------------------------------------------------------------

def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_three_epochs_write_three_directories(fixture, tmp_path):
    source, target = fixture
    summary = run_loop(source, target, _config(epochs=3), tmp_path / "run")
    assert [e.epoch for e in summary.epochs] == [1, 2, 3]
    for name in ("epoch_001", "epoch_002", "epoch_003", "summary.json", "summary.csv", "config.yaml"):
        assert (tmp_path / "run" / name).exists()
    assert summary.total_kept == 3 * 16
    assert not (tmp_path / "run" / "candidates_001").exists()


def test_runs_are_byte_identical(fixture, tmp_path):
    source, target = fixture
    config = _config(epochs=3, candidates_per_epoch=200)
    run_loop(source, target, config, tmp_path / "a")
    run_loop(source, target, config, tmp_path / "b")
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_rerun_into_a_used_directory_is_refused(fixture, tmp_path):
    source, target = fixture
    run_loop(source, target, _config(), tmp_path / "run")
    with pytest.raises(DataError, match="not empty"):
        run_loop(source, target, _config(shrinkage=0.5), tmp_path / "run")
    assert len(load_dataset(tmp_path / "run" / "epoch_001", "augmented")) == 16


def test_overwrite_leaves_only_the_new_run(fixture, tmp_path):
    source, target = fixture
    run = tmp_path / "run"
    run_loop(source, target, _config(epochs=2), run)
    (run / "notes.txt").write_text("kept\n")
    config = _config(shrinkage=0.5)
    summary = run_loop(source, target, config, run, overwrite=True)
    assert summary.total_kept == 10
    assert len(load_dataset(run / "epoch_001", "augmented")) == 10
    assert not (run / "epoch_002").exists()
    assert (run / "notes.txt").read_text() == "kept\n"
    run_loop(source, target, config, tmp_path / "fresh")
    (run / "notes.txt").unlink()
    assert _tree(run) == _tree(tmp_path / "fresh")


def test_stale_embedding_file_is_refused(fixture, tmp_path):
    source, target = fixture
    stale = tmp_path / "emb" / "epoch_001.txt"
    save_embedding_file(stale, [embed_builtin(img, 1) for img in target])
    provider = FileProvider(str(tmp_path / "emb" / "epoch_{epoch:03d}.txt"), timeout=0.0)
    with pytest.raises(ProviderError, match="already exists"):
        run_loop(source, target, _config(), tmp_path / "run", provider=provider)
    assert not (tmp_path / "run" / "candidates_001").exists()


def test_frozen_pool_reuses_the_first_epoch(fixture, tmp_path):
    source, target = fixture
    summary = run_loop(source, target, _config(epochs=2, frozen_pool=True), tmp_path / "run")
    assert summary.epochs[0].scored == summary.epochs[1].scored


def _embed_png(path):
    return embed_builtin(LabeledImage(read_image(path), (), "augmented", path.stem)).values


def test_file_provider_loop_matches_builtin(fixture, tmp_path):
    """A stub trainer that embeds each epoch's candidates with the builtin extractor must reproduce
    the builtin run's selection exactly."""
    source, target = fixture
    config = _config(epochs=2)
    run = tmp_path / "run"
    template = str(tmp_path / "emb" / "epoch_{epoch:03d}.txt")

    def trainer(_seconds):
        for epoch in (1, 2):
            cands = run / f"candidates_{epoch:03d}" / "images"
            out = tmp_path / "emb" / f"epoch_{epoch:03d}.txt"
            if cands.is_dir() and not out.exists():
                vectors = [EmbeddingVector(_embed_png(p), p.stem, epoch) for p in sorted(cands.iterdir())]
                vectors += [embed_builtin(img, epoch) for img in target]
                save_embedding_file(out, vectors)

    provider = FileProvider(template, 192, timeout=60.0, sleep=trainer)
    with_file = run_loop(source, target, config, run, provider=provider)
    builtin = run_loop(source, target, config, tmp_path / "builtin")
    assert [e.kept_ids for e in with_file.epochs] == [e.kept_ids for e in builtin.epochs]
    assert (run / "candidates_002").is_dir()


def test_file_provider_timeout_names_the_epoch(fixture, tmp_path):
    source, target = fixture
    provider = FileProvider(str(tmp_path / "never_{epoch}.txt"), timeout=0.0)
    with pytest.raises(ProviderTimeout) as info:
        run_loop(source, target, _config(), tmp_path / "run", provider=provider)
    assert info.value.epoch == 1


# --- report ---------------------------------------------------------------

def test_report_has_one_block_per_epoch(fixture, tmp_path):
    source, target = fixture
    config = _config(epochs=2, candidates_per_epoch=25)
    run_loop(source, target, config, tmp_path / "run")
    result = report(tmp_path / "run", chart=tmp_path / "run" / "chart.svg")
    assert len(result.histograms) == 2
    assert result.text.count("epoch ") >= 2
    for hist in result.histograms:
        assert sum(hist.kept) + sum(hist.rejected) == 25
        assert sum(hist.kept) == 20
        assert sum(hist.recipes.values()) == 25
    assert (tmp_path / "run" / "report.csv").read_text().startswith("epoch,bin,lo,hi,kept,rejected\n")
    assert (tmp_path / "run" / "chart.svg").read_text().lstrip().startswith("<")


def test_report_of_an_empty_directory_fails(tmp_path):
    with pytest.raises(DataError, match="not a run directory"):
        report(tmp_path)


# --- the selection-pressure experiment ------------------------------------

@pytest.fixture(scope="module")
def experiment():
    source, target = make_fixture(400, 8, seed=0)
    config = PipelineConfig(epochs=3, candidates_per_epoch=500, shrinkage=0.8, metric="mmd",
                            canvas_side=64, seed=11).validate()
    return source, target, config


@pytest.mark.slow
def test_filtering_favours_target_content(experiment, tmp_path):
    source, target, config = experiment
    summary = run_loop(source, target, config, tmp_path / "run")
    for state in summary.epochs:
        assert state.kept.mean < state.rejected.mean
        kept, rejected = state.target_tiles["kept"], state.target_tiles["rejected"]
        assert kept >= 1.1 * rejected


@pytest.mark.slow
def test_filtering_favours_target_content_at_the_default_canvas(experiment):
    source, target, config = experiment
    config = config.with_overrides(canvas_side=PipelineConfig().canvas_side)
    state = run_epoch(generate_candidates(source, target, config, 1), target, BuiltinProvider(), config)
    assert state.kept.mean < state.rejected.mean
    assert state.target_tiles["kept"] >= 1.1 * state.target_tiles["rejected"]


@pytest.mark.slow
def test_kept_distance_grows_with_k(experiment):
    source, target, config = experiment
    provider = BuiltinProvider()
    for epoch in (1, 2, 3):
        candidates = generate_candidates(source, target, config, epoch)
        means = [run_epoch(candidates, target, provider, config.with_overrides(shrinkage=k), epoch=epoch).kept.mean
                 for k in (0.4, 0.6, 0.8, 1.0)]
        assert means == sorted(means)
