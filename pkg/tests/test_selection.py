"""Distances and the shrinkage filter, checked against brute-force oracles.

The filter oracle sorts with plain ``sorted`` and sizes the kept set with exact rational arithmetic
(``Fraction(str(k))``), so it shares no code with the implementation."""

import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from domainsift.embedding import EmbeddingVector
from domainsift.errors import ConfigError, DataError
from domainsift.selection import (
    FilterConfig,
    ScoredCandidate,
    apply_filter,
    cosine_dist,
    filter_top_k,
    mmd_sq,
    read_scores,
    score_candidates,
    shrunk_size,
    write_scores,
)

RATIOS = [round(0.1 * i, 1) for i in range(1, 11)]


def _vectors(rows, prefix="v"):
    return [EmbeddingVector(np.asarray(r, dtype=float), f"{prefix}{i}") for i, r in enumerate(rows)]


# --- mmd ------------------------------------------------------------------

def test_candidate_at_the_target_mean_is_zero():
    assert mmd_sq(np.array([2.0, 3.0]), np.array([[1.0, 2.0], [3.0, 4.0]])) == 0.0


def test_squared_distance_to_a_single_target():
    assert mmd_sq(np.array([3.0, 4.0]), np.array([[0.0, 0.0]])) == 25.0


def test_single_identical_target_is_zero():
    assert mmd_sq(np.array([0.3, 0.7, 0.1]), np.array([[0.3, 0.7, 0.1]])) == 0.0


def _naive_mmd(c, targets):
    n_t, d = len(targets), len(c)
    mean = [math.fsum(targets[j][i] for j in range(n_t)) / n_t for i in range(d)]
    return math.fsum((mean[i] - c[i]) ** 2 for i in range(d))


def test_mmd_matches_a_naive_recomputation():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d, n_t = int(rng.integers(1, 1025)), int(rng.integers(1, 65))
        targets = rng.normal(size=(n_t, d))
        c = rng.normal(size=d) + rng.normal()
        expected = _naive_mmd(c.tolist(), targets.tolist())
        assert mmd_sq(c, targets) == pytest.approx(expected, rel=1e-9)


def test_mmd_refuses_mixed_dimensions():
    with pytest.raises(ValueError, match="dimension"):
        mmd_sq(np.zeros(3), np.zeros((2, 4)))


# --- cosine ---------------------------------------------------------------

def test_collinear_candidate_is_zero():
    t = np.array([1.0, 2.0, 2.0])
    assert cosine_dist(2.5 * t, np.stack([t, 3 * t, 0.5 * t])) == pytest.approx(0.0, abs=1e-12)


def test_orthogonal_candidate_counts_every_target():
    targets = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 2.0], [0.0, 3.0, 4.0]])
    assert cosine_dist(np.array([1.0, 0.0, 0.0]), targets) == 3.0


def test_opposite_candidate_is_two():
    t = np.array([0.2, -0.4, 1.0])
    assert cosine_dist(-t, t[None, :]) == pytest.approx(2.0, abs=1e-12)


def test_cosine_ignores_positive_scale():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d, n_t = int(rng.integers(2, 300)), int(rng.integers(1, 65))
        targets = rng.normal(size=(n_t, d))
        c = rng.normal(size=d)
        scale = float(np.exp(rng.uniform(-5, 5)))
        assert cosine_dist(scale * c, targets) == pytest.approx(cosine_dist(c, targets), abs=1e-12)


def test_zero_vector_has_similarity_zero_and_is_counted():
    warnings = Counter()
    assert cosine_dist(np.zeros(3), np.eye(3), warnings=warnings) == 3.0
    assert warnings["zero_norm_embeddings"] == 1


# --- scoring --------------------------------------------------------------

def test_scores_come_back_ranked():
    targets = _vectors([[0.0, 0.0]], "t")
    cands = _vectors([[3.0, 4.0], [1.0, 0.0], [0.0, 2.0]])
    scored = score_candidates(cands, targets)
    assert [(s.candidate_id, s.distance, s.rank) for s in scored] == [("v1", 1.0, 1), ("v2", 4.0, 2),
                                                                       ("v0", 25.0, 3)]
    assert not any(s.kept for s in scored)


def test_scoring_needs_unique_candidates():
    targets = _vectors([[0.0, 0.0]], "t")
    with pytest.raises(DataError):
        score_candidates([], targets)
    twice = [EmbeddingVector(np.zeros(2), "same"), EmbeddingVector(np.ones(2), "same")]
    with pytest.raises(DataError, match="unique"):
        score_candidates(twice, targets)


# --- filter ---------------------------------------------------------------

def _scored(distances, ids=None):
    ids = ids or [f"c{i}" for i in range(len(distances))]
    return [ScoredCandidate(i, float(d)) for i, d in zip(ids, distances)]


def test_filter_keeps_the_nearest_four_of_five():
    scored = _scored([0.5, 0.1, 0.9, 0.3, 0.7])
    assert filter_top_k(scored, 0.8) == ["c1", "c3", "c0", "c4"]


def test_k_one_keeps_everything_sorted():
    scored = _scored([0.5, 0.1, 0.9])
    assert filter_top_k(scored, 1.0) == ["c1", "c0", "c2"]


def test_ten_candidates_at_point_eight_keep_eight():
    assert len(filter_top_k(_scored(np.linspace(0, 1, 10)), 0.8)) == 8
    assert shrunk_size(10, 0.8) == 8


def test_ties_go_to_the_smaller_id():
    scored = _scored([1.0, 1.0, 0.5, 1.0], ["d", "b", "z", "a"])
    assert filter_top_k(scored, 0.5) == ["z", "a"]


def test_filter_that_keeps_nothing_is_refused():
    with pytest.raises(ConfigError, match="eliminates all candidates"):
        filter_top_k(_scored([0.1, 0.2, 0.3]), 0.3)


@pytest.mark.parametrize("n, k, expected", [
    (1, 0.9999999999, 0),
    (10, 0.7999999999, 7),
    (100, 0.29, 29),
    (3, 1 / 3, 0),
    (1000, 0.001, 1),
])
def test_shrunk_size_is_exact_near_integers(n, k, expected):
    assert shrunk_size(n, k) == expected


def test_ratio_just_under_one_on_a_single_candidate_is_refused():
    with pytest.raises(ConfigError, match="eliminates all candidates"):
        filter_top_k(_scored([0.4]), 0.9999999999)


@pytest.mark.parametrize("k", [0.0, -0.5, 1.01])
def test_ratio_must_lie_in_the_unit_interval(k):
    with pytest.raises(ConfigError):
        filter_top_k(_scored([0.1]), k)
    with pytest.raises(ConfigError):
        FilterConfig(k=k)


def test_unknown_metric_is_refused():
    with pytest.raises(ConfigError):
        FilterConfig(metric="kl")


def _oracle(scored, k):
    keep = math.floor(len(scored) * Fraction(str(k)))
    ordered = sorted(scored, key=lambda s: (s.distance, s.candidate_id))
    return [s.candidate_id for s in ordered[:keep]]


def _random_sets(count, max_n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        # few distinct values so ties are common
        distances = rng.integers(0, max(2, n // 3), size=n) / 7.0
        ids = [f"id{j:06d}" for j in rng.permutation(n)]
        yield _scored(distances, ids), RATIOS[int(rng.integers(len(RATIOS)))]


def _check_against_oracle(scored, k):
    expected = _oracle(scored, k)
    if not expected:
        with pytest.raises(ConfigError):
            filter_top_k(scored, k)
        return
    assert filter_top_k(scored, k) == expected
    assert len(expected) == shrunk_size(len(scored), k)


def test_filter_matches_sort_and_prefix():
    for scored, k in _random_sets(1000, 300, seed=2):
        _check_against_oracle(scored, k)


@pytest.mark.slow
def test_filter_matches_sort_and_prefix_at_full_scale():
    for scored, k in _random_sets(1000, 10_000, seed=3):
        _check_against_oracle(scored, k)


def test_apply_filter_marks_and_renumbers():
    ranked = apply_filter(_scored([0.5, 0.1, 0.9, 0.3, 0.7]), 0.8)
    assert [s.rank for s in ranked] == [1, 2, 3, 4, 5]
    assert [s.kept for s in ranked] == [True, True, True, True, False]
    assert ranked[-1].candidate_id == "c2"


# --- score files ----------------------------------------------------------

def test_score_file_round_trips_exactly(tmp_path):
    rng = np.random.default_rng(4)
    ranked = apply_filter(_scored(rng.random(20)), 0.6)
    write_scores(tmp_path / "scores.csv", ranked)
    assert (tmp_path / "scores.csv").read_text().splitlines()[0] == "candidate_id,distance,rank,kept"
    assert read_scores(tmp_path / "scores.csv") == ranked


def test_bad_score_files_are_data_errors(tmp_path):
    with pytest.raises(DataError, match="no score file"):
        read_scores(tmp_path / "missing.csv")
    (tmp_path / "a.csv").write_text("id,score\nx,1\n")
    with pytest.raises(DataError, match="expected columns"):
        read_scores(tmp_path / "a.csv")
    (tmp_path / "b.csv").write_text("candidate_id,distance,rank,kept\nx,-1,1,1\n")
    with pytest.raises(DataError, match="b.csv:2"):
        read_scores(tmp_path / "b.csv")
