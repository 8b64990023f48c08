"""Metrics, descriptors, tree edit distance, statistics and table building."""

import math

import numpy as np
import pytest
from scipy import stats

from bodybrain.analysis import (
    DESCRIPTOR_NAMES,
    RunData,
    analyze_runs,
    ci95,
    controller_similarity,
    descriptor_distance,
    descriptor_vector,
    learning_delta,
    pca,
    pearson,
    similarity_from_distance,
    transferability,
    tree_edit_distance,
)
from bodybrain.genotype import random_body
from bodybrain.morphology import ModuleTree, develop_body
from bodybrain.runstore import read_log, run_and_log
from conftest import chain_tree, forest_edit_distance, plus_tree, tiny_config


# ---------------------------------------------------------------------------
# Scalar metrics


def test_learning_delta():
    assert learning_delta(0.3, 0.8) == pytest.approx(0.5)
    assert learning_delta(1.0, 0.5) == pytest.approx(-0.5)


def test_transferability_hand_ratio():
    old = [1.0, 2.0, 3.0]
    new = [0.5, 1.0, 1.5]
    assert transferability(old, new) == pytest.approx(0.5)


def test_transferability_undefined_for_nonpositive_old_mean():
    assert transferability([0.0, 0.0], [1.0, 1.0]) is None
    assert transferability([-1.0, 0.5], [1.0, 1.0]) is None


def test_controller_similarity_frozen_cosine():
    a = np.array([1.0, 0.0, 1.0])
    b = np.array([1.0, 1.0, 0.0])
    assert controller_similarity(a, b) == pytest.approx(0.5)
    assert controller_similarity(a, a) == pytest.approx(1.0)
    assert controller_similarity(a, -a) == pytest.approx(-1.0)


def test_controller_similarity_zero_vector_warns():
    with pytest.warns(RuntimeWarning, match="zero vector"):
        assert controller_similarity(np.zeros(4), np.ones(4)) == 0.0


# ---------------------------------------------------------------------------
# Morphological descriptors


def test_descriptors_core_only():
    vec = descriptor_vector(ModuleTree())
    assert np.allclose(vec, [0, 0, 0, 1, 0, 1, 1, 0.1])


def test_descriptors_long_hinge_chain():
    vec = descriptor_vector(chain_tree(9))
    assert np.allclose(vec, [0, 1 / 7, 1, 1, 1, 0.1, 1, 1])


def test_descriptors_plus_robot():
    vec = descriptor_vector(plus_tree())
    assert np.allclose(vec, [1, 1, 0.25, 5 / 9, 1, 1, 1, 0.5])


def test_descriptors_bounded_on_random_bodies():
    rng = np.random.default_rng(0)
    for _ in range(100):
        tree = develop_body(random_body(rng))
        vec = descriptor_vector(tree)
        assert vec.shape == (len(DESCRIPTOR_NAMES),)
        assert np.all(vec >= 0.0) and np.all(vec <= 1.0)


def test_descriptor_distance_and_similarity():
    a = np.zeros(8)
    b = np.ones(8)
    assert descriptor_distance(a, b) == pytest.approx(math.sqrt(8))
    assert similarity_from_distance(1.0, 2.0) == pytest.approx(0.5)
    assert similarity_from_distance(0.0, 2.0) == pytest.approx(1.0)
    assert similarity_from_distance(2.0, 2.0) == pytest.approx(0.0)
    assert similarity_from_distance(0.0, 0.0) == 1.0


# ---------------------------------------------------------------------------
# Tree edit distance


def _nested(kind, rot, *children):
    return [kind, rot, list(children)]


def test_tree_edit_distance_small_cases():
    core = _nested("core", 0)
    with_leaf = _nested("core", 0, _nested("hinge", 0))
    assert tree_edit_distance(core, core) == 0
    assert tree_edit_distance(core, with_leaf) == 1
    assert tree_edit_distance(with_leaf, core) == 1
    relabeled = _nested("core", 0, _nested("brick", 0))
    assert tree_edit_distance(with_leaf, relabeled) == 1
    rotated = _nested("core", 0, _nested("hinge", 90))
    assert tree_edit_distance(with_leaf, rotated) == 1


def test_tree_edit_distance_order_sensitive():
    ab = _nested("core", 0, _nested("hinge", 0), _nested("brick", 0))
    ba = _nested("core", 0, _nested("brick", 0), _nested("hinge", 0))
    assert tree_edit_distance(ab, ba) == 2


def test_tree_edit_distance_matches_oracle_on_random_bodies():
    rng = np.random.default_rng(1)
    trees = [develop_body(random_body(rng)).to_nested() for _ in range(12)]
    for i, a in enumerate(trees):
        for b in trees[i:]:
            assert tree_edit_distance(a, b) == forest_edit_distance(a, b)


def test_tree_edit_distance_symmetry_on_random_bodies():
    rng = np.random.default_rng(2)
    trees = [develop_body(random_body(rng)).to_nested() for _ in range(8)]
    for a in trees:
        for b in trees:
            assert tree_edit_distance(a, b) == tree_edit_distance(b, a)


# ---------------------------------------------------------------------------
# Statistics


def _pearson_oracle(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(xs)
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    r = float((xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc)))
    t = r * math.sqrt(n - 2) / math.sqrt(1.0 - r * r)
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return r, p


def test_pearson_matches_textbook_formula():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(3, 40))
        xs = rng.normal(size=n)
        ys = 0.4 * xs + rng.normal(size=n)
        r, p, count = pearson(xs, ys)
        oracle_r, oracle_p = _pearson_oracle(xs, ys)
        assert r == pytest.approx(oracle_r, abs=1e-10)
        assert p == pytest.approx(oracle_p, abs=1e-10)
        assert count == n


def test_pearson_degenerate_inputs():
    assert pearson([1.0, 2.0], [1.0, 2.0]) is None
    assert pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None
    assert pearson([1.0, 2.0, 3.0], [5.0, 5.0, 5.0]) is None
    assert pearson([1.0, 2.0, 3.0], [1.0, 2.0]) is None


def test_ci95_frozen_two_values():
    mean, lo, hi = ci95([0.0, 1.0])
    half = 12.706204736174698 * 0.5
    assert mean == pytest.approx(0.5)
    assert lo == pytest.approx(0.5 - half, abs=1e-9)
    assert hi == pytest.approx(0.5 + half, abs=1e-9)


def test_ci95_single_value_collapses():
    assert ci95([2.5]) == (2.5, 2.5, 2.5)


def test_ci95_covers_true_mean():
    rng = np.random.default_rng(4)
    covered = 0
    for _ in range(300):
        sample = rng.normal(0.0, 1.0, size=10)
        _, lo, hi = ci95(sample)
        if lo <= 0.0 <= hi:
            covered += 1
    assert 270 <= covered <= 300  # 95 percent nominal


# ---------------------------------------------------------------------------
# PCA


def test_pca_orthonormal_loadings_and_reconstruction():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 8)) * rng.uniform(0.5, 3.0, size=8)
    result = pca(X)
    eye = result.loadings @ result.loadings.T
    assert np.allclose(eye, np.eye(result.loadings.shape[0]), atol=1e-8)
    Z = (X - result.mean) / result.scale
    assert np.allclose(result.scores @ result.loadings, Z, atol=1e-8)
    ratios = result.explained_ratio
    assert np.all(np.diff(ratios) <= 1e-12)
    assert ratios.sum() == pytest.approx(1.0)


def test_pca_isotropic_data_spreads_variance():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(5000, 8))
    ratios = pca(X).explained_ratio
    assert np.all(np.abs(ratios - 1 / 8) < 0.02)


def test_pca_zero_variance_column_is_safe():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 4))
    X[:, 2] = 3.0
    result = pca(X)
    assert np.all(np.isfinite(result.scores))
    assert np.all(np.isfinite(result.loadings))


# ---------------------------------------------------------------------------
# End-to-end table building


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    runs = []
    for mode, setup in (("lamarckian", "Flat_1"), ("darwinian", "Flat_0")):
        cfg = tiny_config(mode=mode, setup=setup)
        run_dir = base / f"{setup}_{mode}"
        run_and_log(cfg, run_dir)
        runs.append(RunData(setup, mode, cfg.master_seed, read_log(run_dir)))
    return runs


def test_analyze_runs_builds_all_tables(two_runs):
    tables = analyze_runs(two_runs)
    assert set(tables) == {
        "individuals", "series", "summary", "transferability",
        "correlations", "pca_scores", "pca_loadings",
    }


def test_individuals_table_shape(two_runs):
    cols, rows = analyze_runs(two_runs)["individuals"]
    assert len(rows) == 16  # two runs of 8 individuals
    assert cols.index("learning_delta") == 8
    for row in rows:
        assert len(row) == len(cols)
        rec = dict(zip(cols, row))
        assert rec["learning_delta"] == pytest.approx(
            rec["fitness_after"] - rec["fitness_before"])
        assert rec["setup"] in ("Flat_1", "Flat_0")
    # parentless individuals have no morphology-similarity value
    init_rows = [dict(zip(cols, r)) for r in rows if r[cols.index("generation")] == 0]
    assert all(r["desc_similarity"] == "" for r in init_rows)


def test_series_and_summary_tables(two_runs):
    tables = analyze_runs(two_runs)
    _, series = tables["series"]
    metrics = {row[4] for row in series}
    assert {"fitness_mean", "fitness_max", "learning_delta_mean",
            "controller_similarity_mean"} <= metrics
    cols, summary = tables["summary"]
    for row in summary:
        rec = dict(zip(cols, row))
        assert rec["ci_low"] <= rec["mean"] <= rec["ci_high"]
        assert rec["runs"] >= 1


def test_transfer_table(two_runs):
    cols, rows = analyze_runs(two_runs)["transferability"]
    # only the Flat_1 run has an environment change
    assert len(rows) == 1
    rec = dict(zip(cols, rows[0]))
    assert rec["setup"] == "Flat_1"
    assert rec["old_terrain"] == "flat" and rec["new_terrain"] == "rugged"
    run = two_runs[0]
    change = run.log.env_changes[0]
    olds = [s["old"] for s in change["survivors"]]
    news = [s["new"] for s in change["survivors"]]
    expect = transferability(olds, news)
    assert rec["transferability"] == ("" if expect is None else pytest.approx(expect))


def test_correlation_table_groups(two_runs):
    cols, rows = analyze_runs(two_runs)["correlations"]
    keys = {(r[0], r[1]) for r in rows}
    assert keys == {("Flat_1", "lamarckian"), ("Flat_0", "darwinian")}
    labels = {r[2] for r in rows}
    assert labels == {"controller_similarity", "desc_similarity", "tree_similarity"}
    for row in rows:
        rec = dict(zip(cols, row))
        if rec["r"] != "":
            assert -1.0 <= rec["r"] <= 1.0
            assert 0.0 <= rec["p"] <= 1.0


def test_pca_tables(two_runs):
    tables = analyze_runs(two_runs)
    score_cols, scores = tables["pca_scores"]
    load_cols, loads = tables["pca_loadings"]
    assert len(scores) == 16
    assert score_cols[-2:] == ("pc1", "pc2")
    assert len(loads) == 8
    assert load_cols[2:] == DESCRIPTOR_NAMES
    ratios = [row[1] for row in loads]
    assert sum(ratios) == pytest.approx(1.0)
    assert ratios == sorted(ratios, reverse=True)
