import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiersparse.errors import ConfigError, DepthDimensionError, MissingEmbeddingError, TaxonomyError
from hiersparse.evaluate import audit_clusters, audit_simplex
from hiersparse.numerics import angle_between
from hiersparse.synth import (
    MIN_RULE,
    RAW_RATE,
    EmbeddingSet,
    SampleConfig,
    canonical_simplex,
    fill_internal_means,
    generate_embeddings,
    make_schedule,
    sample_noisy,
    unit_simplex_coords,
)
from hiersparse.taxonomy import build_balanced_tree, from_records

from conftest import synthetic


def test_schedule_raw_rate():
    s = make_schedule(math.radians(85), 0.4, 3, 7, RAW_RATE)
    assert math.degrees(s.angle(1)) == pytest.approx(34.0)
    assert math.degrees(s.angle(0)) == pytest.approx(85.0)
    assert s.depth == 7


def test_schedule_min_rule_caps_at_inverse_branching():
    s = make_schedule(math.radians(85), 0.4, 3, 7, MIN_RULE)
    assert math.degrees(s.angle(1)) == pytest.approx(85 / 3)
    s = make_schedule(math.radians(60), 0.25, 2, 3, MIN_RULE)
    assert math.degrees(s.angle(1)) == pytest.approx(15.0)
    assert math.degrees(s.angle(2)) == pytest.approx(3.75)


@pytest.mark.parametrize("r", [0.5, 0.7, 0.0, -0.1])
def test_schedule_rejects_rate_outside_half_interval(r):
    with pytest.raises(ConfigError):
        make_schedule(math.radians(60), r, 2, 3, MIN_RULE)


def test_schedule_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        make_schedule(math.radians(95), 0.3, 2, 3)
    with pytest.raises(ConfigError):
        make_schedule(math.radians(60), 0.3, 2, 3, "nope")
    with pytest.raises(ConfigError):
        make_schedule(math.radians(60), 0.3, 2, 3).angle(4)


def test_simplex_b2():
    S = canonical_simplex(2)
    np.testing.assert_allclose(S, [[0.5, -0.5], [-0.5, 0.5]])
    R = S * math.sqrt(2 / 1)
    np.testing.assert_allclose(R @ R.T, [[1, -1], [-1, 1]], atol=1e-12)


def test_simplex_b3_gram():
    S = canonical_simplex(3)
    G = S @ S.T
    np.testing.assert_allclose(np.diag(G), 2 / 3)
    off = G[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, -1 / 3)
    np.testing.assert_allclose(off / G[0, 0], -1 / 2)


@pytest.mark.parametrize("b", [2, 3, 4, 7])
def test_simplex_centred_and_unit(b):
    np.testing.assert_allclose(canonical_simplex(b).sum(axis=0), 0, atol=1e-12)
    U = unit_simplex_coords(b)
    assert U.shape == (b, b - 1)
    G = U @ U.T
    expected = np.full((b, b), -1 / (b - 1))
    np.fill_diagonal(expected, 1.0)
    np.testing.assert_allclose(G, expected, atol=1e-12)


def _check_geometry(t, sched, e):
    """Orthogonality to every ancestor, exact child-parent angle and norm ratio."""
    for j in t.non_root:
        path = sorted(t.ancestors(j) - {t.root}, key=t.level)
        for k in path:
            ak = e[k]
            assert abs((e[j] - ak) @ ak) < 1e-9 * (ak @ ak)
        if path:
            p = path[-1]
            theta = sched.angle(t.level(j))
            assert np.linalg.norm(e[j] - e[p]) == pytest.approx(np.linalg.norm(e[p]) * math.tan(theta), rel=1e-9)
            assert angle_between(e[j], e[p]) == pytest.approx(theta, abs=1e-9)


def test_benchmark_construction_geometry(benchmark_tree):
    t, sched, e, _ = benchmark_tree
    assert len(e) == 3279
    _check_geometry(t, sched, e)
    assert audit_simplex(e, t).summary["max_deviation"] < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(1, 4), st.integers(0, 8), st.integers(0, 2**31))
def test_geometry_holds_for_random_shapes(b, L, extra_dim, seed):
    t = build_balanced_tree(b, L)
    sched = make_schedule(math.radians(70), 0.3, b, L, MIN_RULE)
    e = generate_embeddings(t, L + b + extra_dim, sched, 0.8, seed=seed)
    _check_geometry(t, sched, e)
    assert audit_simplex(e, t).summary["max_deviation"] < 1e-9


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 3), st.integers(2, 4), st.integers(0, 2**31))
def test_min_rule_containment_and_separation(b, L, seed):
    t = build_balanced_tree(b, L)
    sched = make_schedule(math.radians(80), 0.45, b, L, MIN_RULE)
    e = generate_embeddings(t, L + b + 3, sched, 0.8, seed=seed)
    for i in t.non_root:
        for j in t.descendants(i):
            assert angle_between(e[i], e[j]) <= sched.angle(t.level(i)) + 1e-6
    s = audit_clusters(e, t, sched).summary
    assert s["total_intrusions"] == 0
    assert s["sibling_realised_overlaps"] == 0


def test_two_point_simplex_is_antipodal():
    t = build_balanced_tree(2, 1)
    e = generate_embeddings(t, 3, make_schedule(math.radians(60), 0.25, 2, 1, MIN_RULE))
    assert len(t.children(t.root)) == 2
    (row,) = audit_simplex(e, t).rows
    assert row["off_diag_ratio_mean"] == pytest.approx(-1.0, abs=1e-12)


def test_depth_dimension_condition():
    t = build_balanced_tree(3, 7)
    sched = make_schedule(math.radians(85), 0.4, 3, 7)
    with pytest.raises(DepthDimensionError, match="depth-dimension"):
        generate_embeddings(t, 9, sched)
    generate_embeddings(t, 10, sched)


def test_generator_rejects_dag_and_irregular_trees():
    dag = from_records([
        {"id": 0, "parents": []}, {"id": 1, "parents": []},
        {"id": 2, "parents": [0, 1]}, {"id": 3, "parents": [0, 1]},
    ])
    sched = make_schedule(math.radians(60), 0.25, 2, 2)
    with pytest.raises(TaxonomyError):
        generate_embeddings(dag, 10, sched)
    irregular = from_records([
        {"id": 0, "parents": []}, {"id": 1, "parents": []},
        {"id": 2, "parents": [0]}, {"id": 3, "parents": [0]}, {"id": 4, "parents": [0]},
        {"id": 5, "parents": [1]}, {"id": 6, "parents": [1]},
    ])
    with pytest.raises(TaxonomyError):
        generate_embeddings(irregular, 10, sched)


def test_short_schedule_rejected():
    t = build_balanced_tree(2, 3)
    with pytest.raises(ConfigError):
        generate_embeddings(t, 10, make_schedule(math.radians(60), 0.25, 2, 2))


def test_generation_is_deterministic():
    a = synthetic(3, 3, 10, seed=5)[2]
    b = synthetic(3, 3, 10, seed=5)[2]
    c = synthetic(3, 3, 10, seed=6)[2]
    assert all(np.array_equal(a[i], b[i]) for i in a.ids())
    assert any(not np.array_equal(a[i], c[i]) for i in a.ids())


def test_benchmark_sample_count(benchmark_tree):
    t, _, e, _ = benchmark_tree
    assert len(sample_noisy(e, t, SampleConfig(1e-5, 5, 0))) == 10935


def test_noiseless_samples_equal_leaf_embeddings(small_tree):
    t, _, e, _ = small_tree
    for x, leaf in sample_noisy(e, t, SampleConfig(0.0, 2, 1)):
        assert np.array_equal(x, e[leaf])


def test_sampling_is_bitwise_deterministic(small_tree):
    t, _, e, _ = small_tree
    a = sample_noisy(e, t, SampleConfig(1e-3, 3, 11))
    b = sample_noisy(e, t, SampleConfig(1e-3, 3, 11))
    assert all(np.array_equal(x, y) and la == lb for (x, la), (y, lb) in zip(a, b))


def test_sample_mean_converges_to_leaf(small_tree):
    t, _, e, _ = small_tree
    leaf = t.leaves[0]
    single = from_records([{"id": 0, "parents": []}])
    e1 = EmbeddingSet(e.dim, {0: e[leaf]})
    draws = np.stack([x for x, _ in sample_noisy(e1, single, SampleConfig(1e-5, 10_000, 3))])
    assert np.abs(draws.mean(axis=0) - e[leaf]).max() < 1e-3


def test_sample_config_validation():
    with pytest.raises(ConfigError):
        SampleConfig(-1.0, 1, 0)
    with pytest.raises(ConfigError):
        SampleConfig(0.0, 0, 0)


def test_missing_leaf_embedding():
    t = build_balanced_tree(2, 1)
    with pytest.raises(MissingEmbeddingError):
        sample_noisy(EmbeddingSet(3, {0: np.ones(3)}), t, SampleConfig())


def test_fill_internal_means():
    t = build_balanced_tree(2, 2)
    leaves = {i: np.eye(4)[k] for k, i in enumerate(t.leaves)}
    e = fill_internal_means(t, EmbeddingSet(4, leaves))
    for p in t.children(t.root):
        np.testing.assert_allclose(e[p], np.mean([leaves[c] for c in t.children(p)], axis=0))
    assert t.root not in e
