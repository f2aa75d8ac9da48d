import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selest.geometry import Box, Region, format_box, points_in_box, volume
from selest.model import ObservedQuery
from selest.subpop import (
    SubpopConfig,
    SubpopError,
    generate,
    generate_clustering,
    generate_sampling,
    kmeans,
    kmeans_pp,
    scatter_points,
)

UNIT2 = Box.unit(2)


def Q(*pairs, s=0.5):
    return ObservedQuery(Region.of(Box(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))), s)


def random_queries(n, seed, d=2):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        u = np.sort(rng.random((d, 2)), axis=1)
        out.append(Q(*map(tuple, u), s=float(rng.random())))
    return out


def test_default_m():
    cfg = SubpopConfig()
    assert [cfg.m_for(n) for n in (1, 10, 999, 1000, 5000)] == [4, 40, 3996, 4000, 4000]


def test_ten_points_inside_predicate():
    pts = scatter_points([Q((0, 1), (0, 1))], SubpopConfig())
    assert pts.shape == (10, 2)
    assert np.all((pts >= 0) & (pts <= 1))


def test_near_point_predicate():
    eps = 1e-9
    pts = scatter_points([Q((0.5, 0.5 + eps), (0.5, 0.5 + eps))], SubpopConfig())
    assert len(pts) == 10
    assert np.ptp(pts, axis=0).max() <= eps


def test_scatter_deterministic_and_per_query():
    qs = random_queries(5, 0)
    a = scatter_points(qs, SubpopConfig(seed=3))
    b = scatter_points(qs, SubpopConfig(seed=3))
    np.testing.assert_array_equal(a, b)
    # a query's points depend only on its own index, not on what follows it
    np.testing.assert_array_equal(scatter_points(qs[:2], SubpopConfig(seed=3)), a[:20])


def test_union_predicate_points_cover_both_terms():
    q = ObservedQuery(Region.of(Box((0.0,), (0.1,)), Box((0.9,), (1.0,))), 0.5)
    pts = scatter_points([q], SubpopConfig(points_per_predicate=400))
    left = np.mean(pts[:, 0] <= 0.1)
    assert np.all((pts[:, 0] <= 0.1) | (pts[:, 0] >= 0.9))
    assert 0.35 < left < 0.65


def test_union_sampling_is_uniform_over_overlap():
    # terms overlap on [0.4, 0.6]; uniform over the union puts 20% of points there
    q = ObservedQuery(Region.of(Box((0.0,), (0.6,)), Box((0.4,), (1.0,))), 0.5)
    pts = scatter_points([q], SubpopConfig(points_per_predicate=4000))
    frac = np.mean((pts[:, 0] >= 0.4) & (pts[:, 0] <= 0.6))
    assert frac == pytest.approx(0.2, abs=0.03)


def test_empty_predicate_rejected():
    with pytest.raises(SubpopError):
        scatter_points([ObservedQuery(Region.of(Box.empty_box(2)), 0.0)], SubpopConfig())


def test_one_query_gives_four_boxes():
    boxes = generate_sampling([Q((0.2, 0.6), (0.1, 0.9))], SubpopConfig(), UNIT2)
    assert len(boxes) == 4


def test_identical_points_give_epsilon_boxes():
    q = Q((0.3, 0.3), (0.7, 0.7))
    boxes = generate_sampling([q, q], SubpopConfig(), UNIT2)
    for b in boxes:
        assert b.contains_box(Box((0.3, 0.7), (0.3, 0.7)))
        assert np.all(b.widths <= 1.1e-9)
        assert volume(b) > 0


def test_two_centers_side_is_twice_the_gap():
    # centers at 0 and 1: each box is [c - 1, c + 1], clipped to the unit interval
    qs = [Q((0.0, 0.0)), Q((1.0, 1.0))]
    boxes = generate_sampling(qs, SubpopConfig(points_per_predicate=1, m_override=2), Box.unit(1))
    assert [(b.lo, b.hi) for b in boxes] == [((0.0,), (1.0,)), ((0.0,), (1.0,))]


def test_m_shrinks_to_pool_size():
    boxes = generate_sampling(random_queries(2, 0), SubpopConfig(m_override=500), UNIT2)
    assert len(boxes) == 20


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10_000), st.sampled_from(["sampling", "clustering"]))
def test_boxes_inside_domain_with_positive_volume(n, seed, method):
    dom = Box((-1.0, 2.0), (3.0, 5.0))
    rng = np.random.default_rng(seed)
    qs = []
    for _ in range(n):
        a = np.sort(rng.uniform(dom.lo, dom.hi, size=(2, 2)), axis=0)
        qs.append(ObservedQuery(Region.of(Box(tuple(a[0]), tuple(a[1]))), 0.1))
    boxes = generate(qs, SubpopConfig(seed=seed, method=method), dom)
    assert boxes
    assert all(dom.contains_box(b) and volume(b) > 0 for b in boxes)


@pytest.mark.parametrize("method", ["sampling", "clustering"])
def test_generation_is_deterministic(method):
    qs = random_queries(20, 1)
    cfg = SubpopConfig(seed=7, method=method)
    a = [format_box(b) for b in generate(qs, cfg, UNIT2)]
    b = [format_box(b) for b in generate(qs, cfg, UNIT2)]
    assert a == b


def test_kmeans_recovers_blobs():
    rng = np.random.default_rng(0)
    centers = np.array([[0.1, 0.1], [0.1, 0.9], [0.9, 0.1], [0.9, 0.9]])
    pts = np.vstack([c + 0.01 * rng.standard_normal((50, 2)) for c in centers])
    labels = kmeans(pts, 4, np.random.default_rng(1))
    for i in range(4):
        assert len(set(labels[i * 50:(i + 1) * 50])) == 1
    assert len(set(labels)) == 4


def test_clustering_blob_boxes():
    qs = [Q((cx - 0.01, cx + 0.01), (cy - 0.01, cy + 0.01)) for cx in (0.2, 0.8) for cy in (0.2, 0.8)]
    boxes = generate_clustering(qs, SubpopConfig(m_override=4, method="clustering"), UNIT2)
    assert len(boxes) == 4
    for q in qs:
        t = q.predicate.terms[0]
        assert sum(t.contains_box(b) for b in boxes) == 1


def test_clustering_one_box_per_distinct_point():
    qs = [Q((0.2, 0.2), (0.2, 0.2)), Q((0.7, 0.7), (0.4, 0.4))]
    boxes = generate_clustering(qs, SubpopConfig(m_override=100, method="clustering"), UNIT2)
    assert len(boxes) == 2


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 25), st.integers(0, 1000))
def test_clustering_covers_every_scatter_point(n, seed):
    qs = random_queries(n, seed)
    cfg = SubpopConfig(seed=seed, method="clustering")
    pts = scatter_points(qs, cfg)
    boxes = generate_clustering(qs, cfg, UNIT2)
    covered = np.zeros(len(pts), dtype=bool)
    for b in boxes:
        lo, hi = np.array(b.lo), np.array(b.hi)
        covered |= np.all((pts >= lo) & (pts <= hi), axis=1)
    assert covered.all()


def test_kmeans_pp_stops_on_duplicates():
    pts = np.zeros((10, 2))
    assert len(kmeans_pp(pts, 5, np.random.default_rng(0))) == 1


def test_config_validation():
    with pytest.raises(SubpopError):
        SubpopConfig(method="grid")
    with pytest.raises(SubpopError):
        SubpopConfig(points_per_predicate=0)
    with pytest.raises(SubpopError):
        SubpopConfig(m_override=0)
