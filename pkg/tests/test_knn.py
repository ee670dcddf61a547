import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabkit.costs import add_one_cost
from stabkit.geometry import PointCloud, UnsupportedDimensionError
from stabkit.knn import (
    build_knn_graph,
    knn_score,
    six_triangle_radius,
    total_edge_length,
)
from stabkit.statistics import make_statistic


def undirected_edges_oracle(graph):
    """Independent enumerator: the undirected edge set of the graph."""
    edges = set()
    for i in range(graph.n):
        for m in graph.neighbors[i]:
            edges.add(frozenset((i, int(m))))
    return edges


def test_two_points_mutual():
    cloud = PointCloud(np.array([[0.0, 0.0], [0.0, 1.0]]))
    graph = build_knn_graph(cloud, 1)
    assert graph.neighbors.ravel().tolist() == [1, 0]
    assert graph.mutual.all()
    assert knn_score(0, graph, 1.0) == 0.5
    assert total_edge_length(cloud, 1, 1.0) == 1.0


def test_collinear_three_points():
    cloud = PointCloud(np.array([[0.0], [1.0], [3.0]]))
    graph = build_knn_graph(cloud, 1)
    assert graph.neighbors.ravel().tolist() == [1, 0, 1]
    assert graph.mutual.ravel().tolist() == [True, True, False]
    assert [knn_score(i, graph, 1.0) for i in range(3)] == [0.5, 0.5, 2.0]
    assert total_edge_length(cloud, 1, 1.0) == 3.0
    assert total_edge_length(cloud, 1, 2.0) == 5.0


def test_singleton_scores_zero():
    cloud = PointCloud(np.array([[0.3, 0.4]]))
    graph = build_knn_graph(cloud, 3)
    assert graph.k_effective == 0
    assert knn_score(0, graph, 1.0) == 0.0
    assert total_edge_length(cloud, 3) == 0.0


def test_truncation_when_k_exceeds_n():
    cloud = PointCloud(np.array([[0.0], [1.0], [2.0]]))
    graph = build_knn_graph(cloud, 10)
    assert graph.k_effective == 2


def test_kd_equals_brute_on_random_clouds(rng):
    for trial in range(50):
        n = int(rng.integers(2, 200))
        k = int(rng.integers(1, 7))
        pts = rng.random((n, int(rng.integers(1, 4))))
        brute = build_knn_graph(PointCloud(pts), k, "brute")
        kd = build_knn_graph(PointCloud(pts), k, "kd")
        assert np.array_equal(brute.neighbors, kd.neighbors), trial
        assert np.array_equal(brute.distances, kd.distances), trial
        assert np.array_equal(brute.mutual, kd.mutual), trial


def test_tie_break_by_index_on_lattice():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.0]])
    for engine in ("brute", "kd"):
        graph = build_knn_graph(PointCloud(pts), 2, engine)
        # point 0: ties at distance 1 between indices 1 and 2 -> by index
        assert graph.neighbors[0].tolist() == [1, 2]


def test_duplicates_zero_length_edges():
    pts = np.array([[0.5, 0.5]] * 3 + [[0.9, 0.9]])
    graph = build_knn_graph(PointCloud(pts), 1)
    assert graph.distances[0, 0] == 0.0
    assert total_edge_length(PointCloud(pts), 1, 1.0) >= 0.0


def test_neighbor_lists_sorted_and_mutual_symmetric(rng):
    pts = rng.random((120, 2))
    graph = build_knn_graph(PointCloud(pts), 4)
    assert (np.diff(graph.distances, axis=1) >= 0).all()
    for i in range(graph.n):
        for col, m in enumerate(graph.neighbors[i]):
            back = graph.neighbors[int(m)].tolist()
            assert graph.mutual[i, col] == (i in back)
            if i in back:
                assert graph.mutual[int(m), back.index(i)]


def test_edge_count_identity(rng):
    # indicator scoring counts each undirected edge exactly once
    for _ in range(10):
        pts = rng.random((int(rng.integers(3, 80)), 2))
        cloud = PointCloud(pts)
        graph = build_knn_graph(cloud, 3)
        w = np.where(graph.mutual, 0.5, 1.0)
        counted = float(w.sum())
        assert counted == pytest.approx(len(undirected_edges_oracle(graph)), abs=1e-9)


def test_total_equals_sum_over_undirected_edges(rng):
    pts = rng.random((60, 2))
    cloud = PointCloud(pts)
    graph = build_knn_graph(cloud, 2)
    total = total_edge_length(cloud, 2, 1.3)
    oracle = sum(
        float(np.linalg.norm(pts[tuple(e)[0]] - pts[tuple(e)[1]]) ** 1.3)
        for e in undirected_edges_oracle(graph)
    )
    assert total == pytest.approx(oracle, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rigid_motion_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((25, 2))
    angle = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    shifted = pts @ rot.T + rng.uniform(-5, 5, size=2)
    a = total_edge_length(PointCloud(pts), 2, 1.0)
    b = total_edge_length(PointCloud(shifted), 2, 1.0)
    assert b == pytest.approx(a, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_scaling_covariance(seed, c):
    rng = np.random.default_rng(seed)
    pts = rng.random((20, 2))
    theta = 1.7
    a = total_edge_length(PointCloud(pts), 1, theta)
    b = total_edge_length(PointCloud(pts * c), 1, theta)
    assert b == pytest.approx(a * c**theta, rel=1e-9)


# -- six-sector fill radius ---------------------------------------------------


def test_six_triangle_requires_d2():
    with pytest.raises(UnsupportedDimensionError):
        six_triangle_radius(PointCloud(np.zeros((3, 3))), [0, 0, 0], 1)


def test_six_triangle_infinite_when_sector_empty():
    # all points to the right of x: the left sectors never fill
    cloud = PointCloud(np.array([[1.0, 0.0], [2.0, 0.1], [3.0, -0.1]]))
    assert six_triangle_radius(cloud, [0.0, 0.0], 1) == math.inf


def test_six_triangle_minimality_and_monotonicity(rng):
    cloud = PointCloud(rng.random((500, 2)))
    x = np.array([0.5, 0.5])
    r = six_triangle_radius(cloud, x, 1)
    assert np.isfinite(r)
    # adding points can only shrink the fill radius
    denser = cloud.with_points(rng.random((500, 2)))
    assert six_triangle_radius(denser, x, 1) <= r
    # covering property: each sector triangle at radius r holds >= k+1 points
    v = cloud.points - x
    ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * np.pi)
    sector = np.minimum((ang / (np.pi / 3)).astype(int), 5)
    reach = np.linalg.norm(v, axis=1) * np.cos(ang - (np.pi / 6 + sector * np.pi / 3)) / np.cos(np.pi / 6)
    for j in range(6):
        assert np.sum((sector == j) & (reach <= r + 1e-12)) >= 2


def test_six_triangle_tail_envelope(rng):
    # P(R > r) <= 6 k exp(-c' n r^2) for the fitted c'
    from stabkit.diagnostics import fit_exponential_decay

    n, k, reps = 2000, 1, 400
    radii = np.array([0.045, 0.055, 0.065, 0.075])
    exceed = np.zeros((len(radii), reps))
    for rep in range(reps):
        cloud = PointCloud(rng.random((n, 2)))
        r_fill = six_triangle_radius(cloud, [0.5, 0.5], k)
        exceed[:, rep] = radii < r_fill
    p_hat = exceed.mean(axis=1)
    fit = fit_exponential_decay(radii, p_hat, float(n), 2.0, shape_grid=[2.0])
    assert fit is not None and fit["c2"] > 0
    envelope = 6 * k * np.exp(-fit["c2"] * n * radii**2)
    assert (p_hat <= envelope + 1e-12).all()


def test_stabilization_outside_four_r(rng):
    # points added outside B_x(4R) never change the add-one cost (d = 2)
    stat = make_statistic("knn", {"k": 1, "theta": 1.0})
    for trial in range(50):
        cloud = PointCloud(rng.random((140, 2)) * 2.0 - 0.5)
        x = rng.random(2)
        r_fill = six_triangle_radius(cloud, x, 1)
        if not np.isfinite(r_fill):
            continue
        ball = cloud.select(np.linalg.norm(cloud.points - x, axis=1) <= 4 * r_fill)
        base = add_one_cost(stat, ball, x)
        far = x + (rng.random((int(rng.integers(1, 6)), 2)) - 0.5)
        norms = np.linalg.norm(far - x, axis=1, keepdims=True)
        far = x + (far - x) / norms * (4 * r_fill + 0.1 + rng.random((len(far), 1)))
        assert add_one_cost(stat, ball.with_points(far), x) == pytest.approx(base, abs=1e-12)
