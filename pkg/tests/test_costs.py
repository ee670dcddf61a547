import numpy as np
import pytest

from stabkit.costs import (
    MissingScoreError,
    Window,
    add_one_cost,
    add_one_cost_marked,
    check_score_decomposition,
    check_second_order_identity,
    flexible_cost,
    second_order_cost,
)
from stabkit.geometry import Box, InvalidInputError, PointCloud
from stabkit.statistics import make_statistic

CARD = make_statistic("cardinality")
KNN = make_statistic("knn", {"k": 1, "theta": 1.0})
EULER1 = make_statistic("euler", {"r": 1.0, "kind": "vr"})


def random_cloud(rng, low=6, high=40, dim=2, spread=2.0):
    n = int(rng.integers(low, high))
    return PointCloud(rng.random((n, dim)) * spread)


def test_add_one_cardinality():
    assert add_one_cost(CARD, PointCloud.empty(2), [0.5, 0.5]) == 1.0
    cloud = PointCloud(np.random.default_rng(0).random((9, 2)))
    assert add_one_cost(CARD, cloud, [0.5, 0.5]) == 1.0


def test_add_one_euler_single_vertex():
    assert add_one_cost(EULER1, PointCloud.empty(2), [0.2, 0.2]) == 1.0


def test_add_one_knn_pair():
    one = PointCloud(np.array([[0.0, 0.0]]))
    assert add_one_cost(KNN, one, [0.0, 1.0]) == 1.0


def test_appended_point_gets_last_index():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 1.0]]))
    grown = cloud.with_point([0.5, 0.5])
    assert np.array_equal(grown.points[-1], [0.5, 0.5])


def test_marked_degenerates_without_mark(rng):
    cloud = random_cloud(rng)
    x = rng.random(2)
    assert add_one_cost_marked(KNN, cloud, x, None) == add_one_cost(KNN, cloud, x)


def test_marked_cardinality_always_one(rng):
    cloud = random_cloud(rng)
    assert add_one_cost_marked(CARD, cloud, rng.random(2), rng.random(2)) == 1.0


def test_marked_euler_two_vertices_one_edge():
    got = add_one_cost_marked(EULER1, PointCloud.empty(2), [0.0, 0.0], [0.5, 0.0])
    assert got == 0.0  # chi({y, x}) - chi({y}) = 1 - 1


def test_second_order_cardinality_zero(rng):
    cloud = random_cloud(rng)
    assert second_order_cost(CARD, cloud, rng.random(2), rng.random(2)) == 0.0


def test_second_order_additive_statistic_zero(rng):
    coord = make_statistic("coordinate_sum")
    cloud = random_cloud(rng)
    got = second_order_cost(coord, cloud, rng.random(2), rng.random(2))
    assert got == pytest.approx(0.0, abs=1e-12)


def test_second_order_euler_adjacent_pair():
    got = second_order_cost(EULER1, PointCloud.empty(2), [0.0, 0.0], [0.5, 0.0])
    assert got == -1.0


def test_second_order_rejects_equal_points(rng):
    cloud = random_cloud(rng)
    with pytest.raises(InvalidInputError):
        second_order_cost(KNN, cloud, [0.5, 0.5], [0.5, 0.5])


def test_duplicate_insertion_is_defined(rng):
    # x already in the cloud: a duplicate row is appended, ties go by index
    cloud = PointCloud(np.array([[0.25, 0.25], [0.75, 0.75]]))
    val = add_one_cost(KNN, cloud, [0.25, 0.25])
    assert np.isfinite(val)


def test_flexible_windows(rng):
    cloud = random_cloud(rng)
    x = rng.random(2)
    assert flexible_cost(KNN, cloud, x, Window.all()) == add_one_cost(KNN, cloud, x)
    assert flexible_cost(CARD, cloud, x, Window.empty()) == 1.0
    ball = Window.ball(x, 0.4)
    inside = cloud.select(np.linalg.norm(cloud.points - x, axis=1) <= 0.4)
    assert flexible_cost(KNN, cloud, x, ball) == add_one_cost(KNN, inside, x)
    box = Window.from_box(Box([0.0, 0.0], [1.0, 1.0]))
    sub = cloud.select((cloud.points <= 1.0).all(axis=1))
    assert flexible_cost(KNN, cloud, x, box) == add_one_cost(KNN, sub, x)


def test_window_restriction_keeps_order(rng):
    cloud = PointCloud(np.array([[0.1, 0.1], [5.0, 5.0], [0.2, 0.2], [0.3, 0.9]]))
    inside = Window.from_box(Box([0.0, 0.0], [1.0, 1.0])).restrict(cloud)
    assert np.array_equal(inside.points, np.array([[0.1, 0.1], [0.2, 0.2], [0.3, 0.9]]))


def test_window_shifted_cube():
    outer = Box([0.0, 0.0], [10.0, 10.0])
    w = Window.box_intersect_shifted(outer, [9.5, 5.0], 2.0)
    assert w.box.as_list() == [[8.5, 10.0], [4.0, 6.0]]
    far = Window.box_intersect_shifted(outer, [5.0, 5.0], 0.0)
    assert far.restrict(PointCloud(np.array([[5.0, 5.0]]))).n == 1  # degenerate point box


def test_window_wire_format():
    for w in (Window.all(), Window.empty(), Window.ball([0.1, 0.2], 0.3),
              Window.from_box(Box([0.0, 0.0], [1.0, 2.0]))):
        assert Window.from_dict(w.to_dict()).to_dict() == w.to_dict()


def test_second_order_identity_exact(rng):
    mst = make_statistic("mst")
    ent = make_statistic("entropy_kl", {"k": 2})
    for stat, tol in ((CARD, 0.0), (EULER1, 0.0), (KNN, 1e-12), (mst, 1e-12), (ent, 1e-12)):
        for _ in range(20):
            cloud = random_cloud(rng)
            ok, residual = check_second_order_identity(stat, cloud, rng.random(2), rng.random(2))
            assert ok and residual <= max(tol, 1e-12)


def test_linearity_of_add_one_cost(rng):
    # D_x(aF + bG) = a D_x F + b D_x G for a synthetic combination
    from stabkit.statistics import StatisticDescriptor

    a, b = 2.5, -1.25
    combo = StatisticDescriptor(
        "combo", lambda c: a * KNN(c) + b * CARD(c), a * KNN.empty_value + b * CARD.empty_value
    )
    for _ in range(20):
        cloud = random_cloud(rng)
        x = rng.random(2)
        lhs = add_one_cost(combo, cloud, x)
        rhs = a * add_one_cost(KNN, cloud, x) + b * add_one_cost(CARD, cloud, x)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_score_decomposition_residuals(rng):
    weighted = make_statistic("entropy_weighted", {"k": 8, "d": 4})
    for _ in range(20):
        cloud = random_cloud(rng, 12, 40, dim=2)
        assert check_score_decomposition(KNN, cloud, rng.random(2)) <= 1e-9
    for _ in range(20):
        cloud = random_cloud(rng, 12, 40, dim=4)
        assert check_score_decomposition(weighted, cloud, rng.random(4)) <= 1e-9
    assert check_score_decomposition(CARD, random_cloud(rng), rng.random(2)) == 0.0


def test_score_missing_raises(rng):
    with pytest.raises(MissingScoreError):
        check_score_decomposition(EULER1, random_cloud(rng), rng.random(2))
