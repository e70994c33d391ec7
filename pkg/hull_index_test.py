import numpy as np
import pytest
from scipy.spatial import ConvexHull

from conftest import random_points
from enn_errors import GeneralPositionError
from geometry import INF, Cell, Point
from hull_index import HullIndex, build_hull


def linear_min(points, rect, a, b):
    inside = [p for p in points if rect.contains(p.x, p.y)]
    if not inside:
        return None
    if a == 0 and b == 0:
        return min(inside, key=lambda p: (p.x, p.y, p.id))
    return min(inside, key=lambda p: (a * p.x + b * p.y, p.id))


def hull_ids(points):
    if len(points) <= 2:
        return list(range(len(points)))
    return sorted(int(v) for v in ConvexHull(np.array([(p.x, p.y) for p in points])).vertices)


def random_rect(rng, lo=-10.0, hi=110.0):
    x0, x1 = sorted(rng.uniform(lo, hi, 2).tolist())
    y0, y1 = sorted(rng.uniform(lo, hi, 2).tolist())
    flags = [bool(f) for f in rng.integers(2, size=4)]
    return Cell(x0, x1, y0, y1, *flags)


def test_single_point():
    index = build_hull([Point(7, 1.0, 2.0)], hull_leaf_level=0)
    assert index.node_hull(0, 0, 0) == [0]
    assert index.min_linear(Cell(0, 5, 0, 5), 1, 1)[0].id == 7


def test_four_corners_root_hull():
    points = [Point(0, 0, 1), Point(1, 1, 3), Point(2, 2, 0), Point(3, 3, 2), Point(4, 1.5, 1.5)]
    index = build_hull(points, hull_leaf_level=0)
    top = index.height
    assert index.node_hull(top, top, 0) == [0, 1, 2, 3]


def test_examples(three_points):
    index = build_hull(three_points, hull_leaf_level=0)
    p, value = index.min_linear(Cell(0, 5, 0, 5), 1, 1)
    assert (p.id, value) == (0, 2)
    p, value = index.min_linear(Cell(0, 5, 0, 5), -1, 0)
    assert (p.id, value) == (2, -4)
    assert index.min_linear(Cell(10, 20, 10, 20), 1, 1) is None
    assert index.min_linear(Cell(0, 5, 0, 5), 0, 0)[0].id == 0


def test_rejects_duplicates():
    with pytest.raises(GeneralPositionError):
        HullIndex([Point(0, 1, 1), Point(1, 1, 2)])


@pytest.mark.parametrize('leaf', [0, 2])
def test_node_hulls_match_recomputed(rng, leaf):
    points = random_points(rng, 200)
    index = build_hull(points, hull_leaf_level=leaf)
    for lp, ls, g in index.hull_nodes():
        members = index.node_members(lp, ls, g)
        expected = hull_ids([points[i] for i in members])
        assert index.node_hull(lp, ls, g) == sorted(members[j] for j in expected)


@pytest.mark.parametrize('leaf', [0, 2, 5])
def test_min_linear_matches_scan(rng, leaf):
    points = random_points(rng, 500)
    index = build_hull(points, hull_leaf_level=leaf)
    for _ in range(3400):
        rect = random_rect(rng)
        a, b = rng.uniform(-2, 2, 2).tolist()
        found = index.min_linear(rect, a, b)
        expected = linear_min(points, rect, a, b)
        if expected is None:
            assert found is None
        else:
            assert found[0] == expected
            assert found[1] == pytest.approx(a * expected.x + b * expected.y, rel=1e-12, abs=1e-12)


def test_axis_objectives_and_open_sides(rng):
    points = random_points(rng, 300)
    index = build_hull(points, hull_leaf_level=2)
    for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1), (0, 0), (1, -1)):
        for _ in range(50):
            rect = random_rect(rng)
            found = index.min_linear(rect, a, b)
            expected = linear_min(points, rect, a, b)
            assert (found[0] if found else None) == expected
    half_plane = Cell(50.0, INF, -INF, INF, False, False, True, True)
    assert index.min_linear(half_plane, 1, 0)[0] == linear_min(points, half_plane, 1, 0)
