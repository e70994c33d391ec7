import pytest

from geometry import Point, QuadrantFrame, UncertainQuery
from instance_gen import generate_instance
from oracle import (OracleCell, expected_distances, oracle_global_min_check, oracle_minimal_points,
                    oracle_quadrant_topk, oracle_report, oracle_skyline_cells, oracle_topk)


def test_topk_small():
    points = [Point(0, 1.0, 1.0), Point(1, 2.0, 3.0), Point(2, 4.0, 2.0)]
    q = UncertainQuery.from_tuples([(0.0, 0.0, 1.0)])
    assert oracle_topk(points, q, 2).ids == [0, 1]
    assert oracle_topk(points, q, 2).distances == [2.0, 5.0]
    result = oracle_topk(points[:1], q, 3)
    assert result.ids == [0] and result.truncated


def test_full_sort_and_id_ties():
    points = [Point(5, 1.0, 0.0), Point(2, 0.0, 1.0), Point(9, 3.0, 3.0)]
    q = UncertainQuery.from_tuples([(0.0, 0.0, 2.0)])
    assert oracle_topk(points, q, 3).ids == [2, 5, 9]


def test_expected_distances_direct_sum():
    q = UncertainQuery.from_tuples([(0, 0, 0.5), (2, 2, 0.5)])
    assert expected_distances([Point(0, 1.0, 1.0)], q).tolist() == [2.0]


def test_quadrant_topk_uses_closed_quadrant():
    points = [Point(0, 0.0, 3.0), Point(1, 2.0, 2.0), Point(2, -1.0, 5.0)]
    q = UncertainQuery.from_tuples([(0.0, 0.0, 1.0)])
    got = oracle_quadrant_topk(points, q, QuadrantFrame((0.0, 0.0)), 5)
    assert [nb.id for nb in got] == [0, 1]
    assert oracle_quadrant_topk(points, q, QuadrantFrame((0.0, 0.0), 1, -1), 5) == []


def test_minimal_points():
    frame = QuadrantFrame((0.0, 0.0))
    assert oracle_minimal_points([], frame) == []
    points = [Point(0, 1.0, 1.0), Point(1, 2.0, 2.0)]
    assert [p.id for p in oracle_minimal_points(points, frame)] == [0]
    assert [p.id for p in oracle_minimal_points(points, frame, removed=[0])] == [1]


def test_skyline_cells_one_cell_for_dominating_pair():
    points = [Point(0, 1.0, 1.0), Point(1, 2.0, 2.0)]
    q = UncertainQuery.from_tuples([(0.0, 0.0, 1.0), (1.5, 1.5, 1.0)])
    assert oracle_skyline_cells(points, q, QuadrantFrame((0.0, 0.0))) == [OracleCell((0, 0), 0, 0)]


def test_skyline_cells_canonical_order():
    points = [Point(0, 1.0, 5.0), Point(1, 2.0, 1.0), Point(2, 4.0, 0.5)]
    q = UncertainQuery.from_tuples([(0.0, 0.0, 1.0), (3.0, 3.0, 1.0)])
    cells = oracle_skyline_cells(points, q, QuadrantFrame((0.0, 0.0)))
    assert [c.address for c in cells] == [(0, 1), (0, 0), (1, 0)]


def test_global_min_check():
    q = UncertainQuery.from_tuples([(3.0, 4.0, 1.0)])
    assert oracle_global_min_check([], q, (3.0, 4.0))
    q = UncertainQuery.from_tuples([(0.0, 0.0, 1.0), (2.0, 1.0, 1.0), (4.0, 2.0, 1.0)])
    assert oracle_global_min_check([], q, (2.0, 1.0))
    assert not oracle_global_min_check([], q, (12.0, 1.0))


def test_report(rng):
    points = [Point(i, float(x), float(y)) for i, (x, y) in
              enumerate(zip(rng.permutation(50).tolist(), rng.permutation(50).tolist()))]
    q = UncertainQuery.from_tuples([(10.5, 20.5, 1.0), (30.5, 5.5, 2.0)])
    report = oracle_report(points, q, 5)
    assert report.topk.ids == oracle_topk(points, q, 5).ids
    assert len(report.per_quadrant) == 4
    doc = report.as_dict()
    assert set(doc) == {'topk', 'truncated', 'per_quadrant', 'skyline_vertices', 'skyline_cells',
                        'arrangement_lines'}
    assert doc['arrangement_lines'] == {'x': [10.5, 30.5], 'y': [5.5, 20.5]}
    assert oracle_report(points, q, 5).as_dict() == doc


def test_report_is_deterministic_for_fixed_seed():
    instance = generate_instance(50, 8, seed=7)
    first = oracle_report(instance.points, instance.query, 5).as_dict()
    again = generate_instance(50, 8, seed=7)
    assert oracle_report(again.points, again.query, 5).as_dict() == first
    assert [n['expected_distance'] for n in first['topk']] == pytest.approx(
        sorted(n['expected_distance'] for n in first['topk']))
