"""Brute-force references computed straight from the definitions.

Nothing here touches the indexes; only the value types of geometry are shared.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from geometry import Neighbor, TopKResult, quadrant_frames


@dataclass(frozen=True)
class OracleCell:
    address: Tuple[int, int]
    left_id: int
    bottom_id: int


@dataclass
class OracleReport:
    topk: TopKResult
    per_quadrant: Dict[Tuple[int, int], List[Neighbor]] = field(default_factory=dict)
    skyline_vertices: Dict[Tuple[int, int], List[int]] = field(default_factory=dict)
    skyline_cells: Dict[Tuple[int, int], List[OracleCell]] = field(default_factory=dict)
    arrangement_lines: Tuple[List[float], List[float]] = ((), ())

    def as_dict(self):
        def nb(n):
            return {'id': n.id, 'x': n.x, 'y': n.y, 'expected_distance': n.distance}

        def key(signs):
            return f"{signs[0]:+d}{signs[1]:+d}"

        return {
            'topk': [nb(n) for n in self.topk.neighbors],
            'truncated': self.topk.truncated,
            'per_quadrant': {key(s): [nb(n) for n in v] for s, v in self.per_quadrant.items()},
            'skyline_vertices': {key(s): v for s, v in self.skyline_vertices.items()},
            'skyline_cells': {key(s): [[c.address[0], c.address[1], c.left_id, c.bottom_id] for c in v]
                              for s, v in self.skyline_cells.items()},
            'arrangement_lines': {'x': list(self.arrangement_lines[0]), 'y': list(self.arrangement_lines[1])},
        }


def _query_arrays(q):
    qx = np.array([loc.x for loc in q.locations], dtype=float)
    qy = np.array([loc.y for loc in q.locations], dtype=float)
    qw = np.array([loc.w for loc in q.locations], dtype=float)
    return qx, qy, qw


def expected_distances(points, q):
    """Ed of every point by direct summation over all m locations"""
    if not points:
        return np.zeros(0)
    qx, qy, qw = _query_arrays(q)
    xs = np.array([p.x for p in points], dtype=float)
    ys = np.array([p.y for p in points], dtype=float)
    return (np.abs(xs[:, None] - qx[None, :]) + np.abs(ys[:, None] - qy[None, :])) @ qw


def _ranked(points, ed, k):
    ids = np.array([p.id for p in points], dtype=np.int64)
    order = np.lexsort((ids, ed))[:k]
    return [Neighbor(points[i].id, points[i].x, points[i].y, float(ed[i])) for i in order]


def oracle_topk(points, q, k):
    points = list(points)
    truncated = k > len(points)
    k = min(k, len(points))
    if k <= 0:
        return TopKResult([], truncated=truncated)
    return TopKResult(_ranked(points, expected_distances(points, q), k), truncated=truncated)


def _weighted_median(values, weights):
    order = np.argsort(values, kind='stable')
    cum = np.cumsum(weights[order])
    for i, c in enumerate(cum):
        if c >= cum[-1] / 2.0:
            return float(values[order][i])
    return float(values[order][-1])


def oracle_q_star(q):
    qx, qy, qw = _query_arrays(q)
    return _weighted_median(qx, qw), _weighted_median(qy, qw)


def _quadrant_points(points, frame, removed=()):
    removed = set(removed)
    return [p for p in points if p.id not in removed and frame.in_quadrant(p)]


def oracle_quadrant_topk(points, q, frame, k):
    inside = _quadrant_points(points, frame)
    if not inside:
        return []
    return _ranked(inside, expected_distances(inside, q), min(k, len(inside)))


def oracle_minimal_points(points, frame, removed=()):
    """Minimal points of the alive quadrant set, by frame X ascending"""
    inside = _quadrant_points(points, frame, removed)
    if not inside:
        return []
    fx = np.array([frame.sign_x * p.x for p in inside])
    fy = np.array([frame.sign_y * p.y for p in inside])
    dominated = (fx[None, :] <= fx[:, None]) & (fy[None, :] <= fy[:, None])
    np.fill_diagonal(dominated, False)
    minimal = ~dominated.any(axis=1)
    chosen = [inside[i] for i in np.flatnonzero(minimal)]
    return sorted(chosen, key=lambda p: frame.sign_x * p.x)


def arrangement_lines(q, frame):
    """Frame coordinates of the query lines strictly inside the quadrant"""
    qx, qy, _ = _query_arrays(q)
    ox, oy = frame.frame_origin
    xs = np.unique(frame.sign_x * qx)
    ys = np.unique(frame.sign_y * qy)
    return xs[xs > ox], ys[ys > oy]


def oracle_skyline_cells(points, q, frame, removed=()):
    """Cells holding minimal points, column ascending then row descending"""
    lines_x, lines_y = arrangement_lines(q, frame)
    cells = {}
    for p in oracle_minimal_points(points, frame, removed):
        fx, fy = frame.sign_x * p.x, frame.sign_y * p.y
        address = (int(np.count_nonzero(lines_x <= fx)), int(np.count_nonzero(lines_y <= fy)))
        left, bottom = cells.get(address, (p, p))
        if frame.sign_x * left.x > fx:
            left = p
        if frame.sign_y * bottom.y > fy:
            bottom = p
        cells[address] = (left, bottom)
    ordered = sorted(cells.items(), key=lambda item: (item[0][0], -item[0][1]))
    return [OracleCell(address, left.id, bottom.id) for address, (left, bottom) in ordered]


def oracle_global_min_check(points, q, q_star, grid=100):
    """Ed(q_star) against every arrangement vertex and a grid over the bounding box"""
    qx, qy, qw = _query_arrays(q)

    def ed(x, y):
        return (np.abs(x[:, None] - qx[None, :]) + np.abs(y[:, None] - qy[None, :])) @ qw

    all_x = np.concatenate([qx, [p.x for p in points]])
    all_y = np.concatenate([qy, [p.y for p in points]])
    vx, vy = np.meshgrid(qx, qy)
    gx, gy = np.meshgrid(np.linspace(all_x.min(), all_x.max(), grid),
                         np.linspace(all_y.min(), all_y.max(), grid))
    sx = np.concatenate([vx.ravel(), gx.ravel()])
    sy = np.concatenate([vy.ravel(), gy.ravel()])
    target = float(ed(np.array([q_star[0]]), np.array([q_star[1]]))[0])
    samples = ed(sx, sy)
    return bool(np.all(target <= samples + 1e-9 * np.maximum(1.0, np.abs(samples))))


def oracle_report(points, q, k):
    points = list(points)
    report = OracleReport(oracle_topk(points, q, k))
    q_star = oracle_q_star(q)
    for frame in quadrant_frames(q_star):
        signs = (frame.sign_x, frame.sign_y)
        report.per_quadrant[signs] = oracle_quadrant_topk(points, q, frame, k)
        report.skyline_vertices[signs] = [p.id for p in oracle_minimal_points(points, frame)]
        report.skyline_cells[signs] = oracle_skyline_cells(points, q, frame)
    qx, qy, _ = _query_arrays(q)
    report.arrangement_lines = (np.unique(qx).tolist(), np.unique(qy).tolist())
    return report
