import logging
from dataclasses import dataclass

import numpy as np

from enn_errors import GenerationError
from geometry import Point, UncertainQuery, WeightedLocation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Instance:
    points: list
    query: UncertainQuery
    k: int
    dim: int
    seed: int

    @property
    def n(self):
        return len(self.points)

    @property
    def m(self):
        return self.query.m


def _distinct_draw(rng, count, coord_range, taken):
    """count fresh coordinates in [0, coord_range), none equal to any in taken"""
    out = []
    while len(out) < count:
        for v in rng.uniform(0.0, coord_range, count - len(out)).tolist():
            if v not in taken:
                taken.add(v)
                out.append(v)
    return out


def _close_pairs(ed, min_gap):
    """Indices (into ed) of the later member of every pair within min_gap relative"""
    order = np.argsort(ed, kind='stable')
    s = ed[order]
    if s.size < 2:
        return []
    scale = np.maximum(np.abs(s[1:]), np.finfo(float).tiny)
    close = np.flatnonzero((s[1:] - s[:-1]) <= min_gap * scale)
    return sorted({int(order[j + 1]) for j in close})


def draw_query(rng, m, coord_range=1000.0, weight_low=0.1, weight_high=1.0, dim=2):
    xs = rng.uniform(0.0, coord_range, m)
    ys = rng.uniform(0.0, coord_range, m) if dim == 2 else np.zeros(m)
    ws = rng.uniform(weight_low, weight_high, m)
    return UncertainQuery(tuple(WeightedLocation(float(x), float(y), float(w)) for x, y, w in zip(xs, ys, ws)))


def generate_instance(n, m, seed=7, k=None, dim=2, coord_range=1000.0, min_gap=1e-6, retries=50,
                      weight_low=0.1, weight_high=1.0):
    """Random instance with distinct coordinates over P and Q and separated expected distances.

    For dim=1 every y is 0.0 and only x carries information.
    """
    if n < 1 or m < 1:
        raise GenerationError(f"Instance sizes must be positive, got n={n}, m={m}")
    if dim not in (1, 2):
        raise GenerationError(f"Unsupported dimension {dim}")
    if not 0 <= weight_low < weight_high:
        raise GenerationError(f"Bad weight range [{weight_low}, {weight_high})")
    rng = np.random.default_rng(seed)
    taken_x, taken_y = set(), set()
    qx = _distinct_draw(rng, m, coord_range, taken_x)
    qy = _distinct_draw(rng, m, coord_range, taken_y) if dim == 2 else [0.0] * m
    qw = rng.uniform(weight_low, weight_high, m)
    px = np.array(_distinct_draw(rng, n, coord_range, taken_x))
    py = np.array(_distinct_draw(rng, n, coord_range, taken_y)) if dim == 2 else np.zeros(n)
    qxa, qya = np.array(qx), np.array(qy)

    for attempt in range(retries + 1):
        ed = (np.abs(px[:, None] - qxa[None, :]) + np.abs(py[:, None] - qya[None, :])) @ qw
        redraw = _close_pairs(ed, min_gap)
        if not redraw:
            break
        if attempt == retries:
            raise GenerationError(f"Could not separate expected distances after {retries} retries "
                                  f"(n={n}, m={m}, seed={seed})")
        logger.debug(f"Attempt {attempt}: redrawing {len(redraw)} points with close expected distances")
        for i in redraw:
            taken_x.discard(float(px[i]))
            px[i] = _distinct_draw(rng, 1, coord_range, taken_x)[0]
            if dim == 2:
                taken_y.discard(float(py[i]))
                py[i] = _distinct_draw(rng, 1, coord_range, taken_y)[0]

    points = [Point(i, float(x), float(y)) for i, (x, y) in enumerate(zip(px, py))]
    query = UncertainQuery(tuple(WeightedLocation(float(x), float(y), float(w)) for x, y, w in zip(qx, qy, qw)))
    logger.info(f"Generated instance n={n} m={m} dim={dim} seed={seed}")
    return Instance(points, query, k if k is not None else min(10, n), dim, seed)
