import heapq
import itertools
import logging
import time
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import List

import numpy as np

from drag_index import DragIndex
from enn_config import DEFAULT_HULL_LEAF_LEVEL
from enn_errors import InvalidQueryError
from geometry import Neighbor, TopKResult, check_general_position, quadrant_frames
from hull_index import HullIndex
from query_profile import build_profile
from skyline_search import CellStatus, SkylineSearch


@dataclass
class QueryStats:
    cells_visited: int = 0
    heap_pushes: int = 0
    heap_pops: int = 0
    drags: int = 0
    c1_sizes: List[int] = field(default_factory=list)
    fresh_totals: List[int] = field(default_factory=list)
    elapsed_micros: int = 0

    def as_dict(self):
        return {
            'cells_visited': self.cells_visited,
            'heap_pushes': self.heap_pushes,
            'heap_pops': self.heap_pops,
            'drags': self.drags,
            'c1_sizes': list(self.c1_sizes),
            'fresh_totals': list(self.fresh_totals),
        }


class _Splits:
    __slots__ = ('y_lo', 'y_hi', 'values', 'pending')

    def __init__(self, y_lo, y_hi):
        self.y_lo = y_lo
        self.y_hi = y_hi
        self.values = []
        self.pending = []


class SubCellLedger:
    """Horizontal split lines per activated cell, in frame Y.

    A sub-cell is (y_lo, y_hi, lo_closed, hi_closed); only the cell's own
    bottom side is closed, split lines are always open.
    """

    def __init__(self, grid):
        self.grid = grid
        self.cells = {}

    def __contains__(self, address):
        return address in self.cells

    def activate(self, address):
        """Register a cell; False when it had been seen before"""
        if address in self.cells:
            return False
        row = address[1]
        self.cells[address] = _Splits(self.grid.y_bounds[row], self.grid.y_bounds[row + 1])
        return True

    def whole(self, address):
        c = self.cells[address]
        return c.y_lo, c.y_hi, True, False

    def splits(self, address):
        return list(self.cells[address].values)

    def split(self, address, y):
        """Cut the sub-cell holding y at y; returns the two new sub-cells"""
        c = self.cells[address]
        j = bisect_left(c.values, y)
        lo = c.values[j - 1] if j else c.y_lo
        hi = c.values[j] if j < len(c.values) else c.y_hi
        c.values.insert(j, y)
        return (lo, y, j == 0, False), (y, hi, False, False)

    def defer(self, address, subs):
        self.cells[address].pending.extend(subs)

    def take_pending(self, address):
        c = self.cells[address]
        subs, c.pending = c.pending, []
        return subs


class _QuadrantRun:
    """Heap-driven extraction over the skyline cells of one quadrant"""

    def __init__(self, index, profile, frame, stats):
        self.index = index
        self.profile = profile
        self.frame = frame
        self.stats = stats
        self.search = SkylineSearch(index.drag, profile, frame)
        self.ledger = SubCellLedger(self.search.grid)
        self.coefficients = {}
        self.heap = []
        self.counter = itertools.count()

    def push(self, address, sub):
        coeff = self.coefficients.get(address)
        if coeff is None:
            coeff = self.profile.cell_coefficients(self.search.grid.cell(address))
            self.coefficients[address] = coeff
        self.stats.cells_visited += 1
        found = self.index.hull.min_linear(self.search.grid.sub_cell(address, *sub), coeff.a, coeff.b)
        if found is None:
            return
        p = found[0]
        heapq.heappush(self.heap, (self.profile.expected_distance(p), p.id, next(self.counter), p, address))
        self.stats.heap_pushes += 1

    def activate(self, cursors):
        for cursor in cursors:
            address = cursor.address
            if self.ledger.activate(address):
                self.push(address, self.ledger.whole(address))
            else:
                for sub in self.ledger.take_pending(address):
                    self.push(address, sub)

    def run(self, k):
        drag = self.index.drag
        drags_before = drag.drag_count
        cells = self.search.compute_c1()
        self.stats.c1_sizes.append(len(cells))
        fresh_total = len(cells)
        self.activate(cells)
        out, reported, deleted = [], set(), []
        try:
            while self.heap and len(out) < k:
                dist, pid, _, p, address = heapq.heappop(self.heap)
                self.stats.heap_pops += 1
                if pid in reported:
                    continue
                reported.add(pid)
                out.append(Neighbor(p.id, p.x, p.y, dist))
                if len(out) == k:
                    break
                drag.delete(pid)
                deleted.append(pid)
                cells, fresh, status = self.search.advance_cells(cells, p)
                fresh_total += len(fresh)
                self.activate(fresh)
                lower, upper = self.ledger.split(address, self.frame.sign_y * p.y)
                if status is CellStatus.RETAINED:
                    self.push(address, lower)
                    self.push(address, upper)
                else:
                    # the cell holds no skyline point now; query its halves if it comes back
                    self.ledger.defer(address, [lower, upper])
        finally:
            for pid in reversed(deleted):
                drag.insert(pid)
            self.stats.drags += drag.drag_count - drags_before
        self.stats.fresh_totals.append(fresh_total)
        return out


class EnnIndex:
    """Drag index, hull index and sorted orders over one point set"""

    def __init__(self, points, hull_leaf_level=DEFAULT_HULL_LEAF_LEVEL, x_order=None, y_order=None):
        self.logger = logging.getLogger(__name__)
        start = time.perf_counter()
        points = list(points)
        check_general_position(points)
        self.points = points
        xs = np.array([p.x for p in points], dtype=float)
        ys = np.array([p.y for p in points], dtype=float)
        self.x_order = np.argsort(xs, kind='stable') if x_order is None else np.asarray(x_order, dtype=np.int64)
        self.y_order = np.argsort(ys, kind='stable') if y_order is None else np.asarray(y_order, dtype=np.int64)
        self.drag = DragIndex(points, self.x_order, self.y_order)
        self.hull = HullIndex(points, hull_leaf_level, self.x_order)
        self.build_seconds = time.perf_counter() - start
        self.logger.info(f"Built ENN index over {len(points)} points in {self.build_seconds * 1000:.1f} ms")

    def __len__(self):
        return len(self.points)

    def clone(self):
        """Replica with its own drag-index state; the hull index is shared read-only"""
        replica = object.__new__(EnnIndex)
        replica.__dict__.update(self.__dict__)
        replica.drag = self.drag.clone()
        return replica

    def quadrant_topk(self, profile, frame, k, stats=None):
        if stats is None:
            stats = QueryStats()
        return _QuadrantRun(self, profile, frame, stats).run(k)

    def query_topk(self, q, k):
        if k < 1:
            raise InvalidQueryError(f"k must be positive, got {k}")
        start = time.perf_counter()
        profile = build_profile(q)
        q_star = profile.global_minimum()
        n = len(self.points)
        truncated = k > n
        k = min(k, n)
        stats = QueryStats()
        merged = {}
        if k:
            for frame in quadrant_frames(q_star):
                for nb in self.quadrant_topk(profile, frame, k, stats):
                    merged.setdefault(nb.id, nb)
        neighbors = sorted(merged.values(), key=lambda nb: (nb.distance, nb.id))[:k]
        stats.elapsed_micros = int((time.perf_counter() - start) * 1e6)
        self.logger.debug(f"Query m={profile.m} k={k} q*={q_star}: cells_visited={stats.cells_visited}, "
                          f"heap_pops={stats.heap_pops}, {stats.elapsed_micros} us")
        return TopKResult(neighbors, truncated=truncated, q_star=q_star, stats=stats)

    def query_enn(self, q):
        """Single expected nearest neighbor, or None for an empty index"""
        result = self.query_topk(q, 1)
        return result.neighbors[0] if result.neighbors else None


def build_index(points, hull_leaf_level=DEFAULT_HULL_LEAF_LEVEL):
    return EnnIndex(points, hull_leaf_level)


def quadrant_topk(index, profile, frame, k, stats=None):
    return index.quadrant_topk(profile, frame, k, stats)


def query_topk(index, q, k):
    return index.query_topk(q, k)
