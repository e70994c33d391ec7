import logging
import time
from bisect import bisect_left, bisect_right

import numpy as np

from enn_errors import IndexStateError
from geometry import check_general_position


class _Fenwick:
    """Alive counts over one level array; all slots start alive"""

    __slots__ = ('size', 'tree', 'top')

    def __init__(self, size, tree=None):
        self.size = size
        if tree is None:
            idx = np.arange(size + 1, dtype=np.int64)
            tree = (idx & -idx).tolist()
        self.tree = tree
        self.top = 1 << (size.bit_length() - 1) if size else 0

    def add(self, i, delta):
        i += 1
        tree = self.tree
        while i <= self.size:
            tree[i] += delta
            i += i & -i

    def prefix(self, i):
        """Alive slots in [0, i)"""
        tree = self.tree
        s = 0
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def kth(self, k):
        """0-based slot of the k-th alive entry (k >= 1)"""
        tree = self.tree
        pos = 0
        step = self.top
        while step:
            nxt = pos + step
            if nxt <= self.size and tree[nxt] < k:
                pos = nxt
                k -= tree[nxt]
            step >>= 1
        return pos

    def clone(self):
        return _Fenwick(self.size, list(self.tree))


class _RangeTree:
    """Implicit two-level tree: primary over points sorted by one axis, per-level
    secondary arrays sorted by the other axis inside each aligned block.

    Block b of level L covers primary positions [b << L, (b + 1) << L).
    """

    def __init__(self, primary, secondary, order):
        n = len(order)
        self.n = n
        self.primary_keys = primary[order].tolist()
        self.height = (n - 1).bit_length() if n > 1 else 0
        positions = np.arange(n, dtype=np.int64)
        sec = secondary[order]
        self.keys = []
        self.slots = []
        self.members = []
        self.fenwicks = []
        for level in range(self.height + 1):
            perm = np.lexsort((sec, positions >> level))
            self.keys.append(sec[perm])
            members = order[perm]
            slot = np.empty(n, dtype=np.int64)
            slot[members] = positions
            self.members.append(members.tolist())
            self.slots.append(slot)
            self.fenwicks.append(_Fenwick(n))

    def clone_state(self, other):
        self.fenwicks = [f.clone() for f in other.fenwicks]

    def set_alive(self, idx, alive):
        delta = 1 if alive else -1
        for level in range(self.height + 1):
            self.fenwicks[level].add(int(self.slots[level][idx]), delta)

    def span_positions(self, lo, hi, lo_closed, hi_closed):
        keys = self.primary_keys
        l = bisect_left(keys, lo) if lo_closed else bisect_right(keys, lo)
        r = bisect_right(keys, hi) if hi_closed else bisect_left(keys, hi)
        return l, r

    def first_hit(self, l, r, fixed, direction):
        """Alive point over primary positions [l, r) nearest to fixed in direction,
        with the weak inequality; returns (key, point index) or None"""
        best = None
        level = 0
        while l < r:
            if l & 1:
                best = self._visit(level, l, fixed, direction, best)
                l += 1
            if r & 1:
                r -= 1
                best = self._visit(level, r, fixed, direction, best)
            l >>= 1
            r >>= 1
            level += 1
        return best

    def _visit(self, level, block, fixed, direction, best):
        s = block << level
        e = min(s + (1 << level), self.n)
        keys = self.keys[level]
        fen = self.fenwicks[level]
        if direction > 0:
            j = s + int(np.searchsorted(keys[s:e], fixed, side='left'))
            c = fen.prefix(j)
            if c == fen.prefix(e):
                return best
            t = fen.kth(c + 1)
        else:
            j = s + int(np.searchsorted(keys[s:e], fixed, side='right'))
            c = fen.prefix(j)
            if c == fen.prefix(s):
                return best
            t = fen.kth(c)
        key = float(keys[t])
        if best is None or (key - best[0]) * direction < 0:
            return key, self.members[level][t]
        return best


class DragIndex:
    """Dynamic segment-dragging structure over a fixed point set.

    Vertical segments are answered by a tree with y-primary / x-secondary
    keys, horizontal ones by the symmetric x-primary tree. Only points that
    were deleted can be inserted again.
    """

    def __init__(self, points, x_order=None, y_order=None, _shared=None):
        self.logger = logging.getLogger(__name__)
        if _shared is not None:
            self.points, self._index_of, self.bounds, self._vertical, self._horizontal = _shared
            self.alive = set()
            self.drag_count = 0
            return
        start = time.perf_counter()
        points = list(points)
        check_general_position(points)
        self.points = points
        self._index_of = {p.id: i for i, p in enumerate(points)}
        xs = np.array([p.x for p in points], dtype=float)
        ys = np.array([p.y for p in points], dtype=float)
        if x_order is None:
            x_order = np.argsort(xs, kind='stable')
        if y_order is None:
            y_order = np.argsort(ys, kind='stable')
        x_order = np.asarray(x_order, dtype=np.int64)
        y_order = np.asarray(y_order, dtype=np.int64)
        self.bounds = (float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max())) if points else None
        self._vertical = _RangeTree(ys, xs, y_order)
        self._horizontal = _RangeTree(xs, ys, x_order)
        self.alive = {p.id for p in points}
        self.drag_count = 0
        self.logger.info(f"Built drag index over {len(points)} points in "
                         f"{(time.perf_counter() - start) * 1000:.1f} ms")

    def __len__(self):
        return len(self.alive)

    def drag(self, q):
        """First alive point hit when dragging q, or None"""
        self.drag_count += 1
        if not self.points:
            return None
        tree = self._vertical if q.segment_axis == 'vertical' else self._horizontal
        l, r = tree.span_positions(q.span[0], q.span[1], q.span_flags[0], q.span_flags[1])
        if l >= r:
            return None
        hit = tree.first_hit(l, r, q.fixed_coord, q.direction)
        if hit is None:
            return None
        return self.points[hit[1]]

    def delete(self, point_id):
        if point_id not in self.alive:
            raise IndexStateError(f"Cannot delete point {point_id}: not alive")
        idx = self._index_of[point_id]
        self._vertical.set_alive(idx, False)
        self._horizontal.set_alive(idx, False)
        self.alive.discard(point_id)

    def insert(self, point_id):
        if point_id in self.alive or point_id not in self._index_of:
            raise IndexStateError(f"Cannot insert point {point_id}: it was not deleted")
        idx = self._index_of[point_id]
        self._vertical.set_alive(idx, True)
        self._horizontal.set_alive(idx, True)
        self.alive.add(point_id)

    def clone(self):
        """Independent replica sharing the static key arrays"""
        vertical = object.__new__(_RangeTree)
        vertical.__dict__.update(self._vertical.__dict__)
        vertical.clone_state(self._vertical)
        horizontal = object.__new__(_RangeTree)
        horizontal.__dict__.update(self._horizontal.__dict__)
        horizontal.clone_state(self._horizontal)
        replica = DragIndex(None, _shared=(self.points, self._index_of, self.bounds, vertical, horizontal))
        replica.alive = set(self.alive)
        return replica


def build_drag(points):
    return DragIndex(points)
