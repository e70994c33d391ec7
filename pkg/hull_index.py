import heapq
import logging
import time
from bisect import bisect_left, bisect_right

import numpy as np

from enn_config import DEFAULT_HULL_LEAF_LEVEL
from geometry import check_general_position


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monotone_chains(pts):
    """Lower and upper hull chains of (x, y, index) tuples sorted by x.

    Collinear vertices are dropped; both chains run left to right and share
    their end vertices.
    """
    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) >= 0:
            upper.pop()
        upper.append(p)
    return lower, upper


def _merged_vertices(children):
    """Hull vertices of sibling nodes in x order, each vertex once"""
    out = []
    for v in heapq.merge(*(chain for lower, upper in children for chain in (lower, upper))):
        if not out or out[-1][2] != v[2]:
            out.append(v)
    return out


class _ChainTable:
    """Chains of every node of one (primary level, secondary level) pair,
    flattened with offsets. Node g owns vertices [off[g], off[g + 1]) and
    edge slopes [off[g] - g, off[g + 1] - g - 1)."""

    def __init__(self, chains, negate):
        counts = [len(c) for c in chains]
        self.off = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        flat = [v for c in chains for v in c]
        self.xs = np.array([v[0] for v in flat], dtype=float)
        self.ys = np.array([v[1] for v in flat], dtype=float)
        self.idx = np.array([v[2] for v in flat], dtype=np.int64)
        if len(flat) < 2:
            self.slopes = np.zeros(0)
            return
        # drop the pseudo-edges that join the last vertex of a node to the first of the next
        inner = np.ones(len(flat) - 1, dtype=bool)
        inner[self.off[1:-1] - 1] = False
        slopes = (np.diff(self.ys) / np.diff(self.xs))[inner]
        self.slopes = -slopes if negate else slopes

    def vertices(self, g):
        s, e = self.off[g], self.off[g + 1]
        return [(float(self.xs[i]), float(self.ys[i]), int(self.idx[i])) for i in range(s, e)]

    def extreme(self, g, threshold):
        """Vertex index where the edge slopes first reach threshold"""
        s, e = int(self.off[g]), int(self.off[g + 1])
        ss = s - g
        return s + int(np.searchsorted(self.slopes[ss:ss + (e - s - 1)], threshold, side='left'))


class HullIndex:
    """Static rectangle extreme-point index for linear objectives.

    Primary tree over x order; inside every primary block the points are kept
    in y order, and secondary nodes from hull_leaf_level upwards carry the
    lower and upper convex chains of their points. Pieces of a query below
    hull_leaf_level are scanned directly.
    """

    def __init__(self, points, hull_leaf_level=DEFAULT_HULL_LEAF_LEVEL, x_order=None):
        self.logger = logging.getLogger(__name__)
        start = time.perf_counter()
        points = list(points)
        check_general_position(points)
        self.points = points
        self.hull_leaf_level = max(0, int(hull_leaf_level))
        n = len(points)
        self.n = n
        xs = np.array([p.x for p in points], dtype=float)
        ys = np.array([p.y for p in points], dtype=float)
        if x_order is None:
            x_order = np.argsort(xs, kind='stable')
        x_order = np.asarray(x_order, dtype=np.int64)
        self.x_keys = xs[x_order].tolist()
        self.height = (n - 1).bit_length() if n > 1 else 0
        positions = np.arange(n, dtype=np.int64)
        sorted_ys = ys[x_order]
        self.level_xs, self.level_ys, self.level_idx = [], [], []
        self.lower, self.upper = {}, {}
        for lp in range(self.height + 1):
            perm = np.lexsort((sorted_ys, positions >> lp))
            members = x_order[perm]
            self.level_xs.append(xs[members])
            self.level_ys.append(ys[members])
            self.level_idx.append(members)
            self._build_hulls(lp)
        self.logger.info(f"Built hull index over {n} points (leaf level {self.hull_leaf_level}) in "
                         f"{(time.perf_counter() - start) * 1000:.1f} ms")

    def _build_hulls(self, lp):
        h = self.hull_leaf_level
        if h > lp:
            return
        # one lexsort puts the points of every leaf hull node in x order
        node = np.arange(self.n, dtype=np.int64) >> h
        perm = np.lexsort((self.level_xs[lp], node))
        xs = self.level_xs[lp][perm].tolist()
        ys = self.level_ys[lp][perm].tolist()
        idx = self.level_idx[lp][perm].tolist()
        current = []
        for g in range((self.n + (1 << h) - 1) >> h):
            s, e = g << h, min((g + 1) << h, self.n)
            current.append(monotone_chains(list(zip(xs[s:e], ys[s:e], idx[s:e]))))
        self._store_chains(lp, h, current)
        for ls in range(h + 1, lp + 1):
            children = current
            current = [monotone_chains(_merged_vertices(children[2 * g:2 * g + 2]))
                       for g in range((len(children) + 1) // 2)]
            self._store_chains(lp, ls, current)

    def _store_chains(self, lp, ls, chains):
        self.lower[(lp, ls)] = _ChainTable([c[0] for c in chains], negate=False)
        self.upper[(lp, ls)] = _ChainTable([c[1] for c in chains], negate=True)

    def node_hull(self, lp, ls, g):
        """Vertex indices of one stored hull, for verification"""
        lower = self.lower[(lp, ls)].vertices(g)
        upper = self.upper[(lp, ls)].vertices(g)
        return sorted({v[2] for v in lower + upper})

    def node_members(self, lp, ls, g):
        s, e = g << ls, min((g + 1) << ls, self.n)
        return self.level_idx[lp][s:e].tolist()

    def hull_nodes(self):
        for (lp, ls), table in self.lower.items():
            for g in range(len(table.off) - 1):
                yield lp, ls, g

    def min_linear(self, rect, a, b):
        """Point of P inside rect minimizing a * x + b * y, with its value"""
        if self.n == 0:
            return None
        keys = self.x_keys
        l = bisect_left(keys, rect.x_lo) if rect.x_lo_closed else bisect_right(keys, rect.x_lo)
        r = bisect_right(keys, rect.x_hi) if rect.x_hi_closed else bisect_left(keys, rect.x_hi)
        constant = a == 0 and b == 0
        best = None
        level = 0
        while l < r:
            if l & 1:
                best = self._primary_node(level, l, rect, a, b, constant, best)
                l += 1
            if r & 1:
                r -= 1
                best = self._primary_node(level, r, rect, a, b, constant, best)
            l >>= 1
            r >>= 1
            level += 1
        if best is None:
            return None
        p = self.points[best[-1]]
        return p, a * p.x + b * p.y

    def _key(self, x, y, i, a, b, constant):
        if constant:
            return (0.0, x, y, self.points[i].id, i)
        return (a * x + b * y, self.points[i].id, i)

    def _primary_node(self, lp, block, rect, a, b, constant, best):
        s = block << lp
        e = min(s + (1 << lp), self.n)
        ys = self.level_ys[lp]
        lo = s + int(np.searchsorted(ys[s:e], rect.y_lo, side='left' if rect.y_lo_closed else 'right'))
        hi = s + int(np.searchsorted(ys[s:e], rect.y_hi, side='right' if rect.y_hi_closed else 'left'))
        if lo >= hi:
            return best
        h = self.hull_leaf_level
        if lp < h:
            return self._scan(lp, lo, hi, a, b, constant, best)
        size = 1 << h
        lo_aligned = ((lo + size - 1) >> h) << h
        hi_aligned = (hi >> h) << h
        if lo_aligned >= hi_aligned:
            return self._scan(lp, lo, hi, a, b, constant, best)
        best = self._scan(lp, lo, lo_aligned, a, b, constant, best)
        best = self._scan(lp, hi_aligned, hi, a, b, constant, best)
        l, r, ls = lo_aligned >> h, hi_aligned >> h, h
        while l < r:
            if l & 1:
                best = self._hull_node(lp, ls, l, a, b, constant, best)
                l += 1
            if r & 1:
                r -= 1
                best = self._hull_node(lp, ls, r, a, b, constant, best)
            l >>= 1
            r >>= 1
            ls += 1
        return best

    def _scan(self, lp, s, e, a, b, constant, best):
        if s >= e:
            return best
        xs = self.level_xs[lp][s:e]
        ys = self.level_ys[lp][s:e]
        if constant:
            j = int(np.argmin(xs))
        else:
            vals = a * xs + b * ys
            ties = np.flatnonzero(vals == vals.min())
            j = int(ties[0]) if ties.size == 1 else min(
                ties.tolist(), key=lambda t: self.points[int(self.level_idx[lp][s + t])].id)
        i = int(self.level_idx[lp][s + j])
        key = self._key(float(xs[j]), float(ys[j]), i, a, b, constant)
        return key if best is None or key < best else best

    def _hull_node(self, lp, ls, g, a, b, constant, best):
        if b > 0:
            table = self.lower[(lp, ls)]
            k = table.extreme(g, -a / b)
        elif b < 0:
            table = self.upper[(lp, ls)]
            k = table.extreme(g, a / b)
        else:
            table = self.lower[(lp, ls)]
            k = int(table.off[g]) if a >= 0 else int(table.off[g + 1]) - 1
        s, e = int(table.off[g]), int(table.off[g + 1])
        for j in range(max(s, k - 1), min(e, k + 2)):
            key = self._key(float(table.xs[j]), float(table.ys[j]), int(table.idx[j]), a, b, constant)
            if best is None or key < best:
                best = key
        return best


def build_hull(points, hull_leaf_level=DEFAULT_HULL_LEAF_LEVEL):
    return HullIndex(points, hull_leaf_level)
