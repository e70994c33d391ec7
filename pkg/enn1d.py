import logging
import math
from bisect import bisect_right

import numpy as np

from enn_errors import GeneralPositionError, InstanceFormatError, InvalidQueryError
from geometry import Neighbor, TopKResult
from query_profile import weighted_median_select

logger = logging.getLogger(__name__)

STRATEGIES = ('auto', 'sorted', 'direct')


class Index1D:
    """Points of P sorted by coordinate"""

    def __init__(self, coords, ids):
        self.coords = coords
        self.ids = ids
        self._coords = coords.tolist()
        self._ids = ids.tolist()

    def __len__(self):
        return len(self._coords)

    @property
    def points_sorted(self):
        return list(zip(self._coords, self._ids))


def build_1d(points):
    """points: sequence of (coordinate, point-id)"""
    if len(points) == 0:
        raise InstanceFormatError("1-D index needs at least one point")
    coords = np.array([float(c) for c, _ in points], dtype=float)
    ids = np.array([int(i) for _, i in points], dtype=np.int64)
    order = np.argsort(coords, kind='stable')
    coords, ids = coords[order], ids[order]
    dup = np.flatnonzero(np.diff(coords) == 0)
    if dup.size:
        raise GeneralPositionError('x', int(ids[dup[0]]), int(ids[dup[0] + 1]))
    logger.info(f"Built 1-D index over {len(coords)} points")
    return Index1D(coords, ids)


def _query_arrays(q):
    arr = np.asarray(q, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise InvalidQueryError("Query has no locations")
    if not np.all(np.isfinite(arr)) or np.any(arr[:, 1] < 0):
        raise InvalidQueryError("Query locations and weights must be finite, weights nonnegative")
    if not arr[:, 1].sum() > 0:
        raise InvalidQueryError("Query total weight must be positive")
    return arr[:, 0], arr[:, 1]


class _SortedSide:
    """Outward walk over one side of P with a co-moving pointer into sorted Q"""

    def __init__(self, index, start, step, xs, pw, pwx):
        self.coords = index._coords
        self.ids = index._ids
        self.pos = start
        self.step = step
        self.xs = xs
        self.pw = pw
        self.pwx = pwx
        self.t = None
        self.scanned = 0

    def _at_or_below(self, x):
        xs = self.xs
        if self.t is None:
            self.t = bisect_right(xs, x)
        elif self.step < 0:
            while self.t > 0 and xs[self.t - 1] > x:
                self.t -= 1
        else:
            while self.t < len(xs) and xs[self.t] <= x:
                self.t += 1
        return self.t

    def peek(self):
        if self.pos < 0 or self.pos >= len(self.coords):
            return None
        x = self.coords[self.pos]
        t = self._at_or_below(x)
        w_lo = self.pw[t - 1] if t else 0.0
        s_lo = self.pwx[t - 1] if t else 0.0
        d = (w_lo * x - s_lo) + ((self.pwx[-1] - s_lo) - (self.pw[-1] - w_lo) * x)
        return d, self.ids[self.pos], x

    def advance(self):
        self.pos += self.step
        self.scanned += 1


class _DirectSide(_SortedSide):
    """Outward walk that evaluates each point against unsorted Q in O(m)"""

    def __init__(self, index, start, step, qx, qw):
        super().__init__(index, start, step, None, None, None)
        self.qx = qx
        self.qw = qw

    def peek(self):
        if self.pos < 0 or self.pos >= len(self.coords):
            return None
        x = self.coords[self.pos]
        return float(np.dot(self.qw, np.abs(self.qx - x))), self.ids[self.pos], x


def query_1d(index, q, k, q_presorted=False, strategy='auto'):
    """Top-k points of a 1-D index by sum of w * |x(p) - x(q)|, ascending.

    q is a sequence of (x, weight). The 'direct' strategy never sorts Q; it
    is picked by 'auto' when Q arrives unsorted and k < log2(m).
    """
    if strategy not in STRATEGIES:
        raise InvalidQueryError(f"Unknown 1-D strategy {strategy}")
    if k < 1:
        raise InvalidQueryError(f"k must be positive, got {k}")
    qx, qw = _query_arrays(q)
    n = len(index)
    truncated = k > n
    k = min(k, n)
    m = len(qx)
    if strategy == 'auto':
        strategy = 'direct' if (not q_presorted and m > 1 and k < math.log2(m)) else 'sorted'

    if strategy == 'sorted':
        if q_presorted:
            if np.any(np.diff(qx) < 0):
                raise InvalidQueryError("Query locations flagged presorted are not in ascending order")
            xs, ws = qx, qw
        else:
            order = np.argsort(qx, kind='stable')
            xs, ws = qx[order], qw[order]
        pw = np.cumsum(ws)
        pwx = np.cumsum(ws * xs)
        q_star = float(xs[int(np.searchsorted(pw, pw[-1] / 2.0, side='left'))])
        xs_l, pw_l, pwx_l = xs.tolist(), pw.tolist(), pwx.tolist()
        split = bisect_right(index._coords, q_star)
        left = _SortedSide(index, split - 1, -1, xs_l, pw_l, pwx_l)
        right = _SortedSide(index, split, 1, xs_l, pw_l, pwx_l)
    else:
        q_star = weighted_median_select(qx, qw)
        split = bisect_right(index._coords, q_star)
        left = _DirectSide(index, split - 1, -1, qx, qw)
        right = _DirectSide(index, split, 1, qx, qw)

    neighbors = []
    lc, rc = left.peek(), right.peek()
    while len(neighbors) < k:
        if rc is None or (lc is not None and (lc[0], lc[1]) < (rc[0], rc[1])):
            d, pid, x = lc
            left.advance()
            lc = left.peek()
        else:
            d, pid, x = rc
            right.advance()
            rc = right.peek()
        neighbors.append(Neighbor(pid, x, None, d))

    logger.debug(f"1-D query m={m} k={k} strategy={strategy} q*={q_star}")
    return TopKResult(neighbors, truncated=truncated, q_star=(q_star, None),
                      stats={'strategy': strategy,
                             'left_scanned': left.scanned,
                             'right_scanned': right.scanned})
