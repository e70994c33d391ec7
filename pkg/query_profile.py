import logging
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from enn_errors import InvalidQueryError
from geometry import UncertainQuery

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellCoefficients:
    """Ed(p) = a * x + b * y + c for every p of one arrangement cell"""
    a: float
    b: float
    c: float

    def value(self, x, y):
        return self.a * x + self.b * y + self.c


def _xy(p):
    if hasattr(p, 'x'):
        return p.x, p.y
    return p[0], p[1]


class QueryProfile:
    """Sorted orders and prefix sums over the locations of one uncertain query.

    prefix_w_x[i] is the total weight of the first i + 1 locations in x order
    and prefix_wx[i] the matching sum of w * x; the y arrays mirror them.
    """

    def __init__(self, xs, ys, ws):
        self.m = len(xs)
        self.x_order = np.argsort(xs, kind='stable')
        self.y_order = np.argsort(ys, kind='stable')
        self.xs_sorted = xs[self.x_order]
        self.ys_sorted = ys[self.y_order]
        self.prefix_w_x = np.cumsum(ws[self.x_order])
        self.prefix_wx = np.cumsum(ws[self.x_order] * self.xs_sorted)
        self.prefix_w_y = np.cumsum(ws[self.y_order])
        self.prefix_wy = np.cumsum(ws[self.y_order] * self.ys_sorted)
        self.total_weight = float(self.prefix_w_x[-1])
        # plain lists keep scalar lookups off the numpy call path
        self._axes = {
            'x': (self.xs_sorted.tolist(), self.prefix_w_x.tolist(), self.prefix_wx.tolist()),
            'y': (self.ys_sorted.tolist(), self.prefix_w_y.tolist(), self.prefix_wy.tolist()),
        }

    def _split(self, axis, v):
        """Weight and weighted sum of the locations at or below v on one axis"""
        keys, pw, pwv = self._axes[axis]
        k = bisect_right(keys, v)
        if k == 0:
            return 0.0, 0.0, pw[-1], pwv[-1]
        return pw[k - 1], pwv[k - 1], pw[-1], pwv[-1]

    def axis_distance(self, axis, v):
        """Weighted sum of |v - q| over one coordinate axis"""
        w_lo, s_lo, w_all, s_all = self._split(axis, v)
        return (w_lo * v - s_lo) + ((s_all - s_lo) - (w_all - w_lo) * v)

    def expected_distance(self, p):
        x, y = _xy(p)
        return self.axis_distance('x', x) + self.axis_distance('y', y)

    def cell_coefficients(self, cell):
        """Affine form of Ed over a cell with no location strictly inside it.

        Locations on the cell's low side count as left/below, the rest as
        right/above, which holds for every point of the closed cell.
        """
        wl, sl, w_all, s_all = self._split('x', cell.x_lo)
        wb, sb, _, t_all = self._split('y', cell.y_lo)
        a = wl - (w_all - wl)
        b = wb - (w_all - wb)
        c = (s_all - sl) - sl + (t_all - sb) - sb
        return CellCoefficients(a, b, c)

    def global_minimum(self):
        """Component-wise weighted median q*"""
        half = self.total_weight / 2.0
        ix = int(np.searchsorted(self.prefix_w_x, half, side='left'))
        iy = int(np.searchsorted(self.prefix_w_y, half, side='left'))
        return float(self.xs_sorted[ix]), float(self.ys_sorted[iy])


def build_profile(q: UncertainQuery):
    q.validate()
    xs = np.array([loc.x for loc in q.locations], dtype=float)
    ys = np.array([loc.y for loc in q.locations], dtype=float)
    ws = np.array([loc.w for loc in q.locations], dtype=float)
    profile = QueryProfile(xs, ys, ws)
    logger.debug(f"Built profile over {profile.m} locations, W={profile.total_weight}")
    return profile


def _as_pairs(values):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InvalidQueryError("Weighted median of an empty sequence")
    arr = arr.reshape(-1, 2)
    v, w = arr[:, 0], arr[:, 1]
    if not np.all(np.isfinite(arr)) or np.any(w < 0):
        raise InvalidQueryError("Weights must be finite and nonnegative")
    if not w.sum() > 0:
        raise InvalidQueryError("Weighted median needs a positive total weight")
    return v, w


def weighted_median(values):
    """Smallest value t with weight(< t) < W/2 and weight(<= t) >= W/2.

    values is a sequence of (value, weight) pairs; equal values keep input order.
    """
    v, w = _as_pairs(values)
    order = np.argsort(v, kind='stable')
    cum = np.cumsum(w[order])
    idx = int(np.searchsorted(cum, cum[-1] / 2.0, side='left'))
    return float(v[order][idx])


def weighted_median_select(values, weights):
    """Same median as weighted_median by expected-linear selection, no full sort"""
    v, w = _as_pairs(np.column_stack([np.asarray(values, dtype=float),
                                      np.asarray(weights, dtype=float)]))
    half = w.sum() / 2.0
    below = 0.0
    while v.size > 1:
        pivot = np.partition(v, v.size // 2)[v.size // 2]
        less = v < pivot
        w_less = w[less].sum()
        w_eq = w[v == pivot].sum()
        if below + w_less >= half:
            v, w = v[less], w[less]
        elif below + w_less + w_eq >= half:
            return float(pivot)
        else:
            below += w_less + w_eq
            greater = v > pivot
            v, w = v[greater], w[greater]
    return float(v[0])
