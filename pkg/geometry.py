"""Value types and L1 primitives shared by every engine module."""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from enn_errors import GeneralPositionError, InstanceFormatError, InvalidQueryError

INF = math.inf


@dataclass(frozen=True)
class Point:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class WeightedLocation:
    x: float
    y: float
    w: float


@dataclass(frozen=True)
class UncertainQuery:
    locations: Tuple[WeightedLocation, ...]

    @classmethod
    def from_tuples(cls, triples):
        """Build from (x, y, w) triples"""
        return cls(tuple(WeightedLocation(float(x), float(y), float(w)) for x, y, w in triples))

    @property
    def m(self):
        return len(self.locations)

    @property
    def total_weight(self):
        return math.fsum(loc.w for loc in self.locations)

    def validate(self):
        if not self.locations:
            raise InvalidQueryError("Query has no locations")
        for loc in self.locations:
            if not (math.isfinite(loc.x) and math.isfinite(loc.y) and math.isfinite(loc.w)):
                raise InvalidQueryError(f"Non-finite query location {loc}")
            if loc.w < 0:
                raise InvalidQueryError(f"Negative weight {loc.w} at ({loc.x}, {loc.y})")
        if not self.total_weight > 0:
            raise InvalidQueryError("Query total weight must be positive")


@dataclass(frozen=True)
class Cell:
    """Axis-parallel rectangle; each side is open or closed independently."""
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    x_lo_closed: bool = True
    x_hi_closed: bool = True
    y_lo_closed: bool = True
    y_hi_closed: bool = True

    def __post_init__(self):
        if self.x_lo > self.x_hi or self.y_lo > self.y_hi:
            raise ValueError(f"Malformed cell {self}")

    def contains(self, x, y):
        return (_inside(x, self.x_lo, self.x_hi, self.x_lo_closed, self.x_hi_closed)
                and _inside(y, self.y_lo, self.y_hi, self.y_lo_closed, self.y_hi_closed))


def _inside(v, lo, hi, lo_closed, hi_closed):
    if v < lo or (v == lo and not lo_closed):
        return False
    if v > hi or (v == hi and not hi_closed):
        return False
    return True


def reflect_interval(lo, hi, lo_closed, hi_closed, sign):
    """Map the interval through v -> sign * v"""
    if sign > 0:
        return lo, hi, lo_closed, hi_closed
    return -hi, -lo, hi_closed, lo_closed


@dataclass(frozen=True)
class DragQuery:
    """Axis-parallel segment translated along the perpendicular axis.

    A vertical segment sits at x = fixed_coord, spans y and moves along x;
    a horizontal one sits at y = fixed_coord, spans x and moves along y.
    """
    segment_axis: str
    fixed_coord: float
    span: Tuple[float, float]
    direction: int = 1
    span_flags: Tuple[bool, bool] = (True, True)

    def __post_init__(self):
        if self.segment_axis not in ('vertical', 'horizontal'):
            raise ValueError(f"Unknown segment axis {self.segment_axis}")
        if self.direction not in (1, -1):
            raise ValueError(f"Drag direction must be +1 or -1, got {self.direction}")
        if self.span[0] > self.span[1]:
            raise ValueError(f"Malformed drag span {self.span}")

    def hits(self, p):
        """Whether p is swept at all, ignoring nearer points"""
        if self.segment_axis == 'vertical':
            along, across = p.y, p.x
        else:
            along, across = p.x, p.y
        if not _inside(along, self.span[0], self.span[1], self.span_flags[0], self.span_flags[1]):
            return False
        return (across - self.fixed_coord) * self.direction >= 0


@dataclass(frozen=True)
class QuadrantFrame:
    """Reflection that maps one closed quadrant around origin onto the first one.

    Frame coordinates are (sign_x * x, sign_y * y); no translation is applied
    so reflected values stay exact.
    """
    origin: Tuple[float, float]
    sign_x: int = 1
    sign_y: int = 1

    def __post_init__(self):
        if self.sign_x not in (1, -1) or self.sign_y not in (1, -1):
            raise ValueError("Frame signs must be exactly +1 or -1")

    @property
    def frame_origin(self):
        return self.sign_x * self.origin[0], self.sign_y * self.origin[1]

    def to_frame(self, p):
        return self.sign_x * p.x, self.sign_y * p.y

    def in_quadrant(self, p):
        fx, fy = self.to_frame(p)
        ox, oy = self.frame_origin
        return fx >= ox and fy >= oy

    def cell(self, x_lo, x_hi, y_lo, y_hi, x_flags=(True, False), y_flags=(True, False)):
        """Frame-space rectangle as a Cell in original coordinates"""
        ax = reflect_interval(x_lo, x_hi, x_flags[0], x_flags[1], self.sign_x)
        ay = reflect_interval(y_lo, y_hi, y_flags[0], y_flags[1], self.sign_y)
        return Cell(ax[0], ax[1], ay[0], ay[1], ax[2], ax[3], ay[2], ay[3])

    def drag_right(self, fixed, lo, hi, lo_closed=True, hi_closed=True):
        """Vertical segment at frame X = fixed moved towards larger frame X"""
        y_lo, y_hi, c_lo, c_hi = reflect_interval(lo, hi, lo_closed, hi_closed, self.sign_y)
        return DragQuery('vertical', self.sign_x * fixed, (y_lo, y_hi), self.sign_x, (c_lo, c_hi))

    def drag_up(self, fixed, lo, hi, lo_closed=True, hi_closed=True):
        """Horizontal segment at frame Y = fixed moved towards larger frame Y"""
        x_lo, x_hi, c_lo, c_hi = reflect_interval(lo, hi, lo_closed, hi_closed, self.sign_x)
        return DragQuery('horizontal', self.sign_y * fixed, (x_lo, x_hi), self.sign_y, (c_lo, c_hi))


QUADRANT_SIGNS = ((1, 1), (-1, 1), (-1, -1), (1, -1))


def quadrant_frames(origin):
    return [QuadrantFrame(origin, sx, sy) for sx, sy in QUADRANT_SIGNS]


def l1_distance(p, q):
    return abs(p[0] - q[0]) + abs(p[1] - q[1])


def dominates(p1, p2, frame):
    x1, y1 = frame.to_frame(p1)
    x2, y2 = frame.to_frame(p2)
    return x1 <= x2 and y1 <= y2


def check_general_position(points: Sequence[Point]):
    """Raise GeneralPositionError naming the first pair sharing a coordinate"""
    ids = set()
    for p in points:
        if p.id in ids:
            raise InstanceFormatError(f"Duplicate point id {p.id}")
        ids.add(p.id)
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise InstanceFormatError(f"Point {p.id} has a non-finite coordinate")
    for axis in ('x', 'y'):
        seen: Dict[float, int] = {}
        for p in points:
            v = getattr(p, axis)
            if v in seen:
                raise GeneralPositionError(axis, seen[v], p.id)
            seen[v] = p.id


@dataclass(frozen=True)
class Neighbor:
    id: int
    x: float
    y: Optional[float]
    distance: float


@dataclass
class TopKResult:
    neighbors: List[Neighbor]
    truncated: bool = False
    q_star: Optional[Tuple[float, float]] = None
    stats: Optional[object] = None

    @property
    def ids(self):
        return [nb.id for nb in self.neighbors]

    @property
    def distances(self):
        return [nb.distance for nb in self.neighbors]

    def __len__(self):
        return len(self.neighbors)
