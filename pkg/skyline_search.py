"""Skyline cell enumeration for one quadrant and its update after a removal.

All reasoning happens in frame coordinates (see QuadrantFrame), where the
quadrant is X >= X0, Y >= Y0 and the skyline runs from the upper left to the
lower right. Columns and rows of the arrangement are half-open, closed on
their low side. Every cursor keeps the drags that found its points so a
removal only re-runs the drags that could have changed.
"""

import logging
from bisect import bisect_right
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Tuple

from sortedcontainers import SortedDict

from enn_errors import SkylineStateError
from geometry import INF, Cell, DragQuery, Point


class SegmentKind(Enum):
    S0 = 's0'  # entry of a column: skyline-left of its top cell
    S1 = 's1'  # lowest skyline point of a column
    S2 = 's2'  # skyline-left of a cell below the column's top
    S3 = 's3'  # skyline-bottom of a cell above the column's bottom


class CellStatus(Enum):
    RETAINED = 'retained'
    DROPPED = 'dropped'


@dataclass(frozen=True)
class GeneratingSegment:
    kind: SegmentKind
    query: DragQuery


@dataclass(frozen=True)
class SkylineCellCursor:
    address: Tuple[int, int]
    cell: Cell
    left: Point
    left_segment: GeneratingSegment
    bottom: Point
    bottom_segment: GeneratingSegment

    @property
    def column_id(self):
        return self.address[0]

    @property
    def row(self):
        return self.address[1]


class ArrangementGrid:
    """Columns and rows cut by the query's lines inside one quadrant"""

    def __init__(self, profile, frame, bounds=None):
        self.frame = frame
        x0, y0 = frame.frame_origin
        self.x_bounds = [x0] + sorted({frame.sign_x * v for v in profile.xs_sorted.tolist()
                                       if frame.sign_x * v > x0}) + [INF]
        self.y_bounds = [y0] + sorted({frame.sign_y * v for v in profile.ys_sorted.tolist()
                                       if frame.sign_y * v > y0}) + [INF]
        if bounds is None:
            self.y_extent = None
        else:
            self.y_extent = bounds[3] if frame.sign_y > 0 else -bounds[2]

    @property
    def columns(self):
        return len(self.x_bounds) - 1

    @property
    def rows(self):
        return len(self.y_bounds) - 1

    def column_of(self, p):
        return bisect_right(self.x_bounds, self.frame.sign_x * p.x) - 1

    def row_of(self, p):
        return bisect_right(self.y_bounds, self.frame.sign_y * p.y) - 1

    def address_of(self, p):
        return self.column_of(p), self.row_of(p)

    def cell(self, address):
        c, r = address
        return self.frame.cell(self.x_bounds[c], self.x_bounds[c + 1],
                               self.y_bounds[r], self.y_bounds[r + 1])

    def sub_cell(self, address, y_lo, y_hi, lo_closed, hi_closed):
        """Part of a cell between two frame-Y values"""
        c = address[0]
        return self.frame.cell(self.x_bounds[c], self.x_bounds[c + 1], y_lo, y_hi,
                               (True, False), (lo_closed, hi_closed))


def _canonical_key(address):
    return address[0], -address[1]


class SkylineCellSet:
    """Cursors in canonical order: column ascending, row descending within a column.

    Backed by a SortedDict keyed by (column, -row); positional access and
    splicing cost O(log |C|) per cursor touched.
    """

    def __init__(self, grid, cursors=()):
        self.grid = grid
        self._cells = SortedDict((_canonical_key(c.address), c) for c in cursors)

    def __len__(self):
        return len(self._cells)

    def __iter__(self):
        return iter(self._cells.values())

    def __getitem__(self, i):
        return self._cells.peekitem(i)[1]

    @property
    def cursors(self) -> List[SkylineCellCursor]:
        return list(self._cells.values())

    def addresses(self):
        return [c.address for c in self]

    def index_of(self, address):
        key = _canonical_key(address)
        if key not in self._cells:
            raise SkylineStateError(f"Cell {address} is not a skyline cell")
        return self._cells.index(key)

    def column_slice(self, col):
        return self._cells.bisect_left((col, -INF)), self._cells.bisect_left((col + 1, -INF))

    def splice(self, lo, hi, pieces):
        """Replace the cursors at positions [lo, hi) by pieces; returns the replaced addresses"""
        replaced = list(self._cells.islice(lo, hi))
        for key in replaced:
            del self._cells[key]
        for cursor in pieces:
            self._cells[_canonical_key(cursor.address)] = cursor
        return {(col, -neg_row) for col, neg_row in replaced}


class SkylineSearch:
    def __init__(self, drag, profile, frame, grid=None):
        self.logger = logging.getLogger(__name__)
        self.drag = drag
        self.frame = frame
        self.grid = grid if grid is not None else ArrangementGrid(profile, frame, drag.bounds)
        self.x0, self.y0 = frame.frame_origin

    def _fx(self, p):
        return self.frame.sign_x * p.x

    def _fy(self, p):
        return self.frame.sign_y * p.y

    def _run(self, kind, query):
        return self.drag.drag(query), GeneratingSegment(kind, query)

    def _s0(self, x, y_hi, hi_closed):
        return self._run(SegmentKind.S0, self.frame.drag_right(x, self.y0, y_hi, True, hi_closed))

    def _s1(self, col):
        xb = self.grid.x_bounds
        return self._run(SegmentKind.S1, self.frame.drag_up(self.y0, xb[col], xb[col + 1], True, False))

    def _s2(self, col, row):
        yb = self.grid.y_bounds
        return self._run(SegmentKind.S2,
                         self.frame.drag_right(self.grid.x_bounds[col], yb[row], yb[row + 1], True, False))

    def _s3(self, col, row, left):
        return self._run(SegmentKind.S3, self.frame.drag_up(self.grid.y_bounds[row + 1],
                                                            self.grid.x_bounds[col], self._fx(left),
                                                            True, False))

    def _redrag(self, segment):
        return self.drag.drag(segment.query)

    def _cursor(self, col, row, left, left_segment, bottom, bottom_segment):
        return SkylineCellCursor((col, row), self.grid.cell((col, row)),
                                 left, left_segment, bottom, bottom_segment)

    def _expect_in_column(self, p, col, what):
        if p is None or self.grid.column_of(p) != col:
            self.logger.warning(f"{what} left column {col}: {p}")
            raise SkylineStateError(f"{what} is not in column {col}")

    def _climb(self, col, bottom, bottom_segment, entry, entry_segment, upper_keep=None):
        """Cells of one column from bottom's cell up to the entry's cell (or up to
        upper_keep, whose bottom is replaced), returned top-down"""
        out = []
        entry_row = self.grid.row_of(entry)
        row = self.grid.row_of(bottom)
        while True:
            if upper_keep is not None and row == upper_keep.row:
                out.append(replace(upper_keep, bottom=bottom, bottom_segment=bottom_segment))
                break
            if row > entry_row or (upper_keep is not None and row > upper_keep.row):
                raise SkylineStateError(f"Climb in column {col} overshot to row {row}")
            if row == entry_row:
                out.append(self._cursor(col, row, entry, entry_segment, bottom, bottom_segment))
                break
            left, left_segment = self._s2(col, row)
            self._expect_in_column(left, col, "Skyline-left point")
            out.append(self._cursor(col, row, left, left_segment, bottom, bottom_segment))
            bottom, bottom_segment = self._s3(col, row, left)
            self._expect_in_column(bottom, col, "Skyline-bottom point")
            row = self.grid.row_of(bottom)
        out.reverse()
        return out

    def _column(self, col, entry, entry_segment):
        bottom, bottom_segment = self._s1(col)
        self._expect_in_column(bottom, col, "Column bottom")
        return self._climb(col, bottom, bottom_segment, entry, entry_segment), bottom

    def _next_entry(self, col, lowest):
        """Entry of the first skyline column right of col, below its lowest point"""
        if col + 1 >= self.grid.columns:
            return None, None
        return self._s0(self.grid.x_bounds[col + 1], self._fy(lowest), False)

    def compute_c1(self):
        if self.grid.y_extent is None or self.grid.y_extent < self.y0:
            return SkylineCellSet(self.grid, [])
        cursors = []
        entry, segment = self._s0(self.x0, self.grid.y_extent, True)
        while entry is not None:
            col = self.grid.column_of(entry)
            cells, lowest = self._column(col, entry, segment)
            cursors.extend(cells)
            entry, segment = self._next_entry(col, lowest)
        self.logger.debug(f"Frame ({self.frame.sign_x}, {self.frame.sign_y}): {len(cursors)} skyline cells")
        return SkylineCellSet(self.grid, cursors)

    def advance_cells(self, prev, removed):
        """Update prev in place after removed (already deleted from the drag index) leaves.

        Returns (prev, fresh, status) where fresh holds the cursors whose
        addresses were not skyline cells before and status tells whether
        removed's cell is still a skyline cell.
        """
        address = self.grid.address_of(removed)
        i = prev.index_of(address)
        cur = prev[i]
        is_left = cur.left.id == removed.id
        is_bottom = cur.bottom.id == removed.id
        if not (is_left or is_bottom):
            return prev, [], CellStatus.RETAINED

        col, row = address
        s, e = prev.column_slice(col)
        if i == s and is_left:
            entry, entry_segment = self._redrag(cur.left_segment), cur.left_segment
        else:
            entry, entry_segment = prev[s].left, prev[s].left_segment

        carry, carry_segment = None, None
        if entry is None or self.grid.column_of(entry) != col:
            # the column holds no skyline point any more
            pieces, lo, hi = [], s, e
            carry, carry_segment = entry, entry_segment
            continue_right = True
        elif self.grid.row_of(entry) < row:
            # removed was alone in the column's top cell and nothing it dominated
            # takes its place; the next cell down now opens the column
            if i + 1 >= e or prev[i + 1].left.id != entry.id:
                self.logger.warning(f"Entry {entry.id} of column {col} does not open the cell below {address}")
                raise SkylineStateError(f"Column {col} entry {entry.id} is not the left point of the next cell")
            pieces = [replace(prev[i + 1], left=entry, left_segment=entry_segment)]
            lo, hi = i, i + 2
            continue_right = False
        else:
            upper_keep = prev[i - 1] if i > s else None
            if is_bottom:
                bottom, bottom_segment = self._redrag(cur.bottom_segment), cur.bottom_segment
                self._expect_in_column(bottom, col, "Re-dragged bottom")
            else:
                bottom, bottom_segment = cur.bottom, cur.bottom_segment
            pieces = self._climb(col, bottom, bottom_segment, entry, entry_segment, upper_keep)
            lo = i - 1 if upper_keep is not None else s
            continue_right = is_bottom and i == e - 1
            hi = e if continue_right else i + 1
            if continue_right:
                carry, carry_segment = self._next_entry(col, pieces[-1].bottom)

        if continue_right:
            j = e
            while carry is not None:
                c2 = self.grid.column_of(carry)
                top = prev[j] if j < len(prev) else None
                if top is not None and top.column_id < c2:
                    raise SkylineStateError(f"Column {top.column_id} skipped after removing {removed.id}")
                if top is not None and top.column_id == c2:
                    if top.left.id == carry.id:
                        pieces.append(replace(top, left_segment=carry_segment))
                    else:
                        pieces.extend(self._climb(c2, top.bottom, top.bottom_segment, carry, carry_segment))
                    hi = j + 1
                    break
                cells, lowest = self._column(c2, carry, carry_segment)
                pieces.extend(cells)
                carry, carry_segment = self._next_entry(c2, lowest)
            else:
                if j < len(prev):
                    raise SkylineStateError(f"Skyline ended before column {prev[j].column_id}")

        replaced = prev.splice(lo, hi, pieces)
        fresh = [c for c in pieces if c.address not in replaced]
        status = CellStatus.RETAINED if any(c.address == address for c in pieces) else CellStatus.DROPPED
        return prev, fresh, status


def compute_c1(drag, profile, frame):
    return SkylineSearch(drag, profile, frame).compute_c1()


def advance_cells(prev, removed, drag, frame):
    return SkylineSearch(drag, None, frame, grid=prev.grid).advance_cells(prev, removed)
