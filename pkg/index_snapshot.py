"""Versioned binary container for a built ENN index.

Layout: magic b'ENNS', one version byte, payload length (8 bytes, little
endian), SHA-256 of the payload, payload. The payload is a run of .npy
blobs: ids, xs, ys, x_order, y_order. Loading rebuilds the trees from the
stored orders without sorting again.
"""

import hashlib
import io
import logging
import struct

import numpy as np

from enn_config import DEFAULT_HULL_LEAF_LEVEL
from enn_errors import SnapshotChecksumError, SnapshotError, SnapshotVersionError
from geometry import Point
from topk_engine import EnnIndex

MAGIC = b'ENNS'
VERSION = 1
_HEADER = struct.Struct('<4sBQ32s')

logger = logging.getLogger(__name__)


def snapshot_bytes(index):
    ids = np.array([p.id for p in index.points], dtype=np.int64)
    xs = np.array([p.x for p in index.points], dtype=float)
    ys = np.array([p.y for p in index.points], dtype=float)
    buf = io.BytesIO()
    for arr in (ids, xs, ys, np.asarray(index.x_order, dtype=np.int64), np.asarray(index.y_order, dtype=np.int64)):
        np.save(buf, arr, allow_pickle=False)
    payload = buf.getvalue()
    return _HEADER.pack(MAGIC, VERSION, len(payload), hashlib.sha256(payload).digest()) + payload


def save_snapshot(index, path):
    data = snapshot_bytes(index)
    with open(path, 'wb') as f:
        f.write(data)
    logger.info(f"Wrote snapshot of {len(index)} points to {path} ({len(data)} bytes)")
    return len(data)


def _check_orders(ids, x_order, y_order, xs, ys):
    n = len(ids)
    for name, order, keys in (('x', x_order, xs), ('y', y_order, ys)):
        if len(order) != n or not np.array_equal(np.sort(order), np.arange(n)):
            raise SnapshotError(f"Stored {name}-order is not a permutation of {n} points")
        if n > 1 and np.any(np.diff(keys[order]) < 0):
            raise SnapshotError(f"Stored {name}-order does not sort the coordinates")


def parse_snapshot(data, hull_leaf_level=DEFAULT_HULL_LEAF_LEVEL):
    if len(data) < _HEADER.size:
        raise SnapshotChecksumError(f"Snapshot truncated: {len(data)} bytes is shorter than the header")
    magic, version, length, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"Not an ENN snapshot (magic {magic!r})")
    if version != VERSION:
        raise SnapshotVersionError(f"Unsupported snapshot version {version}, expected {VERSION}")
    payload = data[_HEADER.size:]
    if len(payload) != length or hashlib.sha256(payload).digest() != digest:
        raise SnapshotChecksumError(f"Snapshot checksum mismatch ({len(payload)} of {length} payload bytes)")
    buf = io.BytesIO(payload)
    try:
        ids, xs, ys, x_order, y_order = (np.load(buf, allow_pickle=False) for _ in range(5))
    except ValueError as e:
        raise SnapshotError(f"Corrupt snapshot payload: {e}")
    _check_orders(ids, x_order, y_order, xs, ys)
    points = [Point(int(i), float(x), float(y)) for i, x, y in zip(ids.tolist(), xs.tolist(), ys.tolist())]
    return EnnIndex(points, hull_leaf_level, x_order=x_order, y_order=y_order)


def load_snapshot(path, hull_leaf_level=DEFAULT_HULL_LEAF_LEVEL):
    with open(path, 'rb') as f:
        data = f.read()
    index = parse_snapshot(data, hull_leaf_level)
    logger.info(f"Loaded snapshot of {len(index)} points from {path}")
    return index
