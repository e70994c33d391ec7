import os

import numpy as np
import pytest

from enn_config import EnnConfig
from geometry import Point, UncertainQuery

SLOW = os.environ.get('ENN_SLOW_TESTS', '') not in ('', '0')

slow = pytest.mark.skipif(not SLOW, reason="set ENN_SLOW_TESTS=1 to run scaling checks")


def random_points(rng, n, coord_range=100.0):
    """n points with pairwise distinct x and y, no three collinear in practice"""
    while True:
        xs = rng.uniform(0, coord_range, n)
        ys = rng.uniform(0, coord_range, n)
        if len(set(xs.tolist())) == n and len(set(ys.tolist())) == n:
            return [Point(i, float(x), float(y)) for i, (x, y) in enumerate(zip(xs, ys))]


def random_query(rng, m, coord_range=100.0):
    return UncertainQuery.from_tuples(zip(rng.uniform(0, coord_range, m).tolist(),
                                          rng.uniform(0, coord_range, m).tolist(),
                                          rng.uniform(0.1, 1.0, m).tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def three_points():
    return [Point(0, 1.0, 1.0), Point(1, 2.0, 3.0), Point(2, 4.0, 2.0)]


@pytest.fixture
def anti_diagonal():
    return [Point(i, float(i + 1), float(5 - i)) for i in range(5)]


@pytest.fixture
def enn_config(tmp_path, monkeypatch):
    monkeypatch.delenv('ENN_LOG_LEVEL', raising=False)
    cfg = tmp_path / 'enn.cfg'
    cfg.write_text(
        "[DEFAULT]\n"
        f"LogFile = {tmp_path / 'enn.log'}\n"
        "LogLevel = DEBUG\n"
        "HullLeafLevel = 2\n"
        "Seed = 11\n"
        "BenchSizes = 1,64\n"
        "BenchQueries = 3\n"
    )
    return EnnConfig(str(cfg), defaults_file=str(tmp_path / 'missing.json'))
