import json
import logging

import pytest

from enn_cli import EXIT_DATA, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main, perturb, read_points, read_query
from enn_errors import InstanceFormatError, SkylineStateError
from geometry import Point, UncertainQuery
from topk_engine import EnnIndex


@pytest.fixture
def cli(enn_config, tmp_path, capsys):
    config_path = str(tmp_path / 'enn.cfg')

    def run(*args):
        capsys.readouterr()
        code = main(['--config', config_path, *[str(a) for a in args]])
        return code, capsys.readouterr().out

    return run


def write_query(path, locations, k, dim=2):
    path.write_text(json.dumps({'dim': dim, 'k': k, 'locations': locations}))
    return path


def test_one_dimensional_example(cli, tmp_path):
    points = tmp_path / 'p.txt'
    points.write_text("# id x\n1 1\n3 3\n\n5 5\n7 7\n")
    query = write_query(tmp_path / 'q.json', [{'x': 3.9, 'w': 1}], 2, dim=1)
    code, out = cli('query', points, query)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert [r['id'] for r in doc['results']] == [3, 5]
    assert [r['expected_distance'] for r in doc['results']] == pytest.approx([0.9, 1.1])
    assert doc['metadata']['n'] == 4 and doc['metadata']['truncated'] is False


def test_gen_is_deterministic(cli, tmp_path):
    for name in ('a', 'b'):
        code, _ = cli('gen', '--n', 30, '--m', 4, '--seed', 5,
                      '--points', tmp_path / f'{name}.txt', '--query', tmp_path / f'{name}.json')
        assert code == EXIT_OK
    assert (tmp_path / 'a.txt').read_bytes() == (tmp_path / 'b.txt').read_bytes()
    assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()
    points, dim = read_points(str(tmp_path / 'a.txt'))
    q, k, qdim = read_query(str(tmp_path / 'a.json'))
    assert len(points) == 30 and dim == 2 and q.m == 4 and qdim == 2


@pytest.mark.parametrize('dim', [1, 2])
def test_generated_queries_pass_oracle(cli, tmp_path, dim):
    for seed in range(5):
        cli('gen', '--n', 80, '--m', 6, '--k', 7, '--dim', dim, '--seed', seed,
            '--points', tmp_path / 'p.txt', '--query', tmp_path / 'q.json')
        code, out = cli('query', tmp_path / 'p.txt', tmp_path / 'q.json', '--oracle')
        assert code == EXIT_OK
        assert len(json.loads(out)['results']) == 7


def test_k_larger_than_n(cli, tmp_path):
    points = tmp_path / 'p.txt'
    points.write_text("0 1.0 2.0\n1 3.0 0.5\n")
    query = write_query(tmp_path / 'q.json', [{'x': 0.0, 'y': 0.0, 'w': 1.0}], 5)
    code, out = cli('query', points, query, '--stats')
    doc = json.loads(out)
    assert code == EXIT_OK
    assert len(doc['results']) == 2 and doc['metadata']['truncated'] is True
    assert {'heap_pushes', 'heap_pops', 'drags'} <= set(doc['metadata'])


def test_duplicate_coordinates_need_perturb(cli, tmp_path):
    points = tmp_path / 'p.txt'
    points.write_text("0 1 1\n1 1 2\n2 3 0.5\n")
    query = write_query(tmp_path / 'q.json', [{'x': 2.0, 'y': 2.0, 'w': 1.0}, {'x': 0.0, 'y': 5.0, 'w': 0.5}], 2)
    code, _ = cli('query', points, query)
    assert code == EXIT_DATA
    code, out = cli('query', points, query, '--perturb', '--oracle')
    assert code == EXIT_OK
    assert len(json.loads(out)['results']) == 2


def test_perturb_is_deterministic():
    points = [Point(0, 1.0, 1.0), Point(1, 1.0, 2.0)]
    q = UncertainQuery.from_tuples([(0.0, 0.0, 1.0)])
    first = perturb(points, q, 3, 1e-9)
    assert perturb(points, q, 3, 1e-9) == first
    assert first[0][0].x != first[0][1].x
    assert abs(first[0][0].x - 1.0) <= 1e-9


def test_malformed_inputs(cli, tmp_path):
    points = tmp_path / 'p.txt'
    points.write_text("0 1 1\n1 nope 2\n")
    query = write_query(tmp_path / 'q.json', [{'x': 0.0, 'y': 0.0, 'w': 1.0}], 1)
    assert cli('query', points, query)[0] == EXIT_DATA
    points.write_text("0 1 1\n1 2 2\n")
    (tmp_path / 'bad.json').write_text('{"dim": 2, "k": 1}')
    assert cli('query', points, tmp_path / 'bad.json')[0] == EXIT_DATA
    assert cli('query', points, tmp_path / 'missing.json')[0] == EXIT_DATA
    mixed = tmp_path / 'mixed.txt'
    mixed.write_text("0 1 1\n1 2\n")
    with pytest.raises(InstanceFormatError):
        read_points(str(mixed))


def test_usage_errors_exit_one(cli, tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli('gen', '--n', 10)
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli('query', tmp_path / 'p.txt', tmp_path / 'q.json', '--k', 0)
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli('bench', '--sizes', 'ten')
    assert exc.value.code == EXIT_USAGE


@pytest.mark.parametrize('workers', [1, 2])
def test_bench_rows(cli, workers):
    code, out = cli('bench', '--sizes', '1,64', '--m', 3, '--k', 4, '--queries', 3, '--workers', workers)
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == 'n,m,k,build_ms,query_ms,cells_visited'
    assert [line.split(',')[0] for line in lines[1:]] == ['1', '64']


def test_snapshot_and_load(cli, tmp_path):
    cli('gen', '--n', 60, '--m', 4, '--points', tmp_path / 'p.txt', '--query', tmp_path / 'q.json')
    snap = tmp_path / 'p.snap'
    assert cli('snapshot', tmp_path / 'p.txt', snap)[0] == EXIT_OK
    assert cli('snapshot', '--load', snap, '--check', tmp_path / 'p.txt')[0] == EXIT_OK
    snap.write_bytes(snap.read_bytes()[:-5])
    assert cli('snapshot', '--load', snap)[0] == EXIT_DATA


def test_verify_and_golden(cli, tmp_path):
    golden = tmp_path / 'golden.json'
    code, out = cli('verify', '--instances', 3, '--n', 50, '--m', 8, '--k', 5, '--golden', golden)
    assert code == EXIT_OK
    assert json.loads(out) == {'instances': 3, 'failures': 0}
    report = json.loads(golden.read_text())
    assert len(report['topk']) == 5
    code, _ = cli('verify', '--instances', 2, '--n', 40, '--m', 3, '--k', 4, '--dim', 1)
    assert code == EXIT_OK


def test_exit_code_constants():
    assert (EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MISMATCH) == (0, 1, 2, 3)


def run_main(tmp_path, capsys, *args):
    capsys.readouterr()
    code = main(['--config', str(tmp_path / 'enn.cfg'), *[str(a) for a in args]])
    return code, capsys.readouterr().err


def test_dimension_mismatch_between_files(enn_config, tmp_path, capsys):
    points = tmp_path / 'p.txt'
    points.write_text("0 1 1\n1 2 2\n")
    query = write_query(tmp_path / 'q.json', [{'x': 1.5, 'w': 1.0}], 1, dim=1)
    code, err = run_main(tmp_path, capsys, 'query', points, query)
    assert code == EXIT_DATA
    assert "1-D query needs 'id x' records" in err
    flat = tmp_path / 'flat.txt'
    flat.write_text("0 1\n1 2\n")
    query = write_query(tmp_path / 'q2.json', [{'x': 1.5, 'y': 0.0, 'w': 1.0}], 1)
    code, err = run_main(tmp_path, capsys, 'query', flat, query)
    assert code == EXIT_DATA
    assert "2-D query needs 'id x y' records" in err


def test_internal_state_error_is_reported_separately(enn_config, tmp_path, monkeypatch, capsys, caplog):
    def broken(self, q, k):
        raise SkylineStateError("Cell (0, 0) is not a skyline cell")

    monkeypatch.setattr(EnnIndex, 'query_topk', broken)
    points = tmp_path / 'p.txt'
    points.write_text("0 1 1\n1 2 2\n")
    query = write_query(tmp_path / 'q.json', [{'x': 0.0, 'y': 0.0, 'w': 1.0}], 1)
    with caplog.at_level(logging.ERROR, logger='enn_cli'):
        code, err = run_main(tmp_path, capsys, 'query', points, query)
    assert code == EXIT_DATA
    assert "*** INTERNAL ERROR: Cell (0, 0) is not a skyline cell ***" in err
    assert "CLI ERROR" not in err
    records = [r for r in caplog.records if r.name == 'enn_cli' and r.levelno == logging.ERROR]
    assert records and records[-1].exc_info is not None
    assert "internal state error" in records[-1].getMessage()
