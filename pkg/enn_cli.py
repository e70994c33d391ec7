#!/usr/bin/env python3

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime

import numpy as np

from enn1d import build_1d, query_1d
from enn_config import EnnConfig
from enn_errors import EnnError, IndexStateError, InstanceFormatError
from geometry import Point, UncertainQuery, WeightedLocation
from index_snapshot import load_snapshot, save_snapshot
from instance_gen import draw_query, generate_instance
from oracle import oracle_report, oracle_topk
from topk_engine import EnnIndex

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MISMATCH = 3


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser that exits with 1 on usage errors"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_points(path):
    """Points file: 'id x y' per line, or 'id x' for 1-D data (y stored as 0.0)"""
    points = []
    widths = set()
    with open(path, 'r') as f:
        for lineno, line in enumerate(f, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InstanceFormatError(f"{path}:{lineno}: expected 'id x [y]', got {line!r}")
            try:
                pid, x = int(parts[0]), float(parts[1])
                y = float(parts[2]) if len(parts) == 3 else 0.0
            except ValueError as e:
                raise InstanceFormatError(f"{path}:{lineno}: {e}")
            widths.add(len(parts))
            points.append(Point(pid, x, y))
    if len(widths) > 1:
        raise InstanceFormatError(f"{path}: mixes 1-D and 2-D records")
    return points, (1 if widths == {2} else 2)


def write_points(path, points, dim):
    with open(path, 'w') as f:
        for p in points:
            f.write(f"{p.id} {p.x!r}\n" if dim == 1 else f"{p.id} {p.x!r} {p.y!r}\n")


def read_query(path):
    """Query file: JSON {"dim": 1|2, "k": int, "locations": [{"x", "y", "w"}]}"""
    try:
        with open(path, 'r') as f:
            doc = json.load(f)
        dim = int(doc.get('dim', 2))
        k = int(doc['k']) if 'k' in doc else None
        locations = tuple(WeightedLocation(float(loc['x']), float(loc.get('y', 0.0)) if dim == 2 else 0.0,
                                           float(loc['w']))
                          for loc in doc['locations'])
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise InstanceFormatError(f"{path}: malformed query file: {e}")
    if dim not in (1, 2):
        raise InstanceFormatError(f"{path}: dim must be 1 or 2, got {dim}")
    return UncertainQuery(locations), k, dim


def write_query(path, query, k, dim):
    locations = [{'x': loc.x, 'w': loc.w} if dim == 1 else {'x': loc.x, 'y': loc.y, 'w': loc.w}
                 for loc in query.locations]
    with open(path, 'w') as f:
        json.dump({'dim': dim, 'k': k, 'locations': locations}, f, indent=2)
        f.write('\n')


def perturb(points, query, seed, magnitude, dim=2):
    """Seed-derived jitter of relative size magnitude on every coordinate"""
    rng = np.random.default_rng(seed)

    def jitter(v):
        return v + magnitude * max(1.0, abs(v)) * float(rng.uniform(-1.0, 1.0))

    moved = [Point(p.id, jitter(p.x), jitter(p.y) if dim == 2 else p.y) for p in points]
    locations = tuple(WeightedLocation(jitter(loc.x), jitter(loc.y) if dim == 2 else loc.y, loc.w)
                      for loc in query.locations)
    return moved, UncertainQuery(locations)


def results_agree(result, expected):
    if result.ids != expected.ids:
        return False
    return all(math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)
               for a, b in zip(result.distances, expected.distances))


class EnnCLI:
    def __init__(self, config=None, verbose=False):
        self.config = config or EnnConfig()
        self.logger = logging.getLogger(__name__)
        self.verbose = verbose
        self.message_log = []

    def log_message(self, message):
        """Log to the log file and, when verbose, to standard error"""
        timestamp = datetime.now().strftime("%H:%M:%S.%f")[:-3]
        log_entry = f"[{timestamp}] {message}"
        self.logger.info(message)
        if self.verbose:
            print(log_entry, file=sys.stderr)
        self.message_log.append(log_entry)

    def _generate(self, n, m, seed, k=None, dim=2, min_gap=None):
        defaults = self.config.defaults
        return generate_instance(
            n, m, seed=seed, k=k, dim=dim,
            coord_range=self.config.COORD_RANGE,
            min_gap=self.config.MIN_RELATIVE_GAP if min_gap is None else min_gap,
            retries=self.config.GEN_RETRIES,
            weight_low=defaults.get('weight_low', 0.1),
            weight_high=defaults.get('weight_high', 1.0),
        )

    def _run_engine(self, points, query, k, dim):
        if dim == 1:
            index = build_1d([(p.x, p.id) for p in points])
            return query_1d(index, [(loc.x, loc.w) for loc in query.locations], k)
        return EnnIndex(points, self.config.HULL_LEAF_LEVEL).query_topk(query, k)

    def gen(self, n, m, k, dim, seed, points_path, query_path):
        instance = self._generate(n, m, seed, k=k, dim=dim)
        write_points(points_path, instance.points, dim)
        write_query(query_path, instance.query, instance.k, dim)
        self.log_message(f"Generated n={n} m={m} dim={dim} seed={seed} -> {points_path}, {query_path}")
        return EXIT_OK

    def query(self, points_path, query_path, k=None, oracle=False, perturb_coords=False, stats=False, seed=None):
        points, point_dim = read_points(points_path)
        q, file_k, dim = read_query(query_path)
        if dim == 2 and point_dim == 1:
            raise InstanceFormatError(f"{points_path}: 2-D query needs 'id x y' records")
        if dim == 1 and point_dim == 2:
            raise InstanceFormatError(f"{points_path}: 1-D query needs 'id x' records")
        k = k if k is not None else (file_k if file_k is not None else self.config.defaults.get('k', 10))
        if perturb_coords:
            seed = self.config.SEED if seed is None else seed
            points, q = perturb(points, q, seed, self.config.PERTURB_MAGNITUDE, dim)
            self.log_message(f"Perturbed coordinates with seed {seed}")

        start = time.perf_counter()
        result = self._run_engine(points, q, k, dim)
        elapsed = int((time.perf_counter() - start) * 1e6)

        if dim == 2:
            run_stats = result.stats.as_dict()
            cells_visited = run_stats['cells_visited']
        else:
            run_stats = {'heap_pushes': 0, 'heap_pops': 0, 'drags': 0, 'strategy': result.stats['strategy']}
            cells_visited = result.stats['left_scanned'] + result.stats['right_scanned']
        metadata = {'n': len(points), 'm': q.m, 'k': k, 'elapsed_micros': elapsed,
                    'cells_visited': cells_visited, 'truncated': result.truncated}
        if stats:
            metadata.update({key: value for key, value in run_stats.items()
                             if key in ('heap_pushes', 'heap_pops', 'drags', 'strategy')})
        doc = {
            'results': [{'id': nb.id, 'x': nb.x, 'y': nb.y if dim == 2 else None,
                         'expected_distance': nb.distance} for nb in result.neighbors],
            'metadata': metadata,
        }
        print(json.dumps(doc, indent=2))

        if oracle:
            expected = oracle_topk(points, q, k)
            if not results_agree(result, expected):
                self.log_message(f"*** ORACLE MISMATCH: engine {result.ids} vs oracle {expected.ids} ***")
                return EXIT_MISMATCH
            self.log_message("Oracle agrees")
        return EXIT_OK

    def _bench_queries(self, index, queries, k):
        total_cells = 0
        start = time.perf_counter()
        for q in queries:
            total_cells += index.query_topk(q, k).stats.cells_visited
        return time.perf_counter() - start, total_cells

    def bench(self, sizes, m, k, queries, workers, seed):
        workers = max(1, workers)
        print("n,m,k,build_ms,query_ms,cells_visited")
        for n in sizes:
            instance = self._generate(n, m, seed, k=k, min_gap=0.0)
            start = time.perf_counter()
            index = EnnIndex(instance.points, self.config.HULL_LEAF_LEVEL)
            build_ms = (time.perf_counter() - start) * 1000
            rng = np.random.default_rng(seed + n)
            batch = [draw_query(rng, m, self.config.COORD_RANGE) for _ in range(queries)]
            replicas = [index] + [index.clone() for _ in range(workers - 1)]
            chunks = [batch[i::workers] for i in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(lambda job: self._bench_queries(job[0], job[1], k),
                                         zip(replicas, chunks)))
            query_seconds = sum(o[0] for o in outcomes)
            cells = sum(o[1] for o in outcomes)
            count = max(1, len(batch))
            print(f"{n},{m},{k},{build_ms:.3f},{query_seconds * 1000 / count:.3f},{cells / count:.1f}")
            sys.stdout.flush()
            self.log_message(f"Bench n={n}: build {build_ms:.1f} ms, {count} queries on {workers} workers")
        return EXIT_OK

    def snapshot(self, points_path, out_path):
        points, dim = read_points(points_path)
        if dim != 2:
            raise InstanceFormatError(f"{points_path}: snapshots hold 2-D point sets only")
        index = EnnIndex(points, self.config.HULL_LEAF_LEVEL)
        size = save_snapshot(index, out_path)
        self.log_message(f"Snapshot of {len(points)} points written to {out_path} ({size} bytes)")
        return EXIT_OK

    def load(self, snap_path, check_path=None, queries=100, seed=None):
        index = load_snapshot(snap_path, self.config.HULL_LEAF_LEVEL)
        self.log_message(f"Loaded snapshot {snap_path} with {len(index)} points")
        if not check_path:
            return EXIT_OK
        points, _ = read_points(check_path)
        fresh = EnnIndex(points, self.config.HULL_LEAF_LEVEL)
        rng = np.random.default_rng(self.config.SEED if seed is None else seed)
        m = self.config.defaults.get('m', 8)
        k = self.config.defaults.get('k', 10)
        for i in range(queries):
            q = draw_query(rng, m, self.config.COORD_RANGE)
            a, b = index.query_topk(q, k), fresh.query_topk(q, k)
            if a.ids != b.ids or a.distances != b.distances:
                self.log_message(f"*** SNAPSHOT MISMATCH on query {i}: {a.ids} vs {b.ids} ***")
                return EXIT_MISMATCH
        self.log_message(f"Snapshot answers {queries} queries identically to a fresh build")
        return EXIT_OK

    def verify(self, instances, n, m, k, dim, seed, golden=None):
        failures = 0
        for i in range(instances):
            instance = self._generate(n, m, seed + i, k=k, dim=dim)
            result = self._run_engine(instance.points, instance.query, k, dim)
            expected = oracle_topk(instance.points, instance.query, k)
            if not results_agree(result, expected):
                failures += 1
                self.log_message(f"*** MISMATCH seed={seed + i}: engine {result.ids} vs oracle {expected.ids} ***")
            if golden and i == 0:
                report = oracle_report(instance.points, instance.query, k)
                with open(golden, 'w') as f:
                    json.dump(report.as_dict(), f, indent=2)
                    f.write('\n')
                self.log_message(f"Golden report for seed {seed} written to {golden}")
        print(json.dumps({'instances': instances, 'failures': failures}))
        self.log_message(f"Verified {instances} instances (n={n} m={m} k={k} dim={dim}): {failures} failures")
        return EXIT_OK if failures == 0 else EXIT_MISMATCH


def build_parser(config):
    defaults = config.defaults
    parser = UsageParser(description='Top-k expected nearest neighbors of an uncertain query under L1')
    parser.add_argument('--config', help='Path of the enn.cfg file')
    parser.add_argument('--verbose', action='store_true', help='Echo log messages to standard error')

    subparsers = parser.add_subparsers(dest='command', help='Available commands', parser_class=UsageParser)

    # Instance generation
    gen_parser = subparsers.add_parser('gen', help='Generate a random instance')
    gen_parser.add_argument('--n', type=int, default=defaults.get('n', 1000), help='Number of points')
    gen_parser.add_argument('--m', type=int, default=defaults.get('m', 8), help='Number of query locations')
    gen_parser.add_argument('--k', type=int, default=defaults.get('k', 10), help='k stored in the query file')
    gen_parser.add_argument('--dim', type=int, choices=(1, 2), default=defaults.get('dim', 2))
    gen_parser.add_argument('--seed', type=int, default=config.SEED)
    gen_parser.add_argument('--points', required=True, help='Output points file')
    gen_parser.add_argument('--query', required=True, help='Output query file')

    # Query
    query_parser = subparsers.add_parser('query', help='Answer a top-k query')
    query_parser.add_argument('points', help='Points file')
    query_parser.add_argument('query_file', help='Query file (JSON)')
    query_parser.add_argument('--k', type=int, help='Overrides k from the query file')
    query_parser.add_argument('--oracle', action='store_true', help='Compare against brute force')
    query_parser.add_argument('--perturb', action='store_true', help='Jitter coordinates to break ties')
    query_parser.add_argument('--stats', action='store_true', help='Add heap and drag counters')
    query_parser.add_argument('--seed', type=int, help='Jitter seed')

    # Benchmark
    bench_parser = subparsers.add_parser('bench', help='Time builds and queries over a size grid')
    bench_parser.add_argument('--sizes', default=','.join(str(s) for s in config.BENCH_SIZES))
    bench_parser.add_argument('--m', type=int, default=defaults.get('m', 8))
    bench_parser.add_argument('--k', type=int, default=defaults.get('k', 10))
    bench_parser.add_argument('--queries', type=int, default=config.BENCH_QUERIES)
    bench_parser.add_argument('--workers', type=int, default=config.WORKERS)
    bench_parser.add_argument('--seed', type=int, default=config.SEED)

    # Snapshot
    snap_parser = subparsers.add_parser('snapshot', help='Write or load an index snapshot')
    snap_parser.add_argument('points', nargs='?', help='Points file to index')
    snap_parser.add_argument('out', nargs='?', help='Snapshot output path')
    snap_parser.add_argument('--load', help='Snapshot to load')
    snap_parser.add_argument('--check', help='Points file to compare the loaded snapshot against')

    # Verification
    verify_parser = subparsers.add_parser('verify', help='Compare engine and brute force on generated instances')
    verify_parser.add_argument('--instances', type=int, default=50)
    verify_parser.add_argument('--n', type=int, default=defaults.get('n', 1000))
    verify_parser.add_argument('--m', type=int, default=defaults.get('m', 8))
    verify_parser.add_argument('--k', type=int, default=defaults.get('k', 10))
    verify_parser.add_argument('--dim', type=int, choices=(1, 2), default=defaults.get('dim', 2))
    verify_parser.add_argument('--seed', type=int, default=config.SEED)
    verify_parser.add_argument('--golden', help='Write the oracle report of the first instance here')
    return parser


def _parse_sizes(parser, text):
    try:
        sizes = [int(s) for s in text.split(',') if s.strip()]
    except ValueError:
        parser.error(f"--sizes must be a comma separated list of integers, got {text!r}")
    if not sizes or any(s < 1 for s in sizes):
        parser.error(f"--sizes must hold positive integers, got {text!r}")
    return sizes


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config')
    known, _ = pre.parse_known_args(argv)
    try:
        config = EnnConfig(known.config)
    except EnnError as e:
        print(f"*** CONFIG ERROR: {e} ***", file=sys.stderr)
        return EXIT_USAGE
    config.setup_logging()

    parser = build_parser(config)
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    cli = EnnCLI(config, verbose=args.verbose)
    try:
        if args.command == 'gen':
            if args.n < 1 or args.m < 1 or args.k < 1:
                parser.error("--n, --m and --k must be positive")
            return cli.gen(args.n, args.m, args.k, args.dim, args.seed, args.points, args.query)

        elif args.command == 'query':
            if args.k is not None and args.k < 1:
                parser.error("--k must be positive")
            return cli.query(args.points, args.query_file, args.k, args.oracle, args.perturb, args.stats, args.seed)

        elif args.command == 'bench':
            sizes = _parse_sizes(parser, args.sizes)
            return cli.bench(sizes, args.m, args.k, args.queries, args.workers, args.seed)

        elif args.command == 'snapshot':
            if args.load:
                return cli.load(args.load, args.check)
            if not (args.points and args.out):
                parser.error("snapshot needs POINTS OUT, or --load SNAP")
            return cli.snapshot(args.points, args.out)

        elif args.command == 'verify':
            if args.n < 1 or args.m < 1 or args.k < 1 or args.instances < 1:
                parser.error("--instances, --n, --m and --k must be positive")
            return cli.verify(args.instances, args.n, args.m, args.k, args.dim, args.seed, args.golden)

    except IndexStateError as e:
        cli.logger.exception(f"{args.command} hit an internal state error: {e}")
        print(f"*** INTERNAL ERROR: {e} ***", file=sys.stderr)
        return EXIT_DATA
    except (EnnError, OSError) as e:
        cli.logger.error(f"{args.command} failed: {e}")
        print(f"*** CLI ERROR: {e} ***", file=sys.stderr)
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
