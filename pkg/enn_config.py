import configparser
import json
import logging
import os

from dotenv import load_dotenv

from enn_errors import ConfigurationError

LOG_FORMAT = '%(asctime)s.%(msecs)03d %(levelname)s %(module)s - %(funcName)s: %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'

DEFAULT_HULL_LEAF_LEVEL = 5


class EnnConfig:
    """Engine settings from enn.cfg, enn_defaults.json and the environment"""

    def __init__(self, config_file=None, defaults_file='enn_defaults.json'):
        load_dotenv()
        self.config_file = config_file or os.environ.get('ENN_CONFIG', 'enn.cfg')
        self.defaults_file = defaults_file
        self.HULL_LEAF_LEVEL = DEFAULT_HULL_LEAF_LEVEL
        self.LOG_FILE = 'enn.log'
        self.LOG_LEVEL = 'INFO'
        self.SEED = 7
        self.PERTURB_MAGNITUDE = 1e-9
        self.MIN_RELATIVE_GAP = 1e-6
        self.GEN_RETRIES = 50
        self.COORD_RANGE = 1000.0
        self.BENCH_SIZES = [1024, 2048, 4096]
        self.BENCH_QUERIES = 20
        self.WORKERS = 1
        self.load_config()
        self.defaults = self.load_default_config()
        self.LOG_LEVEL = os.environ.get('ENN_LOG_LEVEL', self.LOG_LEVEL)

    def load_config(self):
        config = configparser.ConfigParser()
        config.read(self.config_file)
        section = config['DEFAULT']
        if not section:
            return
        try:
            self.HULL_LEAF_LEVEL = section.getint('HullLeafLevel', self.HULL_LEAF_LEVEL)
            self.LOG_FILE = section.get('LogFile', self.LOG_FILE)
            self.LOG_LEVEL = section.get('LogLevel', self.LOG_LEVEL)
            self.SEED = section.getint('Seed', self.SEED)
            self.PERTURB_MAGNITUDE = section.getfloat('PerturbMagnitude', self.PERTURB_MAGNITUDE)
            self.MIN_RELATIVE_GAP = section.getfloat('MinRelativeGap', self.MIN_RELATIVE_GAP)
            self.GEN_RETRIES = section.getint('GenRetries', self.GEN_RETRIES)
            self.COORD_RANGE = section.getfloat('CoordRange', self.COORD_RANGE)
            sizes = section.get('BenchSizes', None)
            if sizes:
                self.BENCH_SIZES = [int(s) for s in sizes.split(',') if s.strip()]
            self.BENCH_QUERIES = section.getint('BenchQueries', self.BENCH_QUERIES)
            self.WORKERS = section.getint('Workers', self.WORKERS)
        except ValueError as e:
            raise ConfigurationError(f"Invalid configuration: {e}")
        if self.HULL_LEAF_LEVEL < 0:
            raise ConfigurationError(f"Invalid configuration: HullLeafLevel={self.HULL_LEAF_LEVEL}")

    def load_default_config(self):
        """Load generator and bench defaults"""
        try:
            with open(self.defaults_file, 'r') as f:
                return json.load(f)
        except (OSError, ValueError):
            # Fallback defaults if file doesn't exist
            return {
                "n": 1000,
                "m": 8,
                "k": 10,
                "dim": 2,
                "weight_low": 0.1,
                "weight_high": 1.0
            }

    def setup_logging(self):
        logging.basicConfig(
            filename=self.LOG_FILE,
            level=getattr(logging, str(self.LOG_LEVEL).upper(), logging.INFO),
            format=LOG_FORMAT,
            datefmt=LOG_DATEFMT,
        )
        return logging.getLogger('enn')
