import logging
import os

_BASE_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    # Logging
    LOG_LEVEL = os.environ.get('RFTT_LOG_LEVEL', 'INFO')
    LOG_FORMAT = os.environ.get('RFTT_LOG_FORMAT', 'json')  # json | text

    # Routing: Held-Karp bitmask guard, and the class size below which the
    # per-class solver uses exact tours instead of the double tree
    TSP_EXACT_MAX_CLIENTS = int(os.environ.get('RFTT_TSP_EXACT_MAX_CLIENTS', '16'))
    PER_CLASS_EXACT_MAX_CLIENTS = int(os.environ.get('RFTT_PER_CLASS_EXACT_MAX_CLIENTS', '8'))

    # Line DP
    LINE_DP_MAX_TURNOVER = int(os.environ.get('RFTT_LINE_DP_MAX_TURNOVER', '512'))
    LINE_PERIOD_CAP = int(os.environ.get('RFTT_LINE_PERIOD_CAP', str(2 ** 16)))

    # Oracle size guards
    ORACLE_MAX_STATES = int(os.environ.get('RFTT_ORACLE_MAX_STATES', str(10 ** 6)))
    ORACLE_MAX_CLIENTS = int(os.environ.get('RFTT_ORACLE_MAX_CLIENTS', '12'))
    PINWHEEL_MAX_STATES = int(os.environ.get('RFTT_PINWHEEL_MAX_STATES', str(10 ** 6)))

    # Generator guards
    GI_MAX = 20
    HI_MAX = 6

    # Bench harness
    BENCH_WORKERS = int(os.environ.get('RFTT_BENCH_WORKERS', '4'))
    BENCH_ORACLE_MAX_CLIENTS = int(os.environ.get('RFTT_BENCH_ORACLE_MAX_CLIENTS', '10'))
    SUITES_DIR = os.environ.get('RFTT_SUITES_DIR', os.path.join(_BASE_DIR, 'suites'))

    @classmethod
    def validate(cls):
        """Startup sanity checks: warns about settings that make runs impractical."""
        warnings = []
        if cls.TSP_EXACT_MAX_CLIENTS > 16:
            warnings.append("RFTT_TSP_EXACT_MAX_CLIENTS above 16: Held-Karp tables grow as 2^n·n")
        if cls.PER_CLASS_EXACT_MAX_CLIENTS > cls.TSP_EXACT_MAX_CLIENTS:
            warnings.append("RFTT_PER_CLASS_EXACT_MAX_CLIENTS exceeds the Held-Karp guard: double tree will be used")
        if cls.ORACLE_MAX_CLIENTS > cls.TSP_EXACT_MAX_CLIENTS:
            warnings.append("RFTT_ORACLE_MAX_CLIENTS exceeds the Held-Karp guard")
        if cls.BENCH_WORKERS < 1:
            warnings.append("RFTT_BENCH_WORKERS below 1: falling back to a single worker")
        if cls.LOG_FORMAT not in ('json', 'text'):
            warnings.append(f"RFTT_LOG_FORMAT {cls.LOG_FORMAT!r} unknown: using json")
        for w in warnings:
            logging.getLogger('rftt.config').warning("CONFIG WARNING: %s", w)
        return warnings
