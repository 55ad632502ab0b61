"""
Benchmark Runner
----------------
Runs every ``.smt2`` task of a directory through the portfolio and scores
the verdicts against an expected-verdict file.

Categories:
  - Confirmed: the verdict matches the expected one
  - Unconfirmed: a verdict was produced but the expected one is unknown
  - Wrong: the verdict contradicts the expected one
  - NoVerdict: the run ended unknown (or the task has no expected entry)
"""

import logging
import tempfile
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path

import pandas as pd

from config.settings import DEFAULT_TIMEOUT_S, SCRATCH_DIR
from utils.data_handler import load_expected_verdicts

from .errors import ChcError, InputError
from .parser import parse_chc_file
from .portfolio import ChcVerdict, load_plan, restrict_plan, run_portfolio

logger = logging.getLogger(__name__)

ROW_COLUMNS = ['task', 'verdict', 'expected', 'category', 'wall_ms']
SUMMARY_COLUMNS = ['verdict', 'category', 'count']


class Category(str, Enum):
    CONFIRMED = 'Confirmed'
    UNCONFIRMED = 'Unconfirmed'
    WRONG = 'Wrong'
    NO_VERDICT = 'NoVerdict'

    def __str__(self):
        return self.value


def categorize(produced, expected):
    """
    Score one produced verdict against the expected one.

    Args:
        produced (str): sat | unsat | unknown
        expected (str): sat | unsat | unknown

    Returns:
        Category
    """
    produced, expected = str(produced), str(expected)
    if produced == 'unknown':
        return Category.NO_VERDICT
    if expected == 'unknown':
        return Category.UNCONFIRMED
    if produced == expected:
        return Category.CONFIRMED
    return Category.WRONG


def list_tasks(tasks_dir):
    """Task files of a directory, sorted by name."""
    tasks = sorted(Path(tasks_dir).glob('*.smt2'))
    if not tasks:
        raise InputError(f"no .smt2 tasks in {tasks_dir}")
    return tasks


class BenchRunner:
    """
    Solves benchmark tasks with one portfolio file.

    Args:
        portfolio_file (str): portfolio configuration to build plans from
        encoding (Encoding): restrict plans to one encoding; None keeps the staging
        timeout_s (float): wall budget per task
        scratch_dir (Path): root of the per-task scratch directories
        jobs (int): tasks solved concurrently
        opts (EmitOptions): C emission options
    """

    def __init__(self, portfolio_file, encoding=None, timeout_s=DEFAULT_TIMEOUT_S,
                 scratch_dir=None, jobs=1, opts=None):
        self.portfolio_file = portfolio_file
        self.encoding = encoding
        self.timeout_s = timeout_s
        self.scratch_dir = Path(scratch_dir) if scratch_dir else None
        self.jobs = max(1, jobs)
        self.opts = opts

    def _scratch_root(self):
        if self.scratch_dir is not None:
            return self.scratch_dir
        SCRATCH_DIR.mkdir(parents=True, exist_ok=True)
        return Path(tempfile.mkdtemp(prefix='bench-', dir=SCRATCH_DIR))

    def solve(self, path, scratch):
        """
        Solve one task file.

        Returns:
            tuple: (verdict, wall_ms)
        """
        try:
            system = parse_chc_file(path)
            plan = load_plan(self.portfolio_file, system.theory)
            if self.encoding is not None:
                plan = restrict_plan(plan, self.encoding)
            result = run_portfolio(system, plan, self.timeout_s, scratch, self.opts)
        except ChcError as e:
            logger.warning("%s: %s: %s", path.name, type(e).__name__, e)
            return ChcVerdict.UNKNOWN, 0
        wall_ms = sum(r.reach.wall_ms for r in result.provenance if r.reach is not None)
        return result.verdict, wall_ms

    def run(self, tasks_dir, expected_file, timing=True):
        """
        Run every task of ``tasks_dir`` and score it against ``expected_file``.

        Returns:
            tuple: (rows, summary) as pandas DataFrames
        """
        tasks = list_tasks(tasks_dir)
        expected = load_expected_verdicts(expected_file)
        root = self._scratch_root()

        with ThreadPoolExecutor(max_workers=self.jobs, thread_name_prefix='task') as pool:
            outcomes = list(pool.map(lambda p: self.solve(p, root / p.stem), tasks))

        records = []
        for path, (verdict, wall_ms) in zip(tasks, outcomes):
            name = path.stem
            if name in expected:
                category = categorize(verdict, expected[name])
            else:
                logger.warning("no expected verdict for task '%s'", name)
                category = Category.NO_VERDICT
            records.append({
                'task': name,
                'verdict': str(verdict),
                'expected': expected.get(name, '-'),
                'category': str(category),
                'wall_ms': wall_ms,
            })
        rows = pd.DataFrame(records, columns=ROW_COLUMNS)
        summary = summarize(rows)
        if not timing:
            rows = rows.drop(columns=['wall_ms'])
        return rows, summary


def summarize(rows):
    """
    Aggregate task rows into the verdict x category table.

    Rows are sat and unsat each split into Confirmed, Unconfirmed and
    Wrong, then the NoVerdict count and the "Out of" corpus size.
    """
    counts = rows.groupby(['verdict', 'category']).size()
    table = []
    for verdict in ('sat', 'unsat'):
        for category in (Category.CONFIRMED, Category.UNCONFIRMED, Category.WRONG):
            table.append((verdict, category.value, int(counts.get((verdict, category.value), 0))))
    no_verdict = int((rows['category'] == Category.NO_VERDICT.value).sum())
    table.append(('-', Category.NO_VERDICT.value, no_verdict))
    table.append(('-', 'Out of', len(rows)))
    return pd.DataFrame(table, columns=SUMMARY_COLUMNS)


def run_suite(tasks_dir, expected_file, portfolio_file, encoding=None, jobs=1,
              timeout_s=DEFAULT_TIMEOUT_S, scratch_dir=None, timing=True, opts=None):
    """Convenience wrapper: build a BenchRunner and run one suite."""
    runner = BenchRunner(portfolio_file, encoding, timeout_s, scratch_dir, jobs, opts)
    return runner.run(tasks_dir, expected_file, timing=timing)
