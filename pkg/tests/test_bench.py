"""
Tests for the benchmark runner and its data files.
"""

import tempfile
import unittest
from pathlib import Path

from config.settings import ORACLE_PORTFOLIO_FILE
from models.bench import Category, categorize, run_suite, summarize
from models.errors import InputError
from utils.data_handler import (
    export_report, load_expected_verdicts, load_portfolio_config, save_expected_verdicts,
)
from utils.suite import EXPECTED_FILE, generate_suite

import pandas as pd


class TestCategorize(unittest.TestCase):
    """Test cases for scoring one verdict."""

    def test_table(self):
        cases = {
            ('sat', 'sat'): Category.CONFIRMED,
            ('unsat', 'unsat'): Category.CONFIRMED,
            ('sat', 'unknown'): Category.UNCONFIRMED,
            ('unsat', 'unknown'): Category.UNCONFIRMED,
            ('sat', 'unsat'): Category.WRONG,
            ('unsat', 'sat'): Category.WRONG,
            ('unknown', 'sat'): Category.NO_VERDICT,
            ('unknown', 'unknown'): Category.NO_VERDICT,
        }
        for (produced, expected), category in cases.items():
            with self.subTest(produced=produced, expected=expected):
                self.assertEqual(categorize(produced, expected), category)

    def test_summary_counts(self):
        rows = pd.DataFrame({
            'task': ['a', 'b', 'c', 'd'],
            'verdict': ['sat', 'sat', 'unsat', 'unknown'],
            'category': ['Confirmed', 'Wrong', 'Confirmed', 'NoVerdict'],
        })
        summary = summarize(rows)
        counts = {(v, c): n for v, c, n in zip(summary['verdict'], summary['category'], summary['count'])}
        self.assertEqual(counts[('sat', 'Confirmed')], 1)
        self.assertEqual(counts[('sat', 'Wrong')], 1)
        self.assertEqual(counts[('unsat', 'Confirmed')], 1)
        self.assertEqual(counts[('unsat', 'Wrong')], 0)
        self.assertEqual(counts[('-', 'NoVerdict')], 1)
        self.assertEqual(counts[('-', 'Out of')], 4)


class TestDataFiles(unittest.TestCase):
    """Test cases for expected-verdict and portfolio files."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_expected_with_header(self):
        path = self.dir / 'expected.csv'
        path.write_text("task,verdict\nt1,sat\nt2, UNSAT\n", encoding='utf-8')
        self.assertEqual(load_expected_verdicts(path), {'t1': 'sat', 't2': 'unsat'})

    def test_expected_saved_sorted(self):
        path = self.dir / 'expected.csv'
        save_expected_verdicts({'b': 'unsat', 'a': 'sat'}, path)
        self.assertEqual(path.read_text(encoding='utf-8'), "a,sat\nb,unsat\n")

    def test_bad_verdict(self):
        path = self.dir / 'expected.csv'
        path.write_text("t1,maybe\n", encoding='utf-8')
        with self.assertRaises(InputError):
            load_expected_verdicts(path)

    def test_duplicate_task(self):
        path = self.dir / 'expected.csv'
        path.write_text("t1,sat\nt1,unsat\n", encoding='utf-8')
        with self.assertRaises(InputError):
            load_expected_verdicts(path)

    def test_portfolio_not_a_mapping(self):
        path = self.dir / 'broken.portfolio'
        path.write_text("- just\n- a list\n", encoding='utf-8')
        with self.assertRaises(InputError):
            load_portfolio_config(path)

    def test_shipped_portfolios_load(self):
        self.assertIn('thorn', load_portfolio_config()['actors'])
        self.assertIn('oracle', load_portfolio_config(ORACLE_PORTFOLIO_FILE)['actors'])


class TestRunSuite(unittest.TestCase):
    """Oracle-backed runs over a generated BV(4) suite."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.tasks = self.dir / 'tasks'
        self.expected = generate_suite(self.tasks, count=10, seed=11)
        self.expected_file = self.tasks / EXPECTED_FILE

    def tearDown(self):
        self.tmp.cleanup()

    def run_bench(self, scratch, **kwargs):
        return run_suite(
            self.tasks, self.expected_file, ORACLE_PORTFOLIO_FILE,
            timeout_s=30, scratch_dir=self.dir / scratch, timing=False, **kwargs
        )

    def test_all_confirmed(self):
        rows, summary = self.run_bench('s1', jobs=2)
        self.assertEqual(list(rows['category']), ['Confirmed'] * 10)
        self.assertEqual(list(rows['task']), sorted(self.expected))
        out_of = summary[summary['category'] == 'Out of']['count'].iloc[0]
        self.assertEqual(out_of, 10)

    def test_flipped_entry_is_wrong(self):
        flipped = dict(self.expected)
        first = sorted(flipped)[0]
        flipped[first] = 'sat' if flipped[first] == 'unsat' else 'unsat'
        save_expected_verdicts(flipped, self.expected_file)
        rows, _ = self.run_bench('s2')
        self.assertEqual(list(rows['category']).count('Wrong'), 1)
        self.assertEqual(list(rows['category']).count('Confirmed'), 9)
        self.assertEqual(rows.set_index('task').loc[first, 'category'], 'Wrong')

    def test_missing_entry_is_no_verdict(self):
        partial = dict(self.expected)
        dropped = sorted(partial)[-1]
        del partial[dropped]
        save_expected_verdicts(partial, self.expected_file)
        with self.assertLogs('models.bench', level='WARNING'):
            rows, _ = self.run_bench('s3')
        self.assertEqual(rows.set_index('task').loc[dropped, 'category'], 'NoVerdict')

    def test_report_is_reproducible(self):
        first = export_report(*self.run_bench('s4'))
        second = export_report(*self.run_bench('s5'))
        self.assertEqual(first, second)
        self.assertNotIn('wall_ms', first)
        self.assertIn('Out of', first)

    def test_timing_column(self):
        rows, _ = run_suite(self.tasks, self.expected_file, ORACLE_PORTFOLIO_FILE,
                            timeout_s=30, scratch_dir=self.dir / 's6')
        self.assertIn('wall_ms', rows.columns)

    def test_empty_directory(self):
        empty = self.dir / 'empty'
        empty.mkdir()
        with self.assertRaises(InputError):
            run_suite(empty, self.expected_file, ORACLE_PORTFOLIO_FILE)


if __name__ == '__main__':
    unittest.main()
