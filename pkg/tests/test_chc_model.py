"""
Tests for the CHC model, parser and printer.
"""

import unittest
from pathlib import Path

from models.chc import (
    INT, BvLit, IntLit, Linearity, PredicateApp, PredicateDecl, Rule, TheoryKind, Var,
    bitvec, classify_linearity, detect_theory, make_app, normalize,
)
from models.errors import ArityError, MixedTheory, SmtSyntaxError, SortError, UnsupportedFeature
from models.parser import parse_chc, parse_chc_file
from models.printer import print_chc

FIXTURES = Path(__file__).parent / 'fixtures'


class TestParser(unittest.TestCase):
    """Test cases for reading SMT-LIBv2 HORN files."""

    def setUp(self):
        """Set up test fixtures."""
        self.counter = parse_chc_file(FIXTURES / 'counter.smt2')

    def test_counter_shape(self):
        """The counter example has three rules, one of them a query."""
        self.assertEqual(len(self.counter.rules), 3)
        self.assertEqual(len(self.counter.queries), 1)
        self.assertEqual(classify_linearity(self.counter), Linearity.LINEAR)
        self.assertEqual(self.counter.theory.kind, TheoryKind.LIA)
        self.assertEqual(str(self.counter.theory), 'LIA')

    def test_fact_and_step_rules(self):
        """The first rule is a fact, the second has one premise."""
        fact, step, query = self.counter.rules
        self.assertTrue(fact.is_fact)
        self.assertEqual(len(step.premise), 1)
        self.assertEqual(step.premise[0].args[0], make_app('-', (Var('x', INT), IntLit(1))))
        self.assertTrue(query.is_query)
        self.assertEqual(query.premise[0].args, (IntLit(11),))

    def test_bitvector_theory(self):
        """Bitvector systems record their widths."""
        system = parse_chc_file(FIXTURES / 'parity_bv4.smt2')
        self.assertEqual(system.theory.kind, TheoryKind.BV)
        self.assertEqual(str(system.theory), 'BV(4)')
        widths = parse_chc_file(FIXTURES / 'ops_bv8.smt2').theory.widths
        self.assertEqual(widths, frozenset({8, 16}))

    def test_operator_results_do_not_add_widths(self):
        """Extracted bits and extended values keep the declared widths only."""
        system = parse_chc_file(FIXTURES / 'parity_bv4.smt2')
        self.assertEqual(system.theory.widths, frozenset({4}))
        self.assertEqual(detect_theory(system), system.theory)
        wide = parse_chc_file(FIXTURES / 'ops_bv8.smt2')
        self.assertNotIn(32, wide.theory.widths)

    def test_core_theory(self):
        system = parse_chc_file(FIXTURES / 'flags_core.smt2')
        self.assertEqual(system.theory.kind, TheoryKind.CORE)

    def test_nonlinear(self):
        """A rule with two premise applications makes the system non-linear."""
        system = parse_chc_file(FIXTURES / 'nonlinear.smt2')
        self.assertEqual(classify_linearity(system), Linearity.NONLINEAR)
        self.assertEqual(str(classify_linearity(system)), 'nonlinear')

    def test_arrays_rejected(self):
        with self.assertRaises(UnsupportedFeature) as ctx:
            parse_chc_file(FIXTURES / 'arrays.smt2')
        self.assertEqual(str(ctx.exception), 'arrays')

    def test_other_logic_rejected(self):
        with self.assertRaises(UnsupportedFeature):
            parse_chc("(set-logic QF_LIA)\n(check-sat)\n")

    def test_syntax_error_position(self):
        """Unbalanced input reports where the problem is."""
        with self.assertRaises(SmtSyntaxError) as ctx:
            parse_chc("(set-logic HORN)\n(declare-fun A (Int) Bool\n")
        self.assertIsNotNone(ctx.exception.line)

    def test_unknown_symbol(self):
        text = "(set-logic HORN)\n(declare-fun A (Int) Bool)\n(assert (forall ((x Int)) (=> (= x y) (A x))))\n"
        with self.assertRaises(SortError):
            parse_chc(text)

    def test_arity_mismatch(self):
        text = "(set-logic HORN)\n(declare-fun A (Int) Bool)\n(assert (forall ((x Int)) (=> (= x 0) (A x x))))\n"
        with self.assertRaises(ArityError):
            parse_chc(text)

    def test_mixed_theory(self):
        text = (
            "(set-logic HORN)\n"
            "(declare-fun A (Int (_ BitVec 4)) Bool)\n"
            "(assert (forall ((x Int) (b (_ BitVec 4))) (=> (= x 0) (A x b))))\n"
        )
        with self.assertRaises(MixedTheory):
            parse_chc(text)

    def test_constraint_head_becomes_query(self):
        """A Boolean head is negated into the body of a query."""
        text = (
            "(set-logic HORN)\n"
            "(declare-fun A (Int) Bool)\n"
            "(assert (forall ((x Int)) (=> (= x 0) (A x))))\n"
            "(assert (forall ((x Int)) (=> (A x) (>= x 0))))\n"
        )
        system = parse_chc(text)
        query = system.rules[1]
        self.assertTrue(query.is_query)
        self.assertEqual(query.constraint.op, 'not')

    def test_chained_comparison_and_distinct(self):
        text = (
            "(set-logic HORN)\n"
            "(declare-fun A (Int Int) Bool)\n"
            "(assert (forall ((x Int) (y Int)) (=> (and (< 0 x y 5) (distinct x y)) (A x y))))\n"
        )
        system = parse_chc(text)
        self.assertEqual(len(system.rules), 1)
        self.assertEqual(system.rules[0].head.pred.name, 'A')

    def test_chain_and_distinct_are_flat(self):
        """Desugared chains and distinct join the body conjunction directly."""
        system = parse_chc_file(FIXTURES / 'chain_distinct.smt2')
        constraint = system.rules[0].constraint
        self.assertEqual(constraint.op, 'and')
        self.assertEqual([c.op for c in constraint.args], ['<', '<', '<', 'not', 'not', 'not'])


class TestModel(unittest.TestCase):
    """Test cases for terms, rules and normalization."""

    def setUp(self):
        """Set up test fixtures."""
        self.bv4 = bitvec(4)
        self.pred = PredicateDecl('P', (self.bv4,))

    def test_bv_literal_range(self):
        with self.assertRaises(SortError):
            BvLit(16, 4)

    def test_make_app_sorts(self):
        x = Var('x', self.bv4)
        app = make_app('bvadd', (x, BvLit(1, 4)))
        self.assertEqual(app.sort, self.bv4)
        self.assertEqual(make_app('concat', (x, x)).sort, bitvec(8))
        self.assertEqual(make_app('extract', (x,), (2, 1)).sort, bitvec(2))
        with self.assertRaises(SortError):
            make_app('bvadd', (x, BvLit(1, 8)))

    def test_nonlinear_multiplication_rejected(self):
        x = Var('x', INT)
        with self.assertRaises(UnsupportedFeature):
            make_app('*', (x, x))

    def test_rule_requires_quantified_vars(self):
        x = Var('x', self.bv4)
        with self.assertRaises(SortError):
            Rule((), make_app('=', (x, BvLit(0, 4))), (), PredicateApp(self.pred, (x,)))

    def test_normalize_head_terms(self):
        """Head terms are replaced by fresh variables bound by equalities."""
        system = parse_chc_file(FIXTURES / 'parity_bv4.smt2')
        normal = normalize(system)
        head = normal.rules[1].head
        self.assertTrue(all(isinstance(a, Var) for a in head.args))
        self.assertTrue(head.args[0].name.startswith('h!'))
        self.assertEqual(normalize(normal), normal)

    def test_detect_theory_matches_build(self):
        system = parse_chc_file(FIXTURES / 'steps_bv4.smt2')
        self.assertEqual(detect_theory(system), system.theory)


class TestPrinter(unittest.TestCase):
    """Test cases for printing systems back to SMT-LIBv2."""

    def test_reparse_fixtures(self):
        """Printing and re-parsing gives back the same system."""
        for name in ('counter.smt2', 'nonlinear.smt2', 'ops_bv8.smt2', 'flags_core.smt2',
                     'parity_bv4.smt2', 'chain_distinct.smt2'):
            with self.subTest(fixture=name):
                system = parse_chc_file(FIXTURES / name)
                self.assertEqual(parse_chc(print_chc(system)), system)

    def test_quoted_symbols(self):
        text = (
            "(set-logic HORN)\n"
            "(declare-fun |inv 1| (Int) Bool)\n"
            "(assert (forall ((x Int)) (=> (= x 0) (|inv 1| x))))\n"
        )
        printed = print_chc(parse_chc(text))
        self.assertIn('|inv 1|', printed)


if __name__ == '__main__':
    unittest.main()
