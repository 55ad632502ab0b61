"""
Tests for the CHC to C translation.
"""

import tempfile
import unittest
from pathlib import Path

from models import c_ast as c
from models.chc import BvLit, IntLit, Var, bitvec, make_app, INT
from models.codegen import (
    EmitOptions, Encoding, ErrorStyle, c_identifier, emit_term, int_literal, map_sort,
    transform, transform_backward, transform_forward,
)
from models.errors import CodegenError, ForwardRequiresLinear, LiteralOutOfRange, UnsupportedWidth
from models.parser import parse_chc, parse_chc_file
from utils.c_harness import compile_program, compiler_warnings, find_compiler

FIXTURES = Path(__file__).parent / 'fixtures'

SWEEP = ('counter.smt2', 'counter_bounded.smt2', 'nonlinear.smt2', 'parity_bv4.smt2',
         'steps_bv4.smt2', 'ops_bv8.smt2', 'wrap_bv32.smt2', 'flags_core.smt2', 'chain_distinct.smt2')


def _ifs(node):
    return [n for n in c.walk(node) if isinstance(n, c.If)]


def _contains(node, target):
    return any(n == target for n in c.walk(node))


class TestTypesAndLiterals(unittest.TestCase):
    """Test cases for sort mapping, identifiers and constants."""

    def test_map_sort(self):
        """Bitvectors use the smallest unsigned carrier, masked when narrower."""
        spec = map_sort(bitvec(4))
        self.assertEqual((spec.c_name, spec.bits, spec.signed, spec.mask), ('unsigned char', 4, False, 0xF))
        self.assertIsNone(map_sort(bitvec(32)).mask)
        self.assertEqual(map_sort(bitvec(33)).c_name, 'unsigned long long')
        self.assertEqual(map_sort(INT, EmitOptions(int_c_type='long')).bits, 64)
        with self.assertRaises(UnsupportedWidth):
            map_sort(bitvec(65))

    def test_unsupported_int_type(self):
        with self.assertRaises(CodegenError):
            EmitOptions(int_c_type='short')

    def test_identifiers(self):
        self.assertEqual(c_identifier('inv'), 'inv')
        self.assertEqual(c_identifier('a_b'), 'a__b')
        self.assertEqual(c_identifier('x!0'), 'x_21_0')
        self.assertNotEqual(c_identifier('a.b'), c_identifier('a_b'))

    def test_int_literals(self):
        self.assertEqual(c.render_expr(int_literal(7), top=True), '7')
        self.assertEqual(c.render_expr(int_literal(-7), top=True), '-7')
        self.assertEqual(c.render_expr(int_literal(1 << 31), top=True), '2147483648LL')
        self.assertEqual(c.render_expr(int_literal(-(1 << 31)), top=True), '(-2147483647) - 1')
        with self.assertRaises(LiteralOutOfRange):
            int_literal(1 << 64)

    def test_masked_addition(self):
        x = Var('x', bitvec(4))
        term = make_app('bvadd', (x, BvLit(3, 4)))
        self.assertEqual(emit_term(term, {'x': 'v_x'}), '((v_x + 3) & 0xF)')

    def test_shift_by_width_folds_to_zero(self):
        x = Var('x', bitvec(8))
        term = make_app('bvshl', (x, BvLit(8, 8)))
        self.assertEqual(emit_term(term, {'x': 'v_x'}), '0')

    def test_signed_comparison(self):
        x = Var('x', bitvec(8))
        term = make_app('bvslt', (x, BvLit(0, 8)))
        self.assertEqual(emit_term(term, {'x': 'v_x'}), '((v_x ^ 0x80) < (0 ^ 0x80))')


class TestBackwardEncoding(unittest.TestCase):
    """Test cases for the recursive encoding."""

    def setUp(self):
        """Set up test fixtures."""
        self.system = parse_chc_file(FIXTURES / 'counter.smt2')
        self.program = transform_backward(self.system)
        self.function = self.program.ast.function('p_A')

    def test_base_case(self):
        """The fact rule becomes a guard a_0 == 1 returning 1."""
        guard = c.Binary('==', c.Ident('a_0'), c.Const('1'))
        matching = [n for n in _ifs(self.function) if n.cond == guard]
        self.assertEqual(len(matching), 1)
        self.assertEqual(matching[0].then.stmts, (c.Return(c.Const('1')),))

    def test_recursive_call(self):
        """The step rule calls the predicate on a_0 - 1."""
        calls = c.calls_to(self.function, 'p_A')
        self.assertEqual(calls, [c.Call('p_A', (c.Binary('-', c.Ident('a_0'), c.Const('1')),))])
        self.assertTrue(self.program.recursive)

    def test_query_in_main(self):
        main = self.program.ast.function('main')
        self.assertEqual(c.calls_to(main, 'p_A'), [c.Call('p_A', (c.Const('11'),))])
        self.assertEqual(len(c.calls_to(main, 'reach_error')), 1)

    def test_prototypes_and_externs(self):
        self.assertEqual([p.name for p in self.program.ast.prototypes], ['p_A'])
        self.assertIn('extern void reach_error(void);', self.program.ast.externs)
        self.assertIn('int p_A(int a_0);', self.program.source)

    def test_nonlinear_rule_calls_twice(self):
        system = parse_chc_file(FIXTURES / 'nonlinear.smt2')
        program = transform_backward(system)
        self.assertEqual(len(c.calls_to(program.ast.function('p_B'), 'p_A')), 2)

    def test_return_minus_one_style(self):
        program = transform_backward(self.system, EmitOptions(error_style=ErrorStyle.RETURN_MINUS_ONE))
        self.assertNotIn('reach_error', program.source)
        self.assertIn('return -1;', program.source)

    def test_header_records_source(self):
        self.assertIn('encoding: Backward', self.program.source)
        self.assertIn('theory: LIA', self.program.source)
        self.assertIn('source sha256:', self.program.source)


class TestForwardEncoding(unittest.TestCase):
    """Test cases for the non-recursive encoding."""

    def setUp(self):
        """Set up test fixtures."""
        self.system = parse_chc_file(FIXTURES / 'counter.smt2')
        self.program = transform_forward(self.system)
        self.main = self.program.ast.function('main')

    def test_not_recursive(self):
        self.assertFalse(self.program.recursive)
        self.assertEqual([f.name for f in self.program.ast.functions], ['main'])
        loops = [n for n in c.walk(self.main) if isinstance(n, c.While)]
        self.assertEqual(len(loops), 2)

    def test_step_guard_and_update(self):
        """The step rule matches the state against x - 1 and stores x."""
        guard = c.Binary('==', c.Ident('st_0'), c.Binary('-', c.Ident('v_x'), c.Const('1')))
        steps = [n for n in _ifs(self.main) if _contains(n.cond, guard) and n.orelse is None]
        self.assertEqual(len(steps), 1)
        self.assertIn(c.Assign('st_0', c.Ident('v_x')), steps[0].then.stmts)

    def test_error_guard(self):
        """The query compares the state with 11 and flags the violation."""
        guard = c.Binary('==', c.Ident('st_0'), c.Const('11'))
        queries = [n for n in _ifs(self.main) if _contains(n.cond, guard) and n.orelse is None]
        self.assertEqual(len(queries), 1)
        self.assertEqual(queries[0].then.stmts, (c.Assign('violated', c.Const('1')),))
        self.assertEqual(len(c.calls_to(self.main, 'reach_error')), 1)

    def test_nonlinear_rejected(self):
        system = parse_chc_file(FIXTURES / 'nonlinear.smt2')
        with self.assertRaises(ForwardRequiresLinear):
            transform_forward(system)
        with self.assertRaises(ForwardRequiresLinear):
            transform(system, Encoding.FORWARD)

    def test_no_query_keeps_error_unreachable(self):
        text = (
            "(set-logic HORN)\n"
            "(declare-fun A (Int) Bool)\n"
            "(assert (forall ((x Int)) (=> (= x 0) (A x))))\n"
        )
        program = transform_forward(parse_chc(text))
        self.assertIn('if (0) {', program.source)

    def test_bitvector_draws_are_masked(self):
        program = transform_forward(parse_chc_file(FIXTURES / 'steps_bv4.smt2'))
        self.assertIn('__VERIFIER_nondet_uchar() & 0xF', program.source)
        self.assertIn('extern unsigned char __VERIFIER_nondet_uchar(void);', program.source)


@unittest.skipIf(find_compiler() is None, "no C compiler available")
class TestCompilation(unittest.TestCase):
    """Every emitted program compiles with stub externs."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.workdir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_fixture_sweep(self):
        for name in SWEEP:
            system = parse_chc_file(FIXTURES / name)
            for encoding in Encoding:
                if encoding == Encoding.FORWARD and name == 'nonlinear.smt2':
                    continue
                with self.subTest(fixture=name, encoding=encoding.value):
                    program = transform(system, encoding)
                    stem = f"{Path(name).stem}_{encoding.value.lower()}"
                    executable = compile_program(program, self.workdir / stem)
                    self.assertTrue(executable.exists())
                    self.assertEqual(compiler_warnings(program, self.workdir / f"{stem}_wall"), '')

    def test_long_long_ints(self):
        system = parse_chc_file(FIXTURES / 'counter.smt2')
        program = transform_forward(system, EmitOptions(int_c_type='long long'))
        self.assertTrue(compile_program(program, self.workdir / 'wide').exists())


if __name__ == '__main__':
    unittest.main()
