"""
Tests for the verifier portfolio.
"""

import itertools
import shlex
import sys
import tempfile
import time
import unittest
from pathlib import Path

from config.settings import ORACLE_PORTFOLIO_FILE
from models.chc import CORE_THEORY, LIA_THEORY, TheoryClass, TheoryKind
from models.codegen import Encoding, transform
from models.errors import PlanTheoryMismatch, PortfolioConfigError
from models.parser import parse_chc, parse_chc_file
from models.portfolio import (
    PROVENANCE_FILE, SKIPPED_FORWARD, Actor, ActorKind, ActorVerdict, ChcVerdict,
    OverflowOutcome, PortfolioPlan, RunResult, Stage, TaskInput, UnknownCause,
    ValidationOutcome, build_plan, default_plan, gate_bv, gate_lia, load_plan,
    read_provenance, replay_provenance, restrict_plan, run_actor, run_overflow, run_parallel,
    run_portfolio,
)

FIXTURES = Path(__file__).parent / 'fixtures'
MOCK = FIXTURES / 'mock_actor.py'
BV4 = TheoryClass(TheoryKind.BV, frozenset({4}))

OVERFLOWS = list(OverflowOutcome)
VALIDATIONS = list(ValidationOutcome)


def mock_actor(name, *args, kind=ActorKind.REACHABILITY):
    """An actor running the mock script with the given arguments."""
    command = ' '.join(shlex.quote(str(a)) for a in (sys.executable, MOCK, *args))
    return Actor(
        name=name,
        kind=kind,
        command=command,
        safe_pattern='^VERIFICATION SUCCESSFUL',
        unsafe_pattern='^VERIFICATION FAILED',
    )


def reach(verdict, witness=None):
    return RunResult(verdict, 'mock', 10, witness=witness)


class TestGates(unittest.TestCase):
    """Exhaustive truth tables of the soundness gates."""

    def expected_lia(self, verdict, witness, overflow, validation):
        if verdict == ActorVerdict.SAFE:
            return ChcVerdict.SAT if overflow == OverflowOutcome.NO_OVERFLOW else ChcVerdict.UNKNOWN
        if verdict == ActorVerdict.UNSAFE and witness is not None:
            return ChcVerdict.UNSAT if validation == ValidationOutcome.EXEC_CLEAN_VIOLATION else ChcVerdict.UNKNOWN
        return ChcVerdict.UNKNOWN

    def test_gate_lia_table(self):
        witnesses = (None, Path('witness.json'))
        for verdict, witness, overflow, validation in itertools.product(
                ActorVerdict, witnesses, OVERFLOWS, VALIDATIONS):
            with self.subTest(verdict=verdict, witness=witness, overflow=overflow, validation=validation):
                result = gate_lia(reach(verdict, witness), lambda _: overflow, lambda _: validation)
                self.assertEqual(result.verdict, self.expected_lia(verdict, witness, overflow, validation))
                self.assertEqual(len(result.provenance), 1)

    def test_gate_lia_sat_needs_no_overflow(self):
        self.assertEqual(
            gate_lia(reach(ActorVerdict.SAFE), lambda _: OverflowOutcome.NO_OVERFLOW, None).verdict,
            ChcVerdict.SAT,
        )
        self.assertEqual(
            gate_lia(reach(ActorVerdict.SAFE), lambda _: OverflowOutcome.OVERFLOW_FOUND, None).verdict,
            ChcVerdict.UNKNOWN,
        )

    def test_gate_lia_consults_only_what_it_needs(self):
        """Unknown reachability calls neither the overflow nor the validation step."""
        def fail(_):
            raise AssertionError("must not be called")
        result = gate_lia(reach(ActorVerdict.UNKNOWN), fail, fail)
        self.assertEqual(result.verdict, ChcVerdict.UNKNOWN)

    def test_gate_bv_table(self):
        expected = {
            ActorVerdict.SAFE: ChcVerdict.SAT,
            ActorVerdict.UNSAFE: ChcVerdict.UNSAT,
            ActorVerdict.UNKNOWN: ChcVerdict.UNKNOWN,
        }
        for verdict, chc in expected.items():
            with self.subTest(verdict=verdict):
                self.assertEqual(gate_bv(reach(verdict)).verdict, chc)


class TestPlans(unittest.TestCase):
    """Test cases for portfolio configuration."""

    def test_default_lia_plan(self):
        """The shipped plan: forward then backward, shared overflow group and validator."""
        plan = default_plan(LIA_THEORY)
        forward, backward = plan.stages
        self.assertEqual(forward.encoding, Encoding.FORWARD)
        self.assertEqual([a.name for a in forward.reach], ['thorn', 'bubaak', 'utaipan'])
        self.assertEqual(backward.encoding, Encoding.BACKWARD)
        self.assertEqual([a.name for a in backward.reach], ['cpv', 'ukojak'])
        for stage in plan.stages:
            self.assertEqual([a.name for a in stage.overflow], ['bubaak', 'symbiotic', 'uautomizer', 'esbmc-kind'])
            self.assertEqual(stage.validator.name, 'cpa-witness2test')
            self.assertEqual(stage.budget_fraction, 0.5)

    def test_default_bv_plan(self):
        plan = default_plan(BV4)
        self.assertEqual(len(plan.stages), 2)
        for stage in plan.stages:
            self.assertEqual([a.name for a in stage.reach], ['cpachecker', 'esbmc-kind', 'symbiotic'])
            self.assertEqual(stage.overflow, ())
            self.assertIsNone(stage.validator)

    def test_core_uses_lia_layout(self):
        plan = default_plan(CORE_THEORY)
        self.assertEqual([s.theory_route for s in plan.stages], [TheoryKind.LIA, TheoryKind.LIA])

    def test_restrict_plan(self):
        plan = restrict_plan(default_plan(LIA_THEORY), Encoding.BACKWARD)
        self.assertEqual(len(plan.stages), 1)
        self.assertEqual(plan.stages[0].budget_fraction, 1.0)

    def test_missing_route(self):
        with self.assertRaises(PlanTheoryMismatch):
            build_plan({'actors': {}, 'plans': {'BV': []}}, LIA_THEORY)

    def test_unknown_actor_reference(self):
        config = {'actors': {}, 'plans': {'BV': [{'encoding': 'Forward', 'reach': ['ghost']}]}}
        with self.assertRaises(PortfolioConfigError):
            build_plan(config, BV4)

    def test_bad_pattern(self):
        config = {
            'actors': {'a': {'kind': 'reachability', 'command': 'true', 'safe_pattern': '(',
                             'unsafe_pattern': 'x'}},
            'plans': {'BV': [{'encoding': 'Forward', 'reach': ['a']}]},
        }
        with self.assertRaises(PortfolioConfigError):
            build_plan(config, BV4)

    def test_lia_stage_needs_overflow_and_validator(self):
        actor = mock_actor('a')
        with self.assertRaises(ValueError):
            Stage(encoding=Encoding.FORWARD, theory_route=TheoryKind.LIA, reach=(actor,))

    def test_budget_fractions(self):
        actor = mock_actor('a')
        stage = Stage(encoding=Encoding.FORWARD, theory_route=TheoryKind.BV, reach=(actor,), budget_fraction=0.6)
        with self.assertRaises(ValueError):
            PortfolioPlan(stages=(stage, stage))

    def test_unknown_builtin(self):
        with self.assertRaises(ValueError):
            Actor(name='x', kind=ActorKind.BUILTIN, backend='nope', safe_pattern='a', unsafe_pattern='b')


class ActorTestCase(unittest.TestCase):
    """Shared scratch directory and task for actor tests."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.scratch = Path(self.tmp.name)
        system = parse_chc_file(FIXTURES / 'parity_bv4.smt2')
        program = transform(system, Encoding.BACKWARD)
        c_file = self.scratch / 'task.c'
        c_file.write_text(program.source, encoding='utf-8')
        self.system = system
        self.task = TaskInput(c_file, system, program)

    def tearDown(self):
        self.tmp.cleanup()


class TestRunActor(ActorTestCase):
    """Test cases for running a single actor."""

    def test_safe(self):
        result = run_actor(mock_actor('ok', '--print', 'VERIFICATION SUCCESSFUL'), self.task, 10, self.scratch)
        self.assertEqual(result.verdict, ActorVerdict.SAFE)
        self.assertEqual(result.actor, 'ok')

    def test_unsafe_collects_witness(self):
        actor = mock_actor('bad', '--print', 'VERIFICATION FAILED', '--witness', '{witness_dir}')
        result = run_actor(actor, self.task, 10, self.scratch)
        self.assertEqual(result.verdict, ActorVerdict.UNSAFE)
        self.assertIsNotNone(result.witness)
        self.assertTrue(result.witness.exists())

    def test_timeout(self):
        start = time.monotonic()
        result = run_actor(mock_actor('slow', '--sleep', '10'), self.task, 0.5, self.scratch)
        self.assertEqual(result.verdict, ActorVerdict.UNKNOWN)
        self.assertEqual(result.reasons, (UnknownCause.TIMEOUT,))
        self.assertLess(time.monotonic() - start, 3)
        self.assertGreaterEqual(result.wall_ms, 500)

    def test_ambiguous(self):
        actor = mock_actor('both', '--print', 'VERIFICATION SUCCESSFUL', '--print', 'VERIFICATION FAILED')
        result = run_actor(actor, self.task, 10, self.scratch)
        self.assertEqual(result.reasons, (UnknownCause.AMBIGUOUS_OUTPUT,))

    def test_no_match(self):
        result = run_actor(mock_actor('mute', '--print', 'hello'), self.task, 10, self.scratch)
        self.assertEqual(result.reasons, (UnknownCause.NO_MATCH,))

    def test_missing_tool(self):
        actor = Actor(name='ghost', kind=ActorKind.REACHABILITY, command='/nonexistent/verifier {input_file}',
                      safe_pattern='a', unsafe_pattern='b')
        result = run_actor(actor, self.task, 10, self.scratch)
        self.assertEqual(result.reasons, (UnknownCause.TOOL_ERROR,))

    def test_builtin_oracle(self):
        actor = Actor(name='oracle', kind=ActorKind.BUILTIN, backend='oracle',
                      safe_pattern='^RESULT: TRUE', unsafe_pattern='^RESULT: FALSE')
        result = run_actor(actor, self.task, 10, self.scratch)
        self.assertEqual(result.verdict, ActorVerdict.SAFE)
        log = self.scratch / 'oracle.builtin' / 'output.log'
        self.assertIn('RESULT: TRUE', log.read_text(encoding='utf-8'))


DOUBLING = """
(set-logic HORN)
(declare-fun A (Int) Bool)
(assert (forall ((x Int)) (=> (= x 1) (A x))))
(assert (forall ((x Int) (y Int)) (=> (and (A x) (= y (* 2 x))) (A y))))
(assert (forall ((x Int)) (=> (and (A x) (< x 0)) false)))
"""


class TestOverflowMonitor(unittest.TestCase):
    """The builtin overflow group only reports overflow-free after a complete fixpoint."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.scratch = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def outcome(self, system, **options):
        program = transform(system, Encoding.BACKWARD)
        c_file = self.scratch / 'task.c'
        c_file.write_text(program.source, encoding='utf-8')
        actor = Actor(name='overflow-monitor', kind=ActorKind.BUILTIN, backend='overflow-monitor',
                      options=options, safe_pattern='^OVERFLOW-FREE', unsafe_pattern='^OVERFLOW FOUND')
        return run_overflow([actor], TaskInput(c_file, system, program), 10, self.scratch)

    def test_bounded_lia_search_is_undecided(self):
        system = parse_chc_file(FIXTURES / 'counter_bounded.smt2')
        outcome = self.outcome(system, int_lo=-64, int_hi=64)
        self.assertEqual(outcome, OverflowOutcome.OVERFLOW_UNKNOWN)
        log = self.scratch / 'overflow-monitor.builtin' / 'output.log'
        self.assertIn('OVERFLOW UNDECIDED', log.read_text(encoding='utf-8'))

    def test_overflow_found(self):
        system = parse_chc(DOUBLING)
        outcome = self.outcome(system, bits=6, int_lo=-64, int_hi=64)
        self.assertEqual(outcome, OverflowOutcome.OVERFLOW_FOUND)

    def test_complete_bitvector_fixpoint_is_overflow_free(self):
        system = parse_chc_file(FIXTURES / 'parity_bv4.smt2')
        self.assertEqual(self.outcome(system), OverflowOutcome.NO_OVERFLOW)


class TestRunParallel(ActorTestCase):
    """Test cases for first-result-wins groups."""

    def test_fast_safe_wins(self):
        group = [
            mock_actor('fast', '--sleep', '0.01', '--print', 'VERIFICATION SUCCESSFUL'),
            mock_actor('hang1', '--sleep', '10'),
            mock_actor('hang2', '--sleep', '10'),
        ]
        start = time.monotonic()
        result = run_parallel(group, self.task, 20, self.scratch, grace_s=0.5)
        self.assertEqual(result.verdict, ActorVerdict.SAFE)
        self.assertEqual(result.actor, 'fast')
        self.assertLess(time.monotonic() - start, 1)

    def test_first_definitive_wins(self):
        group = [
            mock_actor('late', '--sleep', '5', '--print', 'VERIFICATION SUCCESSFUL'),
            mock_actor('early', '--sleep', '0.05', '--print', 'VERIFICATION FAILED'),
        ]
        result = run_parallel(group, self.task, 1, self.scratch, grace_s=0.5)
        self.assertEqual(result.verdict, ActorVerdict.UNSAFE)
        self.assertEqual(result.actor, 'early')

    def test_all_unknown(self):
        group = [mock_actor('m1', '--print', 'hm'), mock_actor('m2', '--exit', '3')]
        result = run_parallel(group, self.task, 5, self.scratch)
        self.assertEqual(result.verdict, ActorVerdict.UNKNOWN)
        self.assertEqual(result.reasons, (UnknownCause.NO_MATCH,))

    def test_sequenced_outcomes_are_deterministic(self):
        group = [
            mock_actor('a', '--sleep', '0.05', '--print', 'VERIFICATION FAILED'),
            mock_actor('b', '--sleep', '2', '--print', 'VERIFICATION SUCCESSFUL'),
        ]
        first = run_parallel(group, self.task, 5, self.scratch / 'one')
        second = run_parallel(group, self.task, 5, self.scratch / 'two')
        self.assertEqual((first.verdict, first.actor), (second.verdict, second.actor))


class TestRunPortfolio(unittest.TestCase):
    """End-to-end runs with builtin and mock actors."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.scratch = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def solve(self, name, encoding=None):
        system = parse_chc_file(FIXTURES / name)
        plan = load_plan(ORACLE_PORTFOLIO_FILE, system.theory)
        if encoding is not None:
            plan = restrict_plan(plan, encoding)
        return run_portfolio(system, plan, 30, self.scratch / name)

    def test_counter_unsat_through_validator(self):
        result = self.solve('counter.smt2')
        self.assertEqual(result.verdict, ChcVerdict.UNSAT)
        record = result.provenance[0]
        self.assertEqual(record.encoding, 'Forward')
        self.assertEqual(record.validation, ValidationOutcome.EXEC_CLEAN_VIOLATION)
        self.assertTrue((self.scratch / 'counter.smt2' / PROVENANCE_FILE).exists())

    def test_bitvector_sat(self):
        result = self.solve('parity_bv4.smt2')
        self.assertEqual(result.verdict, ChcVerdict.SAT)
        self.assertEqual(result.provenance[0].route, 'BV')

    def test_bitvector_unsat(self):
        self.assertEqual(self.solve('steps_bv4.smt2').verdict, ChcVerdict.UNSAT)

    def test_core_sat(self):
        result = self.solve('flags_core.smt2')
        self.assertEqual(result.verdict, ChcVerdict.SAT)
        self.assertEqual(result.provenance[0].overflow, OverflowOutcome.NO_OVERFLOW)

    def test_lia_safe_stays_unknown(self):
        """Bounded saturation cannot prove LIA safety: both stages end unknown."""
        result = self.solve('counter_bounded.smt2')
        self.assertEqual(result.verdict, ChcVerdict.UNKNOWN)
        self.assertEqual(len(result.provenance), 2)

    def test_nonlinear_forward_only(self):
        result = self.solve('nonlinear.smt2', Encoding.FORWARD)
        self.assertEqual(result.verdict, ChcVerdict.UNKNOWN)
        self.assertEqual(result.provenance[0].note, SKIPPED_FORWARD)

    def test_nonlinear_backward(self):
        self.assertEqual(self.solve('nonlinear.smt2').verdict, ChcVerdict.UNSAT)

    def test_provenance_replays(self):
        for name in ('counter.smt2', 'parity_bv4.smt2', 'counter_bounded.smt2', 'nonlinear.smt2'):
            with self.subTest(fixture=name):
                result = self.solve(name)
                records = read_provenance(self.scratch / name / PROVENANCE_FILE)
                self.assertEqual(replay_provenance(records), result.verdict)
                self.assertEqual(replay_provenance(result.provenance), result.verdict)

    def test_plan_theory_mismatch(self):
        system = parse_chc_file(FIXTURES / 'counter.smt2')
        plan = load_plan(ORACLE_PORTFOLIO_FILE, BV4)
        with self.assertRaises(PlanTheoryMismatch):
            run_portfolio(system, plan, 5, self.scratch)

    def test_unknown_stages_respect_budget(self):
        """Two stages of hanging mocks end within budget plus grace."""
        system = parse_chc_file(FIXTURES / 'parity_bv4.smt2')
        group = (mock_actor('hang1', '--sleep', '10'), mock_actor('hang2', '--sleep', '10'))
        plan = PortfolioPlan(stages=(
            Stage(encoding=Encoding.FORWARD, theory_route=TheoryKind.BV, reach=group),
            Stage(encoding=Encoding.BACKWARD, theory_route=TheoryKind.BV, reach=group),
        ))
        start = time.monotonic()
        result = run_portfolio(system, plan, 2, self.scratch / 'hang')
        self.assertEqual(result.verdict, ChcVerdict.UNKNOWN)
        self.assertLess(time.monotonic() - start, 3)
        self.assertEqual([r.reach.reasons for r in result.provenance], [(UnknownCause.TIMEOUT,)] * 2)


if __name__ == '__main__':
    unittest.main()
