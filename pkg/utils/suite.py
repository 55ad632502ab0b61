"""
Random Suite Generation
-----------------------
Generates small random linear bitvector CHC systems (predicates of arity
one or two, at most three predicates and five rules) and writes them as a
benchmark directory together with their brute-force verdicts.
"""

import logging
from pathlib import Path

import numpy as np

from models.chc import (
    TRUE, BvLit, ChcSystem, PredicateApp, PredicateDecl, Rule, Var, bitvec, conjoin, make_app,
)
from models.printer import print_chc

from .brute_force import enumerate_verdict
from .data_handler import save_expected_verdicts

logger = logging.getLogger(__name__)

EXPECTED_FILE = 'expected.csv'

STEP_OPS = (
    'bvadd', 'bvsub', 'bvmul', 'bvand', 'bvor', 'bvxor', 'bvshl', 'bvlshr', 'bvashr',
)
UNARY_OPS = ('bvneg', 'bvnot')
GUARD_OPS = (
    'bvult', 'bvule', 'bvugt', 'bvuge', 'bvslt', 'bvsle', 'bvsgt', 'bvsge',
)


class SuiteGenerator:
    """
    Random linear BV systems drawn from a seeded numpy generator.

    Every system has one fact rule first and one query last; the rules in
    between are further facts or single-premise steps whose head arguments
    are computed from the premise arguments (``x op c``, ``op x``, a rotate
    built from ``extract`` and ``concat``, or a plain copy), optionally
    guarded by a comparison of one argument with a constant.
    """

    def __init__(self, seed=0, width=4, max_predicates=3, max_rules=5, max_arity=2):
        self.rng = np.random.default_rng(seed)
        self.width = width
        self.sort = bitvec(width)
        self.max_predicates = max_predicates
        self.max_rules = max_rules
        self.max_arity = max_arity

    def _const(self, width=None):
        width = width or self.width
        return BvLit(int(self.rng.integers(0, 1 << width)), width)

    def _pick(self, options):
        return options[int(self.rng.integers(0, len(options)))]

    def _vars(self, prefix, pred):
        return tuple(Var(f"{prefix}{i}", self.sort) for i in range(len(pred.arg_sorts)))

    def _guard(self, var):
        op = self._pick(GUARD_OPS)
        return make_app(op, (var, self._const()))

    def _update(self, sources):
        x = self._pick(sources)
        draw = self.rng.random()
        if draw < 0.6:
            return make_app(self._pick(STEP_OPS), (x, self._const()))
        if draw < 0.75:
            return make_app(self._pick(UNARY_OPS), (x,))
        if draw < 0.9 and self.width > 1:
            keep = int(self.rng.integers(1, self.width))
            low = make_app('extract', (x,), (keep - 1, 0))
            return make_app('concat', (low, self._const(self.width - keep)))
        return x

    def _fact(self, pred):
        ys = self._vars('y', pred)
        parts = []
        for y in ys:
            if self.rng.random() < 0.5:
                parts.append(make_app('=', (y, self._const())))
            else:
                parts.append(self._guard(y))
        return Rule(ys, conjoin(parts), (), PredicateApp(pred, ys))

    def _step(self, source, target):
        xs = self._vars('x', source)
        head = tuple(self._update(xs) for _ in target.arg_sorts)
        constraint = self._guard(self._pick(xs)) if self.rng.random() < 0.5 else TRUE
        return Rule(xs, constraint, (PredicateApp(source, xs),), PredicateApp(target, head))

    def _query(self, pred):
        xs = self._vars('x', pred)
        x = self._pick(xs)
        if self.rng.random() < 0.5:
            constraint = make_app('=', (x, self._const()))
        else:
            constraint = self._guard(x)
        return Rule(xs, constraint, (PredicateApp(pred, xs),), None)

    def system(self):
        """Draw one system."""
        count = int(self.rng.integers(1, self.max_predicates + 1))
        preds = [
            PredicateDecl(f"P{i}", (self.sort,) * int(self.rng.integers(1, self.max_arity + 1)))
            for i in range(count)
        ]
        n_rules = int(self.rng.integers(2, self.max_rules + 1))

        rules = [self._fact(self._pick(preds))]
        for _ in range(n_rules - 2):
            if self.rng.random() < 0.75:
                rules.append(self._step(self._pick(preds), self._pick(preds)))
            else:
                rules.append(self._fact(self._pick(preds)))
        rules.append(self._query(self._pick(preds)))
        return ChcSystem.build(preds, rules)


def generate_suite(out_dir, count=200, seed=0, width=4):
    """
    Write ``count`` random systems plus ``expected.csv`` to ``out_dir``.

    Task names are the file stems (``task_000`` ...); expected verdicts come
    from the brute-force enumerator.

    Returns:
        dict: task name -> expected verdict
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    generator = SuiteGenerator(seed=seed, width=width)
    digits = max(3, len(str(count - 1)))
    expected = {}
    for i in range(count):
        system = generator.system()
        name = f"task_{i:0{digits}d}"
        (out_dir / f"{name}.smt2").write_text(print_chc(system), encoding='utf-8')
        expected[name] = enumerate_verdict(system)
    save_expected_verdicts(expected, out_dir / EXPECTED_FILE)
    logger.info("wrote %d tasks to %s (%d unsat)", count, out_dir,
                sum(v == 'unsat' for v in expected.values()))
    return expected
