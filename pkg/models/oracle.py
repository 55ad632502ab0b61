"""
Saturation Oracle
-----------------
Bounded ground-truth solver. Ground facts are derived bottom-up over a
finite domain (semi-naive: a rule is only re-fired against a fact that was
not yet processed) until a query fires, a fixpoint is reached, or a limit
is hit.

Unsat answers come with a Derivation that ``check_derivation`` re-verifies
independently and that ``replay_inputs`` turns into the nondet input
sequence driving a forward-encoded C program to its error location.
"""

import logging
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Optional

from config.settings import (
    DEFAULT_BV_CAP, DEFAULT_INT_HI, DEFAULT_INT_LO, DEFAULT_MAX_FACTS,
    DEFAULT_MAX_STEPS, MAX_BV_CAP,
)

from .chc import App, Linearity, TheoryKind, Var, classify_linearity, conjuncts, free_vars, normalize
from .codegen import forward_rule_order
from .errors import ReplayUnsupported
from .semantics import evaluate

logger = logging.getLogger(__name__)


class UnknownReason(str, Enum):
    BOUND_EXHAUSTED = 'BoundExhausted'
    INT_DOMAIN_INCOMPLETE = 'IntDomainIncomplete'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DomainSpec:
    """
    Finite evaluation domain: Int ranges over [int_lo, int_hi]; a bitvector
    of width w ranges over all 2^w values when w <= bv_cap, otherwise over
    the first 2^bv_cap values only.
    """

    int_lo: int = DEFAULT_INT_LO
    int_hi: int = DEFAULT_INT_HI
    bv_cap: int = DEFAULT_BV_CAP

    def __post_init__(self):
        if self.int_lo > self.int_hi:
            raise ValueError(f"empty Int domain [{self.int_lo}, {self.int_hi}]")
        if not 0 < self.bv_cap <= MAX_BV_CAP:
            raise ValueError(f"bitvector cap must be between 1 and {MAX_BV_CAP}, got {self.bv_cap}")

    def values(self, sort):
        if sort.is_bool:
            return (False, True)
        if sort.is_int:
            return range(self.int_lo, self.int_hi + 1)
        return range(1 << min(sort.width, self.bv_cap))

    def contains(self, sort, value):
        if sort.is_bool:
            return isinstance(value, bool)
        if sort.is_int:
            return self.int_lo <= value <= self.int_hi
        return 0 <= value < (1 << min(sort.width, self.bv_cap))

    def is_complete_for(self, theory):
        """True when the domain covers every value of every sort in ``theory``."""
        if theory.kind == TheoryKind.CORE:
            return True
        if theory.kind == TheoryKind.LIA:
            return False
        return max(theory.widths) <= self.bv_cap


@dataclass(frozen=True)
class Limits:
    max_facts: int = DEFAULT_MAX_FACTS
    max_steps: int = DEFAULT_MAX_STEPS


@dataclass(frozen=True)
class Step:
    """
    One rule application: the rule's variables take ``assignment`` (in
    rule.vars order). ``fact`` is the derived ``(predicate, args)``; it is
    None for the final query firing.
    """

    rule_index: int
    assignment: tuple
    fact: Optional[tuple] = None


@dataclass(frozen=True)
class Derivation:
    steps: tuple
    final_query: Step


@dataclass(frozen=True)
class Unsat:
    derivation: Derivation
    facts: int = 0
    status: ClassVar[str] = 'unsat'


@dataclass(frozen=True)
class Sat:
    model: Optional[frozenset] = None
    facts: int = 0
    status: ClassVar[str] = 'sat'


@dataclass(frozen=True)
class Unknown:
    reason: UnknownReason
    facts: int = 0
    detail: str = ''
    status: ClassVar[str] = 'unknown'


class _Exhausted(Exception):
    def __init__(self, detail):
        super().__init__(detail)
        self.detail = detail


class _Budget:
    def __init__(self, limits, deadline, cancel):
        self.limits = limits
        self.steps = 0
        self.deadline = deadline
        self.cancel = cancel

    def tick(self):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _Exhausted(f"step limit {self.limits.max_steps} reached")

    def check_interrupt(self):
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise _Exhausted("deadline reached")
        if self.cancel is not None and self.cancel():
            raise _Exhausted("cancelled")


class _RulePlan:
    """
    Static evaluation schedule for one rule.

    Variables bound by premise arguments come first; remaining variables
    are solved from equalities when possible and enumerated otherwise. Each
    constraint conjunct is checked as soon as all of its variables are bound.
    """

    def __init__(self, index, rule, dom):
        self.index = index
        self.rule = rule
        self.dom = dom
        self.actions = []

        bound = set()
        self.bindings = []
        for j, app in enumerate(rule.premise):
            for position, arg in enumerate(app.args):
                if isinstance(arg, Var):
                    self.bindings.append((j, position, arg.name))
                    bound.add(arg.name)

        pending = [(term, _names(term)) for term in conjuncts(rule.constraint)]
        matches = [
            (j, position, arg, _names(arg))
            for j, app in enumerate(rule.premise)
            for position, arg in enumerate(app.args)
            if not isinstance(arg, Var)
        ]
        used = set().union(*(names for _, names in pending), *(m[3] for m in matches))
        if rule.head is not None:
            used |= set().union(*(_names(arg) for arg in rule.head.args))

        def flush():
            for item in [p for p in pending if p[1] <= bound]:
                pending.remove(item)
                self.actions.append(('check', item[0]))
            for item in [m for m in matches if m[3] <= bound]:
                matches.remove(item)
                self.actions.append(('match', item[0], item[1], item[2]))

        flush()
        remaining = [v for v in rule.vars if v.name not in bound]
        while remaining:
            solved = self._solvable(pending, remaining, bound)
            if solved is not None:
                var, term, item = solved
                pending.remove(item)
                self.actions.append(('solve', var, term))
            else:
                var = next((v for v in remaining if v.name in used), remaining[0])
                kind = 'enum' if var.name in used else 'fix'
                self.actions.append((kind, var))
            remaining.remove(var)
            bound.add(var.name)
            flush()

    @staticmethod
    def _solvable(pending, remaining, bound):
        unbound = {v.name: v for v in remaining}
        for item in pending:
            term = item[0]
            if not (isinstance(term, App) and term.op == '='):
                continue
            for target, other in (term.args, reversed(term.args)):
                if isinstance(target, Var) and target.name in unbound and _names(other) <= bound:
                    return unbound[target.name], other, item
        return None

    def assignments(self, premise_facts, budget):
        """Yield every environment satisfying the rule for the given premise facts."""
        env = {}
        for j, position, name in self.bindings:
            value = premise_facts[j][1][position]
            if name in env and env[name] != value:
                return
            env[name] = value
        yield from self._run(0, env, premise_facts, budget)

    def _run(self, k, env, premise_facts, budget):
        if k == len(self.actions):
            yield env
            return
        action = self.actions[k]
        kind = action[0]
        if kind == 'check':
            budget.tick()
            if evaluate(action[1], env):
                yield from self._run(k + 1, env, premise_facts, budget)
        elif kind == 'match':
            _, j, position, term = action
            budget.tick()
            if evaluate(term, env) == premise_facts[j][1][position]:
                yield from self._run(k + 1, env, premise_facts, budget)
        elif kind == 'solve':
            _, var, term = action
            budget.tick()
            value = evaluate(term, env)
            if self.dom.contains(var.sort, value):
                env[var.name] = value
                yield from self._run(k + 1, env, premise_facts, budget)
                del env[var.name]
        else:
            var = action[1]
            values = self.dom.values(var.sort)
            if kind == 'fix':
                values = values[:1]
            for value in values:
                env[var.name] = value
                yield from self._run(k + 1, env, premise_facts, budget)
            del env[var.name]

    def head_fact(self, env):
        head = self.rule.head
        return head.pred.name, tuple(evaluate(arg, env) for arg in head.args)

    def assignment(self, env):
        return tuple(env[v.name] for v in self.rule.vars)


def _names(term):
    return {v.name for v in free_vars(term)}


def saturate(system, dom=None, limits=None, deadline=None, cancel=None, monitor=None):
    """
    Derive ground facts until a query fires or nothing new follows.

    Args:
        system (ChcSystem): the CHC system; heads are normalized first
        dom (DomainSpec): finite evaluation domain
        limits (Limits): bounds on derived facts and constraint evaluations
        deadline (float): optional ``time.monotonic()`` instant to give up at
        cancel (callable): optional predicate polled between facts
        monitor (callable): optional Int overflow monitor handed to evaluation;
            its exception propagates to the caller

    Returns:
        Unsat | Sat | Unknown
    """
    dom = dom or DomainSpec()
    limits = limits or Limits()
    system = normalize(system)
    if not system.queries:
        return Sat(model=None, facts=0)

    budget = _Budget(limits, deadline, cancel)
    plans = [_RulePlan(i, rule, dom) for i, rule in enumerate(system.rules)]
    if monitor is not None:
        plans = [_MonitoredPlan(plan, monitor) for plan in plans]

    # queries are tried before head rules so they fire as early as possible
    ordered = sorted(plans, key=lambda plan: not plan.rule.is_query)
    seeds = [plan for plan in ordered if not plan.rule.premise]
    triggers = defaultdict(list)
    for plan in ordered:
        for j, app in enumerate(plan.rule.premise):
            triggers[app.pred.name].append((plan, j))

    justification = {}
    processed = defaultdict(list)
    queue = deque()

    def fire(plan, premise_facts):
        for env in plan.assignments(premise_facts, budget):
            if plan.rule.is_query:
                return Step(plan.index, plan.assignment(env)), premise_facts
            fact = plan.head_fact(env)
            if fact not in justification:
                if len(justification) >= limits.max_facts:
                    raise _Exhausted(f"fact limit {limits.max_facts} reached")
                justification[fact] = (plan.index, plan.assignment(env), premise_facts)
                queue.append(fact)
        return None

    try:
        hit = None
        for plan in seeds:
            hit = fire(plan, ())
            if hit:
                break
        while hit is None and queue:
            budget.check_interrupt()
            fact = queue.popleft()
            for plan, j in triggers[fact[0]]:
                hit = _fire_with(plan, j, fact, processed, fire)
                if hit:
                    break
            processed[fact[0]].append(fact)
    except _Exhausted as exc:
        logger.info("saturation gave up after %d facts: %s", len(justification), exc.detail)
        return Unknown(UnknownReason.BOUND_EXHAUSTED, len(justification), exc.detail)

    if hit is not None:
        query_step, premise_facts = hit
        derivation = Derivation(_reconstruct(premise_facts, justification), query_step)
        logger.info("query fired after %d facts, %d evaluations", len(justification), budget.steps)
        return Unsat(derivation, len(justification))
    logger.info("fixpoint reached with %d facts, %d evaluations", len(justification), budget.steps)
    if dom.is_complete_for(system.theory):
        return Sat(frozenset(justification), len(justification))
    return Unknown(UnknownReason.INT_DOMAIN_INCOMPLETE, len(justification))


def _fire_with(plan, j, fact, processed, fire):
    """Fire ``plan`` with ``fact`` at premise position ``j`` against processed facts."""
    premise = plan.rule.premise
    choices = []
    for i, app in enumerate(premise):
        if i == j:
            choices.append([fact])
        elif i < j or app.pred.name != fact[0]:
            choices.append(processed[app.pred.name])
        else:
            choices.append(processed[app.pred.name] + [fact])
    return _product(plan, choices, 0, [], fire)


def _product(plan, choices, i, chosen, fire):
    if i == len(choices):
        return fire(plan, tuple(chosen))
    for candidate in list(choices[i]):
        chosen.append(candidate)
        hit = _product(plan, choices, i + 1, chosen, fire)
        chosen.pop()
        if hit:
            return hit
    return None


class _MonitoredPlan:
    """A rule plan whose evaluations run under an Int overflow monitor."""

    def __init__(self, plan, monitor):
        self._plan = plan
        self._monitor = monitor

    def __getattr__(self, name):
        return getattr(self._plan, name)

    def assignments(self, premise_facts, budget):
        for env in self._plan.assignments(premise_facts, budget):
            # re-evaluate the whole rule under the monitor once it is satisfied
            evaluate(self._plan.rule.constraint, env, self._monitor)
            for app in self._plan.rule.applications():
                for arg in app.args:
                    evaluate(arg, env, self._monitor)
            yield env


def _reconstruct(premise_facts, justification):
    """Minimal ordered list of steps supporting ``premise_facts``."""
    steps = []
    seen = set()
    stack = [(fact, False) for fact in reversed(premise_facts)]
    while stack:
        fact, expanded = stack.pop()
        if fact in seen:
            continue
        rule_index, assignment, parents = justification[fact]
        if expanded:
            seen.add(fact)
            steps.append(Step(rule_index, assignment, fact))
            continue
        stack.append((fact, True))
        stack.extend((parent, False) for parent in reversed(parents) if parent not in seen)
    return tuple(steps)


# Independent checking
# --------------------

def check_derivation(system, d, dom=None):
    """
    Re-verify a derivation by direct evaluation.

    Every step's assignment must lie in the domain, satisfy the rule's
    constraint, use only facts derived by earlier steps and produce the
    recorded fact; the final query must hold the same way.

    Returns:
        bool: True iff the derivation is valid for ``system``
    """
    dom = dom or DomainSpec()
    system = normalize(system)
    derived = set()

    def holds(rule_index, assignment):
        if not 0 <= rule_index < len(system.rules):
            return None
        rule = system.rules[rule_index]
        if len(assignment) != len(rule.vars):
            return None
        if not all(dom.contains(v.sort, value) for v, value in zip(rule.vars, assignment)):
            return None
        env = {v.name: value for v, value in zip(rule.vars, assignment)}
        if evaluate(rule.constraint, env) is not True:
            return None
        for app in rule.premise:
            if (app.pred.name, tuple(evaluate(a, env) for a in app.args)) not in derived:
                return None
        return rule, env

    try:
        for step in d.steps:
            result = holds(step.rule_index, step.assignment)
            if result is None or result[0].head is None:
                return False
            rule, env = result
            fact = (rule.head.pred.name, tuple(evaluate(a, env) for a in rule.head.args))
            if tuple(step.fact) != fact:
                return False
            derived.add(fact)
        result = holds(d.final_query.rule_index, d.final_query.assignment)
        return result is not None and result[0].is_query
    except (KeyError, TypeError, IndexError, ValueError):
        return False


# Replay
# ------

def replay_monitored(system, d, monitor):
    """
    Re-evaluate every rule application of a derivation under an Int
    overflow monitor, the way the C program would compute it.

    Raises:
        IntegerOverflow: some constraint or argument leaves the monitored range
    """
    system = normalize(system)
    for step in d.steps + (d.final_query,):
        rule = system.rules[step.rule_index]
        env = {v.name: value for v, value in zip(rule.vars, step.assignment)}
        for value, var in zip(step.assignment, rule.vars):
            if var.sort.is_int:
                monitor(value)
        evaluate(rule.constraint, env, monitor)
        for app in rule.applications():
            for arg in app.args:
                evaluate(arg, env, monitor)


def _c_value(value):
    return int(value)


def replay_inputs(system, d):
    """
    Nondet input sequence that drives the forward encoding to its error.

    The sequence is: initialization selector and the atom's variable values,
    then per step the main-loop selector and the rule's variable values, and
    finally the query's selector and variable values.

    Raises:
        ReplayUnsupported: the system is non-linear
    """
    system = normalize(system)
    if classify_linearity(system) == Linearity.NONLINEAR:
        raise ReplayUnsupported("nondet replay needs a linear system")
    initial, steps = forward_rule_order(system)
    by_fact = {tuple(step.fact): step for step in d.steps}

    chain = [d.final_query]
    while True:
        rule = system.rules[chain[-1].rule_index]
        if not rule.premise:
            break
        env = {v.name: value for v, value in zip(rule.vars, chain[-1].assignment)}
        app = rule.premise[0]
        chain.append(by_fact[(app.pred.name, tuple(evaluate(a, env) for a in app.args))])
    chain.reverse()

    inputs = []
    for position, step in enumerate(chain):
        order = initial if position == 0 else steps
        inputs.append(order.index(step.rule_index))
        inputs.extend(_c_value(value) for value in step.assignment)
    return inputs


# Serialization
# -------------

def _step_to_dict(step):
    data = {'rule': step.rule_index, 'assignment': list(step.assignment)}
    if step.fact is not None:
        data['fact'] = {'predicate': step.fact[0], 'args': list(step.fact[1])}
    return data


def _step_from_dict(data):
    fact = None
    if 'fact' in data:
        fact = (data['fact']['predicate'], tuple(data['fact']['args']))
    return Step(int(data['rule']), tuple(data['assignment']), fact)


def derivation_to_dict(d):
    """JSON-ready representation of a derivation."""
    return {
        'steps': [_step_to_dict(step) for step in d.steps],
        'query': _step_to_dict(d.final_query),
    }


def derivation_from_dict(data):
    return Derivation(
        tuple(_step_from_dict(step) for step in data['steps']),
        _step_from_dict(data['query']),
    )


def _format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return str(value)


def format_derivation(system, d):
    """One line per step: rule index, assignment and derived fact."""
    system = normalize(system)
    lines = []
    for step in d.steps + (d.final_query,):
        rule = system.rules[step.rule_index]
        assignment = ', '.join(
            f"{v.name}={_format_value(value)}" for v, value in zip(rule.vars, step.assignment)
        )
        if step.fact is None:
            conclusion = 'false'
        else:
            name, args = step.fact
            conclusion = f"{name}({', '.join(_format_value(a) for a in args)})"
        lines.append(f"rule {step.rule_index} [{assignment}] -> {conclusion}")
    return '\n'.join(lines)
