"""
Brute-Force Enumerator
----------------------
Naive least-fixpoint computation used as a reference for the saturation
oracle. Every rule is tried under every assignment of its variables over
the full value range of their sorts, round after round, until no new fact
appears or a query fires. Only meant for small bitvector and Bool systems.

Terms are evaluated here on their own: bitvectors are tuples of bits
(least significant first) and the operators are built from ripple-carry
addition, bit shifting and bitwise comparison, so that a disagreement with
the oracle points at one of the two evaluators.
"""

import itertools
import logging

from models.chc import BoolLit, BvLit, IntLit, Var

logger = logging.getLogger(__name__)


def to_bits(value, width):
    """Bits of an unsigned value, least significant first."""
    return tuple(bool((value >> i) & 1) for i in range(width))


def from_bits(bits):
    return sum(1 << i for i, bit in enumerate(bits) if bit)


def _add(a, b):
    out, carry = [], False
    for x, y in zip(a, b):
        out.append(x ^ y ^ carry)
        carry = (x and y) or (carry and (x ^ y))
    return tuple(out)


def _not(a):
    return tuple(not x for x in a)


def _neg(a):
    return _add(_not(a), to_bits(1, len(a)))


def _shift_left(a, k):
    k = min(k, len(a))
    return (False,) * k + a[:len(a) - k]


def _shift_right(a, k, fill=False):
    k = min(k, len(a))
    return a[k:] + (fill,) * k


def _mul(a, b):
    acc = (False,) * len(a)
    for i, bit in enumerate(b):
        if bit:
            acc = _add(acc, _shift_left(a, i))
    return acc


def _less(a, b):
    for x, y in zip(reversed(a), reversed(b)):
        if x != y:
            return y
    return False


def _flip_sign(a):
    return a[:-1] + (not a[-1],)


def _fold(fn, values):
    result = values[0]
    for value in values[1:]:
        result = fn(result, value)
    return result


_BITWISE = {
    'bvand': lambda a, b: tuple(x and y for x, y in zip(a, b)),
    'bvor': lambda a, b: tuple(x or y for x, y in zip(a, b)),
    'bvxor': lambda a, b: tuple(x != y for x, y in zip(a, b)),
    'bvadd': _add,
    'bvmul': _mul,
}

_COMPARE = {
    'bvult': lambda a, b: _less(a, b),
    'bvule': lambda a, b: not _less(b, a),
    'bvugt': lambda a, b: _less(b, a),
    'bvuge': lambda a, b: not _less(a, b),
}


def evaluate_bits(term, env):
    """
    Evaluate a ground Bool or bitvector term.

    Args:
        term (Term): the term to evaluate
        env (Mapping[str, value]): variable values; bitvectors as bit tuples

    Returns:
        bool | tuple: the value of the term

    Raises:
        ValueError: the term uses Int arithmetic
    """
    if isinstance(term, Var):
        return env[term.name]
    if isinstance(term, BvLit):
        return to_bits(term.value, term.width)
    if isinstance(term, BoolLit):
        return term.value
    if isinstance(term, IntLit):
        raise ValueError("cannot enumerate Int terms")

    op = term.op
    values = [evaluate_bits(a, env) for a in term.args]
    if op == 'and':
        return all(values)
    if op == 'or':
        return any(values)
    if op == 'not':
        return not values[0]
    if op == '=>':
        return (not values[0]) or values[1]
    if op == 'ite':
        return values[1] if values[0] else values[2]
    if op == '=':
        return values[0] == values[1]
    if op in _BITWISE:
        return _fold(_BITWISE[op], values)
    if op in _COMPARE:
        return _COMPARE[op](values[0], values[1])
    if op in ('bvslt', 'bvsle', 'bvsgt', 'bvsge'):
        unsigned = 'bvu' + op[3:]
        return _COMPARE[unsigned](_flip_sign(values[0]), _flip_sign(values[1]))
    if op == 'bvsub':
        return _add(values[0], _neg(values[1]))
    if op == 'bvneg':
        return _neg(values[0])
    if op == 'bvnot':
        return _not(values[0])
    if op == 'bvshl':
        return _shift_left(values[0], from_bits(values[1]))
    if op == 'bvlshr':
        return _shift_right(values[0], from_bits(values[1]))
    if op == 'bvashr':
        return _shift_right(values[0], from_bits(values[1]), fill=values[0][-1])
    if op == 'concat':
        return values[1] + values[0]
    if op == 'extract':
        hi, lo = term.params
        return values[0][lo:hi + 1]
    if op == 'zero_extend':
        return values[0] + (False,) * term.params[0]
    if op == 'sign_extend':
        return values[0] + (values[0][-1],) * term.params[0]
    raise ValueError(f"cannot enumerate operator '{op}'")


def _all_values(sort):
    if sort.is_bool:
        return (False, True)
    if sort.is_bv:
        return tuple(itertools.product((False, True), repeat=sort.width))
    raise ValueError(f"cannot enumerate sort {sort}")


def _instances(rule):
    """(premise facts, head fact or None) for every assignment satisfying the constraint."""
    names = [v.name for v in rule.vars]
    ranges = [_all_values(v.sort) for v in rule.vars]
    instances = []
    for values in itertools.product(*ranges):
        env = dict(zip(names, values))
        if not evaluate_bits(rule.constraint, env):
            continue
        premise = tuple(
            (app.pred.name, tuple(evaluate_bits(a, env) for a in app.args)) for app in rule.premise
        )
        head = None
        if not rule.is_query:
            head = (rule.head.pred.name, tuple(evaluate_bits(a, env) for a in rule.head.args))
        instances.append((premise, head))
    return instances


def enumerate_verdict(system, max_rounds=10_000):
    """
    Decide a finite-domain system by exhaustive enumeration.

    Args:
        system (ChcSystem): a Core or bitvector system
        max_rounds (int): safety bound on fixpoint rounds

    Returns:
        str: 'unsat' if some query fires, 'sat' otherwise

    Raises:
        ValueError: the system has Int variables or terms
    """
    # constraints do not depend on facts, so each rule is grounded once
    grounded = [(rule, _instances(rule)) for rule in system.rules]
    facts = set()
    for _ in range(max_rounds):
        new = set()
        for rule, instances in grounded:
            for premise, head in instances:
                if not all(fact in facts for fact in premise):
                    continue
                if rule.is_query:
                    return 'unsat'
                if head not in facts:
                    new.add(head)
        if not new:
            logger.debug("fixpoint after %d facts", len(facts))
            return 'sat'
        facts |= new
    raise RuntimeError(f"no fixpoint within {max_rounds} rounds")
