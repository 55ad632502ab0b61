"""
Term Semantics
--------------
Ground evaluation of terms. Booleans evaluate to ``bool``, integers to
Python ``int`` (unbounded), bitvectors to unsigned ``int`` below 2^width.
"""

from .chc import BoolLit, BvLit, IntLit, Var


class IntegerOverflow(Exception):
    """Raised by an OverflowMonitor when an Int value leaves its range."""

    def __init__(self, value, lo, hi):
        self.value = value
        super().__init__(f"integer value {value} outside [{lo}, {hi}]")


class OverflowMonitor:
    """
    Watches Int results during evaluation and rejects values that would
    not fit the C type chosen for LIA integers.
    """

    def __init__(self, bits=32):
        self.bits = bits
        self.lo = -(1 << (bits - 1))
        self.hi = (1 << (bits - 1)) - 1

    def __call__(self, value):
        if not self.lo <= value <= self.hi:
            raise IntegerOverflow(value, self.lo, self.hi)
        return value


def to_signed(value, width):
    """Two's-complement reading of an unsigned ``width``-bit value."""
    if value >> (width - 1):
        return value - (1 << width)
    return value


def _mask(width):
    return (1 << width) - 1


def _fold(values, fn):
    result = values[0]
    for value in values[1:]:
        result = fn(result, value)
    return result


def _bv(op, values, width, params):
    m = _mask(width)
    if op == 'bvadd':
        return sum(values) & m
    if op == 'bvmul':
        return _fold(values, lambda a, b: (a * b) & m)
    if op == 'bvand':
        return _fold(values, lambda a, b: a & b)
    if op == 'bvor':
        return _fold(values, lambda a, b: a | b)
    if op == 'bvxor':
        return _fold(values, lambda a, b: a ^ b)
    if op == 'bvsub':
        return (values[0] - values[1]) & m
    if op == 'bvneg':
        return (-values[0]) & m
    if op == 'bvnot':
        return ~values[0] & m
    if op == 'bvshl':
        a, b = values
        return 0 if b >= width else (a << b) & m
    if op == 'bvlshr':
        a, b = values
        return 0 if b >= width else a >> b
    if op == 'bvashr':
        a, b = values
        return (to_signed(a, width) >> min(b, width - 1)) & m
    raise ValueError(f"unknown bitvector operator '{op}'")


_UNSIGNED_COMPARISONS = {
    'bvult': lambda a, b: a < b,
    'bvule': lambda a, b: a <= b,
    'bvugt': lambda a, b: a > b,
    'bvuge': lambda a, b: a >= b,
}

_SIGNED_COMPARISONS = {
    'bvslt': lambda a, b: a < b,
    'bvsle': lambda a, b: a <= b,
    'bvsgt': lambda a, b: a > b,
    'bvsge': lambda a, b: a >= b,
}

_INT_COMPARISONS = {
    '<': lambda a, b: a < b,
    '<=': lambda a, b: a <= b,
    '>': lambda a, b: a > b,
    '>=': lambda a, b: a >= b,
}


def evaluate(term, env, monitor=None):
    """
    Evaluate a ground instance of ``term``.

    Args:
        term (Term): the term to evaluate
        env (Mapping[str, value]): values of the free variables by name
        monitor (callable): optional check applied to every Int result

    Returns:
        bool | int: the value of the term
    """
    if isinstance(term, Var):
        return env[term.name]
    if isinstance(term, (BoolLit, BvLit)):
        return term.value
    if isinstance(term, IntLit):
        return monitor(term.value) if monitor else term.value

    op = term.op
    # short-circuit operators first
    if op == 'and':
        return all(evaluate(a, env, monitor) for a in term.args)
    if op == 'or':
        return any(evaluate(a, env, monitor) for a in term.args)
    if op == '=>':
        return (not evaluate(term.args[0], env, monitor)) or evaluate(term.args[1], env, monitor)
    if op == 'ite':
        branch = term.args[1] if evaluate(term.args[0], env, monitor) else term.args[2]
        return evaluate(branch, env, monitor)

    values = [evaluate(a, env, monitor) for a in term.args]
    if op == 'not':
        return not values[0]
    if op == '=':
        return values[0] == values[1]
    if op in _INT_COMPARISONS:
        return _INT_COMPARISONS[op](values[0], values[1])
    if op in ('+', '-', '*'):
        check = monitor or (lambda value: value)
        if op == '-' and len(values) == 1:
            return check(-values[0])
        # C evaluates left to right, so every partial result must fit too
        step = {'+': lambda a, b: a + b, '-': lambda a, b: a - b, '*': lambda a, b: a * b}[op]
        return _fold(values, lambda a, b: check(step(a, b)))

    width = term.args[0].sort.width
    if op in _UNSIGNED_COMPARISONS:
        return _UNSIGNED_COMPARISONS[op](values[0], values[1])
    if op in _SIGNED_COMPARISONS:
        return _SIGNED_COMPARISONS[op](to_signed(values[0], width), to_signed(values[1], width))
    if op == 'concat':
        return (values[0] << term.args[1].sort.width) | values[1]
    if op == 'extract':
        hi, lo = term.params
        return (values[0] >> lo) & _mask(hi - lo + 1)
    if op == 'zero_extend':
        return values[0]
    if op == 'sign_extend':
        return to_signed(values[0], width) & _mask(term.sort.width)
    return _bv(op, values, term.sort.width, term.params)
