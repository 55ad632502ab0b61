"""
C Code Generator
----------------
Translates a ChcSystem into a C program whose error location is reachable
exactly when the system is unsatisfiable.

Two encodings are provided:

  - forward (non-recursive): a single ``main`` that keeps one current fact
    (a predicate selector plus argument slots) and applies rules in a loop;
    only defined for linear systems.
  - backward (recursive): one C function per predicate that succeeds when
    its arguments are derivable; ``main`` checks the queries.

Programs are built as a C AST (see ``models.c_ast``) and rendered last.
"""

import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from config.settings import (
    DEFAULT_INT_C_TYPE, ERROR_FUNCTION, MAX_BV_WIDTH, REPLAY_ERROR_STATUS,
    SUPPORTED_INT_C_TYPES, VERSION,
)

from . import c_ast as c
from .chc import TRUE, App, BoolLit, BvLit, IntLit, Linearity, Var, classify_linearity, normalize
from .errors import CodegenError, ForwardRequiresLinear, LiteralOutOfRange, UnsupportedWidth
from .printer import print_chc

logger = logging.getLogger(__name__)

_CARRIERS = {
    8: 'unsigned char',
    16: 'unsigned short',
    32: 'unsigned int',
    64: 'unsigned long long',
}

_CARRIER_BITS = {
    'unsigned char': 8,
    'unsigned short': 16,
    'unsigned int': 32,
    'unsigned long long': 64,
    'int': 32,
    'long': 64,
    'long long': 64,
}

NONDET_FUNCTIONS = {
    'unsigned char': '__VERIFIER_nondet_uchar',
    'unsigned short': '__VERIFIER_nondet_ushort',
    'unsigned int': '__VERIFIER_nondet_uint',
    'unsigned long long': '__VERIFIER_nondet_ulonglong',
    'int': '__VERIFIER_nondet_int',
    'long': '__VERIFIER_nondet_long',
    'long long': '__VERIFIER_nondet_longlong',
}

SELECTOR_TYPE = 'int'

_INT_OPS = {'+': '+', '-': '-', '*': '*', '<': '<', '<=': '<=', '>': '>', '>=': '>='}
_UNSIGNED_CMP = {'bvult': '<', 'bvule': '<=', 'bvugt': '>', 'bvuge': '>='}
_SIGNED_CMP = {'bvslt': '<', 'bvsle': '<=', 'bvsgt': '>', 'bvsge': '>='}
_BITWISE = {'bvand': '&', 'bvor': '|', 'bvxor': '^'}


class Encoding(str, Enum):
    FORWARD = 'Forward'
    BACKWARD = 'Backward'

    def __str__(self):
        return self.value


class ErrorStyle(str, Enum):
    REACH_ERROR = 'ReachError'
    RETURN_MINUS_ONE = 'ReturnMinusOne'


@dataclass(frozen=True)
class EmitOptions:
    error_style: ErrorStyle = ErrorStyle.REACH_ERROR
    int_c_type: str = DEFAULT_INT_C_TYPE

    def __post_init__(self):
        if self.int_c_type not in SUPPORTED_INT_C_TYPES:
            choices = ', '.join(SUPPORTED_INT_C_TYPES)
            raise CodegenError(f"unsupported C type '{self.int_c_type}' for Int (choose from {choices})")


@dataclass(frozen=True)
class CTypeSpec:
    """
    How values of one sort are stored in C.

    ``bits`` is the logical width; ``mask`` is set when it differs from the
    width of the C carrier type ``c_name``.
    """

    c_name: str
    bits: int
    signed: bool
    mask: Optional[int] = None

    @property
    def carrier_bits(self):
        return _CARRIER_BITS[self.c_name]


@dataclass(frozen=True)
class CProgram:
    source: str
    encoding: Encoding
    recursive: bool
    theory: object
    error_symbol: str
    nondet_symbols: tuple
    ast: c.TranslationUnit


def map_sort(sort, opts=None):
    """
    Choose the C representation of a sort.

    Args:
        sort (Sort): Bool, Int or BitVec(w)
        opts (EmitOptions): emission options; Int uses ``opts.int_c_type``

    Returns:
        CTypeSpec: carrier type, logical width, signedness and mask

    Raises:
        UnsupportedWidth: for bitvectors wider than 64 bits
    """
    opts = opts or EmitOptions()
    if sort.is_bool:
        return CTypeSpec('unsigned char', 1, False, 0x1)
    if sort.is_int:
        return CTypeSpec(opts.int_c_type, SUPPORTED_INT_C_TYPES[opts.int_c_type], True)
    width = sort.width
    if width > MAX_BV_WIDTH:
        raise UnsupportedWidth(f"bitvector width {width} exceeds {MAX_BV_WIDTH} bits")
    carrier = next(bits for bits in sorted(_CARRIERS) if bits >= width)
    mask = None if width == carrier else (1 << width) - 1
    return CTypeSpec(_CARRIERS[carrier], width, False, mask)


# Identifiers
# -----------

def c_identifier(name):
    """
    Injectively map an SMT-LIB symbol to C identifier characters.

    Letters and digits are kept, ``_`` becomes ``__`` and every other
    character becomes ``_XX_`` with its hex code point.
    """
    out = []
    for ch in name:
        if ch.isascii() and ch.isalnum():
            out.append(ch)
        elif ch == '_':
            out.append('__')
        else:
            out.append(f"_{ord(ch):X}_")
    return ''.join(out)


def predicate_function(name):
    return f"p_{c_identifier(name)}"


def variable_name(name):
    return f"v_{c_identifier(name)}"


# Literals
# --------

def _suffix(spec):
    return {32: 'U', 64: 'ULL'}.get(spec.carrier_bits, '')


def _hex_const(value, spec):
    return c.Const(f"0x{value:X}{_suffix(spec)}")


def _bv_const(value, spec):
    if value < (1 << 31):
        return c.Const(f"{value}{_suffix(spec)}")
    return _hex_const(value, spec)


def int_literal(value):
    """
    Render an Int literal as a C constant expression.

    Raises:
        LiteralOutOfRange: the value does not fit in 64 bits
    """
    if -(1 << 31) <= value < (1 << 31):
        suffix, low = '', -(1 << 31)
    elif -(1 << 63) <= value < (1 << 63):
        suffix, low = 'LL', -(1 << 63)
    else:
        raise LiteralOutOfRange(f"integer literal {value} does not fit in 64 bits")
    if value == low:
        # the positive magnitude of the minimum is not representable
        return c.Binary('-', c.Unary('-', c.Const(f"{-value - 1}{suffix}")), c.Const('1'))
    if value < 0:
        return c.Unary('-', c.Const(f"{-value}{suffix}"))
    return c.Const(f"{value}{suffix}")


# Expression lowering
# -------------------

def _wrap(expr, spec):
    """Bring an arithmetic result back into the logical width of ``spec``."""
    if spec.mask is not None:
        return c.Binary('&', expr, _hex_const(spec.mask, spec))
    if spec.carrier_bits < 32:
        return c.Cast(spec.c_name, expr)
    return expr


def _widen(expr, spec):
    # narrow carriers are promoted to int; do the arithmetic unsigned instead
    if spec.carrier_bits < 32:
        return c.Cast('unsigned int', expr)
    return expr


def _fold(op, operands):
    result = operands[0]
    for operand in operands[1:]:
        result = c.Binary(op, result, operand)
    return result


def _sign_bit(expr, spec):
    return c.Binary('&', c.Binary('>>', expr, c.Const(str(spec.bits - 1))), c.Const('1'))


def _lower_shift(op, a, b, amount, spec):
    width = spec.bits
    if op == 'bvashr':
        ones = _hex_const((1 << width) - 1, spec)
        negative = _sign_bit(a, spec)
        if isinstance(amount, BvLit):
            shift = min(amount.value, width - 1)
            shift_c = c.Const(str(shift))
            top = _hex_const(((1 << width) - 1) ^ (((1 << width) - 1) >> shift), spec)
            return c.Binary('|', c.Binary('>>', a, shift_c), c.Cond(negative, top, c.Const('0')))
        top = c.Binary('^', ones, c.Binary('>>', ones, b))
        in_range = c.Binary('|', c.Binary('>>', a, b), c.Cond(negative, top, c.Const('0')))
        saturated = c.Cond(negative, ones, c.Const('0'))
        return c.Cond(c.Binary('>=', b, c.Const(str(width))), saturated, in_range)

    if isinstance(amount, BvLit) and amount.value >= width:
        return c.Const('0')
    if op == 'bvshl':
        shifted = _wrap(c.Binary('<<', _widen(a, spec), b), spec)
    else:
        shifted = c.Binary('>>', a, b)
    if isinstance(amount, BvLit):
        return shifted
    return c.Cond(c.Binary('>=', b, c.Const(str(width))), c.Const('0'), shifted)


def _lower_bv(term, args, opts):
    op = term.op
    if op in _UNSIGNED_CMP:
        return c.Binary(_UNSIGNED_CMP[op], args[0], args[1])
    if op in _SIGNED_CMP:
        spec = map_sort(term.args[0].sort, opts)
        sign = _hex_const(1 << (spec.bits - 1), spec)
        return c.Binary(_SIGNED_CMP[op], c.Binary('^', args[0], sign), c.Binary('^', args[1], sign))

    spec = map_sort(term.sort, opts)
    if op == 'bvadd':
        return _wrap(_fold('+', args), spec)
    if op == 'bvmul':
        return _wrap(_fold('*', [_widen(a, spec) for a in args]), spec)
    if op in _BITWISE:
        return _fold(_BITWISE[op], args)
    if op == 'bvsub':
        return _wrap(c.Binary('-', _widen(args[0], spec), args[1]), spec)
    if op == 'bvneg':
        return _wrap(c.Unary('-', _widen(args[0], spec)), spec)
    if op == 'bvnot':
        return _wrap(c.Unary('~', _widen(args[0], spec)), spec)
    if op in ('bvshl', 'bvlshr', 'bvashr'):
        return _lower_shift(op, args[0], args[1], term.args[1], spec)

    source = map_sort(term.args[0].sort, opts)
    if op == 'concat':
        low_width = term.args[1].sort.width
        high = c.Cast(spec.c_name if spec.carrier_bits >= 32 else 'unsigned int', args[0])
        joined = c.Binary('|', c.Binary('<<', high, c.Const(str(low_width))), args[1])
        return joined if spec.carrier_bits >= 32 else c.Cast(spec.c_name, joined)
    if op == 'extract':
        hi, lo = term.params
        value = args[0] if lo == 0 else c.Binary('>>', args[0], c.Const(str(lo)))
        if hi < source.bits - 1:
            value = c.Binary('&', value, _hex_const((1 << (hi - lo + 1)) - 1, source))
        return value if spec.c_name == source.c_name else c.Cast(spec.c_name, value)
    if op == 'zero_extend':
        return args[0] if spec.c_name == source.c_name else c.Cast(spec.c_name, args[0])
    if op == 'sign_extend':
        widened = args[0] if spec.c_name == source.c_name else c.Cast(spec.c_name, args[0])
        high_ones = ((1 << spec.bits) - 1) ^ ((1 << source.bits) - 1)
        extension = c.Cond(_sign_bit(args[0], source), _hex_const(high_ones, spec), c.Const('0'))
        return c.Binary('|', widened, extension)
    raise CodegenError(f"no C lowering for operator '{op}'")


def lower_term(term, env, opts=None):
    """
    Lower a term to a C expression node.

    Args:
        term (Term): a well-sorted term
        env (Mapping[str, c_ast node | str]): C expression for each free variable, by name
        opts (EmitOptions): emission options

    Returns:
        c_ast expression node
    """
    opts = opts or EmitOptions()
    if isinstance(term, Var):
        target = env[term.name]
        return c.Ident(target) if isinstance(target, str) else target
    if isinstance(term, BoolLit):
        return c.Const('1' if term.value else '0')
    if isinstance(term, IntLit):
        return int_literal(term.value)
    if isinstance(term, BvLit):
        return _bv_const(term.value, map_sort(term.sort, opts))
    if not isinstance(term, App):
        raise CodegenError(f"cannot lower {term!r}")

    args = [lower_term(a, env, opts) for a in term.args]
    op = term.op
    if op == 'and':
        return _fold('&&', args)
    if op == 'or':
        return _fold('||', args)
    if op == 'not':
        return c.Unary('!', args[0])
    if op == '=>':
        return c.Binary('||', c.Unary('!', args[0]), args[1])
    if op == 'ite':
        return c.Cond(args[0], args[1], args[2])
    if op == '=':
        return c.Binary('==', args[0], args[1])
    if op == '-' and len(args) == 1:
        return c.Unary('-', args[0])
    if op in _INT_OPS:
        return _fold(_INT_OPS[op], args)
    return _lower_bv(term, args, opts)


def emit_term(term, env, opts=None):
    """Lower a term and render it as parenthesized C expression text."""
    return c.render_expr(lower_term(term, env, opts))


# Program assembly
# ----------------

class _Emitter:
    """Shared state for building one program: options and the nondet externs in use."""

    def __init__(self, system, opts):
        self.system = system
        self.opts = opts
        self.nondet = set()
        for decl in system.decls:
            for sort in decl.arg_sorts:
                map_sort(sort, opts)
        for rule in system.rules:
            for var in rule.vars:
                map_sort(var.sort, opts)

    def draw(self, spec):
        """A nondet value of the given representation."""
        function = NONDET_FUNCTIONS[spec.c_name]
        self.nondet.add(spec.c_name)
        call = c.Call(function)
        if spec.mask is not None:
            return c.Binary('&', call, _hex_const(spec.mask, spec))
        return call

    def selector(self):
        return c.Assign('rule', self.draw(CTypeSpec(SELECTOR_TYPE, 32, True)))

    def draws(self, variables, env):
        """Declarations drawing every variable in order, extending ``env``."""
        stmts = []
        for var in variables:
            spec = map_sort(var.sort, self.opts)
            name = variable_name(var.name)
            stmts.append(c.Decl(spec.c_name, name, self.draw(spec)))
            env[var.name] = c.Ident(name)
        return stmts

    def lower(self, term, env):
        return lower_term(term, env, self.opts)

    def error_site(self, guarded_by):
        if self.opts.error_style == ErrorStyle.RETURN_MINUS_ONE:
            action = c.Return(c.Unary('-', c.Const('1')))
        else:
            action = c.ExprStmt(c.Call(ERROR_FUNCTION))
        return c.If(guarded_by, c.Block((action,)))

    @property
    def error_symbol(self):
        if self.opts.error_style == ErrorStyle.RETURN_MINUS_ONE:
            return 'return -1'
        return ERROR_FUNCTION

    def externs(self):
        lines = []
        if self.opts.error_style == ErrorStyle.REACH_ERROR:
            lines.append(f"extern void {ERROR_FUNCTION}(void);")
        for c_name in sorted(self.nondet, key=lambda name: NONDET_FUNCTIONS[name]):
            lines.append(f"extern {c_name} {NONDET_FUNCTIONS[c_name]}(void);")
        return tuple(lines)

    def header(self, encoding):
        digest = hashlib.sha256(print_chc(self.system).encode('utf-8')).hexdigest()
        return '\n'.join([
            f"generated by chc-portfolio {VERSION}",
            f"encoding: {encoding}",
            f"theory: {self.system.theory}",
            f"source sha256: {digest}",
        ])

    def program(self, encoding, prototypes, functions):
        unit = c.TranslationUnit(
            header=self.header(encoding),
            externs=self.externs(),
            prototypes=tuple(prototypes),
            functions=tuple(functions),
        )
        return CProgram(
            source=c.render(unit),
            encoding=encoding,
            recursive=encoding == Encoding.BACKWARD,
            theory=self.system.theory,
            error_symbol=self.error_symbol,
            nondet_symbols=tuple(line for line in unit.externs if '__VERIFIER_nondet' in line),
            ast=unit,
        )


def _conjunction(parts):
    parts = [p for p in parts if p is not None]
    if not parts:
        return c.Const('1')
    return _fold('&&', parts)


def _chain(branches):
    """Turn [(cond, stmts)] into a single if / else-if chain."""
    result = None
    for cond, stmts in reversed(branches):
        result = c.If(cond, c.Block(tuple(stmts)), result)
    return result


def forward_rule_order(system):
    """
    Indices of the rules offered by the two forward loops.

    Returns:
        (list, list): rules without premise (initialization phase) and rules
        with a premise (main loop); the position in each list is the value
        of the rule selector.
    """
    initial = [i for i, rule in enumerate(system.rules) if not rule.premise]
    steps = [i for i, rule in enumerate(system.rules) if rule.premise]
    return initial, steps


def _state_slots(system):
    """Map (position, sort) to the name of the state variable holding it."""
    sorts_at = {}
    for decl in system.decls:
        for position, sort in enumerate(decl.arg_sorts):
            sorts_at.setdefault(position, [])
            if sort not in sorts_at[position]:
                sorts_at[position].append(sort)
    slots = {}
    for position, sorts in sorted(sorts_at.items()):
        for sort in sorts:
            if len(sorts) == 1:
                slots[(position, sort)] = f"st_{position}"
            else:
                slots[(position, sort)] = f"st_{position}_{_sort_tag(sort)}"
    return slots


def _sort_tag(sort):
    if sort.is_bv:
        return f"bv{sort.width}"
    return sort.kind.lower()


def transform_forward(system, opts=None):
    """
    Emit the non-recursive encoding of a linear system.

    The program holds one current fact: ``pred_sel`` names its predicate
    (0 before any fact exists) and ``st_*`` hold its arguments. An
    initialization loop establishes a fact from a rule without premise; the
    main loop then repeatedly picks a rule and, when its premise matches the
    current fact and its constraint holds, replaces the fact with the head
    (or flags the violation for a query).

    Raises:
        ForwardRequiresLinear: the system has a rule with two or more premises
        UnsupportedWidth: a bitvector is wider than 64 bits
    """
    opts = opts or EmitOptions()
    system = normalize(system)
    if classify_linearity(system) == Linearity.NONLINEAR:
        raise ForwardRequiresLinear("the forward encoding requires a linear system")
    emitter = _Emitter(system, opts)
    selector_of = {decl.name: index for index, decl in enumerate(system.decls, start=1)}
    slots = _state_slots(system)

    def branch(rule):
        env = {}
        stmts = emitter.draws(rule.vars, env)
        guard = []
        for app in rule.premise:
            guard.append(c.Binary('==', c.Ident('pred_sel'), c.Const(str(selector_of[app.pred.name]))))
            for position, arg in enumerate(app.args):
                slot = c.Ident(slots[(position, arg.sort)])
                guard.append(c.Binary('==', slot, emitter.lower(arg, env)))
        if rule.constraint != TRUE:
            guard.append(emitter.lower(rule.constraint, env))
        if rule.head is None:
            effect = [c.Assign('violated', c.Const('1'))]
        else:
            effect = [
                c.Assign(slots[(position, arg.sort)], emitter.lower(arg, env))
                for position, arg in enumerate(rule.head.args)
            ]
            effect.append(c.Assign('pred_sel', c.Const(str(selector_of[rule.head.pred.name]))))
        stmts.append(c.If(_conjunction(guard), c.Block(tuple(effect))))
        return stmts

    def loop(cond, indices):
        body = [emitter.selector()]
        chain = _chain([
            (c.Binary('==', c.Ident('rule'), c.Const(str(k))), branch(system.rules[i]))
            for k, i in enumerate(indices)
        ])
        if chain is not None:
            body.append(chain)
        return c.While(cond, c.Block(tuple(body)))

    initial, steps = forward_rule_order(system)
    stmts = [c.Decl('int', 'pred_sel', c.Const('0'))]
    for (position, sort), name in slots.items():
        stmts.append(c.Decl(map_sort(sort, opts).c_name, name, c.Const('0')))
    stmts += [c.Decl('int', 'violated', c.Const('0')), c.Decl(SELECTOR_TYPE, 'rule')]
    no_fact = c.Binary('==', c.Ident('pred_sel'), c.Const('0'))
    not_violated = c.Unary('!', c.Ident('violated'))
    stmts.append(loop(c.Binary('&&', no_fact, not_violated), initial))
    stmts.append(loop(not_violated, steps))
    if system.queries:
        stmts.append(emitter.error_site(c.Ident('violated')))
    else:
        stmts.append(emitter.error_site(c.Const('0')))
    stmts.append(c.Return(c.Const('0')))

    main = c.Function('int', 'main', (), c.Block(tuple(stmts)))
    program = emitter.program(Encoding.FORWARD, (), (main,))
    logger.debug("forward encoding: %d rules, %d state slots", len(system.rules), len(slots))
    return program


def transform_backward(system, opts=None):
    """
    Emit the recursive encoding of a (possibly non-linear) system.

    Every predicate becomes a function returning 1 when its arguments are
    derivable by one of the predicate's rules, tried in order; ``main``
    checks each query the same way and reaches the error location when one
    holds.

    Raises:
        UnsupportedWidth: a bitvector is wider than 64 bits
    """
    opts = opts or EmitOptions()
    system = normalize(system)
    emitter = _Emitter(system, opts)

    def calls(rule, env):
        return [
            c.Call(predicate_function(app.pred.name), tuple(emitter.lower(a, env) for a in app.args))
            for app in rule.premise
        ]

    def attempt(rule, env, effect):
        bound = set(env)
        stmts = emitter.draws([v for v in rule.vars if v.name not in bound], env)
        guard = [] if rule.constraint == TRUE else [emitter.lower(rule.constraint, env)]
        stmts.append(c.If(_conjunction(guard + calls(rule, env)), c.Block((effect,))))
        return c.Block(tuple(stmts))

    functions = []
    for decl in system.decls:
        params = tuple(
            (map_sort(sort, opts).c_name, f"a_{position}")
            for position, sort in enumerate(decl.arg_sorts)
        )
        body = []
        for rule in system.rules:
            if rule.head is None or rule.head.pred.name != decl.name:
                continue
            env = {arg.name: c.Ident(f"a_{position}") for position, arg in enumerate(rule.head.args)}
            body.append(attempt(rule, env, c.Return(c.Const('1'))))
        body.append(c.Return(c.Const('0')))
        functions.append(c.Function('int', predicate_function(decl.name), params, c.Block(tuple(body))))

    stmts = [c.Decl('int', 'violated', c.Const('0'))]
    for rule in system.queries:
        stmts.append(attempt(rule, {}, c.Assign('violated', c.Const('1'))))
    stmts.append(emitter.error_site(c.Ident('violated') if system.queries else c.Const('0')))
    stmts.append(c.Return(c.Const('0')))
    functions.append(c.Function('int', 'main', (), c.Block(tuple(stmts))))

    prototypes = [
        c.Function(f.ret, f.name, f.params, c.Block()) for f in functions if f.name != 'main'
    ]
    program = emitter.program(Encoding.BACKWARD, prototypes, functions)
    logger.debug("backward encoding: %d predicate functions", len(system.decls))
    return program


def transform(system, encoding, opts=None):
    """Dispatch to the forward or backward encoding."""
    if Encoding(encoding) == Encoding.FORWARD:
        return transform_forward(system, opts)
    return transform_backward(system, opts)


# Replay stubs
# ------------

def nondet_stub_source(program):
    """
    Definitions of the externs a program uses, for running it natively.

    Each nondet function reads the next decimal value from standard input
    and ends the run with status 0 when input is exhausted; the error
    function ends it with REPLAY_ERROR_STATUS.
    """
    lines = ['#include <stdio.h>', '#include <stdlib.h>', '']
    if program.error_symbol == ERROR_FUNCTION:
        lines += [
            f"void {ERROR_FUNCTION}(void) {{",
            f"    exit({REPLAY_ERROR_STATUS});",
            '}',
            '',
        ]
    for c_name, function in NONDET_FUNCTIONS.items():
        if not any(f" {function}(" in line for line in program.nondet_symbols):
            continue
        signed = not c_name.startswith('unsigned')
        value_type = 'long long' if signed else 'unsigned long long'
        conversion = '%lld' if signed else '%llu'
        lines += [
            f"{c_name} {function}(void) {{",
            f"    {value_type} value;",
            f"    if (scanf(\"{conversion}\", &value) != 1) {{",
            '        exit(0);',
            '    }',
            f"    return ({c_name})value;",
            '}',
            '',
        ]
    return '\n'.join(lines)
