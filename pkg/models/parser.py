"""
SMT-LIBv2 HORN Parser
---------------------
Parses the HORN fragment of SMT-LIBv2 into a ChcSystem.

Supported: set-logic HORN, set-info/set-option, declare-fun with Bool
result, assert of ``(forall (vars) (=> body head))`` and quantifier-free
facts/queries, let-bindings (inlined), check-sat and exit. Bodies are split
into a constraint (non-predicate conjuncts) and a premise (predicate
applications); nested and-trees are flattened.
"""

import logging
import re

from utils.sexpr import Atom, SList, read_all

from .chc import (
    BOOL, FALSE, INT, TRUE, BvLit, ChcSystem, IntLit, PredicateApp,
    PredicateDecl, Rule, Var, bitvec, conjoin, conjuncts, make_app,
)
from .errors import SmtSyntaxError, SortError, UnsupportedFeature

logger = logging.getLogger(__name__)

_IGNORED_COMMANDS = frozenset({
    'set-info', 'set-option', 'get-info', 'get-model', 'get-proof', 'echo',
})

_UNSUPPORTED_COMMANDS = {
    'define-fun': 'define-fun',
    'define-fun-rec': 'define-fun',
    'define-funs-rec': 'define-fun',
    'declare-datatype': 'algebraic data types',
    'declare-datatypes': 'algebraic data types',
    'declare-sort': 'uninterpreted sorts',
    'define-sort': 'define-sort',
    'declare-const': 'declare-const',
    'push': 'incremental scripting (push/pop)',
    'pop': 'incremental scripting (push/pop)',
    'check-sat-assuming': 'incremental scripting (check-sat-assuming)',
}

_CHAINABLE = frozenset({'=', '<', '<=', '>', '>='})
_NEGATIVE_NUMERAL = re.compile(r'^-(0|[1-9][0-9]*)$')
_BV_LITERAL = re.compile(r'^bv([0-9]+)$')


def _expect_symbol(expr, what):
    if not (isinstance(expr, Atom) and expr.kind == 'symbol'):
        line, column = expr.line, expr.column
        raise SmtSyntaxError(f"expected {what}", line, column)
    return expr.text


def _expect_numeral(expr, what):
    if not (isinstance(expr, Atom) and expr.kind == 'numeral'):
        raise SmtSyntaxError(f"expected {what}", expr.line, expr.column)
    return int(expr.text)


def _expect_list(expr, what, length=None):
    if not isinstance(expr, SList) or (length is not None and len(expr) != length):
        raise SmtSyntaxError(f"expected {what}", expr.line, expr.column)
    return expr


class _PredicateInTerm(Exception):
    """A predicate symbol was met where a theory term is required."""


class HornParser:
    """
    Stateful reader for one SMT-LIBv2 script.

    Instances are single-use: create one per file.
    """

    def __init__(self):
        self.decls = {}
        self.rules = []
        self.logic = None

    def parse(self, text):
        for command in read_all(text):
            command = _expect_list(command, "a command")
            name = command.head_symbol()
            if name is None:
                raise SmtSyntaxError("expected a command name", command.line, command.column)
            if name == 'exit':
                break
            self._command(name, command)
        return ChcSystem.build(self.decls.values(), self.rules)

    # Commands
    # --------

    def _command(self, name, command):
        if name == 'set-logic':
            logic = _expect_symbol(_expect_list(command, "(set-logic <name>)", 2)[1], "a logic name")
            if logic != 'HORN':
                raise UnsupportedFeature(f"logic {logic}")
            self.logic = logic
        elif name == 'declare-fun':
            self._declare_fun(command)
        elif name == 'assert':
            self._assert(_expect_list(command, "(assert <term>)", 2)[1])
        elif name == 'check-sat' or name in _IGNORED_COMMANDS:
            pass
        elif name in _UNSUPPORTED_COMMANDS:
            raise UnsupportedFeature(_UNSUPPORTED_COMMANDS[name])
        else:
            raise UnsupportedFeature(f"command '{name}'")

    def _declare_fun(self, command):
        _expect_list(command, "(declare-fun <name> (<sort>*) Bool)", 4)
        name = _expect_symbol(command[1], "a predicate name")
        arg_sorts = tuple(self._sort(s) for s in _expect_list(command[2], "a sort list").items)
        result = self._sort(command[3])
        if result != BOOL:
            raise UnsupportedFeature(f"non-predicate function '{name}'")
        if name in self.decls:
            raise SortError(f"duplicate declaration of '{name}'")
        self.decls[name] = PredicateDecl(name, arg_sorts)

    def _sort(self, expr):
        if isinstance(expr, Atom):
            if expr.is_symbol('Bool'):
                return BOOL
            if expr.is_symbol('Int'):
                return INT
            if expr.is_symbol('Real'):
                raise UnsupportedFeature("real arithmetic")
            if expr.is_symbol('String'):
                raise UnsupportedFeature("strings")
            raise UnsupportedFeature(f"sort '{expr.text}'")
        head = expr.head_symbol()
        if head == 'Array':
            raise UnsupportedFeature("arrays")
        if head == '_' and len(expr) == 3 and expr[1].is_symbol('BitVec'):
            return bitvec(_expect_numeral(expr[2], "a bitvector width"))
        raise SmtSyntaxError("malformed sort", expr.line, expr.column)

    # Clauses
    # -------

    def _assert(self, expr):
        expr = self._strip_annotation(expr)
        variables = ()
        scope = {}
        while isinstance(expr, SList) and expr.head_symbol() == 'forall':
            _expect_list(expr, "(forall (<var>*) <term>)", 3)
            bound = self._sorted_vars(expr[1])
            variables += bound
            scope.update({v.name: v for v in bound})
            expr = self._strip_annotation(expr[2])
        if isinstance(expr, SList) and expr.head_symbol() == 'exists':
            raise UnsupportedFeature("quantifier alternation")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise SortError("variable bound twice in one clause")

        body_parts, head, head_scope = self._clause_shape(expr, scope)
        constraint, premise = [], []
        for part, part_scope in body_parts:
            self._split_conjunct(part, part_scope, constraint, premise)

        head, head_scope = self._strip_lets(head, head_scope)
        if isinstance(head, Atom) and head.is_symbol('true'):
            logger.debug("dropping clause with head 'true' at line %d", head.line)
            return
        if isinstance(head, Atom) and head.is_symbol('false'):
            head_app = None
        elif self._is_predicate_app(head, head_scope):
            head_app = self._predicate_app(head, head_scope)
        else:
            # A constraint head phi is the query  false <- body /\ not phi
            negated = make_app('not', (self._term(head, head_scope),))
            constraint.append(negated)
            head_app = None

        self.rules.append(Rule(
            vars=variables,
            constraint=conjoin(constraint),
            premise=tuple(premise),
            head=head_app,
        ))

    def _clause_shape(self, expr, scope):
        """Return ([(body sexpr, scope)], head sexpr, head scope) for the supported shapes."""
        expr, scope = self._strip_lets(expr, scope)
        head_symbol = expr.head_symbol() if isinstance(expr, SList) else None
        if head_symbol == '=>':
            if len(expr) < 3:
                raise SmtSyntaxError("'=>' needs a premise and a conclusion", expr.line, expr.column)
            body = [(part, scope) for part in expr.items[1:-1]]
            inner_body, head, head_scope = self._clause_shape(expr[-1], scope)
            if inner_body and not (len(inner_body) == 1 and self._is_true(inner_body[0][0])):
                body += inner_body
            return body, head, head_scope
        if head_symbol == 'not':
            _expect_list(expr, "(not <term>)", 2)
            return [(expr[1], scope)], Atom('symbol', 'false', expr.line, expr.column), scope
        if head_symbol in ('forall', 'exists'):
            raise UnsupportedFeature("quantifier alternation")
        return [(Atom('symbol', 'true', expr.line, expr.column), scope)], expr, scope

    @staticmethod
    def _is_true(expr):
        return isinstance(expr, Atom) and expr.is_symbol('true')

    def _split_conjunct(self, expr, scope, constraint, premise):
        expr, scope = self._strip_lets(expr, scope)
        if isinstance(expr, SList) and expr.head_symbol() == 'and':
            for item in expr.items[1:]:
                self._split_conjunct(item, scope, constraint, premise)
        elif self._is_predicate_app(expr, scope):
            premise.append(self._predicate_app(expr, scope))
        else:
            constraint.extend(conjuncts(self._term(expr, scope)))

    def _strip_lets(self, expr, scope):
        expr = self._strip_annotation(expr)
        while isinstance(expr, SList) and expr.head_symbol() == 'let':
            scope = self._let_scope(expr, scope)
            expr = self._strip_annotation(expr[2])
        return expr, scope

    def _let_scope(self, expr, scope):
        _expect_list(expr, "(let (<binding>+) <term>)", 3)
        bindings = {}
        for binding in _expect_list(expr[1], "a binding list").items:
            _expect_list(binding, "a (<name> <term>) binding", 2)
            name = _expect_symbol(binding[0], "a binding name")
            if name in bindings:
                raise SmtSyntaxError(f"'{name}' bound twice in one let", binding.line, binding.column)
            # parallel let: bound terms see the outer scope only
            bindings[name] = self._term(binding[1], scope)
        return {**scope, **bindings}

    @staticmethod
    def _strip_annotation(expr):
        while isinstance(expr, SList) and expr.head_symbol() == '!' and len(expr) >= 2:
            expr = expr[1]
        return expr

    def _sorted_vars(self, expr):
        variables = []
        for item in _expect_list(expr, "a sorted variable list").items:
            _expect_list(item, "a (<name> <sort>) pair", 2)
            variables.append(Var(_expect_symbol(item[0], "a variable name"), self._sort(item[1])))
        return tuple(variables)

    def _is_predicate_app(self, expr, scope):
        if isinstance(expr, Atom):
            return expr.kind == 'symbol' and expr.text not in scope and expr.text in self.decls
        name = expr.head_symbol()
        return name is not None and name not in scope and name in self.decls

    def _predicate_app(self, expr, scope):
        if isinstance(expr, Atom):
            return PredicateApp(self.decls[expr.text], ())
        decl = self.decls[expr.head_symbol()]
        args = tuple(self._term(arg, scope) for arg in expr.items[1:])
        return PredicateApp(decl, args)

    # Terms
    # -----

    def _term(self, expr, scope):
        try:
            return self._term_inner(expr, scope)
        except _PredicateInTerm as exc:
            raise UnsupportedFeature(
                f"non-Horn shape: predicate '{exc}' used inside an expression "
                f"(line {expr.line})"
            ) from None

    def _term_inner(self, expr, scope):
        expr = self._strip_annotation(expr)
        if isinstance(expr, Atom):
            return self._atom(expr, scope)
        if not expr.items:
            raise SmtSyntaxError("empty application", expr.line, expr.column)
        head = expr[0]
        if isinstance(head, SList):
            return self._indexed(head, [self._term_inner(a, scope) for a in expr.items[1:]])
        op = _expect_symbol(head, "an operator")
        if op == '_':
            return self._bv_literal(expr)
        if op == 'let':
            inner, inner_scope = self._strip_lets(expr, scope)
            return self._term_inner(inner, inner_scope)
        if op in ('forall', 'exists'):
            raise UnsupportedFeature("quantifiers inside constraints")
        if op in ('select', 'store'):
            raise UnsupportedFeature("arrays")
        if op in self.decls and op not in scope:
            raise _PredicateInTerm(op)
        args = [self._term_inner(a, scope) for a in expr.items[1:]]
        return self._operator(op, args, expr)

    def _atom(self, expr, scope):
        if expr.kind == 'numeral':
            return IntLit(int(expr.text))
        if expr.kind == 'hex':
            digits = expr.text[2:]
            return BvLit(int(digits, 16), 4 * len(digits))
        if expr.kind == 'binary':
            digits = expr.text[2:]
            return BvLit(int(digits, 2), len(digits))
        if expr.kind == 'string':
            raise UnsupportedFeature("strings")
        if expr.kind == 'keyword':
            raise SmtSyntaxError(f"unexpected keyword {expr.text}", expr.line, expr.column)
        name = expr.text
        if name in scope:
            return scope[name]
        if name == 'true':
            return TRUE
        if name == 'false':
            return FALSE
        if name in self.decls:
            raise _PredicateInTerm(name)
        if _NEGATIVE_NUMERAL.match(name):
            return IntLit(int(name))
        raise SortError(f"unknown symbol '{name}' at line {expr.line}, column {expr.column}")

    def _bv_literal(self, expr):
        if len(expr) != 3:
            raise SmtSyntaxError("malformed indexed identifier", expr.line, expr.column)
        name = _expect_symbol(expr[1], "an indexed identifier")
        match = _BV_LITERAL.match(name)
        if not match:
            raise UnsupportedFeature(f"indexed identifier '{name}'")
        return BvLit(int(match.group(1)), _expect_numeral(expr[2], "a bitvector width"))

    def _indexed(self, head, args):
        if len(head) < 3 or not head[0].is_symbol('_'):
            raise SmtSyntaxError("malformed indexed operator", head.line, head.column)
        op = _expect_symbol(head[1], "an indexed operator name")
        params = tuple(_expect_numeral(p, "an index") for p in head.items[2:])
        if op not in ('extract', 'zero_extend', 'sign_extend'):
            raise UnsupportedFeature(f"unsupported operator '{op}'")
        return make_app(op, args, params)

    def _operator(self, op, args, expr):
        if op in ('and', 'or') and len(args) < 2:
            if not args:
                return TRUE if op == 'and' else FALSE
            return _single_bool(op, args[0])
        if op == 'distinct':
            if len(args) < 2:
                raise SmtSyntaxError("'distinct' needs two arguments", expr.line, expr.column)
            pairs = [
                make_app('not', (make_app('=', (a, b)),))
                for i, a in enumerate(args) for b in args[i + 1:]
            ]
            return conjoin(pairs)
        if op in _CHAINABLE and len(args) > 2:
            return conjoin(make_app(op, pair) for pair in zip(args, args[1:]))
        if op == '=>' and len(args) > 2:
            result = args[-1]
            for premise in reversed(args[:-1]):
                result = make_app('=>', (premise, result))
            return result
        if op == '-' and len(args) == 1 and isinstance(args[0], IntLit):
            return IntLit(-args[0].value)
        return make_app(op, args)


def _single_bool(op, arg):
    if arg.sort != BOOL:
        raise SortError(f"'{op}' expects Bool operands, got {arg.sort}")
    return arg


def parse_chc(text):
    """
    Parse SMT-LIBv2 HORN text into a ChcSystem.

    Args:
        text (str): SMT-LIBv2 source

    Returns:
        ChcSystem: the well-sorted system with its theory class

    Raises:
        SmtSyntaxError, UnsupportedFeature, SortError, ArityError, MixedTheory
    """
    return HornParser().parse(text)


def parse_chc_file(path):
    """Read and parse a ``.smt2`` file."""
    with open(path, 'r', encoding='utf-8') as f:
        return parse_chc(f.read())
