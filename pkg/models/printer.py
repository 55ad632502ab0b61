"""
SMT-LIBv2 Printer
-----------------
Renders a ChcSystem back into the HORN fragment accepted by the parser,
such that ``parse_chc(print_chc(s)) == s``.
"""

import re

from .chc import TRUE, App, BoolLit, BvLit, IntLit, Var, conjuncts

_SIMPLE_SYMBOL = re.compile(r'^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$')
_RESERVED = frozenset({
    '_', '!', 'as', 'let', 'exists', 'forall', 'match', 'par', 'true', 'false',
})


def format_symbol(name):
    """Quote a symbol with ``|...|`` unless it is a plain simple symbol."""
    if _SIMPLE_SYMBOL.match(name) and name not in _RESERVED and not re.match(r'^-[0-9]', name):
        return name
    return f"|{name}|"


def format_sort(sort):
    if sort.is_bv:
        return f"(_ BitVec {sort.width})"
    return sort.kind


def format_term(term):
    """Render a term as SMT-LIBv2 text."""
    if isinstance(term, Var):
        return format_symbol(term.name)
    if isinstance(term, BoolLit):
        return 'true' if term.value else 'false'
    if isinstance(term, IntLit):
        if term.value < 0:
            return f"(- {-term.value})"
        return str(term.value)
    if isinstance(term, BvLit):
        return f"(_ bv{term.value} {term.width})"
    args = ' '.join(format_term(a) for a in term.args)
    if term.params:
        indices = ' '.join(str(p) for p in term.params)
        return f"((_ {term.op} {indices}) {args})"
    return f"({term.op} {args})"


def _format_app(app):
    name = format_symbol(app.pred.name)
    if not app.args:
        return name
    return f"({name} {' '.join(format_term(a) for a in app.args)})"


def format_rule(rule):
    """Render one rule as an ``assert`` command."""
    parts = [] if rule.constraint == TRUE and rule.premise else list(
        format_term(c) for c in conjuncts(rule.constraint)
    )
    parts += [_format_app(app) for app in rule.premise]
    body = parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"
    head = 'false' if rule.head is None else _format_app(rule.head)
    clause = f"(=> {body} {head})"
    if rule.vars:
        bound = ' '.join(f"({format_symbol(v.name)} {format_sort(v.sort)})" for v in rule.vars)
        clause = f"(forall ({bound}) {clause})"
    return f"(assert {clause})"


def print_chc(system):
    """
    Render a system as SMT-LIBv2 source.

    Args:
        system (ChcSystem): the system to print

    Returns:
        str: text that re-parses to a structurally equal system
    """
    lines = ['(set-logic HORN)']
    for decl in system.decls:
        sorts = ' '.join(format_sort(s) for s in decl.arg_sorts)
        lines.append(f"(declare-fun {format_symbol(decl.name)} ({sorts}) Bool)")
    lines.extend(format_rule(rule) for rule in system.rules)
    lines.append('(check-sat)')
    return '\n'.join(lines) + '\n'
