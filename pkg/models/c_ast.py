"""
C Program AST
-------------
A small C syntax tree covering what the CHC encodings emit.
Programs are assembled from these nodes and rendered with ``render``, so
structural properties of generated programs can be checked on the tree
rather than on the text.
"""

from dataclasses import dataclass, fields
from typing import Optional

INDENT = '    '


# Expressions
# -----------

@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Const:
    text: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Cond:
    cond: object
    then: object
    other: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple = ()


@dataclass(frozen=True)
class Cast:
    c_type: str
    operand: object


# Statements
# ----------

@dataclass(frozen=True)
class Decl:
    c_type: str
    name: str
    init: Optional[object] = None


@dataclass(frozen=True)
class Assign:
    target: str
    value: object


@dataclass(frozen=True)
class ExprStmt:
    expr: object


@dataclass(frozen=True)
class Return:
    value: object


@dataclass(frozen=True)
class Block:
    stmts: tuple = ()


@dataclass(frozen=True)
class If:
    cond: object
    then: Block
    orelse: Optional[object] = None


@dataclass(frozen=True)
class While:
    cond: object
    body: Block


# Top level
# ---------

@dataclass(frozen=True)
class Function:
    ret: str
    name: str
    params: tuple
    body: Block

    def signature(self):
        params = ', '.join(f"{c_type} {name}" for c_type, name in self.params) or 'void'
        return f"{self.ret} {self.name}({params})"


@dataclass(frozen=True)
class TranslationUnit:
    header: str
    externs: tuple
    prototypes: tuple
    functions: tuple

    def function(self, name):
        for function in self.functions:
            if function.name == name:
                return function
        raise KeyError(name)


def walk(node):
    """Yield ``node`` and every node below it, pre-order."""
    yield node
    if isinstance(node, (tuple, list)):
        for item in node:
            yield from walk(item)
        return
    if not hasattr(node, '__dataclass_fields__'):
        return
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, (tuple, list)) or hasattr(value, '__dataclass_fields__'):
            if isinstance(value, tuple) and f.name == 'params':
                continue
            yield from walk(value)


def calls_to(node, func):
    """All Call nodes below ``node`` that call ``func``."""
    return [n for n in walk(node) if isinstance(n, Call) and n.func == func]


# Rendering
# ---------

def render_expr(expr, top=False):
    """
    Render an expression. Compound expressions are parenthesized, except at
    ``top`` level where the outermost parentheses are dropped.
    """
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, Const):
        return expr.text
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(render_expr(a, top=True) for a in expr.args)})"
    if isinstance(expr, Unary):
        text = f"{expr.op}{render_expr(expr.operand)}"
    elif isinstance(expr, Binary):
        text = f"{render_expr(expr.left)} {expr.op} {render_expr(expr.right)}"
    elif isinstance(expr, Cond):
        text = f"{render_expr(expr.cond)} ? {render_expr(expr.then)} : {render_expr(expr.other)}"
    elif isinstance(expr, Cast):
        operand = render_expr(expr.operand)
        text = f"({expr.c_type}){operand}"
    else:
        raise TypeError(f"not an expression: {expr!r}")
    return text if top else f"({text})"


def _render_block(block, depth, lines):
    for stmt in block.stmts:
        _render_stmt(stmt, depth, lines)


def _render_if(stmt, depth, lines, prefix):
    pad = INDENT * depth
    lines.append(f"{pad}{prefix}if ({render_expr(stmt.cond, top=True)}) {{")
    _render_block(stmt.then, depth + 1, lines)
    if stmt.orelse is None:
        lines.append(f"{pad}}}")
    elif isinstance(stmt.orelse, If):
        _render_if(stmt.orelse, depth, lines, prefix='} else ')
    else:
        lines.append(f"{pad}}} else {{")
        _render_block(stmt.orelse, depth + 1, lines)
        lines.append(f"{pad}}}")


def _render_stmt(stmt, depth, lines):
    pad = INDENT * depth
    if isinstance(stmt, Decl):
        if stmt.init is None:
            lines.append(f"{pad}{stmt.c_type} {stmt.name};")
        else:
            lines.append(f"{pad}{stmt.c_type} {stmt.name} = {render_expr(stmt.init, top=True)};")
    elif isinstance(stmt, Assign):
        lines.append(f"{pad}{stmt.target} = {render_expr(stmt.value, top=True)};")
    elif isinstance(stmt, ExprStmt):
        lines.append(f"{pad}{render_expr(stmt.expr, top=True)};")
    elif isinstance(stmt, Return):
        lines.append(f"{pad}return {render_expr(stmt.value, top=True)};")
    elif isinstance(stmt, If):
        _render_if(stmt, depth, lines, prefix='')
    elif isinstance(stmt, While):
        lines.append(f"{pad}while ({render_expr(stmt.cond, top=True)}) {{")
        _render_block(stmt.body, depth + 1, lines)
        lines.append(f"{pad}}}")
    elif isinstance(stmt, Block):
        lines.append(f"{pad}{{")
        _render_block(stmt, depth + 1, lines)
        lines.append(f"{pad}}}")
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def render(unit):
    """Render a translation unit as C source text."""
    lines = [f"/* {line} */" for line in unit.header.splitlines()]
    lines.append('')
    lines.extend(unit.externs)
    if unit.prototypes:
        lines.append('')
        lines.extend(f"{function.signature()};" for function in unit.prototypes)
    for function in unit.functions:
        lines.append('')
        lines.append(f"{function.signature()} {{")
        _render_block(function.body, 1, lines)
        lines.append('}')
    return '\n'.join(lines) + '\n'
