"""
S-Expression Reader
-------------------
Regex tokenizer and reader for SMT-LIBv2 text. Atoms keep their source
position so that later stages can report where a problem occurred.
"""

import re
from dataclasses import dataclass

from models.errors import SmtSyntaxError

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<quoted>\|[^|\\]*\|)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<hex>\#x[0-9a-fA-F]+)
  | (?P<binary>\#b[01]+)
  | (?P<numeral>(?:0|[1-9][0-9]*)(?![0-9A-Za-z~!@$%^&*_+=<>.?/-]))
  | (?P<keyword>:[A-Za-z0-9~!@$%^&*_+=<>.?/-]+)
  | (?P<symbol>[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*)
""", re.VERBOSE)


@dataclass(frozen=True)
class Atom:
    """A leaf token. ``kind`` is one of symbol, numeral, hex, binary, keyword, string."""

    kind: str
    text: str
    line: int
    column: int

    def is_symbol(self, name=None):
        return self.kind == 'symbol' and (name is None or self.text == name)


@dataclass(frozen=True)
class SList:
    """A parenthesized list."""

    items: tuple
    line: int
    column: int

    def head_symbol(self):
        """Return the text of a leading symbol, or None."""
        if self.items and isinstance(self.items[0], Atom) and self.items[0].kind == 'symbol':
            return self.items[0].text
        return None

    def __len__(self):
        return len(self.items)

    def __getitem__(self, index):
        return self.items[index]


def tokenize(text):
    """
    Split SMT-LIBv2 text into tokens.

    Returns:
        list: (kind, text, line, column) tuples; whitespace and comments dropped
    """
    tokens = []
    line, line_start = 1, 0
    position = 0
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        column = position - line_start + 1
        if match is None:
            raise SmtSyntaxError(f"unexpected character {text[position]!r}", line, column)
        kind = match.lastgroup
        value = match.group()
        if kind not in ('ws', 'comment'):
            if kind == 'quoted':
                kind, value = 'symbol', value[1:-1]
            tokens.append((kind, value, line, column))
        newlines = match.group().count('\n')
        if newlines:
            line += newlines
            line_start = position + match.group().rfind('\n') + 1
        position = match.end()
    return tokens


def read_all(text):
    """
    Read every top-level s-expression in ``text``.

    Returns:
        list: top-level Atom/SList values

    Raises:
        SmtSyntaxError: unbalanced parentheses or bad characters
    """
    stack = [[]]
    openers = []
    for kind, value, line, column in tokenize(text):
        if kind == 'lparen':
            stack.append([])
            openers.append((line, column))
        elif kind == 'rparen':
            if not openers:
                raise SmtSyntaxError("unmatched ')'", line, column)
            items = stack.pop()
            open_line, open_column = openers.pop()
            stack[-1].append(SList(tuple(items), open_line, open_column))
        else:
            stack[-1].append(Atom(kind, value, line, column))
    if openers:
        line, column = openers[-1]
        raise SmtSyntaxError("unclosed '('", line, column)
    return stack[0]
