"""
Error Types
-----------
Exception hierarchy shared by the parser, code generator, oracle and
portfolio. The CLI prints errors as ``<ClassName>: <message>``.
"""


class ChcError(Exception):
    """Base class for every error raised by this package."""


class InputError(ChcError):
    """The input CHC file cannot be accepted (exit status 2)."""


class SmtSyntaxError(InputError):
    """Malformed s-expression input."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} at line {line}, column {column}"
        super().__init__(message)


class UnsupportedFeature(InputError):
    """Input uses something outside the supported HORN fragment."""


class SortError(InputError):
    """Ill-typed term or unknown symbol."""


class ArityError(InputError):
    """Predicate or operator applied to the wrong number of arguments."""


class MixedTheory(InputError):
    """A system mixes Int and BitVec sorts."""


class CodegenError(ChcError):
    """The system cannot be translated into C."""


class UnsupportedWidth(CodegenError):
    """Bitvector wider than 64 bits."""


class ForwardRequiresLinear(CodegenError):
    """The forward encoding only exists for linear systems."""


class LiteralOutOfRange(CodegenError):
    """Integer literal that does not fit in 64 bits."""


class ReplayUnsupported(ChcError):
    """Nondet replay is only defined for linear systems."""


class PortfolioError(ChcError):
    """Problems with a portfolio plan."""


class PlanTheoryMismatch(PortfolioError):
    """No stage of the plan routes the system's theory."""


class PortfolioConfigError(PortfolioError, InputError):
    """The portfolio configuration file is invalid."""


class CompilationError(CodegenError):
    """An emitted program was rejected by the C compiler."""
