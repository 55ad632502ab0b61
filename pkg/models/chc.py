"""
CHC Model
---------
Typed in-memory representation of Constrained Horn Clause systems over the
Core, linear integer arithmetic and fixed-size bitvector theories, plus the
classification and normalization passes that run on it.

All values are frozen dataclasses: structural equality is plain ``==`` and
systems can be handed between threads freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Optional, Union

from .errors import ArityError, MixedTheory, SortError, UnsupportedFeature


@dataclass(frozen=True)
class Sort:
    """A sort: ``Bool``, ``Int`` or ``BitVec`` of a positive width."""

    kind: str
    width: Optional[int] = None

    def __post_init__(self):
        if self.kind == 'BitVec' and (self.width is None or self.width < 1):
            raise SortError(f"bitvector width must be positive, got {self.width}")

    @property
    def is_bool(self):
        return self.kind == 'Bool'

    @property
    def is_int(self):
        return self.kind == 'Int'

    @property
    def is_bv(self):
        return self.kind == 'BitVec'

    def __str__(self):
        if self.is_bv:
            return f"(_ BitVec {self.width})"
        return self.kind


BOOL = Sort('Bool')
INT = Sort('Int')


def bitvec(width):
    """Return the bitvector sort of the given width."""
    return Sort('BitVec', width)


# Terms
# -----

@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class IntLit:
    value: int

    @property
    def sort(self):
        return INT


@dataclass(frozen=True)
class BvLit:
    value: int
    width: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.width):
            raise SortError(f"bitvector literal {self.value} does not fit in {self.width} bits")

    @property
    def sort(self):
        return bitvec(self.width)


@dataclass(frozen=True)
class BoolLit:
    value: bool

    @property
    def sort(self):
        return BOOL


@dataclass(frozen=True)
class App:
    """Operator application. ``params`` holds indices of indexed operators."""

    op: str
    args: tuple
    sort: Sort
    params: tuple = ()


Term = Union[Var, IntLit, BvLit, BoolLit, App]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

BOOL_OPS = frozenset({'and', 'or', 'not', '=>', 'ite', '='})
INT_OPS = frozenset({'+', '-', '*', '<', '<=', '>', '>='})
BV_NARY_OPS = frozenset({'bvadd', 'bvmul', 'bvand', 'bvor', 'bvxor'})
BV_BINARY_OPS = frozenset({'bvsub', 'bvshl', 'bvlshr', 'bvashr'})
BV_UNARY_OPS = frozenset({'bvneg', 'bvnot'})
BV_COMPARISONS = frozenset({
    'bvult', 'bvule', 'bvugt', 'bvuge', 'bvslt', 'bvsle', 'bvsgt', 'bvsge',
})
BV_INDEXED_OPS = frozenset({'extract', 'zero_extend', 'sign_extend'})
SUPPORTED_OPS = (
    BOOL_OPS | INT_OPS | BV_NARY_OPS | BV_BINARY_OPS | BV_UNARY_OPS
    | BV_COMPARISONS | BV_INDEXED_OPS | {'concat'}
)


def _require_arity(op, args, low, high=None):
    if len(args) < low or (high is not None and len(args) > high):
        expected = str(low) if high == low else f"{low}..{high if high is not None else 'n'}"
        raise ArityError(f"'{op}' expects {expected} arguments, got {len(args)}")


def _require_sort(op, args, sort):
    for arg in args:
        if arg.sort != sort:
            raise SortError(f"'{op}' expects {sort} operands, got {arg.sort}")


def _require_same_bv(op, args):
    first = args[0].sort
    if not first.is_bv:
        raise SortError(f"'{op}' expects bitvector operands, got {first}")
    _require_sort(op, args, first)
    return first


def make_app(op, args, params=()):
    """
    Build a well-sorted operator application.

    Args:
        op (str): SMT-LIB operator name
        args (Iterable[Term]): operands
        params (tuple): indices for ``extract``/``zero_extend``/``sign_extend``

    Returns:
        App: the application with its result sort

    Raises:
        SortError, ArityError, UnsupportedFeature
    """
    args = tuple(args)
    params = tuple(params)
    if op not in SUPPORTED_OPS:
        raise UnsupportedFeature(f"unsupported operator '{op}'")

    if op in ('and', 'or'):
        _require_arity(op, args, 2)
        _require_sort(op, args, BOOL)
        result = BOOL
    elif op == 'not':
        _require_arity(op, args, 1, 1)
        _require_sort(op, args, BOOL)
        result = BOOL
    elif op == '=>':
        _require_arity(op, args, 2, 2)
        _require_sort(op, args, BOOL)
        result = BOOL
    elif op == 'ite':
        _require_arity(op, args, 3, 3)
        _require_sort(op, args[:1], BOOL)
        if args[1].sort != args[2].sort:
            raise SortError(f"'ite' branches differ: {args[1].sort} vs {args[2].sort}")
        result = args[1].sort
    elif op == '=':
        _require_arity(op, args, 2, 2)
        _require_sort(op, args, args[0].sort)
        result = BOOL
    elif op in ('+', '-', '*'):
        _require_arity(op, args, 1 if op == '-' else 2)
        _require_sort(op, args, INT)
        if op == '*' and sum(not isinstance(a, IntLit) for a in args) > 1:
            raise UnsupportedFeature("non-linear integer multiplication")
        result = INT
    elif op in ('<', '<=', '>', '>='):
        _require_arity(op, args, 2, 2)
        _require_sort(op, args, INT)
        result = BOOL
    elif op in BV_NARY_OPS:
        _require_arity(op, args, 2)
        result = _require_same_bv(op, args)
    elif op in BV_BINARY_OPS:
        _require_arity(op, args, 2, 2)
        result = _require_same_bv(op, args)
    elif op in BV_UNARY_OPS:
        _require_arity(op, args, 1, 1)
        result = _require_same_bv(op, args)
    elif op in BV_COMPARISONS:
        _require_arity(op, args, 2, 2)
        _require_same_bv(op, args)
        result = BOOL
    elif op == 'concat':
        _require_arity(op, args, 2, 2)
        for arg in args:
            if not arg.sort.is_bv:
                raise SortError(f"'concat' expects bitvector operands, got {arg.sort}")
        result = bitvec(args[0].sort.width + args[1].sort.width)
    else:
        _require_arity(op, args, 1, 1)
        width = _require_same_bv(op, args).width
        if op == 'extract':
            if len(params) != 2:
                raise ArityError("'extract' expects two indices")
            hi, lo = params
            if not 0 <= lo <= hi < width:
                raise SortError(f"extract indices ({hi}, {lo}) out of range for width {width}")
            result = bitvec(hi - lo + 1)
        else:
            if len(params) != 1 or params[0] < 0:
                raise ArityError(f"'{op}' expects one non-negative index")
            result = bitvec(width + params[0])
    return App(op, args, result, params)


def check_sorts(term):
    """
    Re-check a term bottom-up and return its sort.

    Raises:
        SortError, ArityError, UnsupportedFeature: when the term is ill-formed
    """
    if isinstance(term, App):
        rebuilt = make_app(term.op, term.args, term.params)
        for arg in term.args:
            check_sorts(arg)
        if rebuilt.sort != term.sort:
            raise SortError(f"'{term.op}' recorded as {term.sort} but is {rebuilt.sort}")
        return term.sort
    if isinstance(term, BvLit):
        if not 0 <= term.value < (1 << term.width):
            raise SortError(f"bitvector literal {term.value} does not fit in {term.width} bits")
    if not isinstance(term, (Var, IntLit, BvLit, BoolLit)):
        raise SortError(f"not a term: {term!r}")
    return term.sort


def subterms(term) -> Iterator:
    """Yield the term and all of its subterms, pre-order."""
    stack = [term]
    while stack:
        current = stack.pop()
        yield current
        if isinstance(current, App):
            stack.extend(reversed(current.args))


def free_vars(term):
    """Return the set of variables occurring in a term."""
    return frozenset(t for t in subterms(term) if isinstance(t, Var))


def conjuncts(term):
    """Flatten a top-level conjunction into a tuple of conjuncts."""
    if isinstance(term, App) and term.op == 'and':
        return tuple(c for arg in term.args for c in conjuncts(arg))
    return (term,)


def conjoin(terms):
    """Build the conjunction of ``terms``; empty is ``true``, one is itself."""
    terms = tuple(terms)
    if not terms:
        return TRUE
    if len(terms) == 1:
        return terms[0]
    return App('and', terms, BOOL)


# Horn clauses
# ------------

@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arg_sorts: tuple

    @property
    def arity(self):
        return len(self.arg_sorts)


@dataclass(frozen=True)
class PredicateApp:
    pred: PredicateDecl
    args: tuple

    def __post_init__(self):
        if len(self.args) != self.pred.arity:
            raise ArityError(
                f"predicate '{self.pred.name}' expects {self.pred.arity} arguments, "
                f"got {len(self.args)}"
            )
        for position, (arg, sort) in enumerate(zip(self.args, self.pred.arg_sorts)):
            if arg.sort != sort:
                raise SortError(
                    f"argument {position} of '{self.pred.name}' must be {sort}, got {arg.sort}"
                )


@dataclass(frozen=True)
class Rule:
    """
    One Horn clause: ``head <- constraint /\\ premise``.

    A ``head`` of ``None`` makes the rule a query (its head is ``false``).
    """

    vars: tuple
    constraint: Term
    premise: tuple = ()
    head: Optional[PredicateApp] = None

    def __post_init__(self):
        if self.constraint.sort != BOOL:
            raise SortError(f"rule constraint must be Bool, got {self.constraint.sort}")
        declared = set(self.vars)
        used = set(free_vars(self.constraint))
        for app in self.applications():
            for arg in app.args:
                used |= free_vars(arg)
        missing = used - declared
        if missing:
            names = ', '.join(sorted(v.name for v in missing))
            raise SortError(f"variables not quantified by the rule: {names}")

    @property
    def is_query(self):
        return self.head is None

    @property
    def is_fact(self):
        return not self.premise

    def applications(self):
        """Premise applications followed by the head application, if any."""
        if self.head is None:
            return self.premise
        return self.premise + (self.head,)


class TheoryKind(str, Enum):
    CORE = 'Core'
    LIA = 'LIA'
    BV = 'BV'


@dataclass(frozen=True)
class TheoryClass:
    kind: TheoryKind
    widths: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind == TheoryKind.BV and not self.widths:
            raise ValueError("BV theory class needs at least one width")

    @property
    def is_bv(self):
        return self.kind == TheoryKind.BV

    def __str__(self):
        if self.is_bv:
            return f"BV({','.join(str(w) for w in sorted(self.widths))})"
        return self.kind.value


CORE_THEORY = TheoryClass(TheoryKind.CORE)
LIA_THEORY = TheoryClass(TheoryKind.LIA)


class Linearity(str, Enum):
    LINEAR = 'linear'
    NONLINEAR = 'nonlinear'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ChcSystem:
    decls: tuple
    rules: tuple
    theory: TheoryClass = CORE_THEORY

    @classmethod
    def build(cls, decls, rules):
        """Create a system and compute its theory class."""
        decls = tuple(decls)
        rules = tuple(rules)
        return cls(decls, rules, _theory_of(_collect_sorts(decls, rules)))

    @property
    def queries(self):
        return tuple(rule for rule in self.rules if rule.is_query)

    def decl(self, name):
        for decl in self.decls:
            if decl.name == name:
                return decl
        raise KeyError(name)


def _collect_sorts(decls, rules) -> Iterable:
    # Bitvector widths come from declarations and quantified variables only;
    # operator results and literals inside constraints do not widen the class.
    for decl in decls:
        yield from decl.arg_sorts
    for rule in rules:
        for var in rule.vars:
            yield var.sort
        terms = [rule.constraint] + [a for app in rule.applications() for a in app.args]
        for term in terms:
            for sub in subterms(term):
                if sub.sort.is_int:
                    yield sub.sort


def _theory_of(sorts):
    has_int = False
    widths = set()
    for sort in sorts:
        if sort.is_int:
            has_int = True
        elif sort.is_bv:
            widths.add(sort.width)
    if has_int and widths:
        raise MixedTheory("system mixes Int and BitVec sorts")
    if widths:
        return TheoryClass(TheoryKind.BV, frozenset(widths))
    if has_int:
        return LIA_THEORY
    return CORE_THEORY


def classify_linearity(system):
    """
    Classify a system as linear or non-linear.

    A system is non-linear iff some rule has two or more premise applications.
    """
    if any(len(rule.premise) >= 2 for rule in system.rules):
        return Linearity.NONLINEAR
    return Linearity.LINEAR


def detect_theory(system):
    """
    Determine the theory class from the sorts occurring in a system.

    Raises:
        MixedTheory: if Int and BitVec sorts occur together
    """
    return _theory_of(_collect_sorts(system.decls, system.rules))


def _fresh_names(taken, count):
    names = []
    index = 0
    while len(names) < count:
        candidate = f"h!{index}"
        if candidate not in taken:
            names.append(candidate)
        index += 1
    return names


def _has_normal_head(rule):
    if rule.head is None:
        return True
    args = rule.head.args
    return all(isinstance(a, Var) for a in args) and len(set(args)) == len(args)


def normalize_rule(rule):
    """Rewrite one rule so that its head arguments are distinct variables."""
    if _has_normal_head(rule):
        return rule
    taken = {v.name for v in rule.vars}
    names = _fresh_names(taken, len(rule.head.args))
    fresh = tuple(Var(name, arg.sort) for name, arg in zip(names, rule.head.args))
    equalities = tuple(make_app('=', (v, arg)) for v, arg in zip(fresh, rule.head.args))
    kept = () if rule.constraint == TRUE else conjuncts(rule.constraint)
    return Rule(
        vars=rule.vars + fresh,
        constraint=conjoin(kept + equalities),
        premise=rule.premise,
        head=PredicateApp(rule.head.pred, fresh),
    )


def normalize(system):
    """
    Put every rule head into canonical form.

    Head argument terms that are not pairwise-distinct variables are replaced
    by fresh variables bound through equality conjuncts in the constraint.
    Normal rules are returned untouched, so the pass is idempotent.
    """
    return replace(system, rules=tuple(normalize_rule(rule) for rule in system.rules))
