"""Signatures, terms, substitutions and equations.

Terms are immutable and hash-cached.  Built-in tree constructors (deadlock,
witnesses, prefix, choice, restriction, projection) are ordinary
applications whose operation symbol carries ``origin="ftp"`` and, where the
constructor is a family, a parameter (action, predicate, or action/predicate
set pair).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

ORIGINS = ("user", "ftp", "derived-smooth", "derived-distinctive", "derived-cannot")

# Names of the built-in constructors; users may not declare operations with these names.
DELTA_NAME = "delta"
KAPPA_NAME = "kappa"
PREFIX_NAME = "prefix"
CHOICE_NAME = "choice"
RESTRICT_NAME = "restrict"
PROJ_NAME = "proj"
BUILTIN_NAMES = frozenset({DELTA_NAME, KAPPA_NAME, PREFIX_NAME, CHOICE_NAME, RESTRICT_NAME, PROJ_NAME})

CLOCK = "tick"

Action = str


@dataclass(frozen=True, order=True)
class PredicateSym:
    name: str
    kind: str = "explicit"
    allowed_actions: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.kind not in ("explicit", "implicit"):
            raise ValueError(f"unknown predicate kind {self.kind!r}")
        if self.kind == "explicit" and self.allowed_actions:
            raise ValueError(f"explicit predicate {self.name} cannot carry an action set")

    @property
    def implicit(self) -> bool:
        return self.kind == "implicit"


def explicit(name: str) -> PredicateSym:
    return PredicateSym(name)


def implicit(name: str, actions: Iterable[str]) -> PredicateSym:
    return PredicateSym(name, "implicit", frozenset(actions))


@dataclass(frozen=True)
class OperationSym:
    name: str
    arity: int
    origin: str = "user"
    param: Hashable = None

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if self.arity < 0:
            raise ValueError("arity must be non-negative")

    @property
    def builtin(self) -> bool:
        return self.origin == "ftp"

    def param_key(self) -> str:
        p = self.param
        if p is None:
            return ""
        if isinstance(p, tuple):
            return ",".join(sorted(p[0])) + ";" + ",".join(sorted(p[1]))
        return str(p)

    def __str__(self):
        if self.param is None:
            return self.name
        return f"{self.name}[{self.param_key()}]"


DELTA = OperationSym(DELTA_NAME, 0, "ftp")
CHOICE = OperationSym(CHOICE_NAME, 2, "ftp")
PROJ = OperationSym(PROJ_NAME, 2, "ftp")


@lru_cache(maxsize=None)
def kappa_sym(pred: str) -> OperationSym:
    return OperationSym(KAPPA_NAME, 0, "ftp", pred)


@lru_cache(maxsize=None)
def prefix_sym(action: str) -> OperationSym:
    return OperationSym(PREFIX_NAME, 1, "ftp", action)


@lru_cache(maxsize=None)
def restrict_sym(actions: frozenset[str], preds: frozenset[str]) -> OperationSym:
    # one interned symbol per (B, Q) pair
    return OperationSym(RESTRICT_NAME, 1, "ftp", (frozenset(actions), frozenset(preds)))


class Term:
    """Base class of process terms."""

    __slots__ = ()

    def is_var(self) -> bool:
        return False


class Var(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("var", name))

    def is_var(self) -> bool:
        return True

    def __eq__(self, other):
        return self is other or (isinstance(other, Var) and other.name == self.name)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r})"

    def __str__(self):
        return self.name

    @property
    def key(self) -> tuple:
        return (0, self.name)


class App(Term):
    __slots__ = ("op", "args", "_hash", "_key")

    def __init__(self, op: OperationSym, args: Sequence[Term] = ()):
        args = tuple(args)
        if len(args) != op.arity:
            raise ValueError(f"{op} expects {op.arity} arguments, got {len(args)}")
        self.op = op
        self.args = args
        self._hash = hash((op, args))
        self._key = None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, App) or other._hash != self._hash:
            return False
        return self.op == other.op and self.args == other.args

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"App({self.op}, {self.args!r})"

    def __str__(self):
        return format_term(self)

    @property
    def key(self) -> tuple:
        """Total-order sort key used for canonical summand ordering."""
        if self._key is None:
            self._key = (1, self.op.name, self.op.param_key(), tuple(a.key for a in self.args))
        return self._key


Substitution = Mapping[str, Term]


# ---------------------------------------------------------------- constructors

_DELTA_TERM = App(DELTA)


def delta() -> App:
    return _DELTA_TERM


def kappa(pred: str) -> App:
    return App(kappa_sym(pred))


def prefix(action: str, body: Term) -> App:
    return App(prefix_sym(action), (body,))


def choice(left: Term, right: Term) -> App:
    return App(CHOICE, (left, right))


def restrict(actions: Iterable[str], preds: Iterable[str], body: Term) -> App:
    return App(restrict_sym(frozenset(actions), frozenset(preds)), (body,))


def proj(body: Term, clock_term: Term) -> App:
    return App(PROJ, (body, clock_term))


def app(op: OperationSym, *args: Term) -> App:
    return App(op, args)


def sum_of(terms: Iterable[Term]) -> Term:
    """Left-nested sum; the empty sum is deadlock."""
    result = None
    for t in terms:
        result = t if result is None else choice(result, t)
    return delta() if result is None else result


def hourglass(n: int, clock: str = CLOCK) -> Term:
    t = delta()
    for _ in range(n):
        t = prefix(clock, t)
    return t


def hourglass_depth(t: Term, clock: str = CLOCK) -> int | None:
    """Return n if t is the n-fold clock prefix of deadlock, else None."""
    n = 0
    while isinstance(t, App) and t.op == prefix_sym(clock):
        t = t.args[0]
        n += 1
    return n if t == _DELTA_TERM else None


# ---------------------------------------------------------------- inspection

def is_op(t: Term, name: str) -> bool:
    return isinstance(t, App) and t.op.origin == "ftp" and t.op.name == name


def is_delta(t: Term) -> bool:
    return t is _DELTA_TERM or t == _DELTA_TERM


def is_kappa(t: Term) -> bool:
    return is_op(t, KAPPA_NAME)


def is_prefix(t: Term) -> bool:
    return is_op(t, PREFIX_NAME)


def is_choice(t: Term) -> bool:
    return is_op(t, CHOICE_NAME)


def is_restrict(t: Term) -> bool:
    return is_op(t, RESTRICT_NAME)


def is_proj(t: Term) -> bool:
    return is_op(t, PROJ_NAME)


def summands(t: Term) -> list[Term]:
    """Flatten a choice tree into its leaves, dropping deadlock."""
    out: list[Term] = []
    stack = [t]
    while stack:
        u = stack.pop()
        if is_choice(u):
            stack.append(u.args[1])
            stack.append(u.args[0])
        elif not is_delta(u):
            out.append(u)
    return out


def is_closed(t: Term) -> bool:
    return not variables(t)


def variables(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            out.add(u.name)
        else:
            stack.extend(u.args)
    return out


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, App):
            stack.extend(u.args)


def ops_in(t: Term) -> set[OperationSym]:
    return {u.op for u in subterms(t) if isinstance(u, App)}


def is_ftp_term(t: Term, allow_restrict: bool = False) -> bool:
    allowed = {DELTA_NAME, KAPPA_NAME, PREFIX_NAME, CHOICE_NAME}
    if allow_restrict:
        allowed.add(RESTRICT_NAME)
    return all(isinstance(u, App) and u.op.origin == "ftp" and u.op.name in allowed for u in subterms(t))


def well_formed(t: Term, sig) -> bool:
    """True iff every application uses a symbol of ``sig`` with matching arity.

    ``sig`` is anything supporting ``in`` on OperationSym values.
    """
    for u in subterms(t):
        if isinstance(u, App):
            if u.op not in sig or len(u.args) != u.op.arity:
                return False
    return True


def height(t: Term) -> int:
    if isinstance(t, Var):
        return 0
    if not t.args:
        return 0
    return 1 + max(height(a) for a in t.args)


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def apply_subst(t: Term, sigma: Substitution) -> Term:
    if not sigma:
        return t
    memo: dict[Term, Term] = {}

    def go(u: Term) -> Term:
        if isinstance(u, Var):
            return sigma.get(u.name, u)
        if not u.args:
            return u
        hit = memo.get(u)
        if hit is not None:
            return hit
        new_args = tuple(go(a) for a in u.args)
        res = u if all(x is y for x, y in zip(new_args, u.args)) else App(u.op, new_args)
        memo[u] = res
        return res

    return go(t)


def compose(tau: Substitution, sigma: Substitution) -> dict[str, Term]:
    """The substitution tau∘sigma: apply sigma first, then tau."""
    out = {x: apply_subst(t, tau) for x, t in sigma.items()}
    for x, t in tau.items():
        out.setdefault(x, t)
    return out


def rename_vars(t: Term, mapping: Mapping[str, str]) -> Term:
    return apply_subst(t, {old: Var(new) for old, new in mapping.items()})


def subterm_at(t: Term, path: Sequence[int]) -> Term:
    for i in path:
        t = t.args[i]
    return t


def replace_at(t: Term, path: Sequence[int], new: Term) -> Term:
    if not path:
        return new
    i = path[0]
    args = list(t.args)
    args[i] = replace_at(args[i], path[1:], new)
    return App(t.op, args)


def map_bottom_up(t: Term, fn: Callable[[Term], Term]) -> Term:
    if isinstance(t, Var):
        return fn(t)
    return fn(App(t.op, [map_bottom_up(a, fn) for a in t.args]) if t.args else t)


# ---------------------------------------------------------------- printing

def format_term(t: Term, clock: str = CLOCK) -> str:
    """Render a term in the concrete syntax accepted by ``syntax.parse_term``."""
    return _fmt(t, 0, clock)


def _fmt(t: Term, prec: int, clock: str) -> str:
    # prec 0: any; 1: operand of +, right side; 2: body of a prefix
    if isinstance(t, Var):
        return t.name
    op = t.op
    if op.origin == "ftp":
        if op.name == DELTA_NAME:
            return "delta"
        if op.name == KAPPA_NAME:
            return f"kappa({op.param})"
        if op.name == PREFIX_NAME:
            s = f"{op.param} . {_fmt(t.args[0], 2, clock)}"
            return s
        if op.name == CHOICE_NAME:
            s = f"{_fmt(t.args[0], 0, clock)} + {_fmt(t.args[1], 1, clock)}"
            return f"({s})" if prec >= 1 else s
        if op.name == RESTRICT_NAME:
            acts, preds = op.param
            return f"restrict{{{','.join(sorted(acts))} ; {','.join(sorted(preds))}}}({_fmt(t.args[0], 0, clock)})"
        if op.name == PROJ_NAME:
            n = hourglass_depth(t.args[1], clock)
            second = str(n) if n is not None else _fmt(t.args[1], 0, clock)
            return f"proj({_fmt(t.args[0], 0, clock)}, {second})"
    if not t.args:
        return op.name
    return f"{op.name}({', '.join(_fmt(a, 0, clock) for a in t.args)})"


# ---------------------------------------------------------------- equations

@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    label: str
    side_condition: str | None = None
    provenance: tuple = field(default=(), compare=False)

    def variables(self) -> set[str]:
        return variables(self.lhs) | variables(self.rhs)

    def instantiate(self, sigma: Substitution) -> tuple[Term, Term]:
        return apply_subst(self.lhs, sigma), apply_subst(self.rhs, sigma)

    def to_text(self, simplify_restrict: bool = True) -> str:
        lhs, rhs = self.lhs, self.rhs
        if simplify_restrict:
            lhs, rhs = drop_trivial_restrictions(lhs), drop_trivial_restrictions(rhs)
        s = f"{self.label}: {format_term(lhs)} = {format_term(rhs)}"
        if self.side_condition:
            s += f" if {self.side_condition}"
        return s

    def __str__(self):
        return self.to_text()


def drop_trivial_restrictions(t: Term) -> Term:
    """Rewrite restrict{;}(x) to x, for display only."""
    def fn(u: Term) -> Term:
        if is_restrict(u) and not u.op.param[0] and not u.op.param[1]:
            return u.args[0]
        return u
    return map_bottom_up(t, fn)


class FreshNames:
    """Monotone counter for fresh variable names, scoped to one transformation run."""

    def __init__(self, taken: Iterable[str] = (), prefix: str = "v"):
        self.taken = set(taken)
        self.prefix = prefix
        self.counter = 0

    def __call__(self, prefix: str | None = None) -> str:
        p = prefix or self.prefix
        while True:
            self.counter += 1
            name = f"{p}{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name
