"""Finite trees with predicates: systems, axioms, canonical forms, restriction elimination."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain, combinations
from typing import Callable, Iterable, Iterator

from .builtins import builtin_rules
from .core import (
    App, Equation, PredicateSym, Term, Var, choice, delta, hourglass, is_choice, is_delta,
    is_kappa, is_prefix, is_restrict, kappa, kappa_sym, prefix, prefix_sym, restrict, sum_of, summands,
    CHOICE, DELTA, PROJ, format_term,
)
from .semantics import engine_for
from .spec import PregRule, PregSystem

X, Y, Z = Var("x"), Var("y"), Var("z")

__all__ = [
    "ftp_system", "ftp_partial_system", "projection_system", "ftp_rules", "AxiomSystem", "AxiomSchema",
    "ftp_axioms", "ftp_partial_axioms", "CanonicalTree", "canonical_tree", "trees_equal", "tree_difference",
    "eliminate_restriction", "push_restriction", "a9_schema_rhs", "hourglass", "truncate_tree",
]


def _as_predicates(predicates: Iterable[PredicateSym | str]) -> tuple[PredicateSym, ...]:
    return tuple(p if isinstance(p, PredicateSym) else PredicateSym(p) for p in predicates)


def ftp_system(actions: Iterable[str], predicates: Iterable[PredicateSym | str] = ()) -> PregSystem:
    actions = tuple(actions)
    if not actions:
        raise ValueError("the action set must be nonempty")
    return PregSystem("ftp", actions, _as_predicates(predicates), layers=frozenset({"ftp"}))


def ftp_partial_system(actions: Iterable[str], predicates: Iterable[PredicateSym | str] = ()) -> PregSystem:
    return ftp_system(actions, predicates).with_layers({"restrict"})


def projection_system(actions: Iterable[str], predicates: Iterable[PredicateSym | str] = ()) -> PregSystem:
    return ftp_system(actions, predicates).with_layers({"restrict", "proj"})


def ftp_rules(s: PregSystem, restrictions: Iterable[tuple[frozenset, frozenset]] = ()) -> list[PregRule]:
    """Rules of the finitely many non-restriction constructors, plus the given restrictions."""
    from .core import restrict_sym
    ops = [DELTA, CHOICE] + [kappa_sym(p.name) for p in s.predicates] + [prefix_sym(a) for a in s.actions]
    ops += [restrict_sym(frozenset(b), frozenset(q)) for b, q in restrictions]
    if "proj" in s.layers:
        ops.append(PROJ)
    return [r for op in ops for r in builtin_rules(op, s)]


# ---------------------------------------------------------------- axiom systems

@dataclass(frozen=True)
class AxiomSchema:
    """A law with metavariables over actions, predicates or action/predicate sets."""

    label: str
    text: str
    generate: Callable[[PregSystem], Iterable[Equation]] = field(compare=False)

    def instances(self, s: PregSystem) -> list[Equation]:
        return list(self.generate(s))

    def sample(self, s: PregSystem, rng: random.Random) -> Equation | None:
        inst = self.instances(s)
        return rng.choice(inst) if inst else None

    def to_text(self) -> str:
        return f"{self.label}: {self.text}"


@dataclass
class AxiomSystem:
    equations: list[Equation] = field(default_factory=list)
    schemas: list[AxiomSchema] = field(default_factory=list)

    def __iter__(self) -> Iterator[Equation]:
        return iter(self.equations)

    def __len__(self) -> int:
        return len(self.equations) + len(self.schemas)

    def labels(self) -> list[str]:
        return [e.label for e in self.equations] + [sc.label for sc in self.schemas]

    def extend(self, other: "AxiomSystem") -> "AxiomSystem":
        return AxiomSystem(self.equations + other.equations, self.schemas + other.schemas)

    def all_instances(self, s: PregSystem) -> list[Equation]:
        return self.equations + [e for sc in self.schemas for e in sc.instances(s)]

    def to_text(self) -> str:
        return "".join(e.to_text() + "\n" for e in self.equations) + \
            "".join(sc.to_text() + "\n" for sc in self.schemas)

    def to_dict(self) -> dict:
        return {
            "equations": [_eq_dict(e) for e in self.equations],
            "schemas": [{"label": sc.label, "text": sc.text} for sc in self.schemas],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _eq_dict(e: Equation) -> dict:
    d = {"label": e.label, "lhs": format_term(e.lhs), "rhs": format_term(e.rhs), "text": e.to_text()}
    if e.side_condition:
        d["if"] = e.side_condition
    if e.provenance:
        d["provenance"] = [str(p) for p in e.provenance]
    return d


def ftp_axioms(s: PregSystem) -> AxiomSystem:
    eqs = [
        Equation(choice(X, Y), choice(Y, X), "A1"),
        Equation(choice(choice(X, Y), Z), choice(X, choice(Y, Z)), "A2"),
        Equation(choice(X, X), X, "A3"),
        Equation(choice(X, delta()), X, "A4"),
    ]
    for p in s.implicit_predicates:
        for a in sorted(p.allowed_actions):
            lhs = prefix(a, choice(X, kappa(p.name)))
            eqs.append(Equation(lhs, choice(lhs, kappa(p.name)), f"A5[{p.name},{a}]"))
    return AxiomSystem(eqs)


def _subsets(items: Iterable[str]) -> Iterator[frozenset[str]]:
    items = sorted(items)
    return (frozenset(c) for c in chain.from_iterable(combinations(items, k) for k in range(len(items) + 1)))


def _restrictions(s: PregSystem) -> Iterator[tuple[frozenset[str], frozenset[str]]]:
    for b in _subsets(s.actions):
        for q in _subsets(s.predicate_names):
            yield b, q


def _set_text(xs: Iterable[str]) -> str:
    return "{" + ",".join(sorted(xs)) + "}"


def _implicit_names(s: PregSystem) -> frozenset[str]:
    return frozenset(p.name for p in s.implicit_predicates)


def a93_extra_forbidden(s: PregSystem, a: str) -> frozenset[str]:
    """Predicates that cannot survive an a-prefix: explicit ones and implicit ones not allowing a."""
    return frozenset(p.name for p in s.predicates if not p.implicit or a not in p.allowed_actions)


def _gen_a6(s):
    for b, q in _restrictions(s):
        yield Equation(restrict(b, q, delta()), delta(), "A6")


def _gen_a7_a8(s):
    for b, q in _restrictions(s):
        for p in sorted(s.predicate_names):
            if p in q:
                yield Equation(restrict(b, q, kappa(p)), delta(), "A7", f"{p} in Q")
            else:
                yield Equation(restrict(b, q, kappa(p)), kappa(p), "A8", f"{p} not in Q")


def _gen_a91(s):
    for b, q in _restrictions(s):
        for a in sorted(b):
            yield Equation(restrict(b, q, prefix(a, delta())), delta(), "A9.1", f"{a} in B")


def _gen_a92(s):
    imp = {p.name: p for p in s.implicit_predicates}
    for b, q in _restrictions(s):
        for a in sorted(b):
            for p in sorted(s.predicate_names):
                keep = p in imp and p not in q and a in imp[p].allowed_actions
                yield Equation(restrict(b, q, prefix(a, kappa(p))), kappa(p) if keep else delta(), "A9.2",
                               f"{a} in B")


def _gen_a93(s):
    for b, q in _restrictions(s):
        for a in sorted(b):
            q2 = q | a93_extra_forbidden(s, a)
            for c in s.actions:
                yield Equation(restrict(b, q, prefix(a, prefix(c, X))),
                               restrict(s.actions, q2, prefix(c, X)), "A9.3", f"{a} in B")


def _gen_a93_verbatim(s):
    for b, q in _restrictions(s):
        for a in sorted(b):
            for c in s.actions:
                yield Equation(restrict(b, q, prefix(a, prefix(c, X))), restrict(s.actions, q, X), "A9.3-verbatim",
                               f"{a} in B")


def _gen_a94(s):
    for b, q in _restrictions(s):
        for a in sorted(b):
            yield Equation(restrict(b, q, prefix(a, choice(X, Y))),
                           choice(restrict(b, q, prefix(a, X)), restrict(b, q, prefix(a, Y))), "A9.4", f"{a} in B")


def _gen_a10(s):
    for b, q in _restrictions(s):
        for a in s.actions:
            if a not in b and b:
                yield Equation(restrict(b, q, prefix(a, X)), restrict((), q, prefix(a, X)), "A10", f"{a} not in B")


def _gen_a11(s):
    imp = _implicit_names(s)
    for q in _subsets(s.predicate_names):
        for a in s.actions:
            yield Equation(restrict((), q, prefix(a, X)), prefix(a, restrict((), q & imp, X)), "A11")


def _gen_a12(s):
    for b, q in _restrictions(s):
        yield Equation(restrict(b, q, choice(X, Y)), choice(restrict(b, q, X), restrict(b, q, Y)), "A12")


RESTRICTION_SCHEMAS = [
    AxiomSchema("A6", "restrict{B ; Q}(delta) = delta", _gen_a6),
    AxiomSchema("A7/A8", "restrict{B ; Q}(kappa(P)) = delta if P in Q, kappa(P) otherwise", _gen_a7_a8),
    AxiomSchema("A9.1", "restrict{B ; Q}(a . delta) = delta if a in B", _gen_a91),
    AxiomSchema("A9.2", "restrict{B ; Q}(a . kappa(P)) = kappa(P) if a in B, P implicit, P not in Q, "
                        "a allowed for P; delta otherwise when a in B", _gen_a92),
    AxiomSchema("A9.3", "restrict{B ; Q}(a . b . x) = restrict{A ; Q + {P | P explicit or a not allowed for P}}"
                        "(b . x) if a in B", _gen_a93),
    AxiomSchema("A9.4", "restrict{B ; Q}(a . (x + y)) = restrict{B ; Q}(a . x) + restrict{B ; Q}(a . y) if a in B",
                _gen_a94),
    AxiomSchema("A10", "restrict{B ; Q}(a . x) = restrict{ ; Q}(a . x) if a not in B", _gen_a10),
    AxiomSchema("A11", "restrict{ ; Q}(a . x) = a . restrict{ ; Q & implicit}(x)", _gen_a11),
    AxiomSchema("A12", "restrict{B ; Q}(x + y) = restrict{B ; Q}(x) + restrict{B ; Q}(y)", _gen_a12),
]

A93_VERBATIM = AxiomSchema("A9.3-verbatim", "restrict{B ; Q}(a . b . x) = restrict{A ; Q}(x) if a in B",
                           _gen_a93_verbatim)


def ftp_partial_axioms(s: PregSystem) -> AxiomSystem:
    return AxiomSystem(ftp_axioms(s).equations, list(RESTRICTION_SCHEMAS))


# ---------------------------------------------------------------- canonical trees

@dataclass(frozen=True)
class CanonicalTree:
    """Head normal form with sorted, duplicate-free summands and saturated witnesses."""

    action_summands: tuple[tuple[str, "CanonicalTree"], ...] = ()
    witness_summands: tuple[str, ...] = ()

    @cached_property
    def key(self) -> tuple:
        return (tuple((a, t.key) for a, t in self.action_summands), self.witness_summands)

    def is_deadlock(self) -> bool:
        return not self.action_summands and not self.witness_summands

    def to_term(self) -> Term:
        return sum_of([prefix(a, t.to_term()) for a, t in self.action_summands] +
                      [kappa(p) for p in self.witness_summands])

    def depth(self) -> int:
        return 1 + max((t.depth() for _, t in self.action_summands), default=-1)

    def __str__(self):
        return format_term(self.to_term())


def canonical_tree(t: Term, s: PregSystem, _memo: dict | None = None) -> CanonicalTree:
    """Canonical form of a closed tree term (restrictions are eliminated first)."""
    if any(is_restrict(u) for u in _subterms(t)):
        t = eliminate_restriction(t, s)
    eng = engine_for(s)
    memo = {} if _memo is None else _memo

    def go(u: Term) -> CanonicalTree:
        hit = memo.get(u)
        if hit is not None:
            return hit
        acts = {}
        for v in summands(u):
            if is_prefix(v):
                child = go(v.args[0])
                acts[(v.op.param, child.key)] = (v.op.param, child)
            elif not is_kappa(v):
                raise ValueError(f"not a tree term: {format_term(v)}")
        res = CanonicalTree(tuple(acts[k] for k in sorted(acts)), tuple(sorted(eng.predicates_of(u))))
        memo[u] = res
        return res

    return go(t)


def _subterms(t: Term):
    from .core import subterms
    return subterms(t)


def trees_equal(t: Term, t2: Term, s: PregSystem) -> bool:
    return canonical_tree(t, s) == canonical_tree(t2, s)


def tree_difference(t1: CanonicalTree, t2: CanonicalTree, path: tuple[str, ...] = ()) -> str | None:
    """Describe a first observable difference between two canonical trees, or None."""
    where = ("after " + ".".join(path) + ": ") if path else ""
    if t1.witness_summands != t2.witness_summands:
        diff = sorted(set(t1.witness_summands) ^ set(t2.witness_summands))
        return f"{where}predicate {diff[0]} differs"
    s1 = {a for a, _ in t1.action_summands}
    s2 = {a for a, _ in t2.action_summands}
    if s1 != s2:
        return f"{where}action {sorted(s1 ^ s2)[0]} offered by only one side"
    k1 = {(a, c.key) for a, c in t1.action_summands}
    k2 = {(a, c.key) for a, c in t2.action_summands}
    if k1 == k2:
        return None
    for a, c in t1.action_summands:
        if (a, c.key) not in k2:
            return f"{where}an {a}-branch of the left side has no equal counterpart"
    for a, c in t2.action_summands:
        if (a, c.key) not in k1:
            return f"{where}an {a}-branch of the right side has no equal counterpart"
    return None


def truncate_tree(t: CanonicalTree, n: int) -> CanonicalTree:
    """The tree observed through n clock ticks: actions cut at depth n, witnesses kept."""
    if n == 0:
        return CanonicalTree((), t.witness_summands)
    kids = {}
    for a, c in t.action_summands:
        c2 = truncate_tree(c, n - 1)
        kids[(a, c2.key)] = (a, c2)
    return CanonicalTree(tuple(kids[k] for k in sorted(kids)), t.witness_summands)


# ---------------------------------------------------------------- restriction elimination

def push_restriction(b: frozenset[str], q: frozenset[str], u: Term, s: PregSystem) -> Term:
    """Eliminate restrict{b;q} over a restriction-free tree by structural recursion."""
    if is_delta(u):
        return delta()
    if is_kappa(u):
        return delta() if u.op.param in q else u
    if is_choice(u):
        parts = [push_restriction(b, q, v, s) for v in u.args]
        parts = [v for v in parts if not is_delta(v)]
        return sum_of(parts)
    if is_prefix(u):
        a, body = u.op.param, u.args[0]
        if a in b:
            if is_delta(body):
                return delta()
            if is_kappa(body):
                p = body.op.param
                imp = {x.name: x for x in s.implicit_predicates}
                keep = p in imp and p not in q and a in imp[p].allowed_actions
                return body if keep else delta()
            if is_prefix(body):
                return push_restriction(frozenset(s.actions), q | a93_extra_forbidden(s, a), body, s)
            if is_choice(body):
                parts = [push_restriction(b, q, prefix(a, v), s) for v in body.args]
                return sum_of([v for v in parts if not is_delta(v)])
            raise ValueError(f"not a tree term: {format_term(body)}")
        imp = _implicit_names(s)
        return prefix(a, push_restriction(frozenset(), q & imp, body, s))
    raise ValueError(f"not a tree term: {format_term(u)}")


def eliminate_restriction(t: Term, s: PregSystem) -> Term:
    """Restriction-free tree term provably equal to ``t``."""
    if isinstance(t, Var):
        raise ValueError("closed term expected")
    if not t.args:
        return t
    args = [eliminate_restriction(a, s) for a in t.args]
    if is_restrict(t):
        b, q = t.op.param
        return push_restriction(b, q, args[0], s)
    return App(t.op, args)


def a9_schema_rhs(b: frozenset[str], q: frozenset[str], a: str, body: Term, s: PregSystem) -> Term:
    """Right-hand side of the restriction-of-blocked-prefix schema: surviving witnesses only."""
    preds = engine_for(s).predicates_of(prefix(a, body))
    return sum_of([kappa(p) for p in sorted(preds - q)])
