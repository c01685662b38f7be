"""Rules of the built-in constructors, generated per concrete symbol.

Families are parametric (one prefix per action, one restriction per
action/predicate set pair), so rules are produced on demand for the symbols
that actually occur in a term.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

from .core import (
    CHOICE_NAME, CLOCK, DELTA_NAME, KAPPA_NAME, PREFIX_NAME, PROJ, PROJ_NAME, RESTRICT_NAME,
    OperationSym, Var, proj, restrict,
)
from .spec import PregRule

if TYPE_CHECKING:
    from .spec import PregSystem

X, Y, Z = "x", "y", "z"


def prefix_rules(op: OperationSym, s: "PregSystem") -> list[PregRule]:
    a = op.param
    rules = [PregRule(op, (X,), action=a, target=Var(X))]
    for p in s.implicit_predicates:
        if a in p.allowed_actions:
            rules.append(PregRule(op, (X,), pos_pred=((1, p.name),), predicate=p.name))
    return rules


def choice_rules(op: OperationSym, s: "PregSystem") -> list[PregRule]:
    rules = []
    for a in s.actions:
        rules.append(PregRule(op, (X, Z), pos_trans=((1, a, Y),), action=a, target=Var(Y)))
        rules.append(PregRule(op, (X, Z), pos_trans=((2, a, Y),), action=a, target=Var(Y)))
    for p in s.predicates:
        rules.append(PregRule(op, (X, Z), pos_pred=((1, p.name),), predicate=p.name))
        rules.append(PregRule(op, (X, Z), pos_pred=((2, p.name),), predicate=p.name))
    return rules


def restrict_rules(op: OperationSym, s: "PregSystem") -> list[PregRule]:
    forbidden_acts, forbidden_preds = op.param
    persistent = forbidden_preds & {p.name for p in s.implicit_predicates}
    rules = []
    for a in s.actions:
        if a not in forbidden_acts:
            rules.append(PregRule(op, (X,), pos_trans=((1, a, Y),), action=a,
                                  target=restrict((), persistent, Var(Y))))
    for p in s.predicates:
        if p.name not in forbidden_preds:
            rules.append(PregRule(op, (X,), pos_pred=((1, p.name),), predicate=p.name))
    return rules


def proj_rules(op: OperationSym, s: "PregSystem", clock: str = CLOCK) -> list[PregRule]:
    rules = []
    for a in s.actions:
        rules.append(PregRule(op, (X, "h"), pos_trans=((1, a, Y), (2, clock, "h2")), action=a,
                              target=proj(Var(Y), Var("h2"))))
    for p in s.predicates:
        rules.append(PregRule(op, (X, "h"), pos_pred=((1, p.name),), predicate=p.name))
    return rules


def builtin_rules(op: OperationSym, s: "PregSystem") -> list[PregRule]:
    """All rules for a built-in symbol over the actions and predicates of ``s``."""
    name = op.name
    if name == DELTA_NAME:
        return []
    if name == KAPPA_NAME:
        return [PregRule(op, (), predicate=op.param)]
    if name == PREFIX_NAME:
        return prefix_rules(op, s)
    if name == CHOICE_NAME:
        return choice_rules(op, s)
    if name == RESTRICT_NAME:
        return restrict_rules(op, s)
    if name == PROJ_NAME:
        return proj_rules(op, s)
    raise KeyError(f"not a built-in operation: {op}")


__all__ = ["builtin_rules", "prefix_rules", "choice_rules", "restrict_rules", "proj_rules", "PROJ"]
