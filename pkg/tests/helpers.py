"""Shared fixtures-free helpers: corpus access, term strategies, independent oracles."""
from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from hypothesis import strategies as st

import pregax
from pregax.core import App, Equation, OperationSym, Term, Var, apply_subst, choice, delta, kappa, prefix, restrict
from pregax.semantics import LTS
from pregax.spec import load_spec

CORPUS = Path(pregax.__file__).parent / "corpus"


@lru_cache(maxsize=None)
def corpus(name: str):
    return load_spec(CORPUS / f"{name}.preg")


def tree_terms(actions, preds, max_leaves: int = 8) -> st.SearchStrategy[Term]:
    """Closed FTP terms over the given actions and predicate names."""
    leaves = st.sampled_from([delta()] + [kappa(p) for p in preds])

    def extend(children):
        return st.one_of(
            st.builds(prefix, st.sampled_from(list(actions)), children),
            st.builds(choice, children, children),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def restricted_terms(actions, preds, max_leaves: int = 8) -> st.SearchStrategy[Term]:
    leaves = st.sampled_from([delta()] + [kappa(p) for p in preds])
    subsets_a = st.frozensets(st.sampled_from(list(actions)))
    subsets_p = st.frozensets(st.sampled_from(list(preds))) if preds else st.just(frozenset())

    def extend(children):
        return st.one_of(
            st.builds(prefix, st.sampled_from(list(actions)), children),
            st.builds(choice, children, children),
            st.builds(restrict, subsets_a, subsets_p, children),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def signature_terms(ops: list[OperationSym], max_leaves: int = 8) -> st.SearchStrategy[Term]:
    consts = [App(op) for op in ops if op.arity == 0]
    nonconst = [op for op in ops if op.arity > 0]

    def extend(children):
        return st.sampled_from(nonconst).flatmap(
            lambda op: st.lists(children, min_size=op.arity, max_size=op.arity).map(lambda xs: App(op, xs)))

    return st.recursive(st.sampled_from(consts), extend, max_leaves=max_leaves)


def naive_bisimilarity(lts: LTS) -> set[tuple[int, int]]:
    """Greatest bisimulation by deleting violating pairs until nothing changes."""
    adj = lts.adjacency()
    n = len(lts.states)
    rel = {(p, q) for p in range(n) for q in range(n) if lts.pred_labels[p] == lts.pred_labels[q]}
    changed = True
    while changed:
        changed = False
        for p, q in list(rel):
            ok = all(any(b == a and (p2, q2) in rel for b, q2 in adj[q]) for a, p2 in adj[p]) and \
                all(any(b == a and (p2, q2) in rel for b, p2 in adj[p]) for a, q2 in adj[q])
            if not ok:
                rel.discard((p, q))
                changed = True
    return rel


def _canonical(eq: Equation) -> tuple[Term, Term]:
    order: dict[str, str] = {}

    def visit(t: Term):
        if isinstance(t, Var):
            order.setdefault(t.name, f"v{len(order)}")
        else:
            for a in t.args:
                visit(a)

    visit(eq.lhs)
    visit(eq.rhs)
    sigma = {k: Var(v) for k, v in order.items()}
    return apply_subst(eq.lhs, sigma), apply_subst(eq.rhs, sigma)


def alpha_equal(e1: Equation, e2: Equation) -> bool:
    return _canonical(e1) == _canonical(e2)


# ---------------------------------------------------------------- random specifications

from pregax.core import PredicateSym  # noqa: E402
from pregax.spec import PregRule, PregSystem  # noqa: E402


@st.composite
def preg_rules(draw, op: OperationSym, actions, preds, ops) -> PregRule:
    xs = tuple(f"x{k}" for k in range(1, op.arity + 1))
    pos_trans, neg_trans, pos_pred, neg_pred = [], [], [], []
    ys = []
    for i in range(1, op.arity + 1):
        for a in draw(st.lists(st.sampled_from(actions), max_size=2)):
            ys.append(f"y{len(ys) + 1}")
            pos_trans.append((i, a, ys[-1]))
        nb = draw(st.frozensets(st.sampled_from(actions), max_size=2))
        if nb:
            neg_trans.append((i, tuple(sorted(nb))))
        if preds:
            for p in draw(st.lists(st.sampled_from(preds), max_size=1)):
                pos_pred.append((i, p))
            nq = draw(st.frozensets(st.sampled_from(preds), max_size=1))
            if nq:
                neg_pred.append((i, tuple(sorted(nq))))
    names = list(xs) + ys
    leaf = st.sampled_from([delta()] + [Var(n) for n in names])
    target = draw(st.recursive(leaf, lambda c: st.one_of(
        st.builds(prefix, st.sampled_from(actions), c),
        st.builds(choice, c, c),
        *[st.lists(c, min_size=o.arity, max_size=o.arity).map(lambda args, o=o: App(o, args)) for o in ops]),
        max_leaves=4))
    if preds and draw(st.booleans()):
        return PregRule(op, xs, tuple(pos_trans), tuple(neg_trans), tuple(pos_pred), tuple(neg_pred),
                        predicate=draw(st.sampled_from(preds)))
    return PregRule(op, xs, tuple(pos_trans), tuple(neg_trans), tuple(pos_pred), tuple(neg_pred),
                    action=draw(st.sampled_from(actions)), target=target)


@st.composite
def preg_systems(draw) -> PregSystem:
    actions = sorted(draw(st.frozensets(st.sampled_from(["a", "b", "c"]), min_size=1)))
    preds = []
    for name in draw(st.lists(st.sampled_from(["P", "Q"]), unique=True)):
        if draw(st.booleans()):
            preds.append(PredicateSym(name, "implicit", draw(st.frozensets(st.sampled_from(actions)))))
        else:
            preds.append(PredicateSym(name))
    ops = [OperationSym(n, draw(st.integers(0, 2))) for n in draw(
        st.lists(st.sampled_from(["f", "g", "h"]), min_size=1, max_size=2, unique=True))]
    rules = []
    pnames = [p.name for p in preds]
    for op in ops:
        rules += draw(st.lists(preg_rules(op, actions, pnames, ops), max_size=3))
    return PregSystem("random", tuple(actions), tuple(preds), tuple(ops), tuple(rules))
