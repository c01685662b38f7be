"""Operational semantics: the sound-and-supported transition and predicate relations.

Both relations are computed by structural recursion on closed terms: a rule
for the head symbol fires when its premises hold of the arguments, and the
premises only ever inspect arguments, so recursion on subterms is well
founded.
"""
from __future__ import annotations

import json
import sys
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .builtins import builtin_rules
from .core import OperationSym, Term, Var, apply_subst, format_term
from .spec import PregRule, PregSystem

Transition = tuple[str, Term]


@dataclass(frozen=True)
class StepBudget:
    max_states: int = 10_000
    max_depth: int = 8
    max_steps: int = 100_000

    def __post_init__(self):
        if self.max_states <= 0 or self.max_depth < 0 or self.max_steps <= 0:
            raise ValueError("budgets must be positive")


class Engine:
    """Memoized evaluator for one system; not shared across threads."""

    def __init__(self, system: PregSystem):
        self.system = system
        self._out: dict[Term, frozenset[Transition]] = {}
        self._preds: dict[Term, frozenset[str]] = {}
        self._rules: dict[OperationSym, tuple[tuple[PregRule, ...], tuple[PregRule, ...]]] = {}
        if sys.getrecursionlimit() < 20_000:
            sys.setrecursionlimit(20_000)

    def rules_for(self, op: OperationSym) -> tuple[tuple[PregRule, ...], tuple[PregRule, ...]]:
        """(transition rules, predicate rules) for ``op``."""
        hit = self._rules.get(op)
        if hit is None:
            if op.origin == "ftp":
                rules = builtin_rules(op, self.system)
            else:
                rules = [r for r in self.system.rules_of(op) if r.arity == op.arity]
            hit = (tuple(r for r in rules if r.is_transition), tuple(r for r in rules if not r.is_transition))
            self._rules[op] = hit
        return hit

    def outgoing(self, t: Term) -> frozenset[Transition]:
        hit = self._out.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Var):
            raise ValueError(f"open term: variable {t.name}")
        result = set()
        for r in self.rules_for(t.op)[0]:
            for sigma in self.rule_matches(r, t.args):
                result.add((r.action, apply_subst(r.target, sigma)))
        out = frozenset(result)
        self._out[t] = out
        return out

    def predicates_of(self, t: Term) -> frozenset[str]:
        hit = self._preds.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Var):
            raise ValueError(f"open term: variable {t.name}")
        found = set()
        for r in self.rules_for(t.op)[1]:
            if r.predicate not in found and self._premises_hold(r, t.args):
                found.add(r.predicate)
        out = frozenset(found)
        self._preds[t] = out
        return out

    def _premises_hold(self, r: PregRule, args: Sequence[Term]) -> bool:
        for i, a, _ in r.pos_trans:
            if not any(b == a for b, _ in self.outgoing(args[i - 1])):
                return False
        for i, p in r.pos_pred:
            if p not in self.predicates_of(args[i - 1]):
                return False
        for i, names in r.neg_trans:
            if any(b in names for b, _ in self.outgoing(args[i - 1])):
                return False
        for i, names in r.neg_pred:
            if self.predicates_of(args[i - 1]) & set(names):
                return False
        return True

    def rule_matches(self, r: PregRule, args: Sequence[Term]) -> list[dict[str, Term]]:
        """All closed substitutions extending x_i -> args_i that satisfy the premises."""
        if len(args) != r.arity:
            raise ValueError(f"{r.principal} expects {r.arity} arguments")
        options: list[tuple[str, list[Term]]] = []
        for i, a, y in r.pos_trans:
            succ = sorted((u for b, u in self.outgoing(args[i - 1]) if b == a), key=lambda u: u.key)
            if not succ:
                return []
            options.append((y, succ))
        for i, p in r.pos_pred:
            if p not in self.predicates_of(args[i - 1]):
                return []
        for i, names in r.neg_trans:
            if any(b in names for b, _ in self.outgoing(args[i - 1])):
                return []
        for i, names in r.neg_pred:
            if self.predicates_of(args[i - 1]) & set(names):
                return []
        base = dict(zip(r.sources, args))
        out = []
        for combo in product(*(succ for _, succ in options)):
            sigma = dict(base)
            sigma.update({y: u for (y, _), u in zip(options, combo)})
            out.append(sigma)
        return out

    def sorted_outgoing(self, t: Term) -> list[Transition]:
        return sorted(self.outgoing(t), key=lambda p: (p[0], p[1].key))


_ENGINES: dict[int, tuple[PregSystem, Engine]] = {}


def engine_for(s: PregSystem) -> Engine:
    """Shared engine per system object (single-threaded callers)."""
    hit = _ENGINES.get(id(s))
    if hit is None or hit[0] is not s:
        if len(_ENGINES) > 64:
            _ENGINES.clear()
        hit = (s, Engine(s))
        _ENGINES[id(s)] = hit
    return hit[1]


def outgoing(t: Term, s: PregSystem) -> frozenset[Transition]:
    return engine_for(s).outgoing(t)


def predicates_of(t: Term, s: PregSystem) -> frozenset[str]:
    return engine_for(s).predicates_of(t)


def rule_matches(r: PregRule, args: Sequence[Term], s: PregSystem) -> list[dict[str, Term]]:
    return engine_for(s).rule_matches(r, args)


# ---------------------------------------------------------------- LTS

@dataclass
class LTS:
    states: list[Term]
    transitions: list[tuple[int, str, int]]
    pred_labels: list[frozenset[str]]
    root: int = 0
    complete: bool = True
    index: dict[Term, int] = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.states)

    def successors(self, i: int) -> list[tuple[str, int]]:
        return [(a, j) for k, a, j in self.transitions if k == i]

    def adjacency(self) -> list[list[tuple[str, int]]]:
        adj: list[list[tuple[str, int]]] = [[] for _ in self.states]
        for i, a, j in self.transitions:
            adj[i].append((a, j))
        return adj

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "complete": self.complete,
            "states": [format_term(t) for t in self.states],
            "transitions": [[i, a, j] for i, a, j in self.transitions],
            "predicates": [sorted(p) for p in self.pred_labels],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_dot(self) -> str:
        lines = ["digraph lts {", "  node [shape=box];"]
        for i, t in enumerate(self.states):
            preds = ",".join(sorted(self.pred_labels[i]))
            label = format_term(t) + (f"\\n{{{preds}}}" if preds else "")
            label = label.replace('"', '\\"')
            extra = ", penwidth=2" if i == self.root else ""
            lines.append(f'  s{i} [label="{label}"{extra}];')
        for i, a, j in self.transitions:
            lines.append(f'  s{i} -> s{j} [label="{a}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class BudgetExceeded(Exception):
    """The reachable fragment outgrew the budget; ``partial`` holds what was built."""

    def __init__(self, message: str, partial: LTS | None = None):
        super().__init__(message)
        self.partial = partial


def build_lts(t: Term, s: PregSystem, budget: StepBudget = StepBudget(), engine: Engine | None = None) -> LTS:
    """Breadth-first closure of ``outgoing`` from ``t``."""
    return explore([t], s, budget, engine)[0]


def explore(roots: Sequence[Term], s: PregSystem, budget: StepBudget = StepBudget(),
            engine: Engine | None = None) -> tuple[LTS, list[int]]:
    """One shared LTS reachable from several roots; returns it and the index of each root."""
    eng = engine or engine_for(s)
    lts = LTS([], [], [], index={})
    queue: deque[int] = deque()

    def add(u: Term) -> int:
        j = lts.index.get(u)
        if j is None:
            if len(lts.states) >= budget.max_states:
                lts.complete = False
                raise BudgetExceeded(f"more than {budget.max_states} states", lts)
            j = len(lts.states)
            lts.index[u] = j
            lts.states.append(u)
            lts.pred_labels.append(eng.predicates_of(u))
            queue.append(j)
        return j

    idx = [add(t) for t in roots]
    while queue:
        i = queue.popleft()
        for a, u in eng.sorted_outgoing(lts.states[i]):
            lts.transitions.append((i, a, add(u)))
    return lts, idx


def union_lts(parts: Iterable[LTS]) -> tuple[LTS, list[int]]:
    """Disjoint union; returns the union and the root index of each part."""
    states, trans, preds, roots = [], [], [], []
    for part in parts:
        off = len(states)
        roots.append(off + part.root)
        states.extend(part.states)
        preds.extend(part.pred_labels)
        trans.extend((i + off, a, j + off) for i, a, j in part.transitions)
    return LTS(states, trans, preds, 0, True), roots
