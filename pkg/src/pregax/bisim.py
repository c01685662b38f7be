"""Strong bisimilarity with predicates: partition refinement plus a depth-bounded fallback."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

from .core import Term, format_term
from .semantics import LTS, BudgetExceeded, Engine, StepBudget, build_lts, engine_for, explore, union_lts
from .spec import PregSystem


class Outcome(enum.Enum):
    EQUAL = "Equal"
    NOT_EQUAL = "NotEqual"
    UNKNOWN = "Unknown"

    def __str__(self):
        return self.value


@dataclass
class Verdict:
    outcome: Outcome
    witness: str | None = None
    depth: int | None = None
    trace: list[str] = field(default_factory=list)
    proof: Any = None

    @property
    def equal(self) -> bool:
        return self.outcome is Outcome.EQUAL

    def to_dict(self) -> dict:
        d = {"outcome": self.outcome.value, "witness": self.witness, "depth": self.depth, "trace": self.trace}
        if self.proof is not None:
            d["proof"] = self.proof.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- partition refinement

def refine(lts: LTS) -> list[int]:
    """Coarsest stable partition; returns a block id per state.

    Splitters are (block, action) pairs taken in a fixed order: blocks by
    id, actions sorted.  The initial partition groups states by predicate set.
    """
    adj = lts.adjacency()
    actions = sorted({a for _, a, _ in lts.transitions})
    initial: dict[frozenset[str], int] = {}
    block = [initial.setdefault(p, len(initial)) for p in lts.pred_labels]
    blocks: list[list[int]] = [[] for _ in initial]
    for i, b in enumerate(block):
        blocks[b].append(i)
    changed = True
    while changed:
        changed = False
        for b in range(len(blocks)):
            for a in actions:
                if len(blocks[b]) < 2:
                    break
                groups: dict[frozenset[int], list[int]] = {}
                for i in blocks[b]:
                    key = frozenset(block[j] for act, j in adj[i] if act == a)
                    groups.setdefault(key, []).append(i)
                if len(groups) > 1:
                    ordered = sorted(groups.values(), key=lambda g: g[0])
                    blocks[b] = ordered[0]
                    for g in ordered[1:]:
                        for i in g:
                            block[i] = len(blocks)
                        blocks.append(g)
                    changed = True
    return _renumber(block)


def _renumber(block: list[int]) -> list[int]:
    ids: dict[int, int] = {}
    return [ids.setdefault(b, len(ids)) for b in block]


def level_partitions(lts: LTS) -> list[list[int]]:
    """Partitions by n-step approximation, n = 0, 1, ... until stable."""
    adj = lts.adjacency()
    ids: dict[Hashable, int] = {}
    levels = [[ids.setdefault(p, len(ids)) for p in lts.pred_labels]]
    while True:
        prev = levels[-1]
        ids = {}
        nxt = [ids.setdefault((prev[i], frozenset((a, prev[j]) for a, j in adj[i])), len(ids))
               for i in range(len(lts.states))]
        if len(set(nxt)) == len(set(prev)):
            return levels
        levels.append(nxt)


# ---------------------------------------------------------------- distinguishing formulas

def _distinguish(p, q, level: int, separated: Callable[[Any, Any, int], bool],
                 succ: Callable[[Any], list[tuple[str, Any]]], preds: Callable[[Any], frozenset[str]]) -> str:
    """A modal formula true of p and false of q; p and q differ at ``level``."""
    if level == 0 or preds(p) != preds(q):
        extra = sorted(preds(p) - preds(q))
        if extra:
            return f"predicate {extra[0]}"
        return f"not predicate {sorted(preds(q) - preds(p))[0]}"
    sp, sq = succ(p), succ(q)
    for a, p2 in sp:
        answers = [q2 for b, q2 in sq if b == a]
        if all(separated(p2, q2, level - 1) for q2 in answers):
            if not answers:
                return f"<{a}>true"
            parts = [_distinguish(p2, q2, _first_level(p2, q2, level - 1, separated), separated, succ, preds)
                     for q2 in answers]
            return f"<{a}>(" + " & ".join(dict.fromkeys(parts)) + ")"
    for a, q2 in sq:
        answers = [p2 for b, p2 in sp if b == a]
        if all(separated(q2, p2, level - 1) for p2 in answers):
            if not answers:
                return f"[{a}]false"
            parts = [_distinguish(p2, q2, _first_level(p2, q2, level - 1, separated), separated, succ, preds)
                     for p2 in answers]
            return f"[{a}](" + " | ".join(dict.fromkeys(parts)) + ")"
    raise AssertionError("states are not separated at the given level")


def _first_level(p, q, upper: int, separated) -> int:
    for k in range(upper + 1):
        if separated(p, q, k):
            return k
    return upper


# ---------------------------------------------------------------- decision procedures

def bisimilar(t: Term, t2: Term, s: PregSystem, budget: StepBudget = StepBudget(),
              engine: Engine | None = None) -> Verdict:
    """Decide t ~ t2; falls back to depth-bounded comparison when the LTS is too large."""
    eng = engine or engine_for(s)
    try:
        l1 = build_lts(t, s, budget, eng)
        l2 = build_lts(t2, s, budget, eng)
    except BudgetExceeded as exc:
        return _bounded_verdict(t, t2, eng, budget.max_depth, f"state budget exhausted: {exc}")
    lts, (r1, r2) = union_lts([l1, l2])
    block = refine(lts)
    trace = [f"lts sizes {len(l1)} + {len(l2)}", f"{len(set(block))} blocks after refinement"]
    if block[r1] == block[r2]:
        return Verdict(Outcome.EQUAL, trace=trace)
    levels = level_partitions(lts)
    adj = lts.adjacency()
    sep = lambda p, q, k: levels[min(k, len(levels) - 1)][p] != levels[min(k, len(levels) - 1)][q]
    k = _first_level(r1, r2, len(levels) - 1, sep)
    formula = _distinguish(r1, r2, k, sep, lambda i: adj[i], lambda i: lts.pred_labels[i])
    return Verdict(Outcome.NOT_EQUAL, witness=formula, depth=k, trace=trace + [f"distinguishing formula: {formula}"])


def bisim_classes(terms: Sequence[Term], s: PregSystem, budget: StepBudget = StepBudget(),
                  engine: Engine | None = None) -> list[int]:
    """Block id of each term in the coarsest bisimulation over their joint reachable LTS."""
    lts, roots = explore(terms, s, budget, engine)
    block = refine(lts)
    return [block[r] for r in roots]


def _bounded_verdict(t: Term, t2: Term, eng: Engine, max_depth: int, note: str) -> Verdict:
    memo: dict = {}
    trace = [note]
    for n in range(max_depth + 1):
        if not _n_bisim(t, t2, n, eng, memo):
            sep = lambda p, q, k: not _n_bisim(p, q, k, eng, memo)
            formula = _distinguish(t, t2, n, sep, eng.sorted_outgoing, eng.predicates_of)
            trace.append(f"not {n}-bisimilar: {formula}")
            return Verdict(Outcome.NOT_EQUAL, witness=formula, depth=n, trace=trace)
    trace.append(f"{max_depth}-bisimilar")
    return Verdict(Outcome.UNKNOWN, witness=f"bound {max_depth}", depth=max_depth, trace=trace)


def _n_bisim(t: Term, u: Term, n: int, eng: Engine, memo: dict) -> bool:
    if t == u:
        return True
    key = (t, u, n)
    hit = memo.get(key)
    if hit is not None:
        return hit
    ok = eng.predicates_of(t) == eng.predicates_of(u)
    if ok and n > 0:
        out_t, out_u = eng.sorted_outgoing(t), eng.sorted_outgoing(u)
        ok = all(any(b == a and _n_bisim(t2, u2, n - 1, eng, memo) for b, u2 in out_u) for a, t2 in out_t) and \
            all(any(b == a and _n_bisim(t2, u2, n - 1, eng, memo) for a, t2 in out_t) for b, u2 in out_u)
    memo[key] = ok
    memo[(u, t, n)] = ok
    return ok


def n_bisimilar(t: Term, t2: Term, s: PregSystem, n: int, engine: Engine | None = None) -> bool:
    """n-step bisimulation approximation, with predicates compared at every level."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return _n_bisim(t, t2, n, engine or engine_for(s), {})


def is_bisimulation(lts: LTS, relation: set[tuple[int, int]]) -> bool:
    """Check the transfer conditions for a symmetric relation on one LTS."""
    adj = lts.adjacency()
    for p, q in relation:
        if (q, p) not in relation or lts.pred_labels[p] != lts.pred_labels[q]:
            return False
        for a, p2 in adj[p]:
            if not any(b == a and (p2, q2) in relation for b, q2 in adj[q]):
                return False
    return True


def describe(v: Verdict, t: Term, t2: Term) -> str:
    head = f"{v.outcome}: {format_term(t)} vs {format_term(t2)}"
    if v.witness:
        head += f" [{v.witness}]"
    return head
