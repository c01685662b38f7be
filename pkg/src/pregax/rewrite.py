"""Head normalization by the generated laws, with replayable proof traces.

Every step rewrites one subterm of a global term, identified by a path of
0-based argument indices.  Steps driven by a concrete equation carry the
equation and substitution so the instance can be checked independently;
steps driven by schemas (deadlock, restriction over a sum, witness
saturation) carry only before and after.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .axiomgen import GeneratedAxioms, OpAxioms, axiomatize
from .bisim import Outcome, Verdict
from .core import (
    App, Equation, Term, Var, apply_subst, choice, delta, format_term, hourglass, is_choice, is_delta, is_kappa,
    is_prefix, is_restrict, kappa, prefix, proj, replace_at, restrict, subterm_at, sum_of, summands,
)
from .ftp import a9_schema_rhs, canonical_tree, tree_difference
from .semantics import Engine, engine_for
from .spec import PregSystem

__all__ = ["Step", "ProofTrace", "NonTermination", "Rewriter", "prove_equal", "normalize"]

Path = tuple[int, ...]


class NonTermination(Exception):
    """Unbounded normalization did not reach a finite tree."""

    def __init__(self, message: str, term: Term | None = None):
        super().__init__(message)
        self.term = term


@dataclass
class Step:
    label: str
    path: Path
    before: Term
    after: Term
    sigma: dict[str, Term] | None = None
    equation: Equation | None = None

    def text(self, k: int) -> str:
        where = "/".join(str(i + 1) for i in self.path) or "root"
        return f"step {k}: {self.label} at {where}: {format_term(self.before)} => {format_term(self.after)}"

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "path": list(self.path),
            "before": format_term(self.before),
            "after": format_term(self.after),
            "substitution": None if self.sigma is None else
            {k: format_term(v) for k, v in sorted(self.sigma.items())},
        }

    def instance_ok(self) -> bool:
        """For equation steps: before/after are the instance of the equation under sigma."""
        if self.equation is None:
            return True
        lhs, rhs = self.equation.instantiate(self.sigma or {})
        return lhs == self.before and rhs == self.after


@dataclass
class ProofTrace:
    initial: Term
    steps: list[Step] = field(default_factory=list)
    current: Term | None = None

    def __post_init__(self):
        if self.current is None:
            self.current = self.initial

    def record(self, step: Step) -> None:
        here = subterm_at(self.current, step.path)
        if here != step.before:
            raise AssertionError(f"trace out of sync at {step.path}: {format_term(here)} vs {format_term(step.before)}")
        self.current = replace_at(self.current, step.path, step.after)
        self.steps.append(step)

    @property
    def final(self) -> Term:
        return self.current

    def replay(self) -> Term:
        t = self.initial
        for step in self.steps:
            if subterm_at(t, step.path) != step.before:
                raise ValueError(f"replay mismatch at {step.label}")
            t = replace_at(t, step.path, step.after)
        return t

    def to_text(self) -> str:
        lines = [f"start: {format_term(self.initial)}"]
        lines += [s.text(k) for k, s in enumerate(self.steps, 1)]
        lines.append(f"result: {format_term(self.final)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"initial": format_term(self.initial), "final": format_term(self.final),
                "steps": [s.to_dict() for s in self.steps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def summand_path(n: int, k: int) -> Path:
    """Path of the k-th (0-based) summand inside a left-nested sum of n summands."""
    if n == 1:
        return ()
    if k == 0:
        return (0,) * (n - 1)
    return (0,) * (n - 1 - k) + (1,)


class Rewriter:
    """Head normalizer for one axiomatized system.

    ``trace=True`` records every step against a single global term and
    disables memoization, since replay needs each step in place.
    """

    def __init__(self, system: PregSystem, axioms: GeneratedAxioms, max_steps: int = 100_000,
                 nesting_cap: int = 200, engine: Engine | None = None):
        self.system = system
        self.axioms = axioms
        self.max_steps = max_steps
        self.nesting_cap = nesting_cap
        self.engine = engine or engine_for(system)
        self.steps = 0
        self.trace: ProofTrace | None = None
        self._hnf_memo: dict[Term, Term] = {}
        self._nf_memo: dict[Term, Term] = {}
        self._implicit = frozenset(p.name for p in system.implicit_predicates)

    # ------------------------------------------------------------ bookkeeping

    def _step(self, label: str, path: Path, before: Term, after: Term,
              sigma: dict[str, Term] | None = None, equation: Equation | None = None) -> Term:
        self.steps += 1
        if self.steps > self.max_steps:
            raise NonTermination(f"more than {self.max_steps} rewrite steps", before)
        if before != after and self.trace is not None:
            self.trace.record(Step(label, path, before, after, sigma, equation))
        return after

    def start_trace(self, t: Term) -> ProofTrace:
        self.trace = ProofTrace(t)
        return self.trace

    # ------------------------------------------------------------ head normal form

    def hnf(self, t: Term, path: Path = ()) -> Term:
        """Sum of prefixes and witnesses, sorted, duplicate-free and witness-saturated."""
        if isinstance(t, Var):
            raise ValueError(f"open term: variable {t.name}")
        if self.trace is None:
            hit = self._hnf_memo.get(t)
            if hit is not None:
                return hit
        if is_delta(t) or is_kappa(t):
            out = t
        elif is_prefix(t):
            out = self._finish([t], t, path)
        elif is_choice(t):
            left = self.hnf(t.args[0], path + (0,))
            right = self.hnf(t.args[1], path + (1,))
            out = self._finish(summands(left) + summands(right), choice(left, right), path)
        elif is_restrict(t):
            out = self._restrict(t, path)
        else:
            out = self._operation(t, path)
        if self.trace is None:
            self._hnf_memo[t] = out
        return out

    def _sort(self, parts: Sequence[Term]) -> list[Term]:
        seen = {}
        for u in parts:
            if not is_delta(u):
                seen.setdefault(u, None)
        pre = sorted((u for u in seen if is_prefix(u)), key=lambda u: (u.op.param, u.args[0].key))
        kap = sorted((u for u in seen if is_kappa(u)), key=lambda u: u.op.param)
        return pre + kap

    def _finish(self, parts: Sequence[Term], current: Term, path: Path) -> Term:
        """Rearrange summands (A1-A4), then add witnesses implied by prefix summands (A5)."""
        ordered = self._sort(parts)
        t = self._step("A1-A4", path, current, sum_of(ordered))
        present = {u.op.param for u in ordered if is_kappa(u)}
        missing = sorted(self.engine.predicates_of(t) - present)
        if missing:
            t = self._step("A5", path, t, sum_of(self._sort(ordered + [kappa(p) for p in missing])))
        return t

    # ------------------------------------------------------------ restriction

    def _restrict(self, t: App, path: Path) -> Term:
        b, q = t.op.param
        body = self.hnf(t.args[0], path + (0,))
        parts = summands(body)
        if not parts:
            return self._step("A6", path, restrict(b, q, body), delta())
        cur = restrict(b, q, body)
        spread = sum_of([restrict(b, q, u) for u in parts])
        cur = self._step("A12", path, cur, spread)
        out = []
        for k, u in enumerate(parts):
            sp = path + summand_path(len(parts), k)
            out.append(self._restrict_summand(b, q, u, sp))
        return self._finish([v for o in out for v in summands(o)], sum_of(out), path)

    def _restrict_summand(self, b: frozenset, q: frozenset, u: Term, path: Path) -> Term:
        before = restrict(b, q, u)
        if is_kappa(u):
            if u.op.param in q:
                return self._step("A7", path, before, delta())
            return self._step("A8", path, before, u)
        a, x = u.op.param, u.args[0]
        if a in b:
            return self._step("A9", path, before, a9_schema_rhs(b, q, a, x, self.system))
        cur = before
        if b:
            cur = self._step("A10", path, cur, restrict((), q, u))
        return self._step("A11", path, cur, prefix(a, restrict((), q & self._implicit, x)))

    # ------------------------------------------------------------ user operations and projection

    def _operation(self, t: App, path: Path) -> Term:
        eq = self.axioms.translation_for(t.op.name)
        if eq is not None:
            sigma = {f"x{k}": a for k, a in enumerate(t.args, 1)}
            new = apply_subst(eq.rhs, sigma)
            self._step(eq.label, path, t, new, sigma, eq)
            return self.hnf(new, path)
        ax = self.axioms.for_op(t.op)
        if ax is None:
            raise ValueError(f"no laws for operation {t.op.name}")
        args = [summands(self.hnf(a, path + (k,))) for k, a in enumerate(t.args)]
        return self._apply(ax, args, path)

    def _apply(self, ax: OpAxioms, args: list[list[Term]], path: Path) -> Term:
        f = ax.op
        cur = App(f, [sum_of(a) for a in args])
        for i in ax.deadlock.positive:
            if len(args[i - 1]) >= 2:
                left, right = list(args), list(args)
                left[i - 1], right[i - 1] = args[i - 1][:-1], args[i - 1][-1:]
                eq = ax.distributivity[ax.deadlock.positive.index(i)]
                sigma = {f"x{k}": sum_of(a) for k, a in enumerate(args, 1)}
                sigma[f"x{i}"] = sum_of(left[i - 1])
                sigma[f"z{i}"] = sum_of(right[i - 1])
                split = choice(App(f, [sum_of(a) for a in left]), App(f, [sum_of(a) for a in right]))
                self._step(eq.label, path, cur, split, sigma, eq)
                lo = self._apply(ax, left, path + (0,))
                ro = self._apply(ax, right, path + (1,))
                return self._finish(summands(lo) + summands(ro), choice(lo, ro), path)
        if ax.deadlock.applicable(args):
            return self._step(f"{f.name}.deadlock", path, cur, delta())
        rules = ax.deadlock.unblocked(args)
        if len(rules) != 1:
            raise AssertionError(f"{f.name}: {len(rules)} rules unblocked on a head normal argument")
        r = rules[0]
        eq = ax.trigger_for(r)
        sigma: dict[str, Term] = {}
        for i in range(1, f.arity + 1):
            arg = sum_of(args[i - 1])
            acts, preds = r.pos_actions(i), r.pos_preds(i)
            if acts:
                sigma[acts[0][1]] = args[i - 1][0].args[0]
            elif not preds:
                sigma[r.sources[i - 1]] = arg
                wrapped = restrict(r.neg_actions(i), r.neg_preds(i), arg)
                new = App(f, [wrapped if k == i - 1 else a for k, a in enumerate(cur.args)])
                cur = self._step("no-restr", path, cur, new)
        after = apply_subst(eq.rhs, sigma)
        self._step(eq.label, path, cur, after, sigma, eq)
        return self._finish([after], after, path)

    # ------------------------------------------------------------ full normal forms

    def normalize(self, t: Term, path: Path = (), _stack: tuple[Term, ...] = ()) -> Term:
        """Finite tree equal to ``t``; raises NonTermination when none is reached."""
        if self.trace is None:
            hit = self._nf_memo.get(t)
            if hit is not None:
                return hit
        if t in _stack:
            raise NonTermination(f"cycle through {format_term(t)}", t)
        if len(_stack) >= self.nesting_cap:
            raise NonTermination(f"nesting deeper than {self.nesting_cap}", t)
        h = self.hnf(t, path)
        parts = summands(h)
        out = []
        for k, u in enumerate(parts):
            if is_prefix(u):
                sp = path + summand_path(len(parts), k) + (0,)
                out.append(prefix(u.op.param, self.normalize(u.args[0], sp, _stack + (t,))))
            else:
                out.append(u)
        res = sum_of(out)
        if self.trace is None:
            self._nf_memo[t] = res
        return res

    def normalize_bounded(self, t: Term, depth: int) -> Term:
        """Normal form of the depth-n projection of ``t``."""
        return self.normalize(proj(t, hourglass(depth)))


def _prepare(s: PregSystem, axioms: GeneratedAxioms | None) -> tuple[PregSystem, GeneratedAxioms]:
    if axioms is not None:
        return axioms.system, axioms
    return axiomatize(s)


def normalize(t: Term, s: PregSystem, depth: int | None = None, axioms: GeneratedAxioms | None = None,
              trace: bool = False, max_steps: int = 100_000) -> tuple[Term, ProofTrace | None]:
    """Normalize a closed term; ``depth`` selects the projection-bounded variant."""
    g, ax = _prepare(s, axioms)
    rw = Rewriter(g, ax, max_steps=max_steps)
    start = t if depth is None else proj(t, hourglass(depth))
    tr = rw.start_trace(start) if trace else None
    return rw.normalize(start), tr


def prove_equal(t: Term, u: Term, s: PregSystem, max_depth: int = 8, axioms: GeneratedAxioms | None = None,
                trace: bool = False, rewriter: Rewriter | None = None) -> Verdict:
    """Decide t = u by normalization; projections settle non-terminating cases up to ``max_depth``."""
    if rewriter is None:
        g, ax = _prepare(s, axioms)
        rewriter = Rewriter(g, ax)
    g = rewriter.system
    notes = []
    proofs: list[ProofTrace] = []
    try:
        n1 = _nf(rewriter, t, None, trace, proofs)
        n2 = _nf(rewriter, u, None, trace, proofs)
    except NonTermination as exc:
        notes.append(f"unbounded normalization stopped: {exc}")
    else:
        c1, c2 = canonical_tree(n1, g), canonical_tree(n2, g)
        notes.append(f"normal forms {format_term(n1)} and {format_term(n2)}")
        proof = _Proof(proofs) if trace else None
        if c1 == c2:
            return Verdict(Outcome.EQUAL, trace=notes, proof=proof)
        return Verdict(Outcome.NOT_EQUAL, witness=tree_difference(c1, c2), trace=notes, proof=proof)
    for n in range(1, max_depth + 1):
        proofs = []
        p1 = _nf(rewriter, t, n, trace, proofs)
        p2 = _nf(rewriter, u, n, trace, proofs)
        c1, c2 = canonical_tree(p1, g), canonical_tree(p2, g)
        if c1 != c2:
            notes.append(f"projections differ at depth {n}")
            return Verdict(Outcome.NOT_EQUAL, witness=tree_difference(c1, c2), depth=n, trace=notes,
                           proof=_Proof(proofs) if trace else None)
    notes.append(f"projections agree up to depth {max_depth}")
    return Verdict(Outcome.UNKNOWN, witness=f"bound {max_depth}", depth=max_depth, trace=notes)


def _nf(rw: Rewriter, t: Term, depth: int | None, trace: bool, sink: list) -> Term:
    start = t if depth is None else proj(t, hourglass(depth))
    rw.steps = 0
    if trace:
        sink.append(rw.start_trace(start))
    try:
        return rw.normalize(start)
    finally:
        rw.trace = None


@dataclass
class _Proof:
    """Two normalization traces meeting in equal (or visibly different) trees."""

    sides: list[ProofTrace]

    def to_dict(self) -> dict:
        return {"sides": [p.to_dict() for p in self.sides]}

    def to_text(self) -> str:
        return "\n".join(f"[side {k}]\n" + p.to_text() for k, p in enumerate(self.sides, 1))
