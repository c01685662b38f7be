"""Equational laws for smooth and distinctive operations, and the full axiomatization pipeline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Sequence

from .builtins import proj_rules
from .core import (
    PROJ, App, Equation, OperationSym, Term, Var, apply_subst, choice, delta, is_kappa,
    is_prefix, kappa, prefix, restrict,
)
from .ftp import AxiomSystem, _eq_dict, ftp_partial_axioms
from .spec import (
    Issue, PregRule, PregSystem, SpecError, check_implicit_consistency, classify_distinctive,
    positive_positions_of, validate_preg,
)
from .transform import TranslationEquation, make_smooth_distinctive_all

__all__ = [
    "distributivity_laws", "trigger_law", "DeadlockSchema", "deadlock_schema", "enumerate_deadlock",
    "OpAxioms", "GeneratedAxioms", "axiomatize", "op_axioms",
]


def _check_sd(f: OperationSym, rules: Sequence[PregRule], relaxed: bool):
    ok, why = classify_distinctive(f, rules, relaxed=relaxed)
    if not ok:
        raise SpecError(f"operation {f.name} is not smooth and distinctive: " + "; ".join(why))


def _vars(n: int, prefix: str = "x") -> list[Var]:
    return [Var(f"{prefix}{k}") for k in range(1, n + 1)]


def distributivity_laws(f: OperationSym, rules: Sequence[PregRule], relaxed: bool = False) -> list[Equation]:
    _check_sd(f, rules, relaxed)
    out = []
    for i in positive_positions_of(rules):
        xs: list[Term] = _vars(f.arity)
        left, right = Var(f"x{i}"), Var(f"z{i}")
        args = list(xs)
        args[i - 1] = choice(left, right)
        a1, a2 = list(xs), list(xs)
        a2[i - 1] = right
        out.append(Equation(App(f, args), choice(App(f, a1), App(f, a2)), f"{f.name}.dist{i}",
                            provenance=(f.name, f"position {i}")))
    return out


def trigger_pattern(r: PregRule) -> list[Term]:
    """Argument shapes under which rule r fires."""
    args: list[Term] = []
    for i, x in enumerate(r.sources, 1):
        acts, preds = r.pos_actions(i), r.pos_preds(i)
        if acts:
            args.append(prefix(acts[0][0], Var(acts[0][1])))
        elif preds:
            args.append(kappa(preds[0]))
        else:
            args.append(restrict(r.neg_actions(i), r.neg_preds(i), Var(x)))
    return args


def trigger_law(r: PregRule, label: str | None = None) -> Equation:
    """Action law (transition rule) or predicate law (predicate rule) for a smooth rule."""
    from .spec import classify_smooth
    ok, why = classify_smooth(r)
    if not ok:
        raise SpecError("trigger law needs a smooth rule: " + "; ".join(why))
    args = trigger_pattern(r)
    lhs = App(r.principal, args)
    if r.is_transition:
        sigma = {x: a for x, a in zip(r.sources, args)}
        rhs = prefix(r.action, apply_subst(r.target, sigma))
        kind = "action"
    else:
        rhs = kappa(r.predicate)
        kind = "pred"
    return Equation(lhs, rhs, label or f"{r.principal.name}.{kind}", provenance=(r.principal.name, r.text()))


# ---------------------------------------------------------------- deadlock schema

def _blocks(r: PregRule, j: int, shape: tuple) -> bool:
    """Does an argument of the given shape at position j prevent r from firing?"""
    kind = shape[0]
    acts, preds = r.pos_actions(j), r.pos_preds(j)
    if acts:
        a = acts[0][0]
        return kind == "delta" or kind == "kappa" or (kind == "prefix" and shape[1] != a)
    if preds:
        p = preds[0]
        return kind == "delta" or kind == "prefix" or (kind == "kappa" and shape[1] != p)
    if kind == "prefix_sum":
        return shape[1] in r.neg_actions(j)
    if kind == "kappa_sum":
        return shape[1] in r.neg_preds(j)
    return False


def _summand_blocks(r: PregRule, j: int, summ: Sequence[Term]) -> bool:
    """Blocking test on an argument already in head normal form (summands listed)."""
    acts, preds = r.pos_actions(j), r.pos_preds(j)
    if acts or preds:
        if not summ:
            return True
        if len(summ) > 1:
            return False
        u = summ[0]
        shape = ("prefix", u.op.param) if is_prefix(u) else ("kappa", u.op.param)
        return _blocks(r, j, shape)
    nb, nq = r.neg_actions(j), r.neg_preds(j)
    for u in summ:
        if is_prefix(u) and u.op.param in nb:
            return True
        if is_kappa(u) and u.op.param in nq:
            return True
    return False


@dataclass
class DeadlockSchema:
    op: OperationSym
    rules: tuple[PregRule, ...]
    positive: tuple[int, ...]

    def blocking_positions(self, r: PregRule, args_summands: Sequence[Sequence[Term]]) -> list[int]:
        return [j for j in range(1, self.op.arity + 1) if _summand_blocks(r, j, args_summands[j - 1])]

    def applicable(self, args_summands: Sequence[Sequence[Term]]) -> bool:
        return all(self.blocking_positions(r, args_summands) for r in self.rules)

    def unblocked(self, args_summands: Sequence[Sequence[Term]]) -> list[PregRule]:
        return [r for r in self.rules if not self.blocking_positions(r, args_summands)]

    def shapes(self, s: PregSystem, j: int) -> list[tuple]:
        cands = [("delta",)] + [("kappa", p) for p in sorted(s.predicate_names)] + \
            [("prefix", a) for a in s.actions] + [("prefix_sum", a) for a in s.actions] + \
            [("kappa_sum", p) for p in sorted(s.predicate_names)]
        return [c for c in cands if any(_blocks(r, j, c) for r in self.rules)]

    def condition_text(self) -> str:
        parts = []
        for k, r in enumerate(self.rules, 1):
            alts = []
            for j in range(1, self.op.arity + 1):
                acts, preds = r.pos_actions(j), r.pos_preds(j)
                if acts:
                    alts.append(f"X{j} in {{delta, kappa(_), prefix other than {acts[0][0]}}}")
                elif preds:
                    alts.append(f"X{j} in {{delta, kappa other than {preds[0]}, any prefix}}")
                else:
                    if r.neg_actions(j):
                        alts.append(f"X{j} has a prefix summand in {{{','.join(sorted(r.neg_actions(j)))}}}")
                    if r.neg_preds(j):
                        alts.append(f"X{j} has a kappa summand in {{{','.join(sorted(r.neg_preds(j)))}}}")
            parts.append("(" + (" or ".join(alts) if alts else "false") + ")")
        if not parts:
            return "always"
        return " and ".join(parts)

    def to_text(self) -> str:
        xs = ", ".join(f"X{j}" for j in range(1, self.op.arity + 1))
        head = f"{self.op.name}({xs})" if self.op.arity else self.op.name
        return f"deadlock({self.op.name}): {head} = delta if {self.condition_text()}"


def deadlock_schema(f: OperationSym, rules: Sequence[PregRule], relaxed: bool = False) -> DeadlockSchema:
    _check_sd(f, rules, relaxed)
    return DeadlockSchema(f, tuple(rules), tuple(positive_positions_of(rules)))


def _shape_term(shape: tuple, j: int) -> Term:
    x, z = Var(f"x{j}"), Var(f"z{j}")
    kind = shape[0]
    if kind == "delta":
        return delta()
    if kind == "kappa":
        return kappa(shape[1])
    if kind == "prefix":
        return prefix(shape[1], x)
    if kind == "prefix_sum":
        return choice(prefix(shape[1], x), z)
    return choice(kappa(shape[1]), x)


def enumerate_deadlock(schema: DeadlockSchema, s: PregSystem, bound: int = 1) -> list[Equation]:
    """Minimal deadlock-law instances with at most ``bound`` non-variable arguments."""
    f, n = schema.op, schema.op.arity
    shapes = {j: schema.shapes(s, j) for j in range(1, n + 1)}
    found: list[dict[int, tuple]] = []

    def applicable(choice_map: dict[int, tuple]) -> bool:
        return all(any(_blocks(r, j, sh) for j, sh in choice_map.items()) for r in schema.rules)

    out = []
    for size in range(0, min(bound, n) + 1):
        for positions in combinations(range(1, n + 1), size):
            for combo in product(*(shapes[j] for j in positions)):
                cm = dict(zip(positions, combo))
                if not applicable(cm):
                    continue
                if any(all(cm.get(j) == sh for j, sh in prev.items()) for prev in found):
                    continue
                found.append(cm)
                args = [_shape_term(cm[j], j) if j in cm else Var(f"x{j}") for j in range(1, n + 1)]
                out.append(Equation(App(f, args), delta(), f"{f.name}.deadlock",
                                    provenance=(f.name, "deadlock")))
    return out


# ---------------------------------------------------------------- per-operation laws

@dataclass
class OpAxioms:
    op: OperationSym
    distributivity: list[Equation]
    triggers: list[Equation]
    deadlock: DeadlockSchema
    rule_of: dict[str, PregRule] = field(default_factory=dict)
    relaxed: bool = False

    def trigger_for(self, r: PregRule) -> Equation:
        return self.triggers[self.deadlock.rules.index(r)]

    def equations(self) -> list[Equation]:
        return self.distributivity + self.triggers


def op_axioms(f: OperationSym, rules: Sequence[PregRule], relaxed: bool = False) -> OpAxioms:
    rules = tuple(rules)
    _check_sd(f, rules, relaxed)
    triggers = []
    n_act = n_pred = 0
    for r in rules:
        if r.is_transition:
            n_act += 1
            triggers.append(trigger_law(r, f"{f.name}.action{n_act}"))
        else:
            n_pred += 1
            triggers.append(trigger_law(r, f"{f.name}.pred{n_pred}"))
    # action laws first, then predicate laws
    order = sorted(range(len(rules)), key=lambda k: (not rules[k].is_transition, k))
    rules = tuple(rules[k] for k in order)
    triggers = [triggers[k] for k in order]
    return OpAxioms(f, distributivity_laws(f, rules, relaxed), triggers, DeadlockSchema(
        f, rules, tuple(positive_positions_of(rules))), {t.label: r for t, r in zip(triggers, rules)}, relaxed)


# ---------------------------------------------------------------- full pipeline

@dataclass
class GeneratedAxioms:
    system: PregSystem
    base: AxiomSystem
    ops: dict[str, OpAxioms]
    translation: list[TranslationEquation]
    aip: OpAxioms
    warnings: list[Issue] = field(default_factory=list)
    deadlock_bound: int = 1

    @property
    def soundness_conditional(self) -> bool:
        return bool(self.warnings)

    def for_op(self, op: OperationSym) -> OpAxioms | None:
        if op == PROJ:
            return self.aip
        return self.ops.get(op.name)

    def translation_for(self, name: str) -> TranslationEquation | None:
        for eq in self.translation:
            if eq.provenance[0] == name and eq.lhs != eq.rhs:
                return eq
        return None

    def law_equations(self) -> list[Equation]:
        out = []
        for name in sorted(self.ops):
            out += self.ops[name].equations()
        return out

    def deadlock_instances(self, bound: int | None = None) -> list[Equation]:
        b = self.deadlock_bound if bound is None else bound
        out = []
        for name in sorted(self.ops):
            out += enumerate_deadlock(self.ops[name].deadlock, self.system, b)
        return out

    def equations(self, bound: int | None = None) -> list[Equation]:
        """Every concrete equation: base, per-operation laws, deadlock instances, translation, projection."""
        return (self.base.equations + self.law_equations() + self.deadlock_instances(bound) +
                list(self.translation) + self.aip.equations() +
                enumerate_deadlock(self.aip.deadlock, self.system, 1 if bound is None else bound))

    def to_text(self, bound: int | None = None) -> str:
        b = self.deadlock_bound if bound is None else bound
        lines = [f"# system {self.system.name}"]
        if self.soundness_conditional:
            lines.append("# soundness conditional: see warnings")
            lines += [f"# warning: {w.location}: {w.message}" for w in self.warnings]
        lines.append("[base]")
        lines += [e.to_text() for e in self.base.equations]
        lines += [sc.to_text() for sc in self.base.schemas]
        for name in sorted(self.ops):
            ax = self.ops[name]
            lines.append(f"[op {name}]")
            lines += [e.to_text() for e in ax.equations()]
            lines.append(ax.deadlock.to_text())
            lines += [e.to_text() for e in enumerate_deadlock(ax.deadlock, self.system, b)]
        lines.append("[translation]")
        lines += [e.to_text() for e in self.translation]
        lines.append("[projection]")
        lines += [e.to_text() for e in self.aip.equations()]
        lines.append(self.aip.deadlock.to_text())
        lines += [e.to_text() for e in enumerate_deadlock(self.aip.deadlock, self.system, b)]
        return "\n".join(lines) + "\n"

    def to_dict(self, bound: int | None = None) -> dict:
        b = self.deadlock_bound if bound is None else bound

        def op_dict(ax: OpAxioms) -> dict:
            return {
                "distributivity": [_eq_dict(e) for e in ax.distributivity],
                "triggers": [_eq_dict(e) for e in ax.triggers],
                "deadlock_schema": ax.deadlock.to_text(),
                "deadlock_instances": [_eq_dict(e) for e in enumerate_deadlock(ax.deadlock, self.system, b)],
            }

        return {
            "system": self.system.name,
            "soundness_conditional": self.soundness_conditional,
            "warnings": [w.__dict__ for w in self.warnings],
            "base": self.base.to_dict(),
            "ops": {name: op_dict(self.ops[name]) for name in sorted(self.ops)},
            "translation": [dict(_eq_dict(e), kind=e.kind) for e in self.translation],
            "projection": op_dict(self.aip),
        }

    def to_json(self, bound: int | None = None) -> str:
        return json.dumps(self.to_dict(bound), indent=2, sort_keys=True)


def _implicit_test_warnings(g: PregSystem, ops: Iterable[OpAxioms]) -> list[Issue]:
    imp = {p.name for p in g.implicit_predicates}
    out = []
    for ax in ops:
        for r in ax.deadlock.rules:
            tested = {p for _, p in r.pos_pred} | {p for _, names in r.neg_pred for p in names}
            hit = sorted(tested & imp)
            if hit:
                out.append(Issue("warning", "W-IMPLICIT-TEST", f"op {ax.op.name}",
                                 f"rule '{r.text()}' tests implicit predicate(s) {hit}; deadlock and "
                                 "restriction-removal steps are sound only when they hold of the whole subtree"))
    return out


def axiomatize(s: PregSystem, deadlock_bound: int = 1) -> tuple[PregSystem, GeneratedAxioms]:
    """Extend ``s`` with the built-in layers, make every operation smooth and distinctive, and derive laws."""
    report = validate_preg(s)
    if report.errors:
        raise SpecError("invalid system", report.errors)
    g = s.with_layers({"restrict", "proj"})
    g, _ = make_smooth_distinctive_all(g)
    translated = g.translated_ops()
    ops: dict[str, OpAxioms] = {}
    for op in g.ops:
        if op.name in translated:
            continue
        ops[op.name] = op_axioms(op, g.rules_of(op))
    aip = op_axioms(PROJ, proj_rules(PROJ, g), relaxed=True)
    warnings = [w for w in check_implicit_consistency(s)] + _implicit_test_warnings(g, ops.values())
    gen = GeneratedAxioms(g, ftp_partial_axioms(g), ops, list(g.translation_equations), aip, warnings,
                          deadlock_bound)
    return g, gen
