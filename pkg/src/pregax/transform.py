"""Rule-level transformations: smoothening, distinctive splitting, positivization."""
from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product
from typing import Iterator, Sequence

from .core import App, Equation, FreshNames, OperationSym, PredicateSym, Term, Var, apply_subst, sum_of
from .spec import PregRule, PregSystem, SpecError, classify_distinctive, classify_smooth


@dataclass(frozen=True)
class TranslationEquation(Equation):
    kind: str = "smoothening"


# ---------------------------------------------------------------- smoothening

def barb(r: PregRule, i: int) -> int:
    """Number of fresh copies position i needs so that every test gets its own argument."""
    neg_a, neg_p = r.neg_actions(i), r.neg_preds(i)
    c1 = (1 if neg_a else 0) + (1 if neg_p else 0)
    c2 = 1 if r.is_transition and r.sources[i - 1] in r.target_vars() else 0
    return len(r.pos_actions(i)) + len(r.pos_preds(i)) + c1 + c2


def _roles(r: PregRule, i: int) -> list[tuple]:
    """Tests on position i in slot order: action premises, blocked actions, predicates, blocked predicates, target."""
    roles: list[tuple] = [("trans", a, y) for a, y in r.pos_actions(i)]
    if r.neg_actions(i):
        roles.append(("ntrans", tuple(sorted(r.neg_actions(i)))))
    roles += [("pred", p) for p in r.pos_preds(i)]
    if r.neg_preds(i):
        roles.append(("npred", tuple(sorted(r.neg_preds(i)))))
    if r.is_transition and r.sources[i - 1] in r.target_vars():
        roles.append(("target",))
    return roles


def _fresh_op_name(s: PregSystem, base: str) -> str:
    taken = {op.name for op in s.ops}
    name = base
    while name in taken:
        name += "_"
    return name


def _arg_vars(n: int, prefix: str = "x") -> list[Var]:
    return [Var(f"{prefix}{k}") for k in range(1, n + 1)]


def smoothen(s: PregSystem, f: OperationSym | str) -> tuple[PregSystem, OperationSym, TranslationEquation]:
    f = s.op(f) if isinstance(f, str) else f
    rules = s.rules_of(f)
    if all(classify_smooth(r)[0] for r in rules):
        raise SpecError(f"operation {f.name} is already smooth")
    widths = [max((barb(r, i) for r in rules), default=0) for i in range(1, f.arity + 1)]
    f2 = OperationSym(_fresh_op_name(s, f.name + "_s"), sum(widths), "derived-smooth")
    new_rules = []
    for r in rules:
        fresh = FreshNames(r.targets(), "w")
        slots = [[fresh() for _ in range(w)] for w in widths]
        pos_trans, neg_trans, pos_pred, neg_pred = [], [], [], []
        target_map: dict[str, Term] = {}
        offset = 0
        for i in range(1, f.arity + 1):
            for k, role in enumerate(_roles(r, i)):
                slot = offset + k + 1
                name = slots[i - 1][k]
                if role[0] == "trans":
                    pos_trans.append((slot, role[1], role[2]))
                elif role[0] == "ntrans":
                    neg_trans.append((slot, role[1]))
                elif role[0] == "pred":
                    pos_pred.append((slot, role[1]))
                elif role[0] == "npred":
                    neg_pred.append((slot, role[1]))
                else:
                    target_map[r.sources[i - 1]] = Var(name)
            offset += widths[i - 1]
        sources = tuple(v for group in slots for v in group)
        target = apply_subst(r.target, target_map) if r.target is not None else None
        r2 = PregRule(f2, sources, tuple(pos_trans), tuple(neg_trans), tuple(pos_pred), tuple(neg_pred),
                      r.action, target, r.predicate)
        ok, why = classify_smooth(r2)
        if not ok:
            raise AssertionError(f"smoothened rule is not smooth: {why}")
        new_rules.append(r2)
    xs = _arg_vars(f.arity)
    rhs_args = [xs[i] for i, w in enumerate(widths) for _ in range(w)]
    eq = TranslationEquation(App(f, xs), App(f2, rhs_args), f"smooth[{f.name}]",
                             provenance=(f.name, (f2.name,)), kind="smoothening")
    return s.extended([f2], new_rules, [eq]), f2, eq


# ---------------------------------------------------------------- distinctive splitting

def distinctify(s: PregSystem, f: OperationSym | str) -> tuple[PregSystem, list[OperationSym], TranslationEquation]:
    f = s.op(f) if isinstance(f, str) else f
    rules = list(s.rules_of(f))
    if not all(classify_smooth(r)[0] for r in rules):
        raise SpecError(f"operation {f.name} is not smooth")
    xs = _arg_vars(f.arity)
    if classify_distinctive(f, rules)[0]:
        eq = TranslationEquation(App(f, xs), App(f, xs), f"distinct[{f.name}] (no-op)",
                                 provenance=(f.name, (f.name,)), kind="distinctify")
        return s, [f], eq
    blocks: list[list[PregRule]] = []
    for r in rules:
        for blk in blocks:
            if classify_distinctive(f, blk + [r])[0]:
                blk.append(r)
                break
        else:
            blocks.append([r])
    ops, new_rules = [], []
    probe = s
    for k, blk in enumerate(blocks, 1):
        op = OperationSym(_fresh_op_name(probe, f"{f.name}_{k}"), f.arity, "derived-distinctive")
        probe = probe.extended([op])
        ops.append(op)
        new_rules += [r.with_principal(op) for r in blk]
    eq = TranslationEquation(App(f, xs), sum_of(App(op, xs) for op in ops), f"distinct[{f.name}]",
                             provenance=(f.name, tuple(op.name for op in ops)), kind="distinctify")
    return s.extended(ops, new_rules, [eq]), ops, eq


def make_smooth_distinctive_all(s: PregSystem) -> tuple[PregSystem, list[TranslationEquation]]:
    """Give every user operation a smooth and distinctive realization."""
    done = s.translated_ops()
    eqs: list[TranslationEquation] = []
    for f in [op for op in s.ops if op.origin == "user" and op.name not in done]:
        g = f
        rules = s.rules_of(g)
        if not all(classify_smooth(r)[0] for r in rules):
            s, g, eq = smoothen(s, g)
            eqs.append(eq)
        if not classify_distinctive(g, s.rules_of(g))[0]:
            s, _, eq = distinctify(s, g)
            eqs.append(eq)
    return s, eqs


def realization_ok(s: PregSystem, op: OperationSym) -> bool:
    rules = s.rules_of(op)
    return all(classify_smooth(r)[0] for r in rules) and classify_distinctive(op, rules)[0]


# ---------------------------------------------------------------- positivization

def cannot(a: str) -> str:
    return f"cannot_{a}"


def premises_of(r: PregRule) -> list[tuple]:
    """Premises one by one: ("trans", i, a, y), ("ntrans", i, a), ("pred", i, P), ("npred", i, P)."""
    out: list[tuple] = [("trans", i, a, y) for i, a, y in r.pos_trans]
    out += [("ntrans", i, a) for i, names in r.neg_trans for a in names]
    out += [("pred", i, p) for i, p in r.pos_pred]
    out += [("npred", i, p) for i, names in r.neg_pred for p in names]
    return out


def choice_functions(rules: Sequence[PregRule]) -> Iterator[dict[PregRule, tuple]]:
    """Every way of picking one premise from each rule; no rules gives one empty choice."""
    rules = list(rules)
    for picks in product(*(premises_of(r) for r in rules)):
        yield dict(zip(rules, picks))


def positivize(s: PregSystem) -> PregSystem:
    """Replace negative transition premises by explicit cannot_a predicates."""
    if s.predicates:
        raise SpecError("positivize expects a system without predicates")
    preds = tuple(PredicateSym(cannot(a)) for a in s.actions)
    rules = []
    for r in s.rules:
        pos_pred = list(r.pos_pred) + [(i, cannot(a)) for i, names in r.neg_trans for a in names]
        rules.append(replace(r, neg_trans=(), pos_pred=tuple(pos_pred)))
    for f in s.ops:
        xs = tuple(f"x{k}" for k in range(1, f.arity + 1))
        for a in s.actions:
            r_fa = [r for r in s.rules_of(f) if r.action == a]
            seen = set()
            for phi in choice_functions(r_fa):
                flipped_trans, flipped_pred = set(), set()
                for prem in phi.values():
                    if prem[0] == "trans":
                        flipped_pred.add((prem[1], cannot(prem[2])))
                    elif prem[0] == "ntrans":
                        flipped_trans.add((prem[1], prem[2]))
                    else:
                        raise SpecError("predicate premises in a predicate-free system")
                key = (frozenset(flipped_trans), frozenset(flipped_pred))
                if key in seen:
                    continue
                seen.add(key)
                fresh = FreshNames(xs, "y")
                pos_trans = tuple((i, b, fresh()) for i, b in sorted(flipped_trans))
                rules.append(PregRule(f, xs, pos_trans, pos_pred=tuple(sorted(flipped_pred)), predicate=cannot(a)))
    return replace(s, predicates=preds, rules=tuple(rules))
