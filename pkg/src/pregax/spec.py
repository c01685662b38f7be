"""Preg rules and systems: parsing, printing, validation, format classification."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .core import (
    BUILTIN_NAMES, CLOCK, KAPPA_NAME, PREFIX_NAME, RESTRICT_NAME, App, OperationSym,
    PredicateSym, Term, Var, format_term, subterms, variables,
)
from .syntax import ParseError, TermContext, TokenStream, Token, parse_term_tokens, tokenize

LAYERS = ("ftp", "restrict", "proj")


class SpecError(Exception):
    """A specification that cannot be used (validation errors, clashes, bad transformations)."""

    def __init__(self, message: str, issues: Sequence["Issue"] = ()):
        super().__init__(message)
        self.issues = list(issues)


class ExtensionClash(SpecError):
    pass


# ---------------------------------------------------------------- rules

def _merge_sets(pairs) -> tuple[tuple[int, tuple[str, ...]], ...]:
    acc: dict[int, set[str]] = {}
    for i, names in pairs:
        acc.setdefault(i, set()).update(names)
    return tuple((i, tuple(sorted(v))) for i, v in sorted(acc.items()) if v)


@dataclass(frozen=True)
class PregRule:
    """A transition rule (``action``/``target`` set) or predicate rule (``predicate`` set).

    Positions are 1-based.  Premise collections are kept sorted so that
    structural equality is set equality.  ``neg_trans``/``neg_pred`` map a
    position to its forbidden actions / predicates; unlisted positions are
    negative with empty constraints.
    """

    principal: OperationSym
    sources: tuple[str, ...]
    pos_trans: tuple[tuple[int, str, str], ...] = ()
    neg_trans: tuple[tuple[int, tuple[str, ...]], ...] = ()
    pos_pred: tuple[tuple[int, str], ...] = ()
    neg_pred: tuple[tuple[int, tuple[str, ...]], ...] = ()
    action: str | None = None
    target: Term | None = None
    predicate: str | None = None
    line: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "pos_trans", tuple(sorted(set(self.pos_trans))))
        object.__setattr__(self, "pos_pred", tuple(sorted(set(self.pos_pred))))
        object.__setattr__(self, "neg_trans", _merge_sets(self.neg_trans))
        object.__setattr__(self, "neg_pred", _merge_sets(self.neg_pred))
        if (self.predicate is None) == (self.action is None):
            raise ValueError("a rule concludes either a transition or a predicate")
        if self.action is not None and self.target is None:
            raise ValueError("transition rule without target")

    @property
    def arity(self) -> int:
        return len(self.sources)

    @property
    def is_transition(self) -> bool:
        return self.action is not None

    def neg_actions(self, i: int) -> frozenset[str]:
        for j, names in self.neg_trans:
            if j == i:
                return frozenset(names)
        return frozenset()

    def neg_preds(self, i: int) -> frozenset[str]:
        for j, names in self.neg_pred:
            if j == i:
                return frozenset(names)
        return frozenset()

    def pos_actions(self, i: int) -> list[tuple[str, str]]:
        return [(a, y) for j, a, y in self.pos_trans if j == i]

    def pos_preds(self, i: int) -> list[str]:
        return [p for j, p in self.pos_pred if j == i]

    def positive_positions(self) -> frozenset[int]:
        return frozenset(i for i, _, _ in self.pos_trans) | frozenset(i for i, _ in self.pos_pred)

    def targets(self) -> list[str]:
        return [y for _, _, y in self.pos_trans]

    def target_vars(self) -> set[str]:
        return variables(self.target) if self.target is not None else set()

    def actions_used(self) -> set[str]:
        acts = {a for _, a, _ in self.pos_trans} | {a for _, names in self.neg_trans for a in names}
        if self.action is not None:
            acts.add(self.action)
        return acts

    def predicates_used(self) -> set[str]:
        preds = {p for _, p in self.pos_pred} | {p for _, names in self.neg_pred for p in names}
        if self.predicate is not None:
            preds.add(self.predicate)
        return preds

    def with_principal(self, op: OperationSym) -> "PregRule":
        return replace(self, principal=op)

    def source_term(self) -> Term:
        return App(self.principal, [Var(x) for x in self.sources])

    def premise_texts(self) -> list[str]:
        var = self._var
        out = []
        for i, a, y in self.pos_trans:
            out.append((i, 0, f"{var(i)} -{a}-> {y}"))
        for i, names in self.neg_trans:
            for a in names:
                out.append((i, 1, f"{var(i)} -/{a}->"))
        for i, p in self.pos_pred:
            out.append((i, 2, f"{p}({var(i)})"))
        for i, names in self.neg_pred:
            for p in names:
                out.append((i, 3, f"not {p}({var(i)})"))
        return [text for _, _, text in sorted(out)]

    def _var(self, i: int) -> str:
        return self.sources[i - 1] if 1 <= i <= len(self.sources) else f"?{i}"

    def conclusion_text(self) -> str:
        src = self.principal.name
        if self.sources:
            src += "(" + ", ".join(self.sources) + ")"
        if self.is_transition:
            return f"{src} -{self.action}-> {format_term(self.target)}"
        return f"{self.predicate}({src})"

    def text(self) -> str:
        prem = ", ".join(self.premise_texts())
        return f"rule {self.principal.name} : {prem}{' ' if prem else ''}==> {self.conclusion_text()} ;"

    def __str__(self):
        return self.text()

    @property
    def sort_key(self) -> tuple:
        return (self.principal.name, self.text())


# ---------------------------------------------------------------- systems

class Signature:
    """Operation symbols of a system, including the parametric built-in families."""

    def __init__(self, system: "PregSystem"):
        self.system = system
        self.user = {op.name: op for op in system.ops}

    def __contains__(self, op: OperationSym) -> bool:
        s = self.system
        if op.origin != "ftp":
            return self.user.get(op.name) == op
        if op.name == "delta" or op.name == "choice":
            return "ftp" in s.layers
        if op.name == KAPPA_NAME:
            return "ftp" in s.layers and op.param in s.predicate_names
        if op.name == PREFIX_NAME:
            return "ftp" in s.layers and op.param in s.actions
        if op.name == RESTRICT_NAME:
            acts, preds = op.param
            return "restrict" in s.layers and acts <= set(s.actions) and preds <= s.predicate_names
        if op.name == "proj":
            return "proj" in s.layers
        return False

    def __iter__(self):
        return iter(self.system.ops)


@dataclass(frozen=True)
class PregSystem:
    """Finite signature plus finite rule set.

    Built-in constructors are switched on per layer (``ftp``: deadlock,
    witnesses, prefix, choice; ``restrict``; ``proj``); their rules are
    generated on demand by :mod:`pregax.builtins`, so ``rules`` holds only
    rules for non-built-in operations.
    """

    name: str = "system"
    actions: tuple[str, ...] = ()
    predicates: tuple[PredicateSym, ...] = ()
    ops: tuple[OperationSym, ...] = ()
    rules: tuple[PregRule, ...] = ()
    layers: frozenset[str] = frozenset({"ftp"})
    translation_equations: tuple = ()
    claims: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(sorted(set(self.actions))))
        preds = {}
        for p in self.predicates:
            preds.setdefault(p.name, p)
        object.__setattr__(self, "predicates", tuple(preds[n] for n in sorted(preds)))
        object.__setattr__(self, "ops", tuple(sorted(set(self.ops), key=lambda o: (o.name, o.arity, o.origin))))
        object.__setattr__(self, "rules", tuple(sorted(set(self.rules), key=lambda r: r.sort_key)))
        object.__setattr__(self, "layers", frozenset(self.layers))
        object.__setattr__(self, "claims", tuple(sorted(set(self.claims))))

    @cached_property
    def predicate_names(self) -> frozenset[str]:
        return frozenset(p.name for p in self.predicates)

    @cached_property
    def implicit_predicates(self) -> tuple[PredicateSym, ...]:
        return tuple(p for p in self.predicates if p.implicit)

    @cached_property
    def signature(self) -> Signature:
        return Signature(self)

    @cached_property
    def _op_index(self) -> dict[str, OperationSym]:
        return {op.name: op for op in self.ops}

    @cached_property
    def _rule_index(self) -> dict[str, tuple[PregRule, ...]]:
        idx: dict[str, list[PregRule]] = {}
        for r in self.rules:
            idx.setdefault(r.principal.name, []).append(r)
        return {k: tuple(v) for k, v in idx.items()}

    def op(self, name: str) -> OperationSym:
        return self._op_index[name]

    def has_op(self, name: str) -> bool:
        return name in self._op_index

    def predicate(self, name: str) -> PredicateSym:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)

    def rules_of(self, op: OperationSym | str) -> tuple[PregRule, ...]:
        name = op if isinstance(op, str) else op.name
        return self._rule_index.get(name, ())

    def translated_ops(self) -> set[str]:
        return {eq.provenance[0] for eq in self.translation_equations}

    def with_layers(self, layers: Iterable[str]) -> "PregSystem":
        layers = frozenset(layers) | self.layers
        actions = self.actions + ((CLOCK,) if "proj" in layers else ())
        return replace(self, layers=layers, actions=actions)

    def extended(self, ops: Iterable[OperationSym] = (), rules: Iterable[PregRule] = (),
                 equations: Iterable = (), predicates: Iterable[PredicateSym] = ()) -> "PregSystem":
        return replace(self, ops=self.ops + tuple(ops), rules=self.rules + tuple(rules),
                       translation_equations=self.translation_equations + tuple(equations),
                       predicates=self.predicates + tuple(predicates))

    def term_context(self, allow_vars: bool = False, strict: bool = True) -> TermContext:
        return TermContext(frozenset(self.actions) | {CLOCK}, self.predicate_names,
                           dict(self._op_index), allow_vars, strict)

    def parse_term(self, text: str, allow_vars: bool = False) -> Term:
        from .syntax import parse_term
        return parse_term(text, self.actions, self.predicate_names, self.ops, allow_vars)


# ---------------------------------------------------------------- validation report

@dataclass(frozen=True)
class Issue:
    severity: str
    code: str
    location: str
    message: str

    def line(self) -> str:
        return f"{self.severity}:{self.location}:{self.code} {self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {i.code for i in self.errors}

    def to_lines(self) -> str:
        return "".join(i.line() + "\n" for i in self.issues)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "issues": [i.__dict__ for i in self.issues]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- parsing

_CLAIMS = ("smooth", "distinctive")


class _Builder:
    def __init__(self):
        self.name = "system"
        self.actions: list[str] = []
        self.predicates: dict[str, PredicateSym] = {}
        self.ops: dict[str, OperationSym] = {}
        self.rules: list[PregRule] = []
        self.claims: list[tuple[str, str]] = []
        self.problems: list[Issue] = []
        self.base: PregSystem | None = None

    def load_base(self, base: PregSystem):
        self.base = base
        self.actions.extend(base.actions)
        for p in base.predicates:
            self.predicates[p.name] = p
        for op in base.ops:
            self.ops[op.name] = op
        self.rules.extend(base.rules)
        self.claims.extend(base.claims)

    def system(self) -> PregSystem:
        s = PregSystem(self.name, tuple(self.actions), tuple(self.predicates.values()),
                       tuple(self.ops.values()), tuple(self.rules), claims=tuple(self.claims))
        if self.base is not None:
            s = disjoint_extend(self.base, s)
        return s


def parse_spec(text: str, strict: bool = True,
               resolve: Callable[[str], PregSystem] | None = None) -> PregSystem:
    """Parse a ``.preg`` specification.

    In strict mode undeclared symbols and arity mismatches raise
    :class:`ParseError`; otherwise they are kept so ``validate_preg`` can
    report them.  ``resolve`` loads the system named by an ``extends``
    directive.
    """
    ts = TokenStream(tokenize(text))
    b = _Builder()
    while ts.peek().kind != "eof":
        kw = ts.ident("declaration keyword")
        if kw.text == "system":
            b.name = ts.ident("system name").text
        elif kw.text == "extends":
            tok = ts.next()
            if tok.kind != "string":
                raise ParseError("extends expects a quoted file name", tok.line, tok.col)
            if resolve is None:
                raise ParseError("extends needs a file context", tok.line, tok.col)
            if b.base is not None or b.rules or b.ops:
                raise ParseError("extends must precede other declarations", tok.line, tok.col)
            b.load_base(resolve(tok.text[1:-1]))
        elif kw.text == "actions":
            for tok in ts.ident_list((";",)):
                if tok.text in BUILTIN_NAMES:
                    raise ParseError(f"reserved name {tok.text!r}", tok.line, tok.col, "E-RESERVED")
                if tok.text in b.actions:
                    b.problems.append(Issue("error", "E-DUPLICATE", f"line {tok.line}",
                                            f"action {tok.text!r} declared twice"))
                    continue
                b.actions.append(tok.text)
        elif kw.text == "predicates":
            for tok in ts.ident_list((";",)):
                if tok.text in b.predicates:
                    b.problems.append(Issue("error", "E-DUPLICATE", f"line {tok.line}",
                                            f"predicate {tok.text!r} declared twice"))
                b.predicates[tok.text] = PredicateSym(tok.text)
        elif kw.text == "predicate":
            name = ts.ident("predicate name")
            if ts.at("implicit"):
                ts.next()
                ts.expect("over")
                acts = [t.text for t in ts.ident_list((";",))]
                b.predicates[name.text] = PredicateSym(name.text, "implicit", frozenset(acts))
            else:
                if ts.at("explicit"):
                    ts.next()
                b.predicates[name.text] = PredicateSym(name.text)
        elif kw.text == "op":
            name = ts.ident("operation name")
            ts.expect("/")
            n = ts.next()
            if n.kind != "int":
                raise ParseError("expected an arity", n.line, n.col)
            while ts.peek().text in _CLAIMS:
                b.claims.append((name.text, ts.next().text))
            if name.text in BUILTIN_NAMES and strict:
                raise ParseError(f"reserved operation name {name.text!r}", name.line, name.col, "E-RESERVED")
            if name.text in b.ops:
                b.problems.append(Issue("error", "E-DUPLICATE", f"line {name.line}",
                                        f"operation {name.text!r} declared twice"))
            b.ops[name.text] = OperationSym(name.text, int(n.text))
        elif kw.text == "rule":
            b.rules.append(_parse_rule(ts, b, strict, kw))
        else:
            raise ParseError(f"unknown declaration {kw.text!r}", kw.line, kw.col)
        ts.expect(";")
    if strict:
        for p in b.predicates.values():
            missing = sorted(set(p.allowed_actions) - set(b.actions)) if p.implicit else []
            if missing:
                b.problems.append(Issue("error", "E-UNDECLARED-ACTION", f"predicate {p.name}",
                                        f"implicit predicate {p.name!r} ranges over undeclared {missing}"))
    if b.problems and strict:
        p = b.problems[0]
        raise ParseError(p.message, code=p.code)
    system = b.system()
    if b.problems:
        object.__setattr__(system, "_parse_problems", tuple(b.problems))
    return system


def _parse_rule(ts: TokenStream, b: _Builder, strict: bool, kw: Token) -> PregRule:
    op_tok = ts.ident("operation name")
    ts.expect(":")
    premises: list[tuple] = []
    if not ts.at("==>"):
        premises.append(_parse_premise(ts))
        while ts.at(","):
            ts.next()
            premises.append(_parse_premise(ts))
    ts.expect("==>")
    # conclusion: either <source> -c-> <target> or P(<source>)
    head = ts.ident("conclusion")
    predicate = None
    if head.text != op_tok.text and ts.at("("):
        predicate = head.text
        ts.next()
        src_tok = ts.ident("operation name")
        sources = _parse_sources(ts)
        ts.expect(")")
    else:
        src_tok = head
        sources = _parse_sources(ts)
    op = b.ops.get(src_tok.text)
    if src_tok.text != op_tok.text:
        raise ParseError(f"rule for {op_tok.text!r} concludes about {src_tok.text!r}",
                         src_tok.line, src_tok.col, "E-SOURCE")
    if op_tok.text in BUILTIN_NAMES:
        if strict:
            raise ParseError(f"rule for built-in operation {op_tok.text!r}", op_tok.line, op_tok.col,
                             "E-BUILTIN-RULE")
        op = OperationSym(op_tok.text, len(sources))
    elif op is None:
        if strict:
            raise ParseError(f"undeclared operation {op_tok.text!r}", op_tok.line, op_tok.col, "E-UNDECLARED-OP")
        op = OperationSym(op_tok.text, len(sources))
    elif op.arity != len(sources) and strict:
        raise ParseError(f"operation {op.name!r} expects {op.arity} arguments, got {len(sources)}",
                         src_tok.line, src_tok.col, "E-ARITY")
    action = target = None
    if predicate is None:
        arrow = ts.next()
        if arrow.kind != "arrow":
            raise ParseError("expected a transition arrow in the conclusion", arrow.line, arrow.col)
        action = arrow.text
        ctx = TermContext(frozenset(b.actions) | {CLOCK}, frozenset(b.predicates), dict(b.ops),
                          True, strict)
        target = parse_term_tokens(ts, ctx)
    position = {x: i for i, x in reversed(list(enumerate(sources, 1)))}
    pos_trans, neg_trans, pos_pred, neg_pred = [], [], [], []
    for kind, subject, what, extra, tok in premises:
        i = position.get(subject, 0)
        if kind == "trans":
            pos_trans.append((i, what, extra))
        elif kind == "ntrans":
            neg_trans.append((i, (what,)))
        elif kind == "pred":
            pos_pred.append((i, what))
        else:
            neg_pred.append((i, (what,)))
    rule = PregRule(op, tuple(sources), tuple(pos_trans), tuple(neg_trans), tuple(pos_pred),
                    tuple(neg_pred), action, target, predicate, line=kw.line)
    if strict:
        report = ValidationReport()
        _check_rule_symbols(rule, b.actions, set(b.predicates), b.ops, f"line {kw.line}", report)
        _check_rule_scoping(rule, f"line {kw.line}", report, b.ops)
        if report.errors:
            e = report.errors[0]
            raise ParseError(e.message, kw.line, kw.col, e.code)
    return rule


def _parse_sources(ts: TokenStream) -> list[str]:
    if not ts.at("("):
        return []
    ts.next()
    names = [t.text for t in ts.ident_list((")",))]
    ts.expect(")")
    return names


def _parse_premise(ts: TokenStream) -> tuple:
    tok = ts.ident("premise")
    if tok.text == "not" and ts.peek().kind == "ident":
        pred = ts.ident("predicate")
        ts.expect("(")
        x = ts.ident("variable")
        ts.expect(")")
        return ("npred", x.text, pred.text, None, tok)
    nxt = ts.peek()
    if nxt.kind == "arrow":
        ts.next()
        y = ts.ident("target variable")
        return ("trans", tok.text, nxt.text, y.text, tok)
    if nxt.kind == "negarrow":
        ts.next()
        return ("ntrans", tok.text, nxt.text, None, tok)
    if ts.at("("):
        ts.next()
        x = ts.ident("variable")
        ts.expect(")")
        return ("pred", x.text, tok.text, None, tok)
    raise ParseError(f"malformed premise starting at {tok.text!r}", tok.line, tok.col)


def load_spec(path: str | Path, strict: bool = True) -> PregSystem:
    """Read a spec file, resolving ``extends`` relative to its directory."""
    path = Path(path)
    seen: set[Path] = set()

    def resolve_from(base_dir: Path):
        def resolve(name: str) -> PregSystem:
            p = (base_dir / name).resolve()
            if p in seen:
                raise ParseError(f"cyclic extends through {name!r}")
            seen.add(p)
            return parse_spec(p.read_text(), strict, resolve_from(p.parent))
        return resolve

    seen.add(path.resolve())
    return parse_spec(path.read_text(), strict, resolve_from(path.parent))


# ---------------------------------------------------------------- printing

def print_spec(s: PregSystem) -> str:
    lines = [f"system {s.name} ;"]
    if s.actions:
        lines.append(f"actions {', '.join(s.actions)} ;")
    expl = [p.name for p in s.predicates if not p.implicit]
    if expl:
        lines.append(f"predicates {', '.join(expl)} ;")
    for p in s.predicates:
        if p.implicit:
            lines.append(f"predicate {p.name} implicit over {', '.join(sorted(p.allowed_actions))} ;")
    claims: dict[str, list[str]] = {}
    for name, what in s.claims:
        claims.setdefault(name, []).append(what)
    for op in s.ops:
        extra = "".join(" " + c for c in sorted(claims.get(op.name, ())))
        lines.append(f"op {op.name} / {op.arity}{extra} ;")
    for r in sorted(s.rules, key=lambda r: r.text()):
        lines.append(r.text())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- validation

def _loc(r: PregRule, k: int) -> str:
    return f"line {r.line}" if r.line else f"rule {k}"


def _check_rule_symbols(r: PregRule, actions, predicates, ops: dict, loc: str, report: ValidationReport):
    actions = set(actions) | {CLOCK}
    for a in sorted(r.actions_used()):
        if a not in actions:
            report.issues.append(Issue("error", "E-UNDECLARED-ACTION", loc, f"undeclared action {a!r}"))
    for p in sorted(r.predicates_used()):
        if p not in predicates:
            report.issues.append(Issue("error", "E-UNDECLARED-PREDICATE", loc, f"undeclared predicate {p!r}"))
    if r.principal.origin == "ftp" or r.principal.name in BUILTIN_NAMES:
        report.issues.append(Issue("error", "E-BUILTIN-RULE", loc,
                                   f"rule for built-in operation {r.principal}"))
    else:
        op = ops.get(r.principal.name)
        if op is None:
            report.issues.append(Issue("error", "E-UNDECLARED-OP", loc,
                                       f"undeclared operation {r.principal.name!r}"))
        elif op.arity != r.arity:
            report.issues.append(Issue("error", "E-ARITY", loc,
                                       f"operation {op.name!r} expects {op.arity} arguments, got {r.arity}"))
    if r.target is not None:
        for u in subterms(r.target):
            if not isinstance(u, App):
                continue
            o = u.op
            if o.origin == "ftp":
                if o.name == KAPPA_NAME and o.param not in predicates:
                    report.issues.append(Issue("error", "E-UNDECLARED-PREDICATE", loc,
                                               f"undeclared predicate {o.param!r} in target"))
                elif o.name == PREFIX_NAME and o.param not in actions:
                    report.issues.append(Issue("error", "E-UNDECLARED-ACTION", loc,
                                               f"undeclared action {o.param!r} in target"))
                elif o.name == RESTRICT_NAME:
                    bad = [a for a in o.param[0] if a not in actions] + [p for p in o.param[1] if p not in predicates]
                    if bad:
                        report.issues.append(Issue("error", "E-UNDECLARED-ACTION", loc,
                                                   f"undeclared symbols {sorted(bad)} in restriction"))
            else:
                decl = ops.get(o.name)
                if decl is None:
                    report.issues.append(Issue("error", "E-UNDECLARED-OP", loc,
                                               f"undeclared operation {o.name!r} in target"))
                elif decl.arity != o.arity:
                    report.issues.append(Issue("error", "E-ARITY", loc,
                                               f"operation {o.name!r} expects {decl.arity} arguments, got {o.arity}"))


def _check_rule_scoping(r: PregRule, loc: str, report: ValidationReport, ops: dict):
    names = list(r.sources) + r.targets()
    seen: set[str] = set()
    for x in names:
        if x in seen:
            report.issues.append(Issue("error", "E-VAR-CLASH", loc,
                                       f"variable {x!r} occurs twice among sources and premise targets; "
                                       "all x_i and y_ij must be pairwise distinct"))
        seen.add(x)
        if x in ops and ops[x].arity == 0:
            report.issues.append(Issue("error", "E-VAR-CLASH", loc, f"variable {x!r} shadows a constant"))
    l = r.arity
    positions = [i for i, _, _ in r.pos_trans] + [i for i, _ in r.neg_trans] + \
        [i for i, _ in r.pos_pred] + [i for i, _ in r.neg_pred]
    for i in sorted(set(positions)):
        if not 1 <= i <= l:
            what = f"position {i}" if i else "a variable that is not an argument of the source"
            report.issues.append(Issue("error", "E-POSITION", loc, f"premise tests {what} (arity {l})"))
    if r.target is not None:
        unbound = r.target_vars() - set(names)
        for z in sorted(unbound):
            report.issues.append(Issue("error", "E-UNBOUND-VAR", loc,
                                       f"target mentions unbound variable {z!r}"))


def validate_preg(s: PregSystem) -> ValidationReport:
    """Check a system against the rule-format constraints.

    Errors cover variable clashes, out-of-range positions, undeclared or
    reserved symbols and violated smooth/distinctive claims.  Warnings come
    from :func:`check_implicit_consistency`.
    """
    report = ValidationReport(list(getattr(s, "_parse_problems", ())))
    ops = {op.name: op for op in s.ops}
    names = [op.name for op in s.ops]
    for n in sorted(set(names)):
        if names.count(n) > 1:
            report.issues.append(Issue("error", "E-DUPLICATE", "signature", f"operation {n!r} declared twice"))
    for op in s.ops:
        if op.name in BUILTIN_NAMES:
            report.issues.append(Issue("error", "E-RESERVED", "signature", f"reserved operation name {op.name!r}"))
    for p in s.predicates:
        if p.implicit:
            extra = sorted(p.allowed_actions - set(s.actions))
            if extra:
                report.issues.append(Issue("error", "E-UNDECLARED-ACTION", "signature",
                                           f"implicit predicate {p.name!r} ranges over undeclared {extra}"))
            if not p.allowed_actions:
                report.issues.append(Issue("warning", "W-EMPTY-IMPLICIT", "signature",
                                           f"implicit predicate {p.name!r} has an empty action set; "
                                           "it never propagates through prefixes"))
    clean: set[int] = set()
    for k, r in enumerate(s.rules, 1):
        before = len(report.errors)
        loc = _loc(r, k)
        _check_rule_symbols(r, s.actions, s.predicate_names, ops, loc, report)
        _check_rule_scoping(r, loc, report, ops)
        if len(report.errors) == before:
            clean.add(k)
    for name, claim in s.claims:
        rules = s.rules_of(name)
        if not all(k in clean for k, r in enumerate(s.rules, 1) if r.principal.name == name):
            continue
        if claim == "smooth":
            for r in rules:
                ok, reasons = classify_smooth(r)
                if not ok:
                    report.issues.append(Issue("error", "E-NOT-SMOOTH", _loc(r, 0),
                                               f"{name} declared smooth but: " + "; ".join(reasons)))
        elif claim == "distinctive":
            ok, reasons = classify_distinctive(ops.get(name, OperationSym(name, 0)), rules)
            if not ok:
                report.issues.append(Issue("error", "E-NOT-DISTINCTIVE", f"op {name}",
                                           f"{name} declared distinctive but: " + "; ".join(reasons)))
    if not report.errors:
        report.issues.extend(check_implicit_consistency(s))
    return report


# ---------------------------------------------------------------- smooth / distinctive

def classify_smooth(r: PregRule) -> tuple[bool, list[str]]:
    reasons: list[str] = []
    pos_act = {i for i, _, _ in r.pos_trans}
    pos_pred = {i for i, _ in r.pos_pred}
    neg_act = {i for i, _ in r.neg_trans}
    neg_pred = {i for i, _ in r.neg_pred}
    for i in range(1, r.arity + 1):
        if (i in pos_act or i in pos_pred) and (i in neg_act or i in neg_pred):
            reasons.append(f"position {i} tested positively and negatively")
        if i in pos_act and i in pos_pred:
            reasons.append(f"position {i} has both action and predicate premises")
        if i in neg_act and i in neg_pred:
            reasons.append(f"position {i} has both negative action and negative predicate premises")
        count = len(r.pos_actions(i)) + len(r.pos_preds(i))
        if count > 1:
            reasons.append(f"multiple positive premises at position {i}")
    if r.is_transition:
        tv = r.target_vars()
        for i in sorted(pos_act | pos_pred):
            if 1 <= i <= r.arity and r.sources[i - 1] in tv:
                reasons.append(f"positive variable {r.sources[i - 1]} (position {i}) in target")
    return not reasons, reasons


def _premise_at(r: PregRule, i: int):
    acts = r.pos_actions(i)
    if acts:
        return ("act", acts[0][0])
    preds = r.pos_preds(i)
    if preds:
        return ("pred", preds[0])
    return None


def separated(r1: PregRule, r2: PregRule) -> bool:
    """Some position positive in both rules tells them apart."""
    for i in sorted(r1.positive_positions() & r2.positive_positions()):
        p1, p2 = _premise_at(r1, i), _premise_at(r2, i)
        if p1 != p2:
            return True
    return False


def classify_distinctive(f: OperationSym, rules: Iterable[PregRule], relaxed: bool = False) -> tuple[bool, list[str]]:
    """Distinctiveness of an operation given its rules.

    ``relaxed`` accepts a position that only some rules test positively as
    long as every other rule leaves it unconstrained and out of its target;
    this is the shape of the projection operator's predicate rules.
    """
    rules = list(rules)
    reasons: list[str] = []
    for r in rules:
        ok, why = classify_smooth(r)
        if not ok:
            reasons.append(f"rule '{r.text()}' is not smooth: " + "; ".join(why))
    if reasons:
        return False, reasons
    if not rules:
        return True, []
    positive = frozenset().union(*(r.positive_positions() for r in rules))
    for i in sorted(positive):
        missing = [r for r in rules if i not in r.positive_positions()]
        if not missing:
            continue
        if not relaxed:
            reasons.append(f"position {i} is tested positively by some rules but not all")
            continue
        for r in missing:
            if r.neg_actions(i) or r.neg_preds(i) or (r.is_transition and r.sources[i - 1] in r.target_vars()):
                reasons.append(f"position {i} is constrained by a rule that does not test it positively")
    for r1, r2 in combinations(rules, 2):
        if not separated(r1, r2):
            reasons.append(f"rules '{r1.text()}' and '{r2.text()}' are not separated by a positive position")
    return not reasons, reasons


def positive_positions_of(rules: Iterable[PregRule]) -> list[int]:
    out: set[int] = set()
    for r in rules:
        out |= r.positive_positions()
    return sorted(out)


# ---------------------------------------------------------------- extension

def disjoint_extend(g: PregSystem, g2: PregSystem) -> PregSystem:
    """Union of two systems, refusing new rules for operations of ``g``."""
    preds = {p.name: p for p in g.predicates}
    for p in g2.predicates:
        if p.name in preds and preds[p.name] != p:
            raise ExtensionClash(f"predicate {p.name!r} declared differently")
        preds[p.name] = p
    ops = {op.name: op for op in g.ops}
    for op in g2.ops:
        if op.name in ops and ops[op.name].arity != op.arity:
            raise ExtensionClash(f"operation {op.name!r} declared with different arities")
        ops.setdefault(op.name, op)
    old_rules = set(g.rules)
    for r in g2.rules:
        if r.principal.origin == "ftp" and "ftp" in g.layers:
            raise ExtensionClash(f"new rule for built-in operation {r.principal}: {r.text()}")
        if r.principal.name in {op.name for op in g.ops} and r not in old_rules:
            raise ExtensionClash(f"new rule for existing operation {r.principal.name!r}: {r.text()}")
    return PregSystem(g.name, g.actions + g2.actions, tuple(preds.values()), tuple(ops.values()),
                      g.rules + g2.rules, g.layers | g2.layers,
                      tuple(dict.fromkeys(g.translation_equations + g2.translation_equations)),
                      g.claims + g2.claims)


# ---------------------------------------------------------------- implicit predicates

def _premise_set(r: PregRule, rename: dict[str, str]) -> frozenset:
    """Premises as variable-level formulas; transition targets are existential."""
    out = set()
    for i, a, _ in r.pos_trans:
        out.add(("trans", rename.get(r.sources[i - 1]), a))
    for i, names in r.neg_trans:
        for a in names:
            out.add(("ntrans", rename.get(r.sources[i - 1]), a))
    for i, p in r.pos_pred:
        out.add(("pred", rename.get(r.sources[i - 1]), p))
    for i, names in r.neg_pred:
        for p in names:
            out.add(("npred", rename.get(r.sources[i - 1]), p))
    return frozenset(out)


def check_implicit_consistency(s: PregSystem) -> list[Issue]:
    """Warn where an action law could give a prefix a predicate its source lacks."""
    from .builtins import builtin_rules

    issues: list[Issue] = []
    implicit_preds = s.implicit_predicates
    if not implicit_preds:
        return issues
    for k, r in enumerate(s.rules, 1):
        if not r.is_transition:
            continue
        loc = _loc(r, k)
        ident = {x: x for x in r.sources}
        for P in implicit_preds:
            if r.action not in P.allowed_actions:
                continue
            covers = [_premise_set(q, ident) for q in s.rules_of(r.principal)
                      if q.predicate == P.name and q.arity == r.arity]
            C = r.target
            if isinstance(C, Var):
                derived = [frozenset({("pred", C.name, P.name)})]
            elif isinstance(C, App) and all(isinstance(a, Var) for a in C.args):
                if C.op.origin == "ftp":
                    g_rules = builtin_rules(C.op, s)
                else:
                    g_rules = s.rules_of(C.op)
                derived = []
                for q in g_rules:
                    if q.predicate != P.name or q.arity != len(C.args):
                        continue
                    derived.append(_premise_set(q, {x: a.name for x, a in zip(q.sources, C.args)}))
            else:
                issues.append(Issue("warning", "W-UNCHECKED-TARGET", loc,
                                    f"target {format_term(C)} is deeper than one operation; "
                                    f"consistency for implicit {P.name!r} not checked"))
                continue
            for h in derived:
                if not any(h2 <= h for h2 in covers):
                    shown = ", ".join(sorted(f"{p}({x})" if kind == "pred" else f"{kind} {x} {p}"
                                             for kind, x, p in h)) or "no premises"
                    issues.append(Issue("warning", "W-IMPLICIT", loc,
                                        f"{r.action}-prefixed target may satisfy implicit {P.name!r} "
                                        f"(via {shown}) with no covering predicate rule for {r.principal.name}"))
    return issues
