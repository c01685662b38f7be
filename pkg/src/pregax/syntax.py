"""Tokenizer and term parser shared by the term syntax and the spec format."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import (
    BUILTIN_NAMES, CLOCK, App, OperationSym, PredicateSym, Term, Var, choice, delta,
    hourglass, kappa, prefix, proj, restrict,
)


class ParseError(Exception):
    """Syntax or scoping error with a source location."""

    def __init__(self, message: str, line: int = 0, col: int = 0, code: str = "E-SYNTAX"):
        self.message = message
        self.line = line
        self.col = col
        self.code = code
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<implies>==>)
  | (?P<negarrow>-/(?P<na>[A-Za-z_][A-Za-z0-9_]*)->)
  | (?P<arrow>-(?P<pa>[A-Za-z_][A-Za-z0-9_]*)->)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<punct>[(){},;.+/:])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind in ("negarrow", "arrow"):
            tokens.append(Token(kind, m.group("na") or m.group("pa"), line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass
class TermContext:
    """Symbols visible while parsing a term.

    With ``strict`` off, unknown operations, actions and predicates are
    accepted and recorded in ``unknown`` so a validator can report them.
    """

    actions: frozenset[str] = frozenset()
    predicates: frozenset[str] = frozenset()
    ops: Mapping[str, OperationSym] = field(default_factory=dict)
    allow_vars: bool = True
    strict: bool = True
    clock: str = CLOCK
    unknown: list = field(default_factory=list)

    def note(self, code: str, message: str, tok: Token):
        if self.strict:
            raise ParseError(message, tok.line, tok.col, code)
        self.unknown.append((code, message, tok.line, tok.col))


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.text == text and tok.kind in ("punct", "ident", "implies")

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", tok.line, tok.col)
        return tok

    def ident(self, what: str = "identifier") -> Token:
        tok = self.next()
        if tok.kind != "ident":
            found = tok.text or "end of input"
            raise ParseError(f"expected {what}, found {found!r}", tok.line, tok.col)
        return tok

    def ident_list(self, terminators: Iterable[str]) -> list[Token]:
        out: list[Token] = []
        stops = set(terminators)
        if self.peek().text in stops:
            return out
        out.append(self.ident())
        while self.at(","):
            self.next()
            out.append(self.ident())
        return out


def parse_term_tokens(ts: TokenStream, ctx: TermContext) -> Term:
    left = _parse_prefixed(ts, ctx)
    while ts.at("+"):
        ts.next()
        right = _parse_prefixed(ts, ctx)
        left = choice(left, right)
    return left


def _parse_prefixed(ts: TokenStream, ctx: TermContext) -> Term:
    tok = ts.peek()
    if tok.kind == "ident" and ts.peek(1).text == "." and ts.peek(1).kind == "punct":
        ts.next()
        ts.next()
        if tok.text not in ctx.actions:
            ctx.note("E-UNDECLARED-ACTION", f"undeclared action {tok.text!r}", tok)
        body = _parse_prefixed(ts, ctx)
        return prefix(tok.text, body)
    return _parse_atom(ts, ctx)


def _parse_atom(ts: TokenStream, ctx: TermContext) -> Term:
    tok = ts.next()
    if tok.text == "(" and tok.kind == "punct":
        t = parse_term_tokens(ts, ctx)
        ts.expect(")")
        return t
    if tok.kind != "ident":
        raise ParseError(f"expected a term, found {tok.text or 'end of input'!r}", tok.line, tok.col)
    name = tok.text
    if name == "delta":
        if ts.at("("):
            ts.next()
            ts.expect(")")
        return delta()
    if name == "kappa":
        ts.expect("(")
        p = ts.ident("predicate name")
        ts.expect(")")
        if p.text not in ctx.predicates:
            ctx.note("E-UNDECLARED-PREDICATE", f"undeclared predicate {p.text!r}", p)
        return kappa(p.text)
    if name == "restrict":
        ts.expect("{")
        acts = ts.ident_list((";",))
        ts.expect(";")
        preds = ts.ident_list(("}",))
        ts.expect("}")
        for a in acts:
            if a.text not in ctx.actions:
                ctx.note("E-UNDECLARED-ACTION", f"undeclared action {a.text!r}", a)
        for p in preds:
            if p.text not in ctx.predicates:
                ctx.note("E-UNDECLARED-PREDICATE", f"undeclared predicate {p.text!r}", p)
        ts.expect("(")
        body = parse_term_tokens(ts, ctx)
        ts.expect(")")
        return restrict([a.text for a in acts], [p.text for p in preds], body)
    if name == "proj":
        ts.expect("(")
        body = parse_term_tokens(ts, ctx)
        ts.expect(",")
        if ts.peek().kind == "int":
            second = hourglass(int(ts.next().text), ctx.clock)
        else:
            second = parse_term_tokens(ts, ctx)
        ts.expect(")")
        return proj(body, second)
    if ts.at("("):
        ts.next()
        args: list[Term] = []
        if not ts.at(")"):
            args.append(parse_term_tokens(ts, ctx))
            while ts.at(","):
                ts.next()
                args.append(parse_term_tokens(ts, ctx))
        ts.expect(")")
        op = ctx.ops.get(name)
        if op is None:
            ctx.note("E-UNDECLARED-OP", f"undeclared operation {name!r}", tok)
            op = OperationSym(name, len(args))
        elif op.arity != len(args):
            ctx.note("E-ARITY", f"operation {name!r} expects {op.arity} arguments, got {len(args)}", tok)
            op = OperationSym(name, len(args), op.origin)
        return App(op, args)
    op = ctx.ops.get(name)
    if op is not None and op.arity == 0:
        return App(op)
    if op is not None:
        ctx.note("E-ARITY", f"operation {name!r} expects {op.arity} arguments, got 0", tok)
        return App(OperationSym(name, 0, op.origin))
    if name in BUILTIN_NAMES:
        raise ParseError(f"reserved name {name!r} used as a variable", tok.line, tok.col)
    if not ctx.allow_vars:
        raise ParseError(f"unknown constant {name!r} (closed term expected)", tok.line, tok.col, "E-UNDECLARED-OP")
    return Var(name)


def parse_term(text: str, actions: Iterable[str] = (), predicates: Iterable[str | PredicateSym] = (),
               ops: Iterable[OperationSym] = (), allow_vars: bool = True, clock: str = CLOCK) -> Term:
    """Parse a term in the concrete syntax.

    >>> from pregax.core import format_term
    >>> format_term(parse_term("a . delta + kappa(P)", ["a"], ["P"]))
    'a . delta + kappa(P)'
    """
    preds = frozenset(p.name if isinstance(p, PredicateSym) else p for p in predicates)
    ctx = TermContext(frozenset(actions) | {clock}, preds, {o.name: o for o in ops}, allow_vars, True, clock)
    ts = TokenStream(tokenize(text))
    t = parse_term_tokens(ts, ctx)
    tok = ts.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected {tok.text!r} after term", tok.line, tok.col)
    return t
