"""Closed-term generators over a signature: exhaustive by height, or seeded random."""
from __future__ import annotations

import os
import random
from itertools import product
from typing import Iterable, Sequence

from .core import CHOICE, CLOCK, DELTA, App, OperationSym, Term, height, kappa_sym, prefix_sym, restrict_sym
from .spec import PregSystem

DEFAULT_SEED = 20240101


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    value = os.environ.get("PREGAX_SEED")
    return int(value) if value else default


def ftp_constructors(s: PregSystem, clock: bool = False) -> list[OperationSym]:
    """delta, one kappa per predicate, one prefix per action, and choice."""
    acts = [a for a in s.actions if clock or a != CLOCK]
    return [DELTA] + [kappa_sym(p) for p in sorted(s.predicate_names)] + [prefix_sym(a) for a in acts] + [CHOICE]


def user_constructors(s: PregSystem) -> list[OperationSym]:
    return [op for op in s.ops if op.origin == "user"]


def restrict_constructors(s: PregSystem, limit: int | None = None) -> list[OperationSym]:
    """Restriction operators for all (B, Q), optionally only the first ``limit`` in a fixed order."""
    from .ftp import _restrictions
    out = [restrict_sym(b, q) for b, q in _restrictions(s)]
    return out if limit is None else out[:limit]


def enumerate_terms(ops: Sequence[OperationSym], max_height: int) -> list[Term]:
    """All closed terms of height at most ``max_height``, grouped by height, in a fixed order."""
    consts = [App(op) for op in ops if op.arity == 0]
    levels: list[list[Term]] = [consts]
    upto = list(consts)
    for h in range(1, max_height + 1):
        fresh = []
        for op in ops:
            if op.arity == 0:
                continue
            for args in product(upto, repeat=op.arity):
                if max(height(a) for a in args) == h - 1:
                    fresh.append(App(op, args))
        levels.append(fresh)
        upto = upto + fresh
    return upto


def count_terms(ops: Sequence[OperationSym], max_height: int) -> int:
    """Size of ``enumerate_terms`` without building it."""
    n_le = sum(1 for op in ops if op.arity == 0)
    for _ in range(max_height):
        prev = n_le
        # terms with a root and arguments of height < h, minus those of smaller height
        n_le = sum(1 for op in ops if op.arity == 0) + sum(prev ** op.arity for op in ops if op.arity > 0)
    return n_le


def random_term(rng: random.Random, ops: Sequence[OperationSym], max_height: int, leaf_prob: float = 0.25) -> Term:
    """Top-down random term: a leaf with probability ``leaf_prob`` or once the height budget is spent."""
    consts = [op for op in ops if op.arity == 0]
    inner = [op for op in ops if op.arity > 0]
    if not consts:
        raise ValueError("signature has no constants")
    if max_height == 0 or not inner or rng.random() < leaf_prob:
        return App(rng.choice(consts))
    op = rng.choice(inner)
    return App(op, [random_term(rng, ops, max_height - 1, leaf_prob) for _ in range(op.arity)])


def random_terms(rng: random.Random, ops: Sequence[OperationSym], max_height: int, n: int) -> list[Term]:
    return [random_term(rng, ops, max_height) for _ in range(n)]


def sample_pairs(items: Sequence, cap: int, rng: random.Random) -> Iterable[tuple]:
    """All unordered pairs (with repeats) if few enough, else ``cap`` random ones."""
    n = len(items)
    total = n * (n + 1) // 2
    if total <= cap:
        for i in range(n):
            for j in range(i, n):
                yield items[i], items[j]
        return
    for _ in range(cap):
        i, j = rng.randrange(n), rng.randrange(n)
        yield items[i], items[j]
