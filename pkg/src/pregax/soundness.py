"""Sampling check of generated equations against the bisimulation oracle."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .axiomgen import GeneratedAxioms, axiomatize
from .bisim import Outcome, bisimilar
from .core import Equation, OperationSym, Term, format_term
from .sampling import ftp_constructors, random_term, restrict_constructors
from .semantics import StepBudget, engine_for
from .spec import PregSystem


@dataclass
class EquationResult:
    label: str
    text: str
    checked: int = 0
    unknown: int = 0
    failures: list[str] = field(default_factory=list)


@dataclass
class SoundnessReport:
    system: str
    results: list[EquationResult]

    @property
    def failures(self) -> list[str]:
        return [f"{r.label}: {f}" for r in self.results for f in r.failures]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_lines(self) -> list[str]:
        lines = [f"{r.label}: {r.checked} checked, {r.unknown} unknown, {len(r.failures)} failed  [{r.text}]"
                 for r in self.results]
        lines += [f"FAIL {f}" for f in self.failures]
        return lines


def instance_ops(g: PregSystem, rng: random.Random, n_restrict: int = 4) -> list[OperationSym]:
    """Constructors used for instantiation: trees, every non-builtin operation, a few restrictions."""
    rs = restrict_constructors(g)
    picked = rng.sample(rs, min(n_restrict, len(rs))) if "restrict" in g.layers else []
    return ftp_constructors(g) + [op for op in g.ops] + picked


def check_equation(eq: Equation, g: PregSystem, rng: random.Random, samples: int,
                   ops: Sequence[OperationSym], max_height: int = 2,
                   budget: StepBudget = StepBudget(max_states=2_000)) -> EquationResult:
    res = EquationResult(eq.label, eq.to_text())
    names = sorted(eq.variables())
    eng = engine_for(g)
    n = samples if names else 1
    for _ in range(n):
        sigma: dict[str, Term] = {v: random_term(rng, ops, max_height) for v in names}
        lhs, rhs = eq.instantiate(sigma)
        v = bisimilar(lhs, rhs, g, budget, eng)
        res.checked += 1
        if v.outcome is Outcome.UNKNOWN:
            res.unknown += 1
        elif v.outcome is Outcome.NOT_EQUAL:
            res.failures.append(f"{format_term(lhs)} vs {format_term(rhs)}: {v.witness}")
    return res


def check_axioms(s: PregSystem, samples: int = 500, seed: int = 0, max_height: int = 2,
                 axioms: GeneratedAxioms | None = None) -> SoundnessReport:
    """Every generated equation (and schema samples) instantiated ``samples`` times."""
    if axioms is None:
        g, axioms = axiomatize(s)
    g = axioms.system
    rng = random.Random(seed)
    ops = instance_ops(g, rng)
    results = [check_equation(eq, g, rng, samples, ops, max_height) for eq in axioms.equations()]
    for sc in axioms.base.schemas:
        res = EquationResult(sc.label, sc.text)
        for _ in range(max(1, samples // 10)):
            eq = sc.sample(g, rng)
            if eq is None:
                continue
            sub = check_equation(eq, g, rng, 10, ops, max_height)
            res.checked += sub.checked
            res.unknown += sub.unknown
            res.failures += sub.failures
        results.append(res)
    return SoundnessReport(s.name, results)
