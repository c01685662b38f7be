import json

import pytest
from hypothesis import given, settings

from pregax.axiomgen import (
    axiomatize, deadlock_schema, distributivity_laws, enumerate_deadlock, op_axioms, trigger_law,
)
from pregax.core import Equation, delta, kappa, prefix
from pregax.soundness import check_axioms
from pregax.spec import SpecError, parse_spec

from helpers import alpha_equal, corpus, preg_systems

EMPTY = "system empty ; actions a ;"


def _eq(s, lhs, rhs):
    return Equation(s.parse_term(lhs, allow_vars=True), s.parse_term(rhs, allow_vars=True), "golden")


def _seqr():
    s = corpus("seqr")
    g, gen = axiomatize(s)
    return g, gen, gen.ops["seqr"]


def test_seqr_laws_match_hand_derivation():
    g, _, ax = _seqr()
    golden = [
        _eq(g, "seqr(x + y, z)", "seqr(x, z) + seqr(y, z)"),
        _eq(g, "seqr(x, y + z)", "seqr(x, y) + seqr(x, z)"),
        _eq(g, "seqr(kappa(term), a . y)", "a . y"),
        _eq(g, "seqr(kappa(term), b . y)", "b . y"),
        _eq(g, "seqr(kappa(term), kappa(div))", "kappa(div)"),
        _eq(g, "seqr(kappa(term), kappa(term))", "kappa(term)"),
    ]
    got = ax.equations()
    assert len(got) == len(golden)
    for want in golden:
        assert any(alpha_equal(want, e) for e in got), want.to_text()


def test_seqr_deadlock_instances():
    g, gen, ax = _seqr()
    texts = sorted(e.to_text().split(": ", 1)[1] for e in enumerate_deadlock(ax.deadlock, g, 1))
    assert texts == sorted([
        "seqr(delta, x2) = delta", "seqr(kappa(div), x2) = delta", "seqr(a . x1, x2) = delta",
        "seqr(b . x1, x2) = delta", "seqr(tick . x1, x2) = delta", "seqr(x1, delta) = delta",
        "seqr(x1, tick . x2) = delta",
    ])


def test_distributivity_only_at_positive_positions():
    s = corpus("priority")
    g, gen = axiomatize(s)
    assert [e.label for e in gen.ops["pa"].distributivity] == []
    assert [e.label for e in gen.ops["alt_1"].distributivity] == ["alt_1.dist1"]
    assert [e.label for e in gen.ops["prio_s"].distributivity] == ["prio_s.dist1"]


def test_operation_without_positive_positions():
    s = parse_spec("actions a ; op g / 2 ; rule g : x1 -/a-> ==> g(x1, x2) -a-> x2 ;")
    assert distributivity_laws(s.op("g"), s.rules_of("g")) == []


def test_trigger_law_restricts_negative_position():
    s = parse_spec("actions a, b ; op g / 1 ; rule g : x1 -/a-> ==> g(x1) -b-> x1 ;")
    law = trigger_law(s.rules[0])
    assert law.to_text() == "g.action: g(restrict{a ; }(x1)) = b . restrict{a ; }(x1)"


def test_trigger_law_rejects_non_smooth_rule():
    with pytest.raises(SpecError):
        trigger_law(corpus("mixedpremises").rules[0])


def test_non_distinctive_operation_is_rejected():
    s = corpus("bccsp")
    with pytest.raises(SpecError):
        op_axioms(s.op("alt"), s.rules_of("alt"))


def test_deadlock_applicability():
    _, _, ax = _seqr()
    d = ax.deadlock
    assert d.applicable([[], [prefix("a", delta())]])
    assert d.applicable([[kappa("term")], [prefix("tick", delta())]])
    assert not d.applicable([[kappa("term")], [prefix("a", delta())]])
    assert not d.applicable([[kappa("term")], [kappa("div")]])
    # a sum at a positive position is not a deadlock shape by itself
    assert not d.applicable([[kappa("term")], [prefix("a", delta()), prefix("tick", delta())]])


def test_deadlock_for_operation_without_rules():
    s = parse_spec("actions a ; op g / 1 ;")
    d = deadlock_schema(s.op("g"), ())
    assert d.applicable([[]])
    (eq,) = enumerate_deadlock(d, s, 1)
    assert eq.to_text().endswith("g(x1) = delta")


def test_negative_premise_deadlock_needs_witness():
    g, gen = axiomatize(corpus("priority"))
    d = gen.ops["prio_s"].deadlock
    assert not d.applicable([[prefix("a", delta())], [prefix("a", delta())]])
    assert not d.applicable([[prefix("b", delta())], [prefix("b", delta())]])
    assert d.applicable([[prefix("a", delta())], [prefix("a", delta()), prefix("b", delta())]])
    assert d.applicable([[], []])


def test_implicit_test_warning():
    s = parse_spec("actions a ; predicate ev implicit over a ; op g / 1 ;"
                   "rule g : ev(x1) ==> g(x1) -a-> x1 ;")
    _, gen = axiomatize(s)
    assert "W-IMPLICIT-TEST" in {w.code for w in gen.warnings}
    assert gen.soundness_conditional
    assert "# soundness conditional" in gen.to_text()


def test_corpus_systems_have_no_warnings():
    for name in ("seqr", "bccsp", "priority", "parallel", "omega"):
        _, gen = axiomatize(corpus(name))
        assert gen.warnings == [], name


def test_empty_system_gives_base_and_projection_only():
    g, gen = axiomatize(parse_spec(EMPTY))
    assert gen.ops == {} and gen.translation == []
    assert {e.label.split(".")[0] for e in gen.aip.equations()} == {"proj"}
    assert gen.base.labels()[:4] == ["A1", "A2", "A3", "A4"]


def test_invalid_system_is_rejected():
    s = parse_spec("actions a ; op g / 1 ; rule g : ==> g(x1) -a-> y ;", strict=False)
    with pytest.raises(SpecError):
        axiomatize(s)


def test_output_is_deterministic():
    s = corpus("parallel")
    a, b = axiomatize(s)[1], axiomatize(s)[1]
    assert a.to_text() == b.to_text()
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert set(d) == {"system", "soundness_conditional", "warnings", "base", "ops", "translation", "projection"}


def test_translation_section_lists_kinds():
    _, gen = axiomatize(corpus("priority"))
    kinds = {e["label"]: e["kind"] for e in gen.to_dict()["translation"]}
    assert kinds["smooth[prio]"] == "smoothening"
    assert kinds["distinct[alt]"] == "distinctify"


@pytest.mark.parametrize("name", ["seqr", "priority"])
def test_generated_equations_are_sound(name):
    report = check_axioms(corpus(name), samples=20, seed=3)
    assert report.ok, report.failures


@settings(max_examples=25, deadline=None)
@given(preg_systems())
def test_random_systems_axiomatize_soundly(s):
    from pregax.spec import validate_preg
    if validate_preg(s).errors:
        return
    _, gen = axiomatize(s)
    if gen.warnings:
        return
    report = check_axioms(s, samples=4, seed=1, axioms=gen)
    assert report.ok, report.failures


def test_op_axioms_direct():
    s = parse_spec("actions a ; op g / 1 ; rule g : x1 -a-> y ==> g(x1) -a-> g(y) ;")
    ax = op_axioms(s.op("g"), s.rules_of("g"))
    assert [e.label for e in ax.equations()] == ["g.dist1", "g.action1"]
