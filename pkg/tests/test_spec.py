import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

from pregax.core import CHOICE, OperationSym, PredicateSym, Var
from pregax.ftp import ftp_system
from pregax.spec import (
    ExtensionClash, PregRule, PregSystem, SpecError, check_implicit_consistency, classify_distinctive,
    classify_smooth, disjoint_extend, load_spec, parse_spec, positive_positions_of, print_spec, separated,
    validate_preg,
)
from pregax.syntax import ParseError

from helpers import corpus, preg_systems

MALFORMED = Path(__file__).parent / "data" / "malformed"
EXPECTED = json.loads((MALFORMED / "expected.json").read_text())

SEQR_TEXT = """
system seqr ;
actions a, b ;
predicates term, div ;
op seqr / 2 ;
rule seqr : term(x1), x2 -a-> y ==> seqr(x1, x2) -a-> y ;
rule seqr : term(x1), term(x2) ==> term(seqr(x1, x2)) ;
rule seqr : term(x1), div(x2) ==> div(seqr(x1, x2)) ;
"""

MIXED_RULE = "rule f : x1 -a-> y1, x1 -b-> y2, x1 -/d->, P1(x1), P2(x1), not P3(x1) ==> f(x1) -c-> x1 + y1 ;"


def _rule(text_rules: str, header: str = "actions a, b, c, d ; predicates P1, P2, P3 ; op f / 1 ;") -> list[PregRule]:
    return list(parse_spec(header + text_rules).rules)


def test_example_rules_parse():
    s = parse_spec(SEQR_TEXT)
    assert sum(r.is_transition for r in s.rules) == 1
    assert sum(not r.is_transition for r in s.rules) == 2


def test_declarations_only():
    s = parse_spec("actions a ;")
    assert s.rules == () and s.actions == ("a",)


def test_print_empty_system_is_declarations_only():
    text = print_spec(PregSystem("empty", ("a",)))
    assert "rule" not in text and "actions a ;" in text


@pytest.mark.parametrize("name", ["seqr", "bccsp", "priority", "parallel", "omega", "mixedpremises"])
def test_corpus_roundtrip(name):
    s = corpus(name)
    text = print_spec(s)
    assert parse_spec(text) == s
    assert print_spec(parse_spec(text)) == text


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(preg_systems())
def test_random_system_roundtrip_and_valid(s):
    assert parse_spec(print_spec(s)) == s
    assert print_spec(s) == print_spec(s)
    assert not validate_preg(s).errors


def test_validate_example_is_clean():
    assert validate_preg(corpus("seqr")).issues == []


def test_validate_ftp_is_clean():
    assert validate_preg(ftp_system(["a", "b"], ["P"])).issues == []


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_malformed_spec_reports_expected_code(name):
    s = parse_spec((MALFORMED / f"{name}.preg").read_text(), strict=False)
    report = validate_preg(s)
    assert EXPECTED[name] in report.codes()
    assert not report.ok


@pytest.mark.parametrize("rule,code", [
    ("rule f : x1 -a-> y ==> f(x1, x1) -a-> y ;", "E-VAR-CLASH"),
    ("rule f : term(x1) ==> done(f(x1, x2)) ;", "E-UNDECLARED-PREDICATE"),
    ("rule f : x1 -a-> y ==> f(x1, x2) -c-> y ;", "E-UNDECLARED-ACTION"),
])
def test_more_malformed_rules(rule, code):
    text = "actions a, b ; predicates term ; op f / 2 ; " + rule
    assert code in validate_preg(parse_spec(text, strict=False)).codes()
    with pytest.raises(ParseError) as exc:
        parse_spec(text)
    assert exc.value.code == code


def test_clash_message_mentions_distinct_variables():
    s = parse_spec((MALFORMED / "var_clash_targets.preg").read_text(), strict=False)
    assert any("pairwise distinct" in i.message for i in validate_preg(s).errors)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_spec("actions a ;\nop f / ;")
    assert exc.value.line == 2


def test_report_json_is_stable():
    s = parse_spec((MALFORMED / "unbound_target.preg").read_text(), strict=False)
    r = validate_preg(s)
    d = json.loads(r.to_json())
    assert not d["ok"] and d["issues"][0]["code"] == "E-UNBOUND-VAR"
    assert r.to_json() == validate_preg(s).to_json()


# ---------------------------------------------------------------- smoothness and distinctiveness

def test_mixed_rule_is_not_smooth_for_three_reasons():
    (r,) = _rule(MIXED_RULE)
    ok, why = classify_smooth(r)
    assert not ok
    assert any("tested positively and negatively" in w for w in why)
    assert any("multiple positive premises" in w for w in why)
    assert any("in target" in w for w in why)


def test_example_transition_rule_is_smooth():
    assert all(classify_smooth(r)[0] for r in corpus("seqr").rules)


def test_premise_free_rule_is_smooth():
    (r,) = _rule("rule f : ==> f(x1) -a-> delta ;")
    assert classify_smooth(r) == (True, [])
    assert not r.positive_positions()


def test_example_operation_is_distinctive():
    s = corpus("seqr")
    assert classify_distinctive(s.op("seqr"), s.rules)[0]
    assert positive_positions_of(s.rules) == [1, 2]


def test_choice_rules_are_not_distinctive():
    from pregax.builtins import choice_rules
    s = ftp_system(["a"])
    ok, why = classify_distinctive(CHOICE, choice_rules(CHOICE, s))
    assert not ok and why


def test_single_rule_operation_is_distinctive():
    (r,) = _rule("rule f : x1 -a-> y ==> f(x1) -a-> y ;")
    assert classify_distinctive(r.principal, [r])[0]


def test_separated_needs_a_common_positive_position():
    r1, r2 = _rule("rule f : x1 -a-> y ==> f(x1) -a-> y ; rule f : x1 -b-> y ==> f(x1) -a-> y ;")
    assert separated(r1, r2)
    r3, r4 = _rule("rule f : x1 -a-> y ==> f(x1) -a-> y ; rule f : x1 -a-> y ==> f(x1) -b-> y ;")
    assert not separated(r3, r4)


# ---------------------------------------------------------------- extension

def test_disjoint_extend_with_fresh_operation():
    g = ftp_system(["a", "b"], ["term", "div"])
    both = disjoint_extend(g, corpus("seqr"))
    assert both.has_op("seqr") and "ftp" in both.layers


def test_disjoint_extend_is_idempotent():
    s = corpus("seqr")
    assert disjoint_extend(s, s) == s


def test_new_rule_for_choice_clashes():
    g = ftp_system(["a"])
    extra = PregRule(CHOICE, ("x1", "x2"), action="a", target=Var("x1"))
    bad = PregSystem("bad", ("a",), (), (), (extra,))
    with pytest.raises(ExtensionClash):
        disjoint_extend(g, bad)


def test_new_rule_for_existing_user_op_clashes():
    s = corpus("seqr")
    extra = PregRule(s.op("seqr"), ("x1", "x2"), action="a", target=Var("x1"))
    with pytest.raises(ExtensionClash):
        disjoint_extend(s, PregSystem("more", ("a",), (), (s.op("seqr"),), (extra,)))


def test_extends_directive(tmp_path):
    (tmp_path / "base.preg").write_text("system base ; actions a ; op nil / 0 ;")
    (tmp_path / "top.preg").write_text('system top ; extends "base.preg" ; op pa / 1 ; rule pa : ==> pa(x1) -a-> x1 ;')
    s = load_spec(tmp_path / "top.preg")
    assert s.has_op("nil") and s.has_op("pa")


def test_extends_cycle_is_rejected(tmp_path):
    (tmp_path / "a.preg").write_text('extends "b.preg" ; actions a ;')
    (tmp_path / "b.preg").write_text('extends "a.preg" ; actions a ;')
    with pytest.raises((ParseError, SpecError)):
        load_spec(tmp_path / "a.preg")


# ---------------------------------------------------------------- implicit predicate consistency

def _ev_system(with_pred_rule: bool) -> PregSystem:
    text = "actions c ; predicate ev implicit over c ; op f / 1 ; rule f : ==> f(x1) -c-> x1 ;"
    if with_pred_rule:
        text += " rule f : ev(x1) ==> ev(f(x1)) ;"
    return parse_spec(text)


def test_explicit_only_system_has_no_consistency_warnings():
    assert check_implicit_consistency(corpus("seqr")) == []


def test_covered_implicit_predicate_is_consistent():
    assert check_implicit_consistency(_ev_system(True)) == []


def test_missing_covering_rule_warns():
    issues = check_implicit_consistency(_ev_system(False))
    assert [i.code for i in issues] == ["W-IMPLICIT"]
    assert validate_preg(_ev_system(False)).warnings


def test_predicate_kinds():
    s = _ev_system(True)
    assert s.predicate("ev") == PredicateSym("ev", "implicit", frozenset({"c"}))
    assert OperationSym("f", 1) in s.signature
