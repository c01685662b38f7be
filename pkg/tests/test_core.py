import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pregax.core import (
    App, OperationSym, Var, apply_subst, choice, compose, delta, format_term, height, hourglass, hourglass_depth,
    kappa, prefix, replace_at, restrict, subterm_at, subterms, sum_of, summands, variables, well_formed,
)
from pregax.ftp import ftp_system
from pregax.syntax import ParseError, parse_term

from helpers import corpus, restricted_terms, tree_terms

SEQR = OperationSym("seqr", 2)


def test_delta_is_in_ftp_signature():
    assert well_formed(delta(), ftp_system(["a"]).signature)


def test_unknown_symbol_is_not_well_formed():
    f = OperationSym("f", 1)
    assert not well_formed(App(f, [delta()]), ftp_system(["a"]).signature)


def test_example_term_well_formed_over_seqr():
    s = corpus("seqr")
    assert well_formed(App(s.op("seqr"), [kappa("term"), prefix("a", delta())]), s.signature)


def test_arity_mismatch_is_not_well_formed():
    s = corpus("seqr")
    assert not well_formed(App(OperationSym("seqr", 1), [delta()]), s.signature)


def test_apply_subst_partial_map_leaves_other_variables():
    t = choice(Var("x"), Var("y"))
    assert apply_subst(t, {"x": delta()}) == choice(delta(), Var("y"))


def test_apply_subst_under_prefix():
    assert apply_subst(prefix("a", Var("x")), {"x": kappa("P")}) == prefix("a", kappa("P"))


def test_apply_subst_on_action_law_rhs():
    # target of the seqr transition rule is y, the law's rhs is a.y
    rhs = prefix("a", Var("y"))
    assert apply_subst(rhs, {"y": delta()}) == prefix("a", delta())


@pytest.mark.parametrize("term,expected", [
    (delta(), 0),
    (kappa("P"), 0),
    (prefix("a", delta()), 1),
    (choice(prefix("a", delta()), prefix("b", prefix("a", delta()))), 3),
])
def test_height(term, expected):
    assert height(term) == expected


def test_hourglass():
    assert hourglass(0) == delta()
    assert hourglass(2) == prefix("tick", prefix("tick", delta()))
    assert all(height(hourglass(n)) == n for n in range(6))
    assert hourglass_depth(hourglass(4)) == 4
    assert hourglass_depth(prefix("a", delta())) is None


def test_sum_of_empty_is_delta():
    assert sum_of([]) == delta()


def test_compose_applies_inner_first():
    sigma = {"x": prefix("a", Var("y"))}
    tau = {"y": delta()}
    t = choice(Var("x"), Var("y"))
    assert apply_subst(t, compose(tau, sigma)) == apply_subst(apply_subst(t, sigma), tau)


def test_terms_are_hashable_values():
    assert prefix("a", delta()) == prefix("a", delta())
    assert len({prefix("a", delta()), prefix("a", delta()), prefix("b", delta())}) == 2


@settings(max_examples=200, deadline=None)
@given(restricted_terms(["a", "b"], ["P", "Q"]))
def test_format_parse_roundtrip(t):
    assert parse_term(format_term(t), ["a", "b"], ["P", "Q"]) == t


@settings(max_examples=100, deadline=None)
@given(st.lists(tree_terms(["a", "b"], ["P"]), max_size=6))
def test_summands_of_sum(parts):
    flat = [u for p in parts for u in summands(p)]
    assert summands(sum_of(parts)) == flat


@settings(max_examples=100, deadline=None)
@given(tree_terms(["a", "b"], ["P"]), st.data())
def test_replace_at_then_subterm_at(t, data):
    paths = [()]
    stack = [((), t)]
    while stack:
        p, u = stack.pop()
        for i, a in enumerate(u.args):
            paths.append(p + (i,))
            stack.append((p + (i,), a))
    path = data.draw(st.sampled_from(paths))
    new = kappa("NEW")
    assert subterm_at(replace_at(t, path, new), path) == new
    assert replace_at(t, path, subterm_at(t, path)) == t


def test_variables_and_subterms():
    t = choice(prefix("a", Var("x")), restrict({"a"}, (), Var("y")))
    assert variables(t) == {"x", "y"}
    assert sum(1 for _ in subterms(t)) == 5


def test_parse_rejects_unknown_action():
    with pytest.raises(ParseError):
        parse_term("c . delta", ["a"], [])
