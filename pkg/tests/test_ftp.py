import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pregax.bisim import Outcome, bisimilar
from pregax.core import (
    Var, apply_subst, choice, delta, explicit, implicit, is_restrict, kappa, prefix, restrict, subterms,
)
from pregax.ftp import (
    A93_VERBATIM, RESTRICTION_SCHEMAS, canonical_tree, eliminate_restriction, ftp_axioms, ftp_partial_axioms,
    ftp_partial_system, ftp_system, tree_difference, trees_equal, truncate_tree,
)

from helpers import restricted_terms, tree_terms

PREDS = [explicit("P"), implicit("Q", ["a"])]
S = ftp_system(["a", "b"], PREDS)
SP = ftp_partial_system(["a", "b"], PREDS)
trees = tree_terms(["a", "b"], ["P", "Q"], max_leaves=6)


def test_empty_action_set_is_rejected():
    with pytest.raises(ValueError):
        ftp_system([])


def test_base_axioms_without_implicit_predicates():
    ax = ftp_axioms(ftp_system(["a", "b"], ["P"]))
    assert ax.labels() == ["A1", "A2", "A3", "A4"]


def test_prefix_witness_axiom_only_for_allowed_actions():
    labels = ftp_axioms(S).labels()
    assert "A5[Q,a]" in labels
    assert "A5[Q,b]" not in labels


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_base_axioms_are_sound(data):
    for eq in ftp_axioms(S):
        sigma = {v: data.draw(trees) for v in sorted(eq.variables())}
        lhs, rhs = eq.instantiate(sigma)
        assert bisimilar(lhs, rhs, S).outcome is Outcome.EQUAL, eq.label


@pytest.mark.parametrize("schema", RESTRICTION_SCHEMAS, ids=lambda sc: sc.label)
def test_restriction_schemas_are_sound(schema):
    rng = random.Random(11)
    insts = schema.instances(SP)
    assert insts
    for eq in rng.sample(insts, min(40, len(insts))):
        for _ in range(5):
            sigma = {v: _random_tree(rng) for v in sorted(eq.variables())}
            lhs, rhs = eq.instantiate(sigma)
            assert bisimilar(lhs, rhs, SP).outcome is Outcome.EQUAL, eq.to_text()


def _random_tree(rng, h=2):
    if h == 0 or rng.random() < 0.3:
        return rng.choice([delta(), kappa("P"), kappa("Q")])
    if rng.random() < 0.5:
        return prefix(rng.choice("ab"), _random_tree(rng, h - 1))
    return choice(_random_tree(rng, h - 1), _random_tree(rng, h - 1))


def test_verbatim_a93_is_refuted_by_oracle():
    # an explicit witness under a blocked double prefix does not survive
    eq = next(e for e in A93_VERBATIM.instances(SP)
              if e.lhs == restrict({"a"}, (), prefix("a", prefix("a", Var("x")))))
    lhs, rhs = eq.instantiate({"x": kappa("P")})
    assert bisimilar(lhs, rhs, SP).outcome is Outcome.NOT_EQUAL


def test_a7_instance():
    eq = next(e for e in RESTRICTION_SCHEMAS[1].instances(SP)
              if e.lhs == restrict((), {"P"}, kappa("P")))
    assert eq.rhs == delta() and eq.label == "A7"


def test_a11_keeps_only_implicit_restrictions():
    eq = next(e for e in RESTRICTION_SCHEMAS[7].instances(SP)
              if e.lhs == restrict((), {"P", "Q"}, prefix("b", Var("x"))))
    assert eq.rhs == prefix("b", restrict((), {"Q"}, Var("x")))


def test_partial_axiom_text_lists_schemas():
    text = ftp_partial_axioms(SP).to_text()
    assert "A12:" in text and "A1:" in text


# ---------------------------------------------------------------- canonical trees

def test_canonical_tree_idempotence():
    assert canonical_tree(choice(prefix("a", delta()), prefix("a", delta())), S) == canonical_tree(prefix("a", delta()), S)


def test_canonical_tree_saturates_implicit_witness():
    ct = canonical_tree(prefix("a", kappa("Q")), S)
    assert ct.witness_summands == ("Q",)


def test_canonical_tree_of_deadlock_sum():
    assert canonical_tree(choice(delta(), delta()), S).is_deadlock()


def test_trees_equal_examples():
    ab = choice(prefix("a", delta()), prefix("b", delta()))
    ba = choice(prefix("b", delta()), prefix("a", delta()))
    assert trees_equal(ab, ba, S)
    assert not trees_equal(kappa("P"), delta(), S)


@settings(max_examples=300, deadline=None)
@given(trees, trees)
def test_trees_equal_matches_oracle(t, u):
    assert trees_equal(t, u, S) == (bisimilar(t, u, S).outcome is Outcome.EQUAL)


@settings(max_examples=100, deadline=None)
@given(trees, trees)
def test_tree_difference_iff_not_equal(t, u):
    c1, c2 = canonical_tree(t, S), canonical_tree(u, S)
    assert (tree_difference(c1, c2) is None) == (c1 == c2)


@settings(max_examples=100, deadline=None)
@given(trees, st.integers(0, 3))
def test_truncation_matches_projection(t, n):
    from pregax.core import hourglass, proj
    from pregax.ftp import projection_system
    ps = projection_system(["a", "b"], PREDS)
    cut = truncate_tree(canonical_tree(t, S), n).to_term()
    assert bisimilar(cut, proj(t, hourglass(n)), ps).outcome is Outcome.EQUAL


def test_canonical_tree_rejects_non_tree():
    from pregax.core import OperationSym, App
    with pytest.raises(ValueError):
        canonical_tree(App(OperationSym("f", 0)), S)


# ---------------------------------------------------------------- restriction elimination

def test_eliminate_blocked_prefix():
    assert eliminate_restriction(restrict({"a"}, (), prefix("a", delta())), SP) == delta()


def test_eliminate_forbidden_witness():
    assert eliminate_restriction(restrict((), {"P"}, kappa("P")), SP) == delta()


def test_eliminate_in_sum():
    assert eliminate_restriction(restrict((), {"P"}, choice(kappa("Q"), kappa("P"))), SP) == kappa("Q")


@settings(max_examples=300, deadline=None)
@given(restricted_terms(["a", "b"], ["P", "Q"], max_leaves=8))
def test_elimination_is_sound_and_complete(t):
    e = eliminate_restriction(t, SP)
    assert not any(is_restrict(u) for u in subterms(e))
    assert bisimilar(t, e, SP).outcome is Outcome.EQUAL


def test_schema_instances_substitute_cleanly():
    eq = RESTRICTION_SCHEMAS[-1].instances(SP)[0]
    lhs, _ = eq.instantiate({"x": delta(), "y": delta()})
    assert apply_subst(lhs, {}) == lhs
