import random

from hypothesis import given, settings
from hypothesis import strategies as st

from pregax.core import height
from pregax.ftp import ftp_system
from pregax.core import explicit, implicit
from pregax.sampling import (
    DEFAULT_SEED, count_terms, enumerate_terms, ftp_constructors, random_term, restrict_constructors,
    sample_pairs, seed_from_env,
)

S = ftp_system(["a", "b"], [explicit("P"), implicit("Q", ["a"])])


def test_height_two_grammar_size():
    ops = ftp_constructors(S)
    terms = enumerate_terms(ops, 2)
    assert len(terms) == 363 == count_terms(ops, 2)
    assert len(set(terms)) == len(terms)


def _brute_count(n_consts, unary, binary, h):
    # independent recurrence over exact heights
    exact = [n_consts]
    for k in range(1, h + 1):
        below = sum(exact[:k])
        below_strict = sum(exact[:k - 1])
        exact.append(unary * exact[k - 1] + binary * (below ** 2 - below_strict ** 2))
    return sum(exact)


@settings(max_examples=30)
@given(st.integers(1, 3), st.integers(0, 2), st.integers(0, 2), st.integers(0, 3))
def test_count_matches_recurrence(c, u, b, h):
    from pregax.core import OperationSym
    ops = [OperationSym(f"c{i}", 0) for i in range(c)] + [OperationSym(f"u{i}", 1) for i in range(u)]
    ops += [OperationSym(f"b{i}", 2) for i in range(b)]
    assert count_terms(ops, h) == _brute_count(c, u, b, h)
    if count_terms(ops, h) < 5000:
        assert len(enumerate_terms(ops, h)) == count_terms(ops, h)


def test_enumeration_respects_height():
    assert max(height(t) for t in enumerate_terms(ftp_constructors(S), 2)) == 2


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.integers(0, 4))
def test_random_term_height_bound(seed, h):
    t = random_term(random.Random(seed), ftp_constructors(S), h)
    assert height(t) <= h


def test_random_terms_are_reproducible():
    ops = ftp_constructors(S)
    a = [random_term(random.Random(7), ops, 3) for _ in range(5)]
    b = [random_term(random.Random(7), ops, 3) for _ in range(5)]
    assert a == b


def test_clock_excluded_by_default():
    s = S.with_layers({"proj"})
    assert "tick" not in {op.param for op in ftp_constructors(s)}
    assert "tick" in {op.param for op in ftp_constructors(s, clock=True)}


def test_restriction_constructors():
    rs = restrict_constructors(S.with_layers({"restrict"}))
    assert len(rs) == 4 * 4
    assert len(restrict_constructors(S.with_layers({"restrict"}), 3)) == 3


def test_sample_pairs_all_or_capped():
    items = list(range(5))
    assert len(list(sample_pairs(items, 100, random.Random(0)))) == 15
    assert len(list(sample_pairs(items, 10, random.Random(0)))) == 10


def test_seed_from_env(monkeypatch):
    monkeypatch.delenv("PREGAX_SEED", raising=False)
    assert seed_from_env() == DEFAULT_SEED
    monkeypatch.setenv("PREGAX_SEED", "42")
    assert seed_from_env() == 42
