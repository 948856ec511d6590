"""Tokenizer and ROUGE metric tests, checked against independent oracles."""

from __future__ import annotations

import random
from collections import defaultdict

import pytest
from hypothesis import given, strategies as st

from spoilkit.metrics import (
    MetricTriple,
    TokenSeq,
    aggregate,
    lcs_length,
    ngram_counts,
    rouge_l,
    rouge_n,
    tokenize,
)

WORDS = ["the", "cat", "sat", "on", "mat", "dog", "ran", "far", "blue", "sky"]


def seq(*tokens: str) -> TokenSeq:
    return tokenize(" ".join(tokens))


def random_tokens(rng: random.Random, max_len: int, min_len: int = 0) -> list[str]:
    return [rng.choice(WORDS) for _ in range(rng.randint(min_len, max_len))]


# -- oracles ------------------------------------------------------------------


def naive_ngram_overlap(a: list[str], b: list[str], n: int) -> int:
    """Clipped n-gram overlap via plain dict counting."""
    counts: dict = defaultdict(int)
    for i in range(len(a) - n + 1):
        counts[tuple(a[i : i + n])] += 1
    overlap = 0
    for i in range(len(b) - n + 1):
        gram = tuple(b[i : i + n])
        if counts[gram] > 0:
            counts[gram] -= 1
            overlap += 1
    return overlap


def recursive_lcs(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    """Plain recursive brute force, only usable for short sequences."""
    if not a or not b:
        return 0
    if a[0] == b[0]:
        return 1 + recursive_lcs(a[1:], b[1:])
    return max(recursive_lcs(a[1:], b), recursive_lcs(a, b[1:]))


# -- tokenize -----------------------------------------------------------------


def test_tokenize_strips_punctuation_and_lowercases():
    assert tokenize("Artificial Sweetener.").tokens == ("artificial", "sweetener")
    assert tokenize("xylitol, an artificial sweetener").tokens == (
        "xylitol",
        "an",
        "artificial",
        "sweetener",
    )


def test_tokenize_empty():
    assert tokenize("").tokens == ()
    assert tokenize("?!...").tokens == ()


def test_tokenize_offsets_slice_back():
    text = "Top 5 things, obviously."
    ts = tokenize(text)
    for token, (start, end) in zip(ts.tokens, ts.offsets):
        assert text[start:end].lower() == token


@given(st.text(max_size=80))
def test_tokenize_offsets_increasing_nonoverlapping(text):
    ts = tokenize(text)
    previous_end = 0
    for start, end in ts.offsets:
        assert previous_end <= start < end
        previous_end = end


def test_tokenize_nfkc_normalizes():
    # Fullwidth digits and ligatures collapse to their compatibility forms.
    assert tokenize("ｅｆﬁcient ５").tokens == ("efficient", "5")


# -- rouge_n ------------------------------------------------------------------


def test_rouge1_table_strings():
    cand = tokenize("xylitol, an artificial sweetener")
    ref = tokenize("Artificial Sweetener.")
    triple = rouge_n(cand, ref, 1)
    assert triple.precision == pytest.approx(0.5, abs=1e-12)
    assert triple.recall == pytest.approx(1.0, abs=1e-12)
    assert triple.f1 == pytest.approx(2 / 3, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_rouge_n_identity(n):
    ts = seq("the", "cat", "sat", "on", "mat")
    assert rouge_n(ts, ts, n) == MetricTriple(1.0, 1.0, 1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_rouge_n_disjoint(n):
    assert rouge_n(seq("a1", "b1", "c1"), seq("x1", "y1", "z1"), n) == MetricTriple.zero()


def test_rouge_n_clipping():
    # candidate repeats a token; overlap is clipped to the reference count
    triple = rouge_n(seq("cat", "cat", "cat"), seq("cat", "dog"), 1)
    assert triple.precision == pytest.approx(1 / 3)
    assert triple.recall == pytest.approx(1 / 2)


def test_rouge_2_no_bigrams_on_single_token():
    assert rouge_n(seq("cat"), seq("cat"), 2) == MetricTriple.zero()


def test_rouge_n_rejects_other_n():
    with pytest.raises(ValueError):
        rouge_n(seq("a"), seq("a"), 3)


def test_rouge_n_matches_naive_counter():
    rng = random.Random(1234)
    for _ in range(300):
        a = random_tokens(rng, 50)
        b = random_tokens(rng, 50)
        for n in (1, 2):
            got = rouge_n(seq(*a), seq(*b), n)
            overlap = naive_ngram_overlap(b, a, n)
            n_a = max(len(a) - n + 1, 0)
            n_b = max(len(b) - n + 1, 0)
            expected_p = overlap / n_a if n_a else 0.0
            expected_r = overlap / n_b if n_b else 0.0
            assert got.precision == pytest.approx(expected_p, abs=1e-9)
            assert got.recall == pytest.approx(expected_r, abs=1e-9)


def test_rouge_n_swap_symmetry():
    rng = random.Random(99)
    for _ in range(100):
        a, b = seq(*random_tokens(rng, 20)), seq(*random_tokens(rng, 20))
        for n in (1, 2):
            fwd, rev = rouge_n(a, b, n), rouge_n(b, a, n)
            assert fwd.precision == rev.recall and fwd.recall == rev.precision
            assert fwd.f1 == pytest.approx(rev.f1, abs=1e-12)


# -- rouge_l ------------------------------------------------------------------


def test_rouge_l_hand_example():
    triple = rouge_l(seq("a", "b", "c"), seq("a", "c"))
    assert triple.precision == pytest.approx(2 / 3, abs=1e-12)
    assert triple.recall == pytest.approx(1.0, abs=1e-12)
    assert triple.f1 == pytest.approx(0.8, abs=1e-12)


def test_rouge_l_identity():
    ts = seq("blue", "sky", "far")
    assert rouge_l(ts, ts) == MetricTriple(1.0, 1.0, 1.0)


def test_rouge_l_empty_reference():
    assert rouge_l(seq("a", "b"), tokenize("")) == MetricTriple.zero()
    assert rouge_l(tokenize(""), seq("a", "b")) == MetricTriple.zero()


def test_lcs_matches_recursive_bruteforce():
    rng = random.Random(4321)
    for _ in range(200):
        a = tuple(random_tokens(rng, 10))
        b = tuple(random_tokens(rng, 10))
        assert lcs_length(a, b) == recursive_lcs(a, b)


def test_rouge_l_swap_symmetry():
    rng = random.Random(7)
    for _ in range(100):
        a, b = seq(*random_tokens(rng, 12)), seq(*random_tokens(rng, 12))
        fwd, rev = rouge_l(a, b), rouge_l(b, a)
        assert fwd.precision == rev.recall and fwd.recall == rev.precision


# -- shared properties --------------------------------------------------------


@given(
    st.lists(st.sampled_from(WORDS), max_size=30),
    st.lists(st.sampled_from(WORDS), max_size=30),
)
def test_all_metrics_bounded(a, b):
    ca, cb = seq(*a), seq(*b)
    for triple in (rouge_n(ca, cb, 1), rouge_n(ca, cb, 2), rouge_l(ca, cb)):
        for v in (triple.precision, triple.recall, triple.f1):
            assert 0.0 <= v <= 1.0


def test_f1_is_harmonic_mean():
    t = MetricTriple.from_pr(0.5, 1.0)
    assert abs(t.f1 - 2 * 0.5 * 1.0 / 1.5) < 1e-12
    assert MetricTriple.from_pr(0.0, 0.0).f1 == 0.0


def test_ngram_counts_shapes():
    assert ngram_counts(["a", "b", "a"], 1) == {("a",): 2, ("b",): 1}
    assert ngram_counts(["a", "b", "a"], 2) == {("a", "b"): 1, ("b", "a"): 1}
    assert ngram_counts(["a"], 2) == {}


# -- aggregate ----------------------------------------------------------------


def test_aggregate_mean():
    agg = aggregate([MetricTriple(1, 1, 1), MetricTriple.zero()])
    assert agg == MetricTriple(0.5, 0.5, 0.5)


def test_aggregate_single():
    t = MetricTriple(0.25, 0.75, 0.375)
    assert aggregate([t]) == t


def test_aggregate_three_hand_triples():
    triples = [
        MetricTriple(0.2, 0.4, 0.6),
        MetricTriple(0.4, 0.6, 0.0),
        MetricTriple(0.6, 0.8, 0.3),
    ]
    agg = aggregate(triples)
    assert agg.precision == pytest.approx(0.4, abs=1e-12)
    assert agg.recall == pytest.approx(0.6, abs=1e-12)
    assert agg.f1 == pytest.approx(0.3, abs=1e-12)


def test_aggregate_empty_errors():
    with pytest.raises(ValueError):
        aggregate([])


def test_tokenize_offsets_are_code_points():
    # offsets must count code points so downstream consumers (including the
    # browser UI) can slice the stored context consistently
    text = "an 🦉 owl watched"
    ts = tokenize(text)
    assert ts.tokens == ("an", "owl", "watched")
    for token, (start, end) in zip(ts.tokens, ts.offsets):
        assert text[start:end].lower() == token
    assert ts.offsets[1] == (5, 8)  # the emoji counts as one position
