import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctcr.errors import InvalidInputError, InvalidParameterError, ParseError
from ctcr.lm import BOS, EOS, UNK, read_arpa, score_sequence, train_kn, write_arpa
from ctcr.synthetic import toy_corpus

from oracles import KneserNeyOracle

TOY = [["a", "b"], ["a", "c"]]


def context_sum(model, ctx):
    return sum(10 ** model.log10_prob(w, ctx) for w in model.predictable)


def test_toy_bigram_hand_values():
    # With <s> and </s>: continuation counts a=1 b=1 c=1 </s>=2 <unk>=0 over
    # 5 predictable tokens, so P1(b) = 0.25/5 + 0.75*4/5/5 = 0.17 and
    # P(b|a) = 0.25/2 + 0.75*2/2*0.17 = 0.2525.
    m = train_kn(TOY, order=2, discount=0.75)
    assert 10 ** m.log10_prob("b", ["a"]) == pytest.approx(0.2525, abs=1e-9)
    assert 10 ** m.log10_prob("b") == pytest.approx(0.17, abs=1e-9)
    assert 10 ** m.log10_prob(UNK) == pytest.approx(0.12, abs=1e-9)
    assert 10 ** m.log10_prob("a", [BOS]) == pytest.approx(1.25 / 2 + 0.75 / 2 * 0.17, abs=1e-9)
    # interpolation structure: (c - D)/total + D*types/total * lower
    lower = 10 ** m.log10_prob("b")
    assert 10 ** m.log10_prob("b", ["a"]) == pytest.approx((1 - 0.75) / 2 + 0.75 * 2 / 2 * lower, abs=1e-12)
    assert m.backoff[("a",)] == pytest.approx(math.log10(0.75))


def test_unigram_model_normalises():
    m = train_kn([["a", "a", "a"]], order=1)
    assert context_sum(m, ()) == pytest.approx(1.0, abs=1e-9)
    assert m.order == 1 and not m.backoff


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_matches_recursive_oracle(order):
    rng = np.random.default_rng(order)
    corpus = toy_corpus(rng, 60, words=("a", "b", "c", "d", "e", "f"), max_len=6)
    m = train_kn(corpus, order=order, discount=0.6)
    ref = KneserNeyOracle(corpus, order, 0.6)
    assert set(m.predictable) == set(ref.vocab)
    ctx_words = ["a", "b", "c", "zz", BOS]
    for n_ctx in range(order):
        for ctx in itertools.product(ctx_words, repeat=n_ctx):
            if BOS in ctx[1:]:
                continue
            for w in m.predictable + ["zz"]:
                assert 10 ** m.log10_prob(w, list(ctx)) == pytest.approx(ref.prob(w, ctx), abs=1e-12)


def test_every_context_normalises_and_is_positive():
    rng = np.random.default_rng(4)
    corpus = toy_corpus(rng, 200, max_len=7)
    m = train_kn(corpus, order=3)
    for ctx in m.contexts():
        assert context_sum(m, list(ctx)) == pytest.approx(1.0, abs=1e-9)
        for w in m.predictable:
            assert m.log10_prob(w, list(ctx)) < 0.0
    assert all(v <= 0 for v in m.prob.values())


def test_backoff_consistency():
    m = train_kn(toy_corpus(np.random.default_rng(5), 100), order=3)
    checked = 0
    for h in m.backoff:
        if len(h) != 2:
            continue
        for w in m.predictable:
            if h + (w,) not in m.prob:
                assert m.log10_prob(w, list(h)) == pytest.approx(
                    m.backoff[h] + m.log10_prob(w, list(h[1:])), abs=1e-12)
                checked += 1
    assert checked > 0


def test_training_errors():
    with pytest.raises(InvalidInputError):
        train_kn([], order=2)
    with pytest.raises(InvalidParameterError):
        train_kn(TOY, order=0)
    with pytest.raises(InvalidParameterError):
        train_kn(TOY, order=6)
    for d in (0.0, 1.0):
        with pytest.raises(InvalidParameterError):
            train_kn(TOY, discount=d)
    with pytest.raises(InvalidInputError):
        train_kn([["a", "</s>"]], order=2)


def test_progress_callback():
    calls = []
    corpus = [["w"] * 1000] * 2100
    train_kn(corpus, order=1, progress=calls.append)
    assert calls == [1_000_000, 2_000_000]


def test_score_sequence():
    m = train_kn(TOY, order=2)
    assert score_sequence(m, []) == pytest.approx(m.log10_prob(EOS, [BOS]))
    seen = score_sequence(m, ["a", "b"])
    oov = score_sequence(m, ["a", "zebra"])
    assert seen >= oov
    assert oov == pytest.approx(score_sequence(m, ["a", UNK]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "x"]), max_size=8))
def test_running_score_never_increases(tokens):
    m = train_kn(TOY, order=2)
    ctx, running = [BOS], 0.0
    for w in tokens:
        step = m.log10_prob(w, ctx)
        assert step <= 0
        running += step
        ctx.append(w)
    assert score_sequence(m, tokens) <= running + 1e-12


def test_arpa_layout_and_round_trip():
    m = train_kn(TOY, order=2)
    text = write_arpa(m)
    assert "\\data\\" in text and "\\1-grams:" in text and "\\2-grams:" in text
    assert text.rstrip().endswith("\\end\\")
    r = read_arpa(text)
    assert r.order == 2 and r.vocab == m.vocab
    for g, v in m.prob.items():
        assert r.prob[g] == pytest.approx(v, abs=1e-6)
    for g, v in m.backoff.items():
        assert r.backoff[g] == pytest.approx(v, abs=1e-6)
    assert write_arpa(r) == text


def test_arpa_round_trip_on_larger_corpus():
    rng = np.random.default_rng(9)
    corpus = toy_corpus(rng, 1000)
    m = train_kn(corpus, order=4)
    r = read_arpa(write_arpa(m))
    words = sorted(m.predictable) + ["unseen"]
    for _ in range(100):
        q = [words[i] for i in rng.integers(len(words), size=int(rng.integers(0, 9)))]
        assert score_sequence(r, q) == pytest.approx(score_sequence(m, q), abs=1e-6)


def test_training_is_deterministic():
    corpus = toy_corpus(np.random.default_rng(2), 300)
    assert write_arpa(train_kn(corpus, 3)) == write_arpa(train_kn(list(reversed(corpus)), 3))


@pytest.mark.parametrize("mutate,match", [
    (lambda t: t.replace("\\end\\", ""), "end"),
    (lambda t: t.replace("ngram 2=", "ngram 2=x"), "line 4"),
    (lambda t: t.replace("\\2-grams:", "\\3-grams:"), "2-grams"),
    (lambda t: t.replace("\t", " nope\t", 1), "line"),
    (lambda t: "junk\n" + t, "line 1"),
])
def test_malformed_arpa(mutate, match):
    text = write_arpa(train_kn(TOY, order=2))
    with pytest.raises(ParseError, match=match):
        read_arpa(mutate(text))


def test_arpa_needs_unknown_token():
    text = write_arpa(train_kn(TOY, order=1))
    lines = [ln for ln in text.splitlines() if "<unk>" not in ln]
    lines = [ln.replace("ngram 1=6", "ngram 1=5") for ln in lines]
    with pytest.raises(ParseError, match="unk"):
        read_arpa("\n".join(lines))


def test_score_sequence_matches_oracle_near_sentence_start():
    rng = np.random.default_rng(12)
    corpus = toy_corpus(rng, 80, words=("a", "b", "c", "d"), max_len=5)
    m = train_kn(corpus, order=4)
    ref = KneserNeyOracle(corpus, 4, 0.75)
    for _ in range(50):
        q = [("a", "b", "c", "d", "q")[i] for i in rng.integers(5, size=int(rng.integers(0, 6)))]
        assert score_sequence(m, q) == pytest.approx(ref.score(q), abs=1e-10)
