import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctcr.ctc import (
    Alphabet,
    PosteriorSequence,
    brute_force_best_labeling,
    collapse,
    ctc_best_path_score,
    ctc_forward,
    forward_partials,
    greedy_decode,
    labeling_distribution,
)
from ctcr.errors import InstanceTooLargeError, InvalidInputError

from oracles import best_labeling, enumerate_paths, random_frames

AB = Alphabet.from_string("ab")


def post(rows, alphabet=AB):
    return PosteriorSequence(np.array(rows, dtype=float), alphabet)


def test_alphabet_rejects_duplicates_and_blank():
    with pytest.raises(InvalidInputError):
        Alphabet.from_string("aa")
    with pytest.raises(InvalidInputError):
        Alphabet(("a", "\x00"))
    assert AB.size == 3
    assert AB.encode("ba") == [2, 1]


def test_posterior_validation():
    with pytest.raises(InvalidInputError):
        post([[0.5, 0.5, 0.5]])
    with pytest.raises(InvalidInputError):
        post([[0.5, 0.5]])
    with pytest.raises(InvalidInputError):
        post(np.zeros((0, 3)))
    with pytest.raises(InvalidInputError):
        post([[1.2, -0.2, 0.0]])
    p = post([[0.2, 0.3, 0.5]])
    with pytest.raises(ValueError):
        p.frames[0, 0] = 1.0


@pytest.mark.parametrize("path,expected", [
    ([1, 1, 0, 2], "ab"),
    ([1, 0, 1], "aa"),
    ([0, 0, 0], ""),
    ([], ""),
    ([2, 2, 2, 1, 1], "ba"),
])
def test_collapse(path, expected):
    assert collapse(path, AB) == expected


def test_collapse_rejects_unknown_symbol():
    with pytest.raises(InvalidInputError):
        collapse([0, 3], AB)


@given(st.lists(st.integers(1, 2), max_size=12))
def test_collapse_idempotent_on_clean_sequences(seq):
    clean = [s for i, s in enumerate(seq) if i == 0 or s != seq[i - 1]]
    assert collapse(clean, AB) == "".join(AB.symbol(s) for s in clean)


def test_greedy_examples():
    p = post([[0.1, 0.8, 0.1], [0.2, 0.7, 0.1], [0.6, 0.2, 0.2], [0.1, 0.2, 0.7]])
    text, lp = greedy_decode(p)
    assert text == "ab"
    assert lp == pytest.approx(math.log(0.8 * 0.7 * 0.6 * 0.7))
    text, lp = greedy_decode(post([[0.9, 0.05, 0.05]]))
    assert text == "" and lp == pytest.approx(math.log(0.9))


def test_greedy_tie_goes_to_lowest_index():
    p = post(np.full((4, 3), 1 / 3))
    assert greedy_decode(p)[0] == ""
    p = post([[0.1, 0.45, 0.45]])
    assert greedy_decode(p)[0] == "a"


def test_forward_single_frame():
    p = post([[0.2, 0.5, 0.3]])
    assert ctc_forward(p, "a") == pytest.approx(math.log(0.5))
    assert ctc_forward(p, "") == pytest.approx(math.log(0.2))


def test_forward_two_frames_uniform():
    # paths (a,a), (a,-), (-,a)
    p = PosteriorSequence(np.full((2, 2), 0.5), Alphabet.from_string("a"))
    assert ctc_forward(p, "a") == pytest.approx(math.log(0.75), abs=1e-12)


def test_forward_unreachable_is_minus_inf():
    p = post([[0.2, 0.5, 0.3]] * 2)
    assert ctc_forward(p, "aa") == -math.inf
    assert ctc_forward(p, "abb") == -math.inf
    assert ctc_best_path_score(p, "aa") == -math.inf


def test_forward_rejects_foreign_characters():
    with pytest.raises(InvalidInputError):
        ctc_forward(post([[0.2, 0.5, 0.3]]), "z")


def test_forward_matches_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(40):
        T, C = int(rng.integers(1, 6)), int(rng.integers(2, 5))
        alpha = Alphabet.from_string("abc"[: C - 1])
        frames = random_frames(rng, T, C)
        p = PosteriorSequence(frames, alpha)
        dist = enumerate_paths(frames, alpha.symbols)
        for text, prob in dist.items():
            assert math.exp(ctc_forward(p, text)) == pytest.approx(prob, abs=1e-12)
        assert sum(math.exp(ctc_forward(p, t)) for t in dist) == pytest.approx(1.0, abs=1e-9)


def test_partials_sum_to_forward():
    rng = np.random.default_rng(3)
    p = PosteriorSequence(random_frames(rng, 6, 3), AB)
    for label in ["", "a", "ab", "aa", "bab"]:
        lb, lnb = forward_partials(p, label)
        assert np.logaddexp(lb, lnb) == pytest.approx(ctc_forward(p, label))


def test_labeling_distribution_and_best():
    rng = np.random.default_rng(5)
    for _ in range(20):
        frames = random_frames(rng, 3, 3)
        p = PosteriorSequence(frames, AB)
        ref_text, ref_p = best_labeling(frames, AB.symbols)
        text, lp = brute_force_best_labeling(p)
        assert text == ref_text
        assert math.exp(lp) == pytest.approx(ref_p, abs=1e-12)
        assert lp == pytest.approx(ctc_forward(p, text), abs=1e-12)
        dist = labeling_distribution(p)
        assert max(dist.values()) == pytest.approx(math.exp(lp))


def test_brute_force_refuses_large_instances():
    p = PosteriorSequence(np.full((13, 3), 1 / 3), AB)
    with pytest.raises(InstanceTooLargeError, match="3\\^13|1594323"):
        brute_force_best_labeling(p)


def test_brute_force_single_frame():
    assert brute_force_best_labeling(post([[0.7, 0.2, 0.1]]))[0] == ""
    assert brute_force_best_labeling(post([[0.1, 0.2, 0.7]]))[0] == "b"


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.text("ab", max_size=5))
def test_forward_properties(T, seed, label):
    rng = np.random.default_rng(seed)
    p = PosteriorSequence(random_frames(rng, T, 3, 0.5), AB)
    lf = ctc_forward(p, label)
    assert lf <= 1e-12
    assert ctc_best_path_score(p, label) <= lf + 1e-12
    text, path_lp = greedy_decode(p)
    assert path_lp <= ctc_forward(p, text) + 1e-12
