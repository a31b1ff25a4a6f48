import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctcr.ctc import Alphabet, PosteriorSequence
from ctcr.errors import ParseError
from ctcr.fileio import (
    decode_posteriors_binary,
    encode_posteriors_binary,
    escape_alphabet,
    format_posteriors,
    line_id_for,
    parse_posteriors,
    read_posteriors,
    read_transcriptions,
    read_word_list,
    unescape_alphabet,
    write_posteriors,
    write_word_list,
)

ALPHA = Alphabet(("a", " ", "\\", "\t", "é"))


def sample(T=4, seed=0):
    rng = np.random.default_rng(seed)
    return PosteriorSequence(rng.dirichlet(np.ones(ALPHA.size), size=T), ALPHA)


def test_alphabet_escaping():
    line = escape_alphabet(ALPHA)
    assert line == "\\0a\\s\\\\\\té"
    assert unescape_alphabet(line) == ALPHA
    with pytest.raises(ParseError):
        unescape_alphabet("ab")
    with pytest.raises(ParseError):
        unescape_alphabet("\\0a\\q")
    with pytest.raises(ParseError):
        unescape_alphabet("\\0a\\0")


@given(st.lists(st.characters(blacklist_characters="\x00", blacklist_categories=("Cs",)),
                min_size=1, max_size=10, unique=True))
def test_alphabet_round_trip_property(chars):
    a = Alphabet(tuple(chars))
    assert unescape_alphabet(escape_alphabet(a)) == a


def test_text_round_trip_is_exact():
    p = sample()
    q = parse_posteriors(format_posteriors(p))
    assert q.alphabet == p.alphabet
    assert np.array_equal(q.frames, p.frames)


def test_binary_round_trip():
    p = sample()
    q = decode_posteriors_binary(encode_posteriors_binary(p))
    assert q.alphabet == p.alphabet
    assert np.allclose(q.frames, p.frames, atol=1e-6)
    assert np.allclose(q.frames.sum(axis=1), 1.0, atol=1e-6)


def test_files_are_interchangeable(tmp_path):
    p = sample()
    write_posteriors(tmp_path / "x.txt", p)
    write_posteriors(tmp_path / "y.bin", p, binary=True)
    a, b = read_posteriors(tmp_path / "x.txt"), read_posteriors(tmp_path / "y.bin")
    assert np.allclose(a.frames, b.frames, atol=1e-6)
    assert line_id_for(tmp_path / "x.txt") == "x"


def test_low_precision_rows_are_renormalised():
    text = "1 3\n\\0ab\n0.3333 0.3333 0.3333\n"
    p = parse_posteriors(text)
    assert p.frames.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParseError):
        parse_posteriors("1 3\n\\0ab\n0.5 0.5 0.5\n")


@pytest.mark.parametrize("text,line", [
    ("x\n\\0a\n", "line 1"),
    ("1 3\n\\0a\n0.5 0.5\n", "line 2"),
    ("2 2\n\\0a\n0.5 0.5\n", "line 4"),
    ("1 2\n\\0a\n0.5 x\n", "line 3"),
    ("1 2\n\\0a\n0.5\n", "line 3"),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError, match=line):
        parse_posteriors(text)


def test_binary_errors():
    data = encode_posteriors_binary(sample())
    with pytest.raises(ParseError):
        decode_posteriors_binary(b"XXXX" + data[4:])
    with pytest.raises(ParseError):
        decode_posteriors_binary(data[:-4])
    with pytest.raises(ParseError):
        decode_posteriors_binary(data[:8])


def test_tsv_and_word_lists(tmp_path):
    f = tmp_path / "h.tsv"
    f.write_text("b\tsecond line\t-1.5\na\tfirst\n\nc\t\n", encoding="utf-8")
    assert read_transcriptions(f) == {"b": "second line", "a": "first", "c": ""}
    f.write_text("a\tx\na\ty\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        read_transcriptions(f)
    write_word_list(tmp_path / "w.txt", ["the", "cat"])
    assert read_word_list(tmp_path / "w.txt") == ["the", "cat"]
