"""Text normalisation, edit distance, CER/WER reports and OOV rates."""
from __future__ import annotations

import json
import math
import string
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

SCHEMA_VERSION = 1

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


@dataclass(frozen=True)
class NormalizationMode:
    case_sensitive: bool = True
    keep_punctuation: bool = True

    @property
    def name(self) -> str:
        case = "cs" if self.case_sensitive else "ci"
        punct = "punct" if self.keep_punctuation else "nopunct"
        return f"{case}+{punct}"

    @classmethod
    def parse(cls, name: str) -> "NormalizationMode":
        try:
            case, punct = name.split("+")
            return cls(case_sensitive={"cs": True, "ci": False}[case],
                       keep_punctuation={"punct": True, "nopunct": False}[punct])
        except (ValueError, KeyError):
            raise InvalidInputError(
                f"unknown normalization mode {name!r}; use cs|ci + punct|nopunct, e.g. 'ci+nopunct'"
            ) from None


DEFAULT_MODE = NormalizationMode()
# preprocessing applied to language model training text and to LM queries
LM_MODE = NormalizationMode(case_sensitive=False, keep_punctuation=False)
# the three decoding conditions compared for letter case and punctuation
CASE_PUNCT_SWEEP = (
    NormalizationMode(True, True),
    NormalizationMode(False, True),
    NormalizationMode(False, False),
)


def normalize(text: str, mode: NormalizationMode = DEFAULT_MODE) -> str:
    if not mode.case_sensitive:
        text = text.lower()
    if not mode.keep_punctuation:
        text = text.translate(_PUNCT_TABLE)
    return " ".join(text.split())


def tokenize(text: str, mode: NormalizationMode = LM_MODE) -> list[str]:
    return normalize(text, mode).split()


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Unit-cost Levenshtein distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


@dataclass
class LineResult:
    line_id: str
    char_edits: int
    char_ref_len: int
    word_edits: int
    word_ref_len: int
    empty_reference: bool = False


def _cumulative(edits: list[int]) -> list[int]:
    if not edits:
        return []
    hist = np.bincount(np.asarray(edits, dtype=np.int64))
    return np.cumsum(hist).tolist()


def _rate(edits: int, length: int) -> float:
    if length == 0:
        return 0.0 if edits == 0 else math.inf
    return 100.0 * edits / length


@dataclass
class EvalReport:
    mode: str
    per_line: list[LineResult]
    corpus_cer: float
    corpus_wer: float
    cumulative_char_hist: list[int]
    cumulative_word_hist: list[int]
    ref_chars_mean: float
    ref_chars_std: float
    ref_words_mean: float
    flagged: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def line_count(self) -> int:
        return len(self.per_line)

    def fraction_at_most(self, errors: int, words: bool = False) -> float:
        """Share of lines with at most ``errors`` errors."""
        hist = self.cumulative_word_hist if words else self.cumulative_char_hist
        if not hist:
            return 0.0
        return hist[min(errors, len(hist) - 1)] / self.line_count

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        d["line_count"] = self.line_count
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def evaluate(
    pairs: Iterable[tuple[str, str]],
    mode: NormalizationMode = DEFAULT_MODE,
    line_ids: Sequence[str] | None = None,
    count_spaces: bool = True,
) -> EvalReport:
    """Corpus CER/WER (micro-averaged, in percent) over (hypothesis,
    reference) pairs, plus per-line edits and cumulative error histograms.

    Lines with an empty normalised reference contribute all hypothesis
    characters as edits against a zero length and are listed in ``flagged``.
    """
    pairs = list(pairs)
    if not pairs:
        raise InvalidInputError("evaluate needs at least one (hypothesis, reference) pair")
    if line_ids is None:
        line_ids = [str(i) for i in range(len(pairs))]
    elif len(line_ids) != len(pairs):
        raise InvalidInputError("line_ids and pairs differ in length")

    rows = []
    flagged = []
    for lid, (hyp, ref) in zip(line_ids, pairs):
        h = normalize(hyp, mode)
        r = normalize(ref, mode)
        hc, rc = (h, r) if count_spaces else (h.replace(" ", ""), r.replace(" ", ""))
        hw, rw = h.split(), r.split()
        empty = not r
        if empty:
            flagged.append(lid)
        rows.append(LineResult(lid, edit_distance(hc, rc), len(rc), edit_distance(hw, rw), len(rw), empty))

    ce = sum(r.char_edits for r in rows)
    cl = sum(r.char_ref_len for r in rows)
    we = sum(r.word_edits for r in rows)
    wl = sum(r.word_ref_len for r in rows)
    ref_lens = np.array([r.char_ref_len for r in rows], dtype=float)
    return EvalReport(
        mode=mode.name,
        per_line=rows,
        corpus_cer=_rate(ce, cl),
        corpus_wer=_rate(we, wl),
        cumulative_char_hist=_cumulative([r.char_edits for r in rows]),
        cumulative_word_hist=_cumulative([r.word_edits for r in rows]),
        ref_chars_mean=float(ref_lens.mean()),
        ref_chars_std=float(ref_lens.std()),
        ref_words_mean=float(np.mean([r.word_ref_len for r in rows])),
        flagged=flagged,
        config={"mode": mode.name, "count_spaces": count_spaces, "averaging": "micro"},
    )


def corpus_cer(pairs: Iterable[tuple[str, str]], mode: NormalizationMode = DEFAULT_MODE) -> float:
    return evaluate(pairs, mode).corpus_cer


def oov_rate(lexicon: Iterable[str], references: Iterable[str]) -> float:
    """Fraction of whitespace tokens in ``references`` missing from ``lexicon``."""
    lex = set(lexicon)
    total = 0
    missing = 0
    for line in references:
        for tok in line.split():
            total += 1
            missing += tok not in lex
    if total == 0:
        raise InvalidInputError("no reference tokens to compute an OOV rate over")
    return missing / total
