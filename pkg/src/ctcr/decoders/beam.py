"""CTC prefix beam search."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..ctc import NEG_INF, PosteriorSequence
from ..errors import InvalidParameterError

LM_MODES = ("none", "bigram")


def logsumexp2(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True)
class BeamParams:
    beam_width: int = 150
    lm_mode: str = "bigram"
    lm_weight: float = 1.0

    def __post_init__(self):
        if not isinstance(self.beam_width, int) or self.beam_width < 1:
            raise InvalidParameterError(f"beam_width must be a positive integer, got {self.beam_width!r}")
        if self.lm_mode not in LM_MODES:
            raise InvalidParameterError(f"lm_mode must be one of {LM_MODES}, got {self.lm_mode!r}")
        if not self.lm_weight >= 0.0:
            raise InvalidParameterError(f"lm_weight must be >= 0, got {self.lm_weight!r}")


@dataclass(frozen=True)
class Hypothesis:
    """A decoded labeling with its blank / non-blank ending log-probabilities.

    ``lm_score`` is the (weighted, natural-log) language model contribution
    used for ranking by word beam search; it is 0 for plain beam search.
    """

    text: str
    log_p_blank: float
    log_p_nonblank: float
    lm_score: float = 0.0

    @property
    def optical_score(self) -> float:
        return logsumexp2(self.log_p_blank, self.log_p_nonblank)

    @property
    def score(self) -> float:
        return self.optical_score + self.lm_score


def _rank_key(item):
    text, (pb, pnb) = item
    return (-logsumexp2(pb, pnb), text)


def beam_search(p: PosteriorSequence, params: BeamParams | None = None) -> list[Hypothesis]:
    """Prefix beam search without language model.

    Prefixes that collapse to the same labeling are merged; the beam keeps
    the ``beam_width`` prefixes with the highest total probability, ties
    going to the lexicographically smaller text.
    """
    if params is None:
        params = BeamParams(lm_mode="none")
    if params.lm_mode != "none":
        raise InvalidParameterError("beam_search does not use a language model; set lm_mode='none'")
    width = params.beam_width
    symbols = p.alphabet.symbols
    n_sym = len(symbols)
    logs = p.log_frames.tolist()

    beams: dict[str, tuple[float, float]] = {"": (0.0, NEG_INF)}
    for row in logs:
        blank_lp = row[0]
        nxt: dict[str, list[float]] = {}
        for text, (pb, pnb) in beams.items():
            total = logsumexp2(pb, pnb)
            entry = nxt.get(text)
            if entry is None:
                entry = nxt[text] = [NEG_INF, NEG_INF]
            entry[0] = logsumexp2(entry[0], total + blank_lp)
            last = text[-1] if text else None
            for c in range(n_sym):
                lp = row[c + 1]
                if lp == NEG_INF:
                    continue
                s = symbols[c]
                if s == last:
                    # repeat without a blank stays on the same prefix
                    entry[1] = logsumexp2(entry[1], pnb + lp)
                    contrib = pb + lp
                else:
                    contrib = total + lp
                new = text + s
                e2 = nxt.get(new)
                if e2 is None:
                    e2 = nxt[new] = [NEG_INF, NEG_INF]
                e2[1] = logsumexp2(e2[1], contrib)
        items = sorted(((t, (v[0], v[1])) for t, v in nxt.items()), key=_rank_key)
        beams = dict(items[:width])

    return [Hypothesis(t, pb, pnb) for t, (pb, pnb) in sorted(beams.items(), key=_rank_key)]
