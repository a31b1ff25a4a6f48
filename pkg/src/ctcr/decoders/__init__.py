"""Decoders turning a posterior matrix into ranked transcriptions."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..ctc import PosteriorSequence, ctc_best_path_score, ctc_forward, greedy_decode
from ..errors import ConfigurationError, InvalidParameterError
from ..lm import NGramModel
from .beam import BeamParams, Hypothesis, beam_search, logsumexp2
from .lexicon import DEFAULT_WORD_CHARS, PrefixLexicon, TrieNode, build_prefix_lexicon
from .wbs import word_beam_search

DECODER_KINDS = ("greedy", "beam", "wbs")
# how the optical score of the chosen transcription is reported
OP_SCORE_MODES = ("forward", "best-path", "beam")

__all__ = [
    "BeamParams", "Hypothesis", "beam_search", "word_beam_search", "logsumexp2",
    "PrefixLexicon", "TrieNode", "build_prefix_lexicon", "DEFAULT_WORD_CHARS",
    "DecoderConfig", "Decoded", "decode", "DECODER_KINDS", "OP_SCORE_MODES",
]


@dataclass(frozen=True)
class DecoderConfig:
    """Everything needed to decode one posterior matrix.

    ``op_score`` selects the optical score returned with the text:
    ``forward`` is the summed probability of all paths of the labeling,
    ``best-path`` the most likely single path, ``beam`` whatever the decoder
    accumulated (pruned beams make it a lower bound of ``forward``).
    """

    kind: str = "wbs"
    params: BeamParams = field(default_factory=BeamParams)
    lexicon: PrefixLexicon | None = None
    lm: NGramModel | None = None
    op_score: str = "forward"

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise InvalidParameterError(f"decoder kind must be one of {DECODER_KINDS}, got {self.kind!r}")
        if self.op_score not in OP_SCORE_MODES:
            raise InvalidParameterError(f"op_score must be one of {OP_SCORE_MODES}, got {self.op_score!r}")
        if self.kind == "wbs" and self.lexicon is None:
            raise ConfigurationError("word beam search needs a lexicon")


@dataclass(frozen=True)
class Decoded:
    text: str
    op_s: float


def decode(p: PosteriorSequence, config: DecoderConfig) -> Decoded:
    if config.kind == "greedy":
        text, beam_score = greedy_decode(p)
    elif config.kind == "beam":
        params = BeamParams(config.params.beam_width, "none", config.params.lm_weight)
        top = beam_search(p, params)[0]
        text, beam_score = top.text, top.optical_score
    else:
        top = word_beam_search(p, config.lexicon, config.lm, config.params)[0]
        text, beam_score = top.text, top.optical_score

    if config.op_score == "forward":
        op_s = ctc_forward(p, text)
    elif config.op_score == "best-path":
        op_s = ctc_best_path_score(p, text)
    else:
        op_s = beam_score
    return Decoded(text, op_s)
