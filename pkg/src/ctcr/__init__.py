"""CTC decoding, n-gram language models, augmentation and test-time
augmentation rescoring for handwritten line recognition."""

__version__ = "0.1.0"

from .ctc import Alphabet, PosteriorSequence, collapse, ctc_best_path_score, ctc_forward, greedy_decode
from .decoders import BeamParams, DecoderConfig, beam_search, build_prefix_lexicon, decode, word_beam_search
from .lm import NGramModel, read_arpa, score_sequence, train_kn, write_arpa
from .metrics import NormalizationMode, corpus_cer, edit_distance, evaluate, normalize, oov_rate

__all__ = [
    "Alphabet", "PosteriorSequence", "collapse", "ctc_best_path_score", "ctc_forward", "greedy_decode",
    "BeamParams", "DecoderConfig", "beam_search", "build_prefix_lexicon", "decode", "word_beam_search",
    "NGramModel", "read_arpa", "score_sequence", "train_kn", "write_arpa",
    "NormalizationMode", "corpus_cer", "edit_distance", "evaluate", "normalize", "oov_rate",
]
