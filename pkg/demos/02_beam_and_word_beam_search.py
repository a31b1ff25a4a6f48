"""
Beam search and lexicon-constrained word beam search
====================================================

A fabricated line reads "thc cat" under greedy decoding. Word beam search
with a small lexicon and a word bigram model pulls it onto real words.
"""

import numpy as np

from ctcr.ctc import Alphabet, greedy_decode
from ctcr.decoders import BeamParams, beam_search, build_prefix_lexicon, word_beam_search
from ctcr.lm import train_kn
from ctcr.synthetic import fabricate_posteriors

alphabet = Alphabet.from_string("abcdefghijklmnopqrstuvwxyz '")
rng = np.random.default_rng(0)
p = fabricate_posteriors("thc cat", alphabet, rng, peak=0.6)
print("greedy:", greedy_decode(p)[0])

# plain prefix beam search keeps the spelling the optics prefer
for h in beam_search(p, BeamParams(20, "none"))[:3]:
    print(f"beam  {h.text!r:12} {h.optical_score:8.3f}")

# words may only be spelled along the prefix tree; space is free
lexicon = build_prefix_lexicon(["the", "cat", "a", "sat"], alphabet)
lm = train_kn([["the", "cat", "sat"], ["a", "cat"]], order=2)
for h in word_beam_search(p, lexicon, lm, BeamParams(150, "bigram", 1.0))[:3]:
    print(f"wbs   {h.text!r:12} optical {h.optical_score:8.3f}  lm {h.lm_score:7.3f}")
