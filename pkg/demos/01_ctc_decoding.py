"""
Greedy decoding and the CTC forward score
=========================================

A posterior matrix holds one probability distribution per frame. Greedy
decoding reads the best class per frame; the forward algorithm sums every
frame path that collapses to a given text.
"""

import math

import numpy as np

from ctcr.ctc import Alphabet, PosteriorSequence, collapse, ctc_best_path_score, ctc_forward, greedy_decode

# blank is column 0, then the alphabet symbols in order
alphabet = Alphabet.from_string("ab")
frames = np.array([
    [0.1, 0.7, 0.2],
    [0.4, 0.5, 0.1],
    [0.6, 0.1, 0.3],
    [0.2, 0.1, 0.7],
])
p = PosteriorSequence(frames, alphabet)

# collapse merges repeats and then removes blanks
print(collapse([1, 1, 0, 2], alphabet), collapse([1, 0, 1], alphabet))

text, path_logp = greedy_decode(p)
print("greedy:", repr(text), "best path p =", round(math.exp(path_logp), 4))

# the labeling's total probability is at least its best path
print("forward p(ab) =", round(math.exp(ctc_forward(p, "ab")), 4))
print("best path p(ab) =", round(math.exp(ctc_best_path_score(p, "ab")), 4))

# a text that needs more frames than available scores zero
print(ctc_forward(p, "aaaa"))
