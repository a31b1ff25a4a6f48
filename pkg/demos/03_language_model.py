"""
Kneser-Ney language model and ARPA files
========================================

Train an interpolated Kneser-Ney model, query it and write it out in the
ARPA format used by common n-gram toolkits.
"""

import numpy as np

from ctcr.lm import read_arpa, score_sequence, train_kn, write_arpa
from ctcr.synthetic import toy_corpus

toy = train_kn([["a", "b"], ["a", "c"]], order=2, discount=0.75)
print("P(b | a) =", round(10 ** toy.log10_prob("b", ["a"]), 4))
print("P(<unk>) =", round(10 ** toy.log10_prob("zebra"), 4))
print(write_arpa(toy))

# a bigger random corpus and a 4-gram model
corpus = toy_corpus(np.random.default_rng(1), 2000)
lm = train_kn(corpus, order=4)
for sent in (["the", "of", "and"], ["the", "qwerty"]):
    print(" ".join(sent), "->", round(score_sequence(lm, sent), 3))

# every context distribution sums to one
ctx = lm.contexts()[5]
print(ctx, sum(10 ** lm.log10_prob(w, list(ctx)) for w in lm.predictable))

# round trip through text
back = read_arpa(write_arpa(lm))
print(score_sequence(back, ["the", "of", "and"]) == score_sequence(lm, ["the", "of", "and"]))
