"""
Error rates and error distributions
===================================

Character and word error rates under the three case / punctuation
conditions, cumulative per-line error counts and out-of-vocabulary rates.
"""

import numpy as np

from ctcr.metrics import CASE_PUNCT_SWEEP, evaluate, normalize, LM_MODE, oov_rate
from ctcr.synthetic import WORDS, corrupt

rng = np.random.default_rng(3)
refs = []
for _ in range(200):
    words = [WORDS[i] for i in rng.integers(len(WORDS), size=int(rng.integers(3, 9)))]
    words[0] = words[0].capitalize()
    refs.append(" ".join(words) + rng.choice([".", ",", "!", ""]))
hyps = [corrupt(r, rng, "abcdefghijklmnopqrstuvwxyz", int(rng.poisson(1.0))) if rng.random() < 0.6 else r
        for r in refs]
# a few lines with case errors only
hyps[:20] = [h.lower() for h in hyps[:20]]

for mode in CASE_PUNCT_SWEEP:
    rep = evaluate(zip(hyps, refs), mode)
    print(f"{mode.name:11} CER {rep.corpus_cer:5.2f}  WER {rep.corpus_wer:5.2f}")

rep = evaluate(zip(hyps, refs))
print("lines with no character error:", f"{rep.fraction_at_most(0):.0%}")
print("cumulative char errors:", rep.cumulative_char_hist[:6])
print(f"reference length {rep.ref_chars_mean:.1f} +- {rep.ref_chars_std:.1f} characters")

lexicon = set(WORDS[:40])
norm = [normalize(r, LM_MODE) for r in refs]
print(f"OOV rate with a 40-word lexicon: {oov_rate(lexicon, norm):.3f}")
print(f"OOV rate with the full list: {oov_rate(set(WORDS), norm):.3f}")
