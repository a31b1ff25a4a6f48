"""
Selecting among test-time augmented decodings
=============================================

Each line has the original posteriors plus 16 variants. Every member is
decoded, scored by ``lam * op_s + omega * lm_s`` and the best one kept. The
oracle picks the candidate closest to the reference instead and bounds
what any selector can reach.
"""

import tempfile

import numpy as np

from ctcr.decoders import BeamParams, DecoderConfig
from ctcr.lm import train_kn
from ctcr.metrics import corpus_cer
from ctcr.synthetic import synthetic_tta_manifest, toy_corpus
from ctcr.tta import decode_bundle, fit_weights, iter_manifest, pick, rescore, select_oracle

work = tempfile.mkdtemp()
entries = synthetic_tta_manifest(work, np.random.default_rng(7), n_lines=12, write_images=False)
bundles = list(iter_manifest(f"{work}/manifest.json"))

corpus = toy_corpus(np.random.default_rng(0), 500) + [e["reference"].split() for e in entries]
lm = train_kn(corpus, order=4)
decoder = DecoderConfig("greedy", BeamParams(1, "none"))

# decode once, then rescore under different weights
decoded = [decode_bundle(b, decoder, lm) for b in bundles]
first = decoded[0]
for d in first[:4]:
    print(f"{d.source:10} {d.text!r:28} op {d.op_s:8.2f}  lm {d.lm_s:7.2f}")

for lam, omega in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]:
    chosen = [(pick(rescore(d, lam, omega)).text, b.reference) for d, b in zip(decoded, bundles)]
    print(f"lam={lam} omega={omega}: CER {corpus_cer(chosen):.2f}")

original = [(d[0].text, b.reference) for d, b in zip(decoded, bundles)]
oracle = [(select_oracle(b, decoder)[0], b.reference) for b in bundles]
print(f"original only: CER {corpus_cer(original):.2f}, oracle: CER {corpus_cer(oracle):.2f}")

print("fitted weights:", fit_weights(bundles, [0.5, 1.0, 2.0], [0.0, 0.5, 1.0], decoder, lm))
