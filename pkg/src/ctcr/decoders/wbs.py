"""Word beam search: CTC prefix beam search constrained by a prefix-tree
lexicon, with an optional word bigram model applied at word completion.

Every maximal run of word characters in an output is a lexicon word;
non-word characters (space, punctuation, digits, ... by configuration) are
free. With ``lm_mode="bigram"`` a hypothesis gains
``lm_weight * ln P(word | previous word)`` each time a word is closed, either
by a following non-word character or by the end of the line. The first
word of a line is conditioned on ``<s>``.
"""
from __future__ import annotations

import math

from ..ctc import NEG_INF, PosteriorSequence, forward_partials
from ..errors import ConfigurationError, InvalidParameterError
from ..lm import BOS, NGramModel
from .beam import BeamParams, Hypothesis, logsumexp2
from .lexicon import PrefixLexicon, TrieNode

_LN10 = math.log(10.0)


class _Beam:
    __slots__ = ("pb", "pnb", "lm", "node", "word", "prev")

    def __init__(self, pb, pnb, lm, node, word, prev):
        self.pb = pb
        self.pnb = pnb
        self.lm = lm
        # trie node of the word being spelled, None between words
        self.node: TrieNode | None = node
        self.word: str = word
        self.prev: str = prev


def _check(p: PosteriorSequence, lex: PrefixLexicon, lm, params: BeamParams):
    if not lex.words:
        raise InvalidParameterError("lexicon is empty")
    symbols = set(p.alphabet.symbols)
    if lex.word_chars & lex.nonword_chars:
        raise ConfigurationError("word and non-word character sets overlap")
    unassigned = symbols - lex.word_chars - lex.nonword_chars
    if unassigned:
        raise ConfigurationError(
            f"alphabet characters assigned to neither class: {''.join(sorted(unassigned))!r}"
        )
    if params.lm_mode == "bigram" and lm is None:
        raise ConfigurationError("lm_mode='bigram' needs a language model")


def word_beam_search(
    p: PosteriorSequence,
    lex: PrefixLexicon,
    lm: NGramModel | None = None,
    params: BeamParams | None = None,
) -> list[Hypothesis]:
    """Decode ``p`` under the lexicon constraint.

    Hypotheses are ranked by ``optical_score + lm_score`` (ties: text).
    Beams still inside an unfinished word at the last frame are dropped; if
    none finished, the best one is completed with its shortest lexicon
    continuation and rescored with the forward algorithm.
    """
    if params is None:
        params = BeamParams()
    _check(p, lex, lm, params)
    use_lm = params.lm_mode == "bigram" and params.lm_weight != 0.0
    weight = params.lm_weight
    width = params.beam_width

    symbols = p.alphabet.symbols
    idx = {s: i + 1 for i, s in enumerate(symbols)}
    nonword = sorted(lex.nonword_chars, key=idx.__getitem__)
    nonword_idx = [(s, idx[s]) for s in nonword]
    root = lex.root
    root_ext = [(s, idx[s], n) for s, n in sorted(root.children.items())]

    lm_cache: dict[tuple[str, str], float] = {}

    def word_lm(prev: str, word: str) -> float:
        if not use_lm:
            return 0.0
        key = (prev, word)
        v = lm_cache.get(key)
        if v is None:
            v = lm_cache[key] = weight * _LN10 * lm.log10_prob(word, (prev,))
        return v

    beams: dict[str, _Beam] = {"": _Beam(0.0, NEG_INF, 0.0, None, "", BOS)}
    logs = p.log_frames.tolist()

    for row in logs:
        blank_lp = row[0]
        nxt: dict[str, _Beam] = {}
        for text, b in beams.items():
            total = logsumexp2(b.pb, b.pnb)
            cur = nxt.get(text)
            if cur is None:
                cur = nxt[text] = _Beam(NEG_INF, NEG_INF, b.lm, b.node, b.word, b.prev)
            cur.pb = logsumexp2(cur.pb, total + blank_lp)
            last = text[-1] if text else None
            if last is not None:
                lp = row[idx[last]]
                if lp != NEG_INF:
                    cur.pnb = logsumexp2(cur.pnb, b.pnb + lp)

            # word characters: continue the current word or start a new one
            if b.node is not None:
                ext = [(s, idx[s], n) for s, n in b.node.children.items()]
                word = b.word
            else:
                ext = root_ext
                word = ""
            for s, ci, child in ext:
                lp = row[ci]
                if lp == NEG_INF:
                    continue
                contrib = (b.pb if s == last else total) + lp
                new = text + s
                e = nxt.get(new)
                if e is None:
                    e = nxt[new] = _Beam(NEG_INF, NEG_INF, b.lm, child, word + s, b.prev)
                e.pnb = logsumexp2(e.pnb, contrib)

            # non-word characters: only between words or after a full word
            if b.node is not None and not b.node.is_word:
                continue
            closing = b.node is not None
            for s, ci in nonword_idx:
                lp = row[ci]
                if lp == NEG_INF:
                    continue
                contrib = (b.pb if s == last else total) + lp
                new = text + s
                e = nxt.get(new)
                if e is None:
                    if closing:
                        e = _Beam(NEG_INF, NEG_INF, b.lm + word_lm(b.prev, b.word), None, "", b.word)
                    else:
                        e = _Beam(NEG_INF, NEG_INF, b.lm, None, "", b.prev)
                    nxt[new] = e
                e.pnb = logsumexp2(e.pnb, contrib)

        ranked = sorted(nxt.items(), key=lambda kv: (-(logsumexp2(kv[1].pb, kv[1].pnb) + kv[1].lm), kv[0]))
        beams = dict(ranked[:width])

    finals = []
    for text, b in beams.items():
        lm_total = b.lm
        if b.node is not None:
            if not b.node.is_word:
                continue
            lm_total += word_lm(b.prev, b.word)
        finals.append(Hypothesis(text, b.pb, b.pnb, lm_total))

    if not finals:
        finals.append(_complete_best(p, beams, word_lm))

    finals.sort(key=lambda h: (-h.score, h.text))
    return finals


def _complete_best(p, beams, word_lm) -> Hypothesis:
    text, b = min(beams.items(), key=lambda kv: (-(logsumexp2(kv[1].pb, kv[1].pnb) + kv[1].lm), kv[0]))
    word = b.node.first_completion(b.word)
    full = text + word[len(b.word):]
    pb, pnb = forward_partials(p, full)
    return Hypothesis(full, pb, pnb, b.lm + word_lm(b.prev, word))
