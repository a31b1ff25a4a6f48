"""Word n-gram language models with interpolated Kneser-Ney smoothing.

Models are stored the way ARPA files store them: a table of log10
probabilities keyed by n-gram tuple and a table of log10 backoff weights
keyed by context tuple. For interpolated KN the backoff weight of a context
is exactly its interpolation weight, so the table form and the recursive
interpolated form agree everywhere.
"""
from __future__ import annotations

import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import InvalidInputError, InvalidParameterError, ParseError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
# ARPA convention for "never predicted"
BOS_LOG10 = -99.0

Corpus = Sequence[Sequence[str]]


@dataclass
class NGramModel:
    order: int
    vocab: frozenset
    prob: dict = field(repr=False)
    backoff: dict = field(repr=False)
    discount: float | None = None

    def __post_init__(self):
        if not 1 <= self.order <= 5:
            raise InvalidParameterError(f"order must be in 1..5, got {self.order}")

    @property
    def predictable(self) -> list[str]:
        """Tokens that can be predicted, i.e. the vocabulary minus ``<s>``."""
        return sorted(w for w in self.vocab if w != BOS)

    def _map(self, w: str) -> str:
        return w if w in self.vocab else UNK

    def log10_prob(self, word: str, context: Sequence[str] = ()) -> float:
        """log10 P(word | context). Only the last ``order - 1`` context
        words are used; unknown words on either side map to ``<unk>``."""
        word = self._map(word)
        n_ctx = self.order - 1
        ctx = tuple(self._map(w) for w in context[max(0, len(context) - n_ctx):]) if n_ctx else ()
        total = 0.0
        while True:
            key = ctx + (word,)
            lp = self.prob.get(key)
            if lp is not None:
                return total + lp
            if not ctx:
                # only reachable for malformed tables
                raise KeyError(f"no unigram entry for {word!r}")
            total += self.backoff.get(ctx, 0.0)
            ctx = ctx[1:]

    def contexts(self) -> list[tuple]:
        """Every context with a stored backoff weight, plus the empty one."""
        return [()] + sorted(self.backoff, key=lambda c: (len(c), c))


def _pad(sentence: Sequence[str]) -> list[str]:
    return [BOS, *sentence, EOS]


def train_kn(
    corpus: Iterable[Sequence[str]],
    order: int = 4,
    discount: float = 0.75,
    progress: Callable[[int], None] | None = None,
) -> NGramModel:
    """Interpolated Kneser-Ney with one fixed absolute discount.

    The highest order uses raw counts, lower orders use continuation counts
    (number of distinct left neighbours) except for n-grams that start with
    ``<s>``, which keep raw counts. The unigram level is interpolated with a
    uniform distribution over the predictable vocabulary, which is where
    ``<unk>`` gets its mass.

    ``progress`` is called with the running token count after each million
    tokens.
    """
    if order < 1:
        raise InvalidParameterError(f"order must be >= 1, got {order}")
    if order > 5:
        raise InvalidParameterError(f"order must be <= 5, got {order}")
    if not 0.0 < discount < 1.0:
        raise InvalidParameterError(f"discount must be in (0, 1), got {discount}")

    raw = [Counter() for _ in range(order + 1)]
    n_sent = 0
    n_tok = 0
    next_report = 10**6
    for sent in corpus:
        toks = _pad(list(sent))
        for tok in toks[1:-1]:
            if tok in (BOS, EOS, UNK):
                raise InvalidInputError(f"reserved token {tok!r} in corpus")
        n_sent += 1
        n_tok += len(toks) - 2
        L = len(toks)
        for n in range(1, order + 1):
            cn = raw[n]
            for i in range(L - n + 1):
                cn[tuple(toks[i:i + n])] += 1
        if progress is not None and n_tok >= next_report:
            progress(n_tok)
            next_report += 10**6
    if n_sent == 0:
        raise InvalidInputError("corpus is empty")

    # adjusted counts per order
    adj = [None] * (order + 1)
    adj[order] = raw[order]
    for n in range(order - 1, 0, -1):
        cont = Counter()
        for g in raw[n + 1]:
            cont[g[1:]] += 1
        a = Counter()
        for g, c in raw[n].items():
            a[g] = c if g[0] == BOS else cont[g]
        adj[n] = a

    words = {g[0] for g in raw[1]} - {BOS}
    predictable = sorted(words | {EOS, UNK})
    vocab = frozenset(predictable) | {BOS}

    prob: dict[tuple, float] = {}
    backoff: dict[tuple, float] = {}

    # unigrams
    uni = {w: adj[1].get((w,), 0) for w in predictable}
    denom = sum(uni.values())
    n_plus = sum(1 for c in uni.values() if c > 0)
    floor = discount * n_plus / denom / len(predictable)
    p_lower = {}
    for w in predictable:
        p = max(uni[w] - discount, 0.0) / denom + floor
        p_lower[(w,)] = p
        prob[(w,)] = math.log10(p)
    prob[(BOS,)] = BOS_LOG10

    for n in range(2, order + 1):
        ctx_tot = defaultdict(float)
        ctx_types = Counter()
        for g, c in adj[n].items():
            ctx_tot[g[:-1]] += c
            ctx_types[g[:-1]] += 1
        gamma = {h: discount * ctx_types[h] / ctx_tot[h] for h in ctx_tot}
        p_here = {}
        for g in sorted(adj[n]):
            h = g[:-1]
            lower = p_lower.get(g[1:])
            if lower is None:
                lower = 10.0 ** _query(prob, backoff, g[1:])
            p = (adj[n][g] - discount) / ctx_tot[h] + gamma[h] * lower
            p_here[g] = p
            prob[g] = math.log10(p)
        for h, gm in gamma.items():
            backoff[h] = math.log10(gm)
        p_lower = p_here

    return NGramModel(order=order, vocab=vocab, prob=prob, backoff=backoff, discount=discount)


def _query(prob, backoff, gram):
    total = 0.0
    ctx, word = gram[:-1], gram[-1]
    while ctx + (word,) not in prob:
        total += backoff.get(ctx, 0.0)
        ctx = ctx[1:]
    return total + prob[ctx + (word,)]


def score_sequence(model: NGramModel, tokens: Sequence[str]) -> float:
    """log10 probability of a token sequence, ``</s>`` included."""
    ctx = [BOS]
    total = 0.0
    for w in [*tokens, EOS]:
        total += model.log10_prob(w, ctx)
        ctx.append(w)
    return total


def read_corpus(path: str | os.PathLike) -> list[list[str]]:
    """One sentence per line, already normalised, whitespace tokenised."""
    with open(path, encoding="utf-8") as fh:
        return [ln.split() for ln in fh if ln.strip()]


# ---------------------------------------------------------------- ARPA I/O

def _fmt(v: float) -> str:
    return repr(float(v))


def write_arpa(model: NGramModel) -> str:
    by_order = defaultdict(list)
    for g in model.prob:
        by_order[len(g)].append(g)
    out = ["", "\\data\\"]
    for n in range(1, model.order + 1):
        out.append(f"ngram {n}={len(by_order[n])}")
    for n in range(1, model.order + 1):
        out.append("")
        out.append(f"\\{n}-grams:")
        for g in sorted(by_order[n]):
            line = f"{_fmt(model.prob[g])}\t{' '.join(g)}"
            if g in model.backoff:
                line += f"\t{_fmt(model.backoff[g])}"
            out.append(line)
    out.append("")
    out.append("\\end\\")
    out.append("")
    return "\n".join(out)


def read_arpa(text: str) -> NGramModel:
    lines = text.splitlines()
    i = 0
    n_lines = len(lines)

    def skip_blank():
        nonlocal i
        while i < n_lines and not lines[i].strip():
            i += 1

    skip_blank()
    if i >= n_lines or lines[i].strip() != "\\data\\":
        raise ParseError("expected \\data\\", i + 1)
    i += 1
    declared: dict[int, int] = {}
    while i < n_lines and lines[i].strip().startswith("ngram "):
        try:
            lhs, rhs = lines[i].strip()[6:].split("=")
            declared[int(lhs)] = int(rhs)
        except ValueError:
            raise ParseError("bad 'ngram N=count' line", i + 1) from None
        i += 1
    if not declared:
        raise ParseError("no ngram counts in \\data\\ section", i + 1)
    order = max(declared)
    if sorted(declared) != list(range(1, order + 1)):
        raise ParseError("ngram orders in \\data\\ must be 1..N", i)

    prob: dict[tuple, float] = {}
    backoff: dict[tuple, float] = {}
    for n in range(1, order + 1):
        skip_blank()
        if i >= n_lines or lines[i].strip() != f"\\{n}-grams:":
            raise ParseError(f"expected \\{n}-grams:", i + 1)
        i += 1
        seen = 0
        while i < n_lines and lines[i].strip() and not lines[i].startswith("\\"):
            parts = lines[i].split()
            if len(parts) not in (n + 1, n + 2):
                raise ParseError(f"expected {n}-gram entry", i + 1)
            try:
                lp = float(parts[0])
                bo = float(parts[n + 1]) if len(parts) == n + 2 else None
            except ValueError:
                raise ParseError("non-numeric probability or backoff", i + 1) from None
            g = tuple(parts[1:n + 1])
            prob[g] = lp
            if bo is not None:
                backoff[g] = bo
            seen += 1
            i += 1
        if seen != declared[n]:
            raise ParseError(f"\\data\\ declares {declared[n]} {n}-grams, found {seen}", i + 1)
    skip_blank()
    if i >= n_lines or lines[i].strip() != "\\end\\":
        raise ParseError("missing \\end\\", min(i + 1, n_lines))
    vocab = frozenset(g[0] for g in prob if len(g) == 1)
    if UNK not in vocab:
        raise ParseError(f"unigram table has no {UNK} entry")
    return NGramModel(order=order, vocab=vocab, prob=prob, backoff=backoff)


def save_arpa(path: str | os.PathLike, model: NGramModel) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_arpa(model))


def load_arpa(path: str | os.PathLike) -> NGramModel:
    with open(path, encoding="utf-8") as fh:
        return read_arpa(fh.read())
