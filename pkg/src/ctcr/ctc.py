"""CTC primitives: alphabets, posterior matrices, collapse, greedy decoding
and the forward algorithm.

Conventions used throughout the package:

* class index 0 is the CTC blank; alphabet symbol ``i`` lives in column ``i + 1``
* all probability arithmetic is done with natural logs
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InstanceTooLargeError, InvalidInputError

BLANK = 0
NEG_INF = float("-inf")

_ROW_SUM_TOL = 1e-6
_BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of printable symbols. The blank is implicit at index 0."""

    symbols: tuple[str, ...]
    blank_index: int = field(default=BLANK, init=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(set(symbols)) != len(symbols):
            raise InvalidInputError("alphabet symbols must be unique")
        for s in symbols:
            if not isinstance(s, str) or len(s) != 1:
                raise InvalidInputError(f"alphabet symbol {s!r} is not a single character")
            if s == "\x00":
                raise InvalidInputError("NUL is reserved for the blank")
        object.__setattr__(self, "_index", {s: i + 1 for i, s in enumerate(symbols)})

    @classmethod
    def from_string(cls, chars: str) -> "Alphabet":
        return cls(tuple(chars))

    @property
    def size(self) -> int:
        """Number of classes C, blank included."""
        return len(self.symbols) + 1

    def __len__(self):
        return self.size

    def __contains__(self, ch):
        return ch in self._index

    def index(self, ch: str) -> int:
        try:
            return self._index[ch]
        except KeyError:
            raise InvalidInputError(f"character {ch!r} is not in the alphabet") from None

    def encode(self, text: str) -> list[int]:
        return [self.index(ch) for ch in text]

    def symbol(self, idx: int) -> str:
        """Printable symbol for a non-blank class index."""
        if not 1 <= idx < self.size:
            raise InvalidInputError(f"class index {idx} is not a printable symbol")
        return self.symbols[idx - 1]


class PosteriorSequence:
    """A T x C row-stochastic matrix of per-frame class posteriors.

    The frames are copied and frozen on construction. ``log_frames`` caches
    the elementwise natural log (``-inf`` where a probability is 0).
    """

    __slots__ = ("frames", "alphabet", "_log")

    def __init__(self, frames, alphabet: Alphabet, *, renormalize: bool = False, tol: float = _ROW_SUM_TOL):
        arr = np.array(frames, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise InvalidInputError(f"posteriors must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InvalidInputError("posteriors need at least one frame")
        if arr.shape[1] != alphabet.size:
            raise InvalidInputError(
                f"posterior has {arr.shape[1]} columns but the alphabet has {alphabet.size} classes"
            )
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0 + tol:
            raise InvalidInputError("posterior entries must lie in [0, 1]")
        sums = arr.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            raise InvalidInputError(f"row {bad[0]} sums to {sums[bad[0]]!r}, expected 1")
        if renormalize:
            # rows already within the strict tolerance are left bit-exact
            off = np.abs(sums - 1.0) > _ROW_SUM_TOL
            arr[off] /= sums[off, None]
        np.clip(arr, 0.0, 1.0, out=arr)
        arr.setflags(write=False)
        self.frames = arr
        self.alphabet = alphabet
        self._log = None

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def C(self) -> int:
        return self.frames.shape[1]

    @property
    def log_frames(self) -> np.ndarray:
        if self._log is None:
            with np.errstate(divide="ignore"):
                lg = np.log(self.frames)
            lg.setflags(write=False)
            self._log = lg
        return self._log

    def __repr__(self):
        return f"PosteriorSequence(T={self.T}, C={self.C})"


def collapse(path: Iterable[int], alphabet: Alphabet) -> str:
    """Map a frame-level path of class indices to its labeling.

    Adjacent repeats are merged first, then blanks are dropped.

    >>> ab = Alphabet.from_string("ab")
    >>> collapse([1, 1, 0, 2], ab)
    'ab'
    >>> collapse([1, 0, 1], ab)
    'aa'
    """
    out = []
    prev = None
    for idx in path:
        idx = int(idx)
        if not 0 <= idx < alphabet.size:
            raise InvalidInputError(f"class index {idx} is outside the alphabet")
        if idx != prev and idx != BLANK:
            out.append(alphabet.symbols[idx - 1])
        prev = idx
    return "".join(out)


def greedy_decode(p: PosteriorSequence) -> tuple[str, float]:
    """Best-path decoding: argmax per frame, then collapse.

    Ties go to the lowest class index. The returned score is the log
    probability of the argmax path, not of the labeling.
    """
    best = np.argmax(p.frames, axis=1)
    logp = float(p.log_frames[np.arange(p.T), best].sum())
    return collapse(best, p.alphabet), logp


def _extended(label_idx: Sequence[int]) -> np.ndarray:
    ext = np.zeros(2 * len(label_idx) + 1, dtype=np.int64)
    ext[1::2] = label_idx
    return ext


def _min_frames(label_idx: Sequence[int]) -> int:
    repeats = sum(1 for a, b in zip(label_idx, label_idx[1:]) if a == b)
    return len(label_idx) + repeats


def _forward_table(p: PosteriorSequence, label_idx: Sequence[int], reduce) -> np.ndarray:
    # alpha over the blank-augmented label, last frame only
    ext = _extended(label_idx)
    S = len(ext)
    lp = p.log_frames
    # s-2 transitions are allowed into a label position whose symbol differs
    # from the one two steps back
    skip = np.zeros(S, dtype=bool)
    if S > 2:
        skip[2:] = (ext[2:] != BLANK) & (ext[2:] != ext[:-2])

    alpha = np.full(S, NEG_INF)
    alpha[0] = lp[0, ext[0]]
    if S > 1:
        alpha[1] = lp[0, ext[1]]
    for t in range(1, p.T):
        prev1 = np.concatenate(([NEG_INF], alpha[:-1]))
        prev2 = np.concatenate(([NEG_INF, NEG_INF], alpha[:-2]))[:S]
        prev2 = np.where(skip, prev2, NEG_INF)
        alpha = reduce(reduce(alpha, prev1), prev2) + lp[t, ext]
    return alpha


def forward_partials(p: PosteriorSequence, label: str) -> tuple[float, float]:
    """Log-probabilities of the paths collapsing to ``label`` that end in
    a blank and in a non-blank symbol, respectively."""
    label_idx = p.alphabet.encode(label)
    if _min_frames(label_idx) > p.T:
        return NEG_INF, NEG_INF
    with np.errstate(invalid="ignore"):
        alpha = _forward_table(p, label_idx, np.logaddexp)
    if not label_idx:
        return float(alpha[0]), NEG_INF
    return float(alpha[-1]), float(alpha[-2])


def ctc_forward(p: PosteriorSequence, label: str) -> float:
    """Log of the total probability of all paths that collapse to ``label``.

    Unreachable labels (too long for the number of frames) score ``-inf``.
    """
    lb, lnb = forward_partials(p, label)
    return float(np.logaddexp(lb, lnb))


def ctc_best_path_score(p: PosteriorSequence, label: str) -> float:
    """Log-probability of the single most likely path collapsing to ``label``
    (Viterbi over the same lattice as :func:`ctc_forward`)."""
    label_idx = p.alphabet.encode(label)
    if _min_frames(label_idx) > p.T:
        return NEG_INF
    alpha = _forward_table(p, label_idx, np.maximum)
    if not label_idx:
        return float(alpha[0])
    return float(max(alpha[-1], alpha[-2]))


def labeling_distribution(p: PosteriorSequence, limit: int = _BRUTE_FORCE_LIMIT) -> dict[str, float]:
    """Exhaustively enumerate all C**T paths and sum their probabilities per
    collapsed labeling. Linear-domain probabilities; test oracle only."""
    n_paths = p.C ** p.T
    if n_paths > limit:
        raise InstanceTooLargeError(
            f"exhaustive enumeration needs C**T = {p.C}**{p.T} = {n_paths} paths (limit {limit})"
        )
    probs: dict[str, float] = {}
    frames = p.frames
    for path in itertools.product(range(p.C), repeat=p.T):
        pr = 1.0
        for t, c in enumerate(path):
            pr *= frames[t, c]
        if pr == 0.0:
            continue
        lab = collapse(path, p.alphabet)
        probs[lab] = probs.get(lab, 0.0) + pr
    return probs


def brute_force_best_labeling(p: PosteriorSequence, limit: int = _BRUTE_FORCE_LIMIT) -> tuple[str, float]:
    """Globally most probable labeling by exhaustive path enumeration.

    Ties are resolved towards the lexicographically smaller labeling.
    """
    dist = labeling_distribution(p, limit)
    if not dist:
        return "", NEG_INF
    label, pr = min(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    return label, math.log(pr)
