"""Prefix tree over a lexicon plus the word / non-word character split."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from ..ctc import Alphabet
from ..errors import InvalidInputError, InvalidParameterError

DEFAULT_WORD_CHARS = "abcdefghijklmnopqrstuvwxyz'"


class TrieNode:
    __slots__ = ("children", "is_word")

    def __init__(self):
        self.children: dict[str, TrieNode] = {}
        self.is_word = False

    def first_completion(self, prefix: str) -> str | None:
        """Shortest word below this node, lexicographically first among
        equals. ``prefix`` is the text that leads to the node."""
        queue = deque([(self, prefix)])
        while queue:
            node, text = queue.popleft()
            if node.is_word:
                return text
            for ch in sorted(node.children):
                queue.append((node.children[ch], text + ch))
        return None


@dataclass
class PrefixLexicon:
    root: TrieNode
    word_chars: frozenset
    nonword_chars: frozenset
    words: frozenset
    alphabet: Alphabet = field(repr=False)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.words

    def node(self, prefix: str) -> TrieNode | None:
        node = self.root
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return None
        return node

    def is_prefix(self, prefix: str) -> bool:
        return self.node(prefix) is not None


def build_prefix_lexicon(
    words: Iterable[str],
    alphabet: Alphabet,
    word_chars: Iterable[str] = DEFAULT_WORD_CHARS,
) -> PrefixLexicon:
    """Build the prefix tree. ``word_chars`` is intersected with the
    alphabet; every other alphabet symbol becomes a non-word character.

    Words are deduplicated. A word with a character outside the alphabet, or
    with a character that is not a word character, is rejected.
    """
    symbols = set(alphabet.symbols)
    wchars = frozenset(word_chars) & symbols
    if not wchars:
        raise InvalidParameterError("no word characters left after intersecting with the alphabet")
    root = TrieNode()
    seen = set()
    for w in words:
        if w in seen:
            continue
        if not w:
            raise InvalidInputError("empty word in lexicon")
        for ch in w:
            if ch not in symbols:
                raise InvalidInputError(f"lexicon word {w!r} contains {ch!r}, which is not in the alphabet")
            if ch not in wchars:
                raise InvalidInputError(f"lexicon word {w!r} contains non-word character {ch!r}")
        node = root
        for ch in w:
            nxt = node.children.get(ch)
            if nxt is None:
                nxt = node.children[ch] = TrieNode()
            node = nxt
        node.is_word = True
        seen.add(w)
    if not seen:
        raise InvalidParameterError("lexicon is empty")
    return PrefixLexicon(root, wchars, frozenset(symbols - wchars), frozenset(seen), alphabet)
