"""Synthetic stand-ins for real data: glyph-like line images, posterior
matrices that decode to a chosen text, and toy corpora.

Nothing here models handwriting faithfully; it only produces inputs with
known answers for tests and demos.
"""
from __future__ import annotations

import numpy as np

from .ctc import Alphabet, PosteriorSequence


def glyph_image(text: str, rng: np.random.Generator, height: int = 32, char_width: int = 14,
                margin: int = 6) -> np.ndarray:
    """Dark random strokes on white, one small cluster of strokes per
    character; spaces stay blank."""
    w = max(1, len(text)) * char_width + 2 * margin
    img = np.full((height, w), 255, dtype=np.uint8)
    for i, ch in enumerate(text):
        if ch.isspace():
            continue
        x0 = margin + i * char_width
        crng = np.random.default_rng(ord(ch))
        for _ in range(3):
            # stroke endpoints depend on the character, jitter on the line
            a = crng.uniform([x0 + 2, 6], [x0 + char_width - 2, height - 6])
            b = crng.uniform([x0 + 2, 6], [x0 + char_width - 2, height - 6])
            a = a + rng.normal(0, 0.7, 2)
            b = b + rng.normal(0, 0.7, 2)
            n = int(np.ceil(np.hypot(*(b - a)))) * 2 + 2
            for t in np.linspace(0.0, 1.0, n):
                x, y = a + t * (b - a)
                r0, c0 = int(round(y)), int(round(x))
                img[max(r0 - 1, 0):r0 + 1, max(c0 - 1, 0):c0 + 1] = 20
    return img


def frame_path(text: str, alphabet: Alphabet, frames_per_char: int = 2) -> list[int]:
    """A CTC path spelling ``text``: each character held for a few frames,
    blanks in between and around."""
    path = [0]
    for idx in alphabet.encode(text):
        path.extend([idx] * frames_per_char)
        path.append(0)
    return path


def fabricate_posteriors(text: str, alphabet: Alphabet, rng: np.random.Generator, *,
                         frames_per_char: int = 2, peak: float = 0.9,
                         confidence: float | None = None) -> PosteriorSequence:
    """Posteriors whose greedy decode is ``text``.

    Each frame puts ``peak`` (or a draw around ``confidence``) on the path
    symbol and spreads the rest over the other classes at random.
    """
    path = frame_path(text, alphabet, frames_per_char)
    C = alphabet.size
    frames = np.empty((len(path), C))
    for t, target in enumerate(path):
        top = peak if confidence is None else float(np.clip(rng.normal(confidence, 0.03), 0.55, 0.995))
        rest = rng.dirichlet(np.ones(C - 1)) * (1.0 - top)
        frames[t, :target] = rest[:target]
        frames[t, target] = top
        frames[t, target + 1:] = rest[target:]
    return PosteriorSequence(frames, alphabet)


def random_posteriors(rng: np.random.Generator, T: int, alphabet: Alphabet, concentration: float = 1.0) -> PosteriorSequence:
    return PosteriorSequence(rng.dirichlet(np.full(alphabet.size, concentration), size=T), alphabet)


def corrupt(text: str, rng: np.random.Generator, charset: str, n_edits: int = 1) -> str:
    """Substitute ``n_edits`` non-space characters with different ones."""
    chars = list(text)
    positions = [i for i, c in enumerate(chars) if not c.isspace()]
    if not positions:
        return text + charset[0]
    for i in rng.choice(positions, size=min(n_edits, len(positions)), replace=False):
        choices = [c for c in charset if c != chars[i]]
        chars[i] = choices[int(rng.integers(len(choices)))]
    return "".join(chars)


WORDS = (
    "the of and to a in is was he for it with as his on be at by had that "
    "not but from they she which or you her all were one we there been this "
    "have are would their when who will more no if out so said what up its "
    "about into than them can only other new some could time these two may"
).split()


def toy_corpus(rng: np.random.Generator, n_sentences: int, words=WORDS, max_len: int = 8) -> list[list[str]]:
    """Sentences drawn from a Zipf-like distribution over ``words``."""
    weights = 1.0 / np.arange(1, len(words) + 1)
    weights /= weights.sum()
    out = []
    for _ in range(n_sentences):
        n = int(rng.integers(1, max_len + 1))
        out.append([words[i] for i in rng.choice(len(words), size=n, p=weights)])
    return out


LINE_ALPHABET = Alphabet.from_string("abcdefghijklmnopqrstuvwxyz '")


def synthetic_tta_manifest(out_dir, rng: np.random.Generator, n_lines: int = 20, *,
                           n_words: tuple[int, int] = (2, 5), write_images: bool = True) -> list[dict]:
    """Write a TTA manifest where, per line, the original decodes to a
    corrupted text and exactly one variant decodes to the reference.

    Lines get a glyph image and the standard 16-variant grid (written to
    ``out_dir`` when ``write_images``). There is no optical model, so
    posteriors are fabricated from the target texts, not read off the
    images. Returns the manifest entries (also saved as
    ``out_dir/manifest.json``).
    """
    from pathlib import Path

    from .augment import tta_grid, write_image, write_sidecar
    from .fileio import write_posteriors
    from .tta import write_manifest

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    letters = "abcdefghijklmnopqrstuvwxyz"
    entries = []
    for i in range(n_lines):
        lid = f"line{i:04d}"
        n = int(rng.integers(n_words[0], n_words[1] + 1))
        ref = " ".join(WORDS[j] for j in rng.integers(len(WORDS), size=n))
        img = glyph_image(ref, rng)
        grid = tta_grid(img)
        if write_images:
            write_image(out / f"{lid}.png", img)
        winner = int(rng.integers(len(grid)))
        texts = set()

        def wrong():
            # distinct corruptions so only the winner decodes to ``ref``
            while True:
                t = corrupt(ref, rng, letters, int(rng.integers(1, 3)))
                if t != ref and t not in texts:
                    texts.add(t)
                    return t

        orig_name = f"{lid}.orig.txt"
        write_posteriors(out / orig_name, fabricate_posteriors(wrong(), LINE_ALPHABET, rng, confidence=0.8))
        variants = []
        for j, (spec, aug) in enumerate(grid):
            text = ref if j == winner else wrong()
            name = f"{lid}.v{j:02d}.txt"
            write_posteriors(out / name, fabricate_posteriors(text, LINE_ALPHABET, rng, confidence=0.8))
            if write_images:
                write_image(out / f"{lid}.v{j:02d}.png", aug)
                write_sidecar(out / f"{lid}.v{j:02d}.png", f"{lid}.png", spec)
            variants.append({"spec": spec.to_dict(), "path": name})
        entries.append({"line_id": lid, "original": orig_name, "variants": variants,
                        "reference": ref, "winner": winner})
    write_manifest(out / "manifest.json", entries)
    return entries
