"""Readers and writers for posterior matrices, TSV transcription files and
word lists.

Posterior text form::

    T C
    \\0ab\\sc          <- alphabet, escaped, blank first
    0.9 0.05 ...      <- T rows of C floats

Binary form: ``b"CTCP"``, little-endian u32 T, u32 C, u32 byte length of
the escaped alphabet line, the UTF-8 alphabet line, then T*C float32 values
row-major.
"""
from __future__ import annotations

import io
import os
import struct
from pathlib import Path

import numpy as np

from .ctc import Alphabet, PosteriorSequence
from .errors import InvalidInputError, ParseError

MAGIC = b"CTCP"
_ESCAPES = {"0": "\x00", "s": " ", "\\": "\\", "t": "\t", "n": "\n"}
_REVERSE = {" ": "\\s", "\\": "\\\\", "\t": "\\t", "\n": "\\n"}
# files written with limited decimal precision (or float32) are renormalised
# if every row is within this distance of 1
_LOAD_TOL = 1e-3


def escape_alphabet(alphabet: Alphabet) -> str:
    return "\\0" + "".join(_REVERSE.get(ch, ch) for ch in alphabet.symbols)


def unescape_alphabet(line: str, lineno: int | None = None) -> Alphabet:
    chars = []
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == "\\":
            if i + 1 >= len(line) or line[i + 1] not in _ESCAPES:
                raise ParseError(f"bad escape in alphabet line at column {i + 1}", lineno)
            chars.append(_ESCAPES[line[i + 1]])
            i += 2
        else:
            chars.append(ch)
            i += 1
    if not chars or chars[0] != "\x00":
        raise ParseError("alphabet line must start with the blank \\0", lineno)
    if "\x00" in chars[1:]:
        raise ParseError("blank may only appear once, at index 0", lineno)
    try:
        return Alphabet(tuple(chars[1:]))
    except InvalidInputError as exc:
        raise ParseError(str(exc), lineno) from None


def format_posteriors(p: PosteriorSequence) -> str:
    buf = io.StringIO()
    buf.write(f"{p.T} {p.C}\n{escape_alphabet(p.alphabet)}\n")
    for row in p.frames:
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def parse_posteriors(text: str) -> PosteriorSequence:
    lines = text.splitlines()
    if len(lines) < 2:
        raise ParseError("posterior file needs a header and an alphabet line", len(lines) + 1)
    try:
        T, C = (int(v) for v in lines[0].split())
    except ValueError:
        raise ParseError("header must be 'T C'", 1) from None
    alphabet = unescape_alphabet(lines[1].rstrip("\r"), 2)
    if alphabet.size != C:
        raise ParseError(f"header says C={C} but the alphabet has {alphabet.size} classes", 2)
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != T:
        raise ParseError(f"expected {T} frame rows, found {len(body)}", 3 + len(body))
    frames = np.empty((T, C))
    for t, ln in enumerate(body):
        vals = ln.split()
        if len(vals) != C:
            raise ParseError(f"expected {C} values, found {len(vals)}", t + 3)
        try:
            frames[t] = [float(v) for v in vals]
        except ValueError:
            raise ParseError("non-numeric probability", t + 3) from None
    return _build(frames, alphabet)


def encode_posteriors_binary(p: PosteriorSequence) -> bytes:
    alpha = escape_alphabet(p.alphabet).encode("utf-8")
    head = MAGIC + struct.pack("<III", p.T, p.C, len(alpha)) + alpha
    return head + p.frames.astype("<f4").tobytes()


def decode_posteriors_binary(data: bytes) -> PosteriorSequence:
    if data[:4] != MAGIC:
        raise ParseError("missing CTCP magic")
    try:
        T, C, n = struct.unpack_from("<III", data, 4)
    except struct.error:
        raise ParseError("truncated binary header") from None
    off = 16 + n
    alphabet = unescape_alphabet(data[16:off].decode("utf-8"))
    if alphabet.size != C:
        raise ParseError(f"header says C={C} but the alphabet has {alphabet.size} classes")
    expected = off + 4 * T * C
    if len(data) != expected:
        raise ParseError(f"binary posterior has {len(data)} bytes, expected {expected}")
    frames = np.frombuffer(data, dtype="<f4", offset=off).reshape(T, C).astype(np.float64)
    return _build(frames, alphabet)


def _build(frames: np.ndarray, alphabet: Alphabet) -> PosteriorSequence:
    try:
        return PosteriorSequence(frames, alphabet, renormalize=True, tol=_LOAD_TOL)
    except InvalidInputError as exc:
        raise ParseError(str(exc)) from None


def read_posteriors(path: str | os.PathLike) -> PosteriorSequence:
    """Read either posterior form; the binary one is detected by its magic."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return decode_posteriors_binary(data)
    return parse_posteriors(data.decode("utf-8"))


def write_posteriors(path: str | os.PathLike, p: PosteriorSequence, binary: bool = False) -> None:
    if binary:
        Path(path).write_bytes(encode_posteriors_binary(p))
    else:
        Path(path).write_text(format_posteriors(p), encoding="utf-8")


def line_id_for(path: str | os.PathLike) -> str:
    """Line ids are posterior file names without their extension."""
    return Path(path).stem


def read_tsv(path: str | os.PathLike) -> dict[str, list[str]]:
    """``line_id<TAB>field...`` rows keyed by line id. Blank lines skipped."""
    rows: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.rstrip("\n").rstrip("\r")
            if not raw.strip():
                continue
            parts = raw.split("\t")
            if parts[0] in rows:
                raise ParseError(f"duplicate line id {parts[0]!r}", lineno)
            rows[parts[0]] = parts[1:]
    return rows


def read_transcriptions(path: str | os.PathLike) -> dict[str, str]:
    return {k: (v[0] if v else "") for k, v in read_tsv(path).items()}


def read_word_list(path: str | os.PathLike) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [w for w in (ln.strip() for ln in fh) if w]


def write_word_list(path: str | os.PathLike, words) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for w in words:
            fh.write(w + "\n")
