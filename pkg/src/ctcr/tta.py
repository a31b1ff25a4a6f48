"""Selecting one transcription among test-time augmented decodings.

Each bundle member (the original image and its transformed variants) is
decoded to a text with an optical score ``op_s`` (natural log). The text is
scored by an n-gram model, ``lm_s`` (log10). The combined score is::

    combined = lam * op_s + omega * lm_s

with ``lm_s`` first converted to natural log, unless ``raw_domain`` is set.
The highest combined score wins; ties prefer the original, then the
lexicographically smaller text.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .augment import TransformSpec
from .ctc import PosteriorSequence
from .decoders import DecoderConfig, decode
from .errors import InvalidInputError, InvalidParameterError, OrderingViolation, ParseError
from .fileio import read_posteriors
from .lm import NGramModel, score_sequence
from .metrics import DEFAULT_MODE, LM_MODE, NormalizationMode, edit_distance, normalize, tokenize

log = logging.getLogger(__name__)

LN10 = math.log(10.0)
ORIGINAL = "original"


@dataclass
class TtaBundle:
    line_id: str
    original: PosteriorSequence
    variants: list = field(default_factory=list)  # (spec dict, PosteriorSequence)
    reference: str | None = None

    def __post_init__(self):
        variants = []
        for spec, post in self.variants:
            if isinstance(spec, TransformSpec):
                spec = spec.to_dict()
            if post.alphabet != self.original.alphabet:
                raise InvalidInputError(f"bundle {self.line_id!r}: variant alphabet differs from the original")
            variants.append((spec, post))
        self.variants = variants

    def members(self) -> Iterator[tuple[str, dict | None, PosteriorSequence]]:
        yield ORIGINAL, None, self.original
        for i, (spec, post) in enumerate(self.variants, 1):
            yield f"variant{i}", spec, post

    def __len__(self):
        return 1 + len(self.variants)


@dataclass
class ScoredCandidate:
    text: str
    op_s: float
    lm_s: float
    combined: float
    source: str = ORIGINAL
    spec: dict | None = None


def _check_weights(lam: float, omega: float):
    if lam < 0 or omega < 0:
        raise InvalidParameterError(f"weights must be non-negative, got lambda={lam}, omega={omega}")
    if lam == 0 and omega == 0:
        raise InvalidParameterError("lambda and omega cannot both be zero")


def lm_score(text: str, lm: NGramModel, length_normalize: bool = False) -> float:
    """log10 LM score of ``text`` after lower-casing and dropping punctuation."""
    toks = tokenize(text, LM_MODE)
    s = score_sequence(lm, toks)
    if length_normalize:
        s /= len(toks) + 1
    return s


def combine(op_s: float, lm_s: float, lam: float, omega: float, raw_domain: bool = False) -> float:
    lm_term = lm_s if raw_domain else lm_s * LN10
    # 0 * -inf must stay out of the sum
    a = lam * op_s if lam else 0.0
    b = omega * lm_term if omega else 0.0
    return a + b


def score_candidate(
    text: str,
    op_s: float,
    lm: NGramModel,
    lam: float = 1.0,
    omega: float = 1.0,
    *,
    raw_domain: bool = False,
    length_normalize: bool = False,
) -> ScoredCandidate:
    _check_weights(lam, omega)
    lm_s = lm_score(text, lm, length_normalize)
    return ScoredCandidate(text, op_s, lm_s, combine(op_s, lm_s, lam, omega, raw_domain))


def _winner_key(c: ScoredCandidate):
    return (-c.combined, c.source != ORIGINAL, c.text)


def pick(table: Sequence[ScoredCandidate]) -> ScoredCandidate:
    if not table:
        raise InvalidInputError("empty candidate table")
    return min(table, key=_winner_key)


@dataclass
class Decoded:
    source: str
    spec: dict | None
    text: str
    op_s: float
    lm_s: float


def decode_bundle(
    bundle: TtaBundle,
    decoder: DecoderConfig,
    lm: NGramModel | None = None,
    length_normalize: bool = False,
) -> list[Decoded]:
    """Decode every member once; the LM score is attached when ``lm`` is given."""
    out = []
    for source, spec, post in bundle.members():
        d = decode(post, decoder)
        lm_s = lm_score(d.text, lm, length_normalize) if lm is not None else math.nan
        out.append(Decoded(source, spec, d.text, d.op_s, lm_s))
    return out


def rescore(decoded: Sequence[Decoded], lam: float, omega: float, raw_domain: bool = False) -> list[ScoredCandidate]:
    _check_weights(lam, omega)
    return [
        ScoredCandidate(d.text, d.op_s, d.lm_s, combine(d.op_s, d.lm_s, lam, omega, raw_domain), d.source, d.spec)
        for d in decoded
    ]


def select_tta(
    bundle: TtaBundle,
    decoder: DecoderConfig,
    lm: NGramModel,
    lam: float = 1.0,
    omega: float = 1.0,
    *,
    raw_domain: bool = False,
    length_normalize: bool = False,
) -> tuple[str, list[ScoredCandidate]]:
    """Decode all members and return the best text with the full table."""
    _check_weights(lam, omega)
    table = rescore(decode_bundle(bundle, decoder, lm, length_normalize), lam, omega, raw_domain)
    return pick(table).text, table


@dataclass
class OracleRow:
    text: str
    source: str
    char_edits: int
    cer: float


def oracle_pick(decoded: Sequence[Decoded], reference: str, mode: NormalizationMode = DEFAULT_MODE) -> tuple[str, list[OracleRow]]:
    ref = normalize(reference, mode)
    rows = []
    for d in decoded:
        e = edit_distance(normalize(d.text, mode), ref)
        rows.append(OracleRow(d.text, d.source, e, (e / len(ref)) if ref else float(e)))
    best = min(rows, key=lambda r: (r.char_edits, r.source != ORIGINAL, r.text))
    return best.text, rows


def select_oracle(
    bundle: TtaBundle,
    decoder: DecoderConfig,
    mode: NormalizationMode = DEFAULT_MODE,
) -> tuple[str, list[OracleRow]]:
    """Candidate with the fewest character errors against the reference."""
    if bundle.reference is None:
        raise InvalidInputError(f"bundle {bundle.line_id!r} has no reference text")
    return oracle_pick(decode_bundle(bundle, decoder), bundle.reference, mode)


def _corpus_edits(decoded_sets, references, lam, omega, raw_domain, mode) -> int:
    total = 0
    for decoded, ref in zip(decoded_sets, references):
        best = pick(rescore(decoded, lam, omega, raw_domain))
        total += edit_distance(normalize(best.text, mode), ref)
    return total


def fit_weights(
    bundles: Iterable[TtaBundle],
    lam_grid: Sequence[float],
    omega_grid: Sequence[float],
    decoder: DecoderConfig,
    lm: NGramModel,
    *,
    mode: NormalizationMode = DEFAULT_MODE,
    raw_domain: bool = False,
    length_normalize: bool = False,
) -> tuple[float, float]:
    """Exhaustive grid search for the weights minimising corpus CER.

    Members are decoded once. Ties go to the smaller omega, then the smaller
    lambda. The (0, 0) grid point is skipped.
    """
    bundles = list(bundles)
    if not bundles:
        raise InvalidInputError("fit_weights needs at least one bundle")
    if not len(lam_grid) or not len(omega_grid):
        raise InvalidParameterError("weight grids must be non-empty")
    refs = []
    for b in bundles:
        if b.reference is None:
            raise InvalidInputError(f"bundle {b.line_id!r} has no reference text")
        refs.append(normalize(b.reference, mode))
    decoded_sets = [decode_bundle(b, decoder, lm, length_normalize) for b in bundles]

    best = None
    for omega in sorted(omega_grid):
        for lam in sorted(lam_grid):
            if lam == 0 and omega == 0:
                continue
            _check_weights(lam, omega)
            edits = _corpus_edits(decoded_sets, refs, lam, omega, raw_domain, mode)
            if best is None or edits < best[0]:
                best = (edits, lam, omega)
    if best is None:
        raise InvalidParameterError("weight grid only contains (0, 0)")
    return best[1], best[2]


def check_ordering(oracle_cer: float, tta_cer: float, original_cer: float, tol: float = 1e-9) -> list[str]:
    """Oracle CER above the selected CER is a hard error; selection doing
    worse than the untransformed image is only reported."""
    if oracle_cer > tta_cer + tol:
        raise OrderingViolation(f"oracle CER {oracle_cer:.4f} exceeds TTA CER {tta_cer:.4f}")
    notes = []
    if tta_cer > original_cer + tol:
        msg = f"TTA CER {tta_cer:.4f} is worse than original-only CER {original_cer:.4f}"
        log.warning(msg)
        notes.append(msg)
    return notes


# ----------------------------------------------------------------- manifest

MANIFEST_VERSION = 1


def iter_manifest(path: str | os.PathLike) -> Iterator[TtaBundle]:
    """Yield bundles one at a time; posterior paths are relative to the
    manifest's directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc.msg}", exc.lineno) from None
    lines = doc.get("lines") if isinstance(doc, dict) else None
    if not isinstance(lines, list):
        raise ParseError("manifest must be an object with a 'lines' list")
    base = path.parent
    for entry in lines:
        try:
            lid = str(entry["line_id"])
            original = read_posteriors(base / entry["original"])
            variants = [(v.get("spec"), read_posteriors(base / v["path"])) for v in entry.get("variants", [])]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"manifest entry is missing a field: {exc}") from None
        yield TtaBundle(lid, original, variants, entry.get("reference"))


def write_manifest(path: str | os.PathLike, entries: list[dict]) -> None:
    doc = {"schema_version": MANIFEST_VERSION, "lines": entries}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def candidate_dicts(table) -> list[dict]:
    return [asdict(c) for c in table]
