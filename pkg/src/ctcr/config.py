"""Run configuration: a flat ``key = value`` file, ``CTCR_*`` environment
overrides and command-line flags, in increasing order of precedence."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .ctc import Alphabet
from .decoders import (
    DECODER_KINDS,
    DEFAULT_WORD_CHARS,
    OP_SCORE_MODES,
    BeamParams,
    DecoderConfig,
    build_prefix_lexicon,
)
from .errors import ConfigurationError, CTCRError, InvalidParameterError, ParseError
from .fileio import read_word_list
from .lm import NGramModel, load_arpa
from .metrics import NormalizationMode

ENV_PREFIX = "CTCR_"


@dataclass(frozen=True)
class RunConfig:
    decoder: str = "wbs"
    beam_width: int = 150
    lm_mode: str = "bigram"
    lm_weight: float = 1.0
    lexicon: str | None = None
    word_chars: str = DEFAULT_WORD_CHARS
    lm2: str | None = None
    lm4: str | None = None
    case_sensitive: bool = True
    keep_punctuation: bool = True
    count_spaces: bool = True
    lam: float = 1.0
    omega: float = 1.0
    tta: bool = True
    raw_domain: bool = False
    lm_length_norm: bool = False
    op_score: str = "forward"
    input: str | None = None
    output: str | None = None
    seed: int = 0
    jobs: int = 0

    @property
    def mode(self) -> NormalizationMode:
        return NormalizationMode(self.case_sensitive, self.keep_punctuation)

    def check(self) -> "RunConfig":
        if self.decoder not in DECODER_KINDS:
            raise ConfigurationError(f"decoder must be one of {DECODER_KINDS}, got {self.decoder!r}")
        if self.op_score not in OP_SCORE_MODES:
            raise ConfigurationError(f"op_score must be one of {OP_SCORE_MODES}, got {self.op_score!r}")
        if self.jobs < 0:
            raise ConfigurationError("jobs must be >= 0 (0 = all cores)")
        try:
            BeamParams(self.beam_width, self.lm_mode, self.lm_weight)
        except InvalidParameterError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.lam < 0 or self.omega < 0 or (self.lam == 0 and self.omega == 0):
            raise ConfigurationError("lam and omega must be >= 0 and not both 0")
        return self

    @property
    def workers(self) -> int:
        return self.jobs or os.cpu_count() or 1


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, value: Any) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigurationError(f"unknown config key {key!r}")
    typ = _FIELD_TYPES[key]
    if not isinstance(value, str):
        return value
    raw = value.strip()
    if raw.startswith('"'):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError:
            raise ConfigurationError(f"bad quoted string for {key!r}") from None
        return raw
    if raw == "null":
        return None
    try:
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"cannot read {raw!r} as {typ} for {key!r}") from None
    return raw


def _format(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    return repr(value)


def dumps_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))


def loads_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ParseError("expected 'key = value'", lineno)
        key, _, val = s.partition("=")
        key = key.strip()
        try:
            values[key] = _convert(key, val)
        except ConfigurationError as exc:
            raise ParseError(str(exc), lineno) from None
    return replace(base or RunConfig(), **values)


def load_config(path: str | os.PathLike | None = None, env: Mapping[str, str] | None = None,
                overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Defaults < config file < ``CTCR_*`` environment < explicit overrides."""
    cfg = RunConfig()
    if path is not None:
        cfg = loads_config(Path(path).read_text(encoding="utf-8"), cfg)
    env = os.environ if env is None else env
    env_vals = {}
    for name in _FIELD_TYPES:
        key = ENV_PREFIX + name.upper()
        if key in env:
            env_vals[name] = _convert(name, env[key])
    cfg = replace(cfg, **env_vals)
    if overrides:
        cfg = replace(cfg, **{k: _convert(k, v) for k, v in overrides.items() if v is not None})
    return cfg.check()


def _require_file(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigurationError(f"{what} path is not configured")
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"{what} file {path!r} does not exist")
    return p


def load_lm(path: str | None, what: str) -> NGramModel:
    p = _require_file(path, what)
    try:
        return load_arpa(p)
    except ParseError as exc:
        raise ConfigurationError(f"{what} {path!r}: {exc}") from None


def build_decoder(cfg: RunConfig, alphabet: Alphabet) -> DecoderConfig:
    """Load and validate every resource the decoder needs."""
    params = BeamParams(cfg.beam_width, cfg.lm_mode if cfg.decoder == "wbs" else "none", cfg.lm_weight)
    lexicon = lm = None
    if cfg.decoder == "wbs":
        words = read_word_list(_require_file(cfg.lexicon, "lexicon"))
        try:
            lexicon = build_prefix_lexicon(words, alphabet, cfg.word_chars)
        except CTCRError as exc:
            raise ConfigurationError(f"lexicon {cfg.lexicon!r}: {exc}") from None
        if cfg.lm_mode == "bigram":
            lm = load_lm(cfg.lm2, "bigram LM")
    return DecoderConfig(cfg.decoder, params, lexicon, lm, cfg.op_score)
