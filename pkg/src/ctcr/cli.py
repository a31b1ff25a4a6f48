"""Command-line entry point: ``ctcr <command> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 some inputs failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import re
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .augment import IMAGE_SUFFIXES, read_image, train_sampler, tta_grid, write_image, write_sidecar
from .config import RunConfig, build_decoder, load_config, load_lm
from .decoders import decode
from .errors import ConfigurationError, CTCRError, InvalidParameterError, OrderingViolation
from .fileio import line_id_for, read_posteriors, read_transcriptions, read_word_list, write_word_list
from .lm import read_corpus, save_arpa, train_kn
from .metrics import CASE_PUNCT_SWEEP, DEFAULT_MODE, LM_MODE, SCHEMA_VERSION, NormalizationMode, evaluate, normalize, oov_rate
from .tta import (
    ORIGINAL,
    candidate_dicts,
    check_ordering,
    decode_bundle,
    fit_weights,
    iter_manifest,
    oracle_pick,
    pick,
    rescore,
)

log = logging.getLogger("ctcr")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2


class UsageError(CTCRError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_json(path, doc) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _chain(first, rest):
    yield first
    yield from rest


# ------------------------------------------------------------------ decode

_WORKER_DECODER = None


def _init_worker(decoder):
    global _WORKER_DECODER
    _WORKER_DECODER = decoder


def _decode_one(path):
    try:
        d = decode(read_posteriors(path), _WORKER_DECODER)
        return line_id_for(path), d.text, d.op_s, None
    except (CTCRError, OSError, UnicodeDecodeError) as exc:
        return line_id_for(path), None, None, f"{path}: {exc}"


def _posterior_paths(items) -> list[Path]:
    paths = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.is_file() and not q.name.startswith(".")))
        else:
            paths.append(p)
    return sorted(paths, key=lambda q: (line_id_for(q), str(q)))


def cmd_decode(cfg: RunConfig, inputs, output) -> int:
    paths = _posterior_paths(inputs)
    if not paths:
        raise UsageError("no posterior files given")
    # fail fast: resources are loaded against the first readable alphabet
    first = None
    for p in paths:
        try:
            first = read_posteriors(p)
            break
        except (CTCRError, OSError, UnicodeDecodeError):
            continue
    if first is None:
        log.error("none of the %d posterior files could be read", len(paths))
        return EXIT_PARTIAL
    decoder = build_decoder(cfg, first.alphabet)

    errors = []
    out = sys.stdout if output in (None, "-") else open(output, "w", encoding="utf-8", newline="\n")
    try:
        if cfg.workers > 1 and len(paths) > 1:
            pool = ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(decoder,))
            results = pool.map(_decode_one, paths, chunksize=8)
        else:
            pool = None
            _init_worker(decoder)
            results = map(_decode_one, paths)
        for lid, text, op_s, err in results:
            if err is not None:
                log.error(err)
                errors.append(err)
                continue
            out.write(f"{lid}\t{text}\t{op_s!r}\n")
        if pool is not None:
            pool.shutdown()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_PARTIAL if errors else EXIT_OK


# ---------------------------------------------------------------- train-lm

def cmd_train_lm(corpus, order, discount, out) -> int:
    if order < 1:
        raise UsageError(f"--order must be >= 1, got {order}")
    sentences = read_corpus(corpus)
    model = train_kn(sentences, order, discount,
                     progress=lambda n: log.info("%d million tokens counted", n // 10**6))
    save_arpa(out, model)
    log.info("wrote %d-gram model with %d n-grams to %s", order, len(model.prob), out)
    return EXIT_OK


# ---------------------------------------------------------------- evaluate

def cmd_evaluate(hyp_path, ref_path, modes, output, count_spaces=True) -> int:
    hyps = read_transcriptions(hyp_path)
    refs = read_transcriptions(ref_path)
    common = sorted(set(hyps) & set(refs))
    mismatched = sorted(set(hyps) ^ set(refs))
    for lid in mismatched:
        log.warning("line id %r is missing from the %s file; excluded", lid,
                    "reference" if lid in hyps else "hypothesis")
    if not common:
        raise UsageError("hypothesis and reference files share no line ids")
    pairs = [(hyps[k], refs[k]) for k in common]
    reports = [evaluate(pairs, m, common, count_spaces).to_dict() for m in modes]
    _write_json(output, {
        "schema_version": SCHEMA_VERSION,
        "hypotheses": str(hyp_path),
        "references": str(ref_path),
        "excluded_line_ids": mismatched,
        "reports": reports,
    })
    return EXIT_PARTIAL if mismatched else EXIT_OK


# --------------------------------------------------------------------- tta

def cmd_tta(cfg: RunConfig, manifest, output, oracle=False, fit_lams=None, fit_omegas=None) -> int:
    bundles = iter_manifest(manifest)
    try:
        first = next(bundles)
    except StopIteration:
        raise UsageError("manifest lists no lines") from None
    decoder = build_decoder(cfg, first.original.alphabet)
    lm4 = load_lm(cfg.lm4, "4-gram LM") if (cfg.lm4 or not oracle) else None
    mode = cfg.mode
    lam, omega = cfg.lam, cfg.omega

    def all_bundles():
        for b in _chain(first, bundles):
            if not cfg.tta:
                # selection over the untransformed image only
                b.variants = []
            yield b

    if fit_lams or fit_omegas:
        if lm4 is None:
            raise ConfigurationError("weight fitting needs the 4-gram LM")
        batch = list(all_bundles())
        lam, omega = fit_weights(batch, fit_lams or [lam], fit_omegas or [omega], decoder, lm4,
                                 mode=mode, raw_domain=cfg.raw_domain, length_normalize=cfg.lm_length_norm)
        log.info("fitted weights lambda=%g omega=%g", lam, omega)
        source = iter(batch)
    else:
        source = all_bundles()

    lines = []
    timings = []
    errors = []
    pairs = {"selected": [], "oracle": [], "combined": [], "original": []}
    ids = []
    for b in source:
        t0 = time.perf_counter()
        decoded = decode_bundle(b, decoder, lm4, cfg.lm_length_norm)
        table = rescore(decoded, lam, omega, cfg.raw_domain) if lm4 is not None else None
        entry = {"line_id": b.line_id, "weights": {"lambda": lam, "omega": omega}}
        if oracle:
            if b.reference is None:
                msg = f"line {b.line_id!r} has no reference; oracle selection impossible"
                log.error(msg)
                errors.append(msg)
                continue
            text, rows = oracle_pick(decoded, b.reference, mode)
            best = min(rows, key=lambda r: (r.char_edits, r.source != ORIGINAL, r.text))
            entry["winner"] = {"text": text, "source": best.source}
            entry["oracle_table"] = [r.__dict__ for r in rows]
        else:
            best = pick(table)
            entry["winner"] = {"text": best.text, "source": best.source}
        if table is not None:
            entry["candidates"] = candidate_dicts(table)
        else:
            entry["candidates"] = [{"text": d.text, "op_s": d.op_s, "lm_s": None, "combined": None,
                                    "source": d.source, "spec": d.spec} for d in decoded]
        elapsed = time.perf_counter() - t0
        entry["seconds"] = elapsed
        timings.append(elapsed)
        lines.append(entry)

        if b.reference is not None:
            ids.append(b.line_id)
            pairs["selected"].append((entry["winner"]["text"], b.reference))
            pairs["oracle"].append((oracle_pick(decoded, b.reference, mode)[0], b.reference))
            pairs["original"].append((decoded[0].text, b.reference))
            if table is not None:
                pairs["combined"].append((pick(table).text, b.reference))

    doc = {
        "schema_version": SCHEMA_VERSION,
        "selector": "oracle" if oracle else "combined",
        "weights": {"lambda": lam, "omega": omega},
        "decoder": cfg.decoder,
        "lines": lines,
        "timing": {
            "mean": statistics.fmean(timings) if timings else math.nan,
            "std": statistics.pstdev(timings) if timings else math.nan,
        },
    }
    status = EXIT_PARTIAL if errors else EXIT_OK
    if ids and len(ids) == len(lines):
        reports = {k: evaluate(v, mode, ids, cfg.count_spaces) for k, v in pairs.items() if v}
        doc["report"] = reports["selected"].to_dict()
        doc["corpus_cer"] = {k: r.corpus_cer for k, r in reports.items()}
        doc["corpus_wer"] = {k: r.corpus_wer for k, r in reports.items()}
        if "combined" in reports:
            try:
                doc["ordering_notes"] = check_ordering(reports["oracle"].corpus_cer,
                                                       reports["combined"].corpus_cer,
                                                       reports["original"].corpus_cer)
            except OrderingViolation as exc:
                log.error("ordering violation: %s", exc)
                doc["ordering_violation"] = str(exc)
                status = EXIT_PARTIAL
    doc["errors"] = errors
    _write_json(output, doc)
    return status


# ----------------------------------------------------------------- augment

def cmd_augment(image_dir, mode, seed, out_dir) -> int:
    src = Path(image_dir)
    if not src.is_dir():
        raise UsageError(f"{image_dir!r} is not a directory")
    images = sorted(p for p in src.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not images:
        raise UsageError(f"no .png/.pgm images in {image_dir!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    errors = 0
    for i, path in enumerate(images):
        try:
            img = read_image(path)
        except OSError as exc:
            log.error("%s: %s", path, exc)
            errors += 1
            continue
        if mode == "tta-grid":
            for j, (spec, aug) in enumerate(tta_grid(img), 1):
                target = out / f"{path.stem}.tta{j:02d}{path.suffix}"
                write_image(target, aug)
                write_sidecar(target, path.name, spec, variant=j)
        else:
            rng = np.random.default_rng([seed, i])
            aug, spec = train_sampler(img, rng)
            target = out / f"{path.stem}.aug{path.suffix}"
            write_image(target, aug)
            write_sidecar(target, path.name, spec, seed=seed)
    return EXIT_PARTIAL if errors else EXIT_OK


# ----------------------------------------------------- lexicon utilities

def cmd_build_lexicon(corpora, out, mode: NormalizationMode, word_chars: str) -> int:
    pattern = re.compile("[" + re.escape(word_chars) + "]+")
    words = set()
    for path in corpora:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                words.update(pattern.findall(normalize(line, mode)))
    if not words:
        raise UsageError("corpus produced no words")
    write_word_list(out, sorted(words))
    log.info("wrote %d words to %s", len(words), out)
    return EXIT_OK


def cmd_oov(lexicon, references, mode: NormalizationMode, output) -> int:
    lex = read_word_list(lexicon)
    path = Path(references)
    text = path.read_text(encoding="utf-8")
    if "\t" in text:
        refs = list(read_transcriptions(path).values())
    else:
        refs = text.splitlines()
    refs = [normalize(r, mode) for r in refs]
    rate = oov_rate(lex, refs)
    _write_json(output, {"schema_version": SCHEMA_VERSION, "lexicon_size": len(set(lex)),
                         "oov_rate": rate, "mode": mode.name})
    return EXIT_OK


# ------------------------------------------------------------------ parser

_CONFIG_FLAGS = {
    "decoder": dict(choices=["greedy", "beam", "wbs"]),
    "beam_width": dict(type=int),
    "lm_mode": dict(choices=["none", "bigram"]),
    "lm_weight": dict(type=float),
    "lexicon": dict(),
    "word_chars": dict(),
    "lm2": dict(help="bigram ARPA model used inside word beam search"),
    "lm4": dict(help="ARPA model used to rescore candidates"),
    "lam": dict(type=float, help="optical score weight"),
    "omega": dict(type=float, help="language model score weight"),
    "op_score": dict(choices=["forward", "best-path", "beam"]),
    "seed": dict(type=int),
    "jobs": dict(type=int, help="worker processes (0 = all cores)"),
}
_BOOL_FLAGS = ("case_sensitive", "keep_punctuation", "count_spaces", "raw_domain", "lm_length_norm", "tta")


def _add_config_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    for key, kw in _CONFIG_FLAGS.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, **kw)
    for key in _BOOL_FLAGS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                       action=argparse.BooleanOptionalAction)


def _parse_grid(text):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _mode(text):
    try:
        return NormalizationMode.parse(text)
    except CTCRError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctcr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ctcr {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode", help="decode posterior files to a TSV of line_id, text, op_s")
    _add_config_flags(p)
    p.add_argument("inputs", nargs="*", help="posterior files or directories")
    p.add_argument("-o", "--output", help="output TSV (default stdout)")

    p = sub.add_parser("train-lm", help="train a Kneser-Ney ARPA model on a normalised corpus")
    p.add_argument("corpus")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("evaluate", help="CER/WER report for hypothesis vs reference TSV files")
    p.add_argument("hypotheses")
    p.add_argument("references")
    p.add_argument("--mode", action="append", type=_mode, help="cs|ci + punct|nopunct, repeatable (default cs+punct)")
    p.add_argument("--case-punct-sweep", action="store_true",
                   help="report the three case / punctuation conditions")
    p.add_argument("--no-count-spaces", dest="count_spaces", action="store_false")
    p.add_argument("-o", "--output")

    p = sub.add_parser("tta", help="select among test-time augmented decodings")
    _add_config_flags(p)
    p.add_argument("manifest")
    p.add_argument("--oracle", action="store_true", help="pick the candidate with the lowest CER")
    p.add_argument("--fit-lambda", type=_parse_grid, help="comma separated grid")
    p.add_argument("--fit-omega", type=_parse_grid, help="comma separated grid")
    p.add_argument("-o", "--output")

    p = sub.add_parser("augment", help="write augmented images with JSON provenance sidecars")
    p.add_argument("image_dir")
    p.add_argument("--mode", choices=["train-sample", "tta-grid"], default="tta-grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output directory")

    p = sub.add_parser("build-lexicon", help="collect normalised word types from corpus files")
    p.add_argument("corpora", nargs="+")
    p.add_argument("--mode", type=_mode, default=LM_MODE.name)
    p.add_argument("--word-chars", default=RunConfig.word_chars)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("oov", help="out-of-vocabulary rate of references against a lexicon")
    p.add_argument("lexicon")
    p.add_argument("references", help="TSV (line_id, text) or plain text, one line each")
    p.add_argument("--mode", type=_mode, default=LM_MODE.name)
    p.add_argument("-o", "--output")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in (*_CONFIG_FLAGS, *_BOOL_FLAGS)}
    return load_config(args.config, overrides=overrides)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "decode":
            cfg = _config_from_args(args)
            inputs = args.inputs or ([cfg.input] if cfg.input else [])
            return cmd_decode(cfg, inputs, args.output or cfg.output)
        if args.command == "train-lm":
            return cmd_train_lm(args.corpus, args.order, args.discount, args.output)
        if args.command == "evaluate":
            if args.case_punct_sweep:
                modes = list(CASE_PUNCT_SWEEP)
            else:
                modes = args.mode or [DEFAULT_MODE]
            return cmd_evaluate(args.hypotheses, args.references, modes, args.output, args.count_spaces)
        if args.command == "tta":
            cfg = _config_from_args(args)
            return cmd_tta(cfg, args.manifest, args.output or cfg.output, args.oracle,
                           args.fit_lambda, args.fit_omega)
        if args.command == "augment":
            return cmd_augment(args.image_dir, args.mode, args.seed, args.output)
        if args.command == "build-lexicon":
            return cmd_build_lexicon(args.corpora, args.output, args.mode, args.word_chars)
        if args.command == "oov":
            return cmd_oov(args.lexicon, args.references, args.mode, args.output)
    except (UsageError, ConfigurationError, InvalidParameterError) as exc:
        print(f"ctcr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CTCRError, OSError) as exc:
        print(f"ctcr {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    parser.error(f"unknown command {args.command}")


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
