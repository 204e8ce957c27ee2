"""Command-line pipeline driver.

Subcommands: parse, validate, repair, augment, export, score, and
pipeline (repair -> augment -> export).  Behavior is controlled by a
YAML config file plus flag overrides (flags win); every command writes
its artifacts to the output directory together with a run manifest
(inputs, effective config and its hash, seed, counts).  Artifacts are
written atomically: interrupted runs leave only ``*.partial`` files.

The translation API key is taken from an environment variable (default
``RELEXTK_API_KEY``) and never written to any artifact.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import yaml

from . import corpus as corpus_mod
from .augment import AugmentConfig, augment_corpus
from .corpus import Corpus, CorpusError, parse_semeval_file, tokenize_and_bind
from .fusion import export_markers
from .repair import load_replacements, run_repair, validate
from .score import (
    Regime,
    Way,
    format_relation_table,
    load_predictions_jsonl,
    load_predictions_tsv,
    per_relation_report,
    score,
)
from .translate import (
    BackendError,
    EndpointConfig,
    HttpBackend,
    IdentityBackend,
    RecordingBackend,
    ReplayBackend,
    WordReversingBackend,
)

DEFAULT_CONFIG = {
    "seed": 0,
    "out": "out",
    "format": None,  # semeval | jsonl | None = infer from extension
    "input": None,
    "replacements": None,
    "figures": True,
    "augment": {
        "deletions_per_sentence": 1,
        "swaps_per_sentence": 1,
        "backtranslate": False,
        "keep_unchanged_backtranslations": True,
        "pivot_language": "en",
        "source_language": "fa",
    },
    "translation": {
        "backend": "identity",
        "url_template": None,
        "method": "GET",
        "body_fields": None,
        "response_field": "translation",
        "timeout": 10.0,
        "max_retries": 3,
        "requests_per_second": None,
        "backoff_base": 0.5,
        "api_key_env": "RELEXTK_API_KEY",
        "api_key_header": "Authorization",
        "record": None,
        "replay": None,
    },
    "export": {"max_tokens": 128},
    "score": {"way": "way9-directed", "averaging": "macro",
              "include_empty_classes": False},
}


class CliError(Exception):
    pass


def _deep_merge(base: dict, overlay: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            overlay = yaml.safe_load(fh) or {}
        if not isinstance(overlay, dict):
            raise CliError(f"config {path} must be a mapping")
        cfg = _deep_merge(cfg, overlay)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def _set_if(cfg: dict, dotted: str, value) -> None:
    if value is None:
        return
    node = cfg
    *parents, leaf = dotted.split(".")
    for part in parents:
        node = node[part]
    node[leaf] = value


def _file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_jsonl_atomic(corpus: Corpus, path: Path) -> None:
    tmp = path.with_name(path.name + ".partial")
    corpus_mod.write_jsonl(corpus, tmp)
    os.replace(tmp, path)


def write_json_atomic(obj, path: Path) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def write_manifest(out_dir: Path, command: str, cfg: dict,
                   inputs: dict[str, str], outputs: list[str],
                   counts: dict) -> None:
    manifest = {
        "command": command,
        "inputs": {name: {"path": str(p), "sha256": _file_sha256(p)}
                   for name, p in inputs.items() if p},
        "outputs": outputs,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "counts": counts,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    write_json_atomic(manifest, out_dir / f"{command}_manifest.json")


def _infer_format(path: str, forced: str | None) -> str:
    if forced:
        return forced
    return "jsonl" if str(path).endswith(".jsonl") else "semeval"


def load_raw_corpus(path: str, fmt: str | None) -> Corpus:
    fmt = _infer_format(path, fmt)
    if fmt == "semeval":
        with open(path, "r", encoding="utf-8") as fh:
            return parse_semeval_file(fh.read(), source=str(path))
    return corpus_mod.read_jsonl(path)


def load_tagged_corpus(path: str, fmt: str | None) -> Corpus:
    """Load and fully bind a corpus; faulty sentences are hard errors."""
    fmt = _infer_format(path, fmt)
    if fmt == "jsonl":
        return corpus_mod.read_jsonl(path)
    raw = load_raw_corpus(path, fmt)
    bound = tuple(tokenize_and_bind(s) for s in raw)
    return Corpus(bound, source=str(path), stage="repaired")


def build_backend(tcfg: dict):
    if tcfg["replay"]:
        return ReplayBackend(tcfg["replay"])
    kind = tcfg["backend"]
    if kind == "identity":
        base = IdentityBackend()
    elif kind == "reversing":
        base = WordReversingBackend()
    elif kind == "http":
        if not tcfg["url_template"]:
            raise CliError("http backend needs translation.url_template")
        headers = {}
        key = os.environ.get(tcfg["api_key_env"] or "", "")
        if key:
            headers[tcfg["api_key_header"]] = key
        base = HttpBackend(EndpointConfig(
            url_template=tcfg["url_template"], method=tcfg["method"],
            headers=headers, body_fields=tcfg["body_fields"],
            response_field=tcfg["response_field"], timeout=tcfg["timeout"],
            max_retries=tcfg["max_retries"],
            requests_per_second=tcfg["requests_per_second"],
            backoff_base=tcfg["backoff_base"]))
    else:
        raise CliError(f"unknown translation backend {kind!r}")
    if tcfg["record"]:
        return RecordingBackend(base, tcfg["record"])
    return base


def _figures_enabled(cfg: dict, args) -> bool:
    if getattr(args, "no_figures", False):
        return False
    return bool(cfg["figures"])


def _resolve(cfg: dict, args) -> tuple[dict, Path]:
    _set_if(cfg, "seed", getattr(args, "seed", None))
    _set_if(cfg, "out", getattr(args, "out", None))
    _set_if(cfg, "format", getattr(args, "format", None))
    _set_if(cfg, "input", getattr(args, "input", None))
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, out_dir


def _require_input(cfg: dict) -> str:
    if not cfg["input"]:
        raise CliError("no input file (positional argument or config 'input')")
    if not Path(cfg["input"]).exists():
        raise CliError(f"input file not found: {cfg['input']}")
    return cfg["input"]


def cmd_parse(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    path = _require_input(cfg)
    corpus = load_tagged_corpus(path, cfg["format"])
    out_path = out_dir / "corpus.jsonl"
    write_jsonl_atomic(corpus, out_path)
    write_manifest(out_dir, "parse", cfg, {"input": path},
                   [out_path.name], {"sentences": len(corpus)})
    print(f"parsed {len(corpus)} sentences -> {out_path}")
    return 0


def cmd_validate(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    path = _require_input(cfg)
    corpus = load_raw_corpus(path, cfg["format"])
    listing = []
    for s in corpus:
        faults = validate(s) if isinstance(s, corpus_mod.RawSentence) else []
        for fault in faults:
            listing.append({"id": s.id, "code": fault.code.value,
                            "tag": fault.tag, "detail": fault.detail})
            print(str(fault))
    out_path = out_dir / "faults.json"
    write_json_atomic({"faults": listing,
                       "sentences": len(corpus),
                       "faulty_sentences": len({f['id'] for f in listing})},
                      out_path)
    write_manifest(out_dir, "validate", cfg, {"input": path},
                   [out_path.name],
                   {"sentences": len(corpus), "faults": len(listing)})
    print(f"{len(listing)} fault(s) in {len(corpus)} sentences -> {out_path}")
    return 0


def _run_repair_stage(cfg: dict, out_dir: Path, path: str, figures: bool):
    corpus = load_raw_corpus(path, cfg["format"])
    replacements = None
    if cfg["replacements"]:
        if not Path(cfg["replacements"]).exists():
            raise CliError(f"replacement list not found: {cfg['replacements']}")
        replacements = load_replacements(cfg["replacements"])
    repaired, report = run_repair(corpus, replacements)
    write_jsonl_atomic(repaired, out_dir / "repaired.jsonl")
    write_json_atomic(report.to_dict(), out_dir / "repair_report.json")
    if figures:
        from . import figures as fig
        fig.plot_repair_fates(report, out_dir / "repair_fates.png")
    print(report.summary())
    return repaired, report


def cmd_repair(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    _set_if(cfg, "replacements", args.replacements)
    path = _require_input(cfg)
    repaired, report = _run_repair_stage(cfg, out_dir, path,
                                         _figures_enabled(cfg, args))
    write_manifest(out_dir, "repair", cfg,
                   {"input": path, "replacements": cfg["replacements"]},
                   ["repaired.jsonl", "repair_report.json"],
                   report.to_dict()["totals"])
    print(f"repaired corpus ({len(repaired)} sentences) -> {out_dir / 'repaired.jsonl'}")
    return 0


def _apply_augment_flags(cfg: dict, args) -> None:
    _set_if(cfg, "augment.deletions_per_sentence", getattr(args, "deletions", None))
    _set_if(cfg, "augment.swaps_per_sentence", getattr(args, "swaps", None))
    if getattr(args, "backtranslate", False):
        cfg["augment"]["backtranslate"] = True
    _set_if(cfg, "augment.pivot_language", getattr(args, "pivot", None))
    _set_if(cfg, "augment.source_language", getattr(args, "source_lang", None))
    if getattr(args, "drop_unchanged", False):
        cfg["augment"]["keep_unchanged_backtranslations"] = False
    _set_if(cfg, "translation.backend", getattr(args, "backend", None))
    _set_if(cfg, "translation.record", getattr(args, "record", None))
    _set_if(cfg, "translation.replay", getattr(args, "replay", None))


def _run_augment_stage(cfg: dict, out_dir: Path, corpus: Corpus, figures: bool):
    aug_cfg = AugmentConfig(seed=cfg["seed"], **cfg["augment"])
    backend = build_backend(cfg["translation"]) if aug_cfg.backtranslate else None
    try:
        augmented, report = augment_corpus(corpus, aug_cfg, backend)
    finally:
        if isinstance(backend, RecordingBackend):
            backend.close()
    write_jsonl_atomic(augmented, out_dir / "augmented.jsonl")
    write_json_atomic(report.to_dict(), out_dir / "augment_report.json")
    if figures:
        from . import figures as fig
        fig.plot_augment_counts(report, out_dir / "augment_counts.png")
    print(report.summary())
    return augmented, report


def cmd_augment(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    _apply_augment_flags(cfg, args)
    path = _require_input(cfg)
    corpus = load_tagged_corpus(path, cfg["format"])
    augmented, report = _run_augment_stage(cfg, out_dir, corpus,
                                           _figures_enabled(cfg, args))
    write_manifest(out_dir, "augment", cfg, {"input": path},
                   ["augmented.jsonl", "augment_report.json"],
                   report.to_dict()["counts"])
    print(f"augmented corpus ({len(augmented)} sentences) -> {out_dir / 'augmented.jsonl'}")
    return 0


def _run_export_stage(cfg: dict, out_dir: Path, corpus: Corpus):
    max_tokens = cfg["export"]["max_tokens"]
    records, rejects = export_markers(corpus, max_tokens)
    lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    write_text_atomic(out_dir / "markers.jsonl", lines)
    reject_lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rejects)
    write_text_atomic(out_dir / "rejected.jsonl", reject_lines)
    return records, rejects


def cmd_export(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    _set_if(cfg, "export.max_tokens", args.max_tokens)
    path = _require_input(cfg)
    corpus = load_tagged_corpus(path, cfg["format"])
    records, rejects = _run_export_stage(cfg, out_dir, corpus)
    write_manifest(out_dir, "export", cfg, {"input": path},
                   ["markers.jsonl", "rejected.jsonl"],
                   {"exported": len(records), "rejected": len(rejects)})
    print(f"exported {len(records)} marker sentences "
          f"({len(rejects)} rejected) -> {out_dir / 'markers.jsonl'}")
    return 0


def cmd_score(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    _set_if(cfg, "score.way", args.way)
    _set_if(cfg, "score.averaging", args.averaging)
    if args.include_empty_classes:
        cfg["score"]["include_empty_classes"] = True

    if args.pairs:
        preds = load_predictions_jsonl(args.pairs)
        inputs = {"pairs": args.pairs}
    else:
        if not (args.gold and args.pred):
            raise CliError("score needs --pairs, or --gold with --pred")
        gold = corpus_mod.read_jsonl(args.gold)
        preds = load_predictions_tsv(args.pred, gold)
        inputs = {"gold": args.gold, "pred": args.pred}

    regime = Regime(way=Way(cfg["score"]["way"]),
                    averaging=cfg["score"]["averaging"],
                    include_empty_classes=cfg["score"]["include_empty_classes"])
    report = score(preds, regime)
    relation_rows = per_relation_report(preds)

    payload = report.to_dict()
    payload["per_relation"] = {name: cs.f1 for name, cs in relation_rows}
    write_json_atomic(payload, out_dir / "score_report.json")
    text = report.table() + "\n\n" + format_relation_table(relation_rows) + "\n"
    write_text_atomic(out_dir / "score_report.txt", text)
    if _figures_enabled(cfg, args):
        from . import figures as fig
        fig.plot_score_f1(report, out_dir / "score_f1.png")
        fig.plot_confusion(report, out_dir / "confusion.png")
    write_manifest(out_dir, "score", cfg, inputs,
                   ["score_report.json", "score_report.txt"],
                   {"predictions": len(preds)})
    print(report.table())
    print(f"{regime.averaging} F1 = {report.f1:.4f}")
    return 0


def cmd_pipeline(args) -> int:
    cfg, out_dir = _resolve(load_config(args.config), args)
    _set_if(cfg, "replacements", args.replacements)
    _apply_augment_flags(cfg, args)
    _set_if(cfg, "export.max_tokens", args.max_tokens)
    path = _require_input(cfg)
    figures = _figures_enabled(cfg, args)

    repaired, repair_report = _run_repair_stage(cfg, out_dir, path, figures)
    augmented, augment_report = _run_augment_stage(cfg, out_dir, repaired, figures)
    records, rejects = _run_export_stage(cfg, out_dir, augmented)

    write_manifest(out_dir, "pipeline", cfg,
                   {"input": path, "replacements": cfg["replacements"]},
                   ["repaired.jsonl", "repair_report.json", "augmented.jsonl",
                    "augment_report.json", "markers.jsonl", "rejected.jsonl"],
                   {"repair": repair_report.to_dict()["totals"],
                    "augment": augment_report.to_dict()["counts"],
                    "exported": len(records), "rejected": len(rejects)})
    print(f"pipeline complete: {len(repaired)} repaired, {len(augmented)} augmented, "
          f"{len(records)} exported ({len(rejects)} rejected)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relextk",
        description="Corpus toolkit for entity-tagged relation-extraction data")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("input", nargs="?", default=None,
                           help="input corpus (source text or JSONL)")
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=["semeval", "jsonl"], default=None,
                       help="input format (default: infer from extension)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip report figures")

    p = sub.add_parser("parse", help="parse and bind a corpus to JSONL")
    common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="list tag faults without changing anything")
    common(p)
    p.set_defaults(func=cmd_validate)

    def repair_opts(p):
        p.add_argument("--replacements", default=None,
                       help="JSONL replacement list {id, text}")

    p = sub.add_parser("repair", help="replace, repair, and filter a raw corpus")
    common(p)
    repair_opts(p)
    p.set_defaults(func=cmd_repair)

    def augment_opts(p):
        p.add_argument("--deletions", type=int, default=None,
                       help="tokens deleted in the deletion variant")
        p.add_argument("--swaps", type=int, default=None,
                       help="token swaps applied in the swap variant")
        p.add_argument("--backtranslate", action="store_true")
        p.add_argument("--drop-unchanged", action="store_true",
                       help="drop back-translations identical to the original")
        p.add_argument("--pivot", default=None, help="pivot language code")
        p.add_argument("--source-lang", default=None, help="source language code")
        p.add_argument("--backend", choices=["identity", "reversing", "http"],
                       default=None)
        p.add_argument("--record", default=None,
                       help="write a translation transcript to this path")
        p.add_argument("--replay", default=None,
                       help="serve translations from this transcript (offline)")

    p = sub.add_parser("augment", help="append deletion/swap/back-translation variants")
    common(p)
    augment_opts(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("export", help="write entity-marker text for a trainer")
    common(p)
    p.add_argument("--max-tokens", type=int, default=None,
                   help="truncate marker text to this many tokens (default 128)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("score", help="score predictions against gold labels")
    common(p, with_input=False)
    p.add_argument("--gold", default=None, help="gold corpus JSONL")
    p.add_argument("--pred", default=None, help="predictions TSV (id<TAB>label)")
    p.add_argument("--pairs", default=None, help="JSONL of {id, gold, pred}")
    p.add_argument("--way", choices=[w.value for w in Way], default=None)
    p.add_argument("--averaging", choices=["macro", "micro"], default=None)
    p.add_argument("--include-empty-classes", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pipeline", help="repair, then augment, then export")
    common(p)
    repair_opts(p)
    augment_opts(p)
    p.add_argument("--max-tokens", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, CorpusError, BackendError, OSError, ValueError,
            TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
