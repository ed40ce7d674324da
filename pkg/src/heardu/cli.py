"""``heardu`` command line.

Exit codes: 0 ok, 1 usage, 2 invalid config, 3 backend failure, 4 invalid data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .backends import create_backend, health_check, parse_descriptor
from .config import RunConfig
from .core import TokenizationMode, decode_entity_aware, TaggedTranscript
from .errors import BackendError, ConfigError, DataError, HearduError
from .evaluation import EvalPair, evaluate, format_report
from .filtering import perplexity_report, sweep_to_csv, sweep_to_json
from .io import atomic_write_text, sha256_file
from .manifest import Manifest, iter_jsonl
from .ned import Ned, build_ned, ned_stats, read_annotations, refine_ned

log = logging.getLogger("heardu")

EXIT_USAGE, EXIT_CONFIG, EXIT_BACKEND, EXIT_DATA = 1, 2, 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=[m.value for m in TokenizationMode])
    p.add_argument("--jobs", type=int, help="max concurrent backend calls")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="heardu", description="Synthetic spoken-NER data pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ned = sub.add_parser("ned", help="build or refine a named entity dictionary")
    ned_sub = ned.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = ned_sub.add_parser("build", parents=[common], help="merge coarse annotations into a NED")
    p.add_argument("annotations")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--types", help="comma-separated type set (default from config)")
    p = ned_sub.add_parser("refine", parents=[common], help="drop entities a judge rejects")
    p.add_argument("ned")
    p.add_argument("--judge", help="judge backend descriptor")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--verdicts", help="verdict log (JSONL); reused on rerun")

    gen = sub.add_parser("gen", help="generate text or audio")
    gen_sub = gen.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = gen_sub.add_parser("text", parents=[common], help="sample entities, generate and align sentences")
    p.add_argument("ned")
    p.add_argument("-n", "--count", type=int)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--generator", help="text generator backend descriptor")
    p.add_argument("--data-size", type=float, help="fraction of NED entities to draw from")
    p.add_argument("--resume", action="store_true")
    p = gen_sub.add_parser("audio", parents=[common], help="synthesize and augment speech")
    p.add_argument("manifest")
    p.add_argument("--tts", help="speech synthesizer backend descriptor")
    p.add_argument("--audio-dir")
    p.add_argument("--no-noise", action="store_true", help="skip background noise")
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("score", parents=[common], help="round-trip ASR and WER per record")
    p.add_argument("manifest")
    p.add_argument("--asr", help="speech recognizer backend descriptor")
    p.add_argument("--lm", help="optional LM scorer for the perplexity diagnostic")
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("filter", parents=[common], help="keep records with wer <= tau")
    p.add_argument("manifest")
    p.add_argument("--tau", type=float)
    p.add_argument("-o", "--output", help="write here instead of in place")

    p = sub.add_parser("sweep", parents=[common], help="kept counts over several thresholds")
    p.add_argument("manifest")
    p.add_argument("--taus", required=True, help="comma-separated thresholds")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output")

    p = sub.add_parser("eval", parents=[common], help="score predictions against a gold manifest")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True, help="JSONL of {id, text} or {id, tokens, tags}")
    p.add_argument("--training-ned")
    p.add_argument("--match", choices=["text", "offsets"], default="text")
    p.add_argument("--label-unit", choices=["types", "tokens"], default="types")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("stats", parents=[common], help="summarize a manifest or NED")
    p.add_argument("path")
    p.add_argument("--lm", help="also report mean perplexity with this LM scorer")
    return parser


# ---------------------------------------------------------------------------

def _config(args, **overrides) -> RunConfig:
    base = {"seed": args.seed, "mode": args.mode, "jobs": args.jobs}
    base.update(overrides)
    return RunConfig.load(args.config, overrides=base)


def _backend(cfg: RunConfig, role: str, descriptor: str | None, mode=None):
    desc = parse_descriptor(descriptor or cfg.backends[role], role)
    backend = create_backend(desc, cfg.seed, mode or cfg.tokenization, cfg.retry_policy())
    if desc.kind != "mock":
        health = health_check(backend)
        if not health.healthy:
            raise BackendError(f"{role} backend {desc.endpoint} unhealthy: {health.reason}")
    return backend


def _print_json(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))


def cmd_ned_build(args) -> int:
    cfg = _config(args, types=args.types.split(",") if args.types else None)
    rejected: list = []
    ned = build_ned(read_annotations(args.annotations), cfg.types, rejected)
    ned.save(args.output)
    for exc in rejected:
        log.warning("%s", exc)
    _print_json({**ned_stats(ned), "rejected": len(rejected)})
    return 0


def cmd_ned_refine(args) -> int:
    cfg = _config(args)
    ned = Ned.load(args.ned)
    judge = _backend(cfg, "entity_judge", args.judge)
    refined, verdicts = refine_ned(ned, judge, cfg.retry_policy(), args.verdicts, cfg.jobs)
    refined.save(args.output)
    _print_json({"before": len(ned), "after": len(refined),
                 "flagged": sum(v.flagged for v in verdicts)})
    return 0


def cmd_gen_text(args) -> int:
    cfg = _config(args, count=args.count, data_size=args.data_size)
    ned = Ned.load(args.ned)
    generator = _backend(cfg, "text_generator", args.generator)
    res = pipeline.gen_text(ned, cfg, args.output, generator, args.resume, sha256_file(args.ned))
    _print_json({"records": res.processed, "failed_attempts": res.failed, "resumed": res.resumed})
    return 0


def _manifest_config(args, **overrides) -> tuple[RunConfig, Manifest]:
    """Config for a stage over an existing manifest: seed and mode default to
    the ones recorded by ``gen text``."""
    m = Manifest.load(args.manifest)
    seed = args.seed if args.seed is not None else m.header.get("seed")
    cfg = _config(args, seed=seed, mode=m.mode.value, **overrides)
    return cfg, m


def cmd_gen_audio(args) -> int:
    cfg, m = _manifest_config(args, noise=False if args.no_noise else None)
    tts = _backend(cfg, "speech_synthesizer", args.tts)
    res = pipeline.gen_audio(args.manifest, cfg, tts, args.audio_dir, args.resume)
    _print_json({"synthesized": res.processed, "failed": res.failed, "resumed": res.resumed})
    return 0


def cmd_score(args) -> int:
    cfg, _ = _manifest_config(args)
    asr = _backend(cfg, "speech_recognizer", args.asr)
    lm = _backend(cfg, "lm_scorer", args.lm) if args.lm else None
    res = pipeline.score(args.manifest, cfg, asr, lm, args.resume)
    _print_json({"scored": res.processed, "resumed": res.resumed})
    return 0


def cmd_filter(args) -> int:
    cfg = _config(args)
    m = pipeline.filter_manifest(args.manifest, cfg, args.tau, args.output)
    _print_json({"tau": m.header["stages"]["filter"]["tau"], **m.header["counts"]})
    return 0


def cmd_sweep(args) -> int:
    try:
        taus = [float(t) for t in args.taus.split(",") if t.strip()]
    except ValueError:
        raise _UsageError(f"bad --taus {args.taus!r}") from None
    rows = pipeline.sweep_manifest(args.manifest, taus)
    text = sweep_to_csv(rows) if args.format == "csv" else sweep_to_json(rows) + "\n"
    if args.output:
        atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def _prediction(obj: dict, mode: TokenizationMode) -> TaggedTranscript:
    if "tags" in obj:
        tokens = obj.get("tokens")
        text = obj.get("text")
        if text is None:
            if tokens is None:
                raise DataError(f"prediction {obj.get('id')}: needs text or tokens")
            text = (" " if mode is TokenizationMode.WORD else "").join(tokens)
        return TaggedTranscript.from_text(text, obj["tags"], mode)
    if "text" in obj:
        # Lenient: a malformed marker costs that entity, not the utterance.
        return decode_entity_aware(obj["text"], mode, strict=False)
    raise DataError(f"prediction {obj.get('id')}: needs text or tags")


def cmd_eval(args) -> int:
    gold = Manifest.load(args.gold)
    mode = gold.mode
    preds = {}
    for obj in iter_jsonl(args.pred):
        if "id" not in obj:
            raise DataError(f"{args.pred}: prediction without id")
        preds[int(obj["id"])] = _prediction(obj, mode)
    pairs = []
    for rec in gold.records:
        if rec.id not in preds:
            log.warning("no prediction for record %d; scored as empty", rec.id)
            pred = TaggedTranscript.from_text("", None, mode)
        else:
            pred = preds[rec.id]
        pairs.append(EvalPair(rec.transcript, pred, rec.id))
    training = Ned.load(args.training_ned).entities if args.training_ned else None
    report = evaluate(pairs, training, args.match, args.label_unit)
    if args.json:
        _print_json(report)
    else:
        print(format_report(report))
    return 0


def cmd_stats(args) -> int:
    path = Path(args.path)
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
        is_manifest = first.lstrip().startswith('{"header"')
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not is_manifest:
        _print_json(ned_stats(Ned.load(path)))
        return 0
    m = Manifest.load(path)
    cfg = _config(args)
    lm = _backend(cfg, "lm_scorer", args.lm, m.mode) if args.lm else None
    wers = [r.wer for r in m.records if r.wer is not None]
    ppl = perplexity_report(m.records, lm)
    ppl.pop("per_record")
    sizes = {"1": 0, "2": 0}
    for r in m.records:
        sizes[str(len(r.entities))] += 1
    _print_json({"records": len(m.records), "counts": m.counts(), "entities_per_record": sizes,
                 "mean_wer": sum(wers) / len(wers) if wers else None, "perplexity": ppl,
                 "backends": m.header.get("backends", {}), "config_digest": m.header.get("config_digest")})
    return 0


COMMANDS = {
    ("ned", "build"): cmd_ned_build,
    ("ned", "refine"): cmd_ned_refine,
    ("gen", "text"): cmd_gen_text,
    ("gen", "audio"): cmd_gen_audio,
    ("score", None): cmd_score,
    ("filter", None): cmd_filter,
    ("sweep", None): cmd_sweep,
    ("eval", None): cmd_eval,
    ("stats", None): cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[(args.command, getattr(args, "action", None))]
    try:
        return handler(args)
    except _UsageError as exc:
        print(f"heardu: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"heardu: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"heardu: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, HearduError, OSError) as exc:
        print(f"heardu: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
