"""Stage runners behind the CLI: text generation, speech synthesis, ASR
scoring and filtering over a manifest on disk."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import audio as audio_mod
from .align import lexical_align, make_target
from .config import RunConfig
from .errors import AlignmentFailed, DataError, EmptyAudio, GenerationExhausted
from .filtering import FilterConfig, apply_filter, score_record, threshold_sweep
from .generate import PromptTemplate, generate_sentence, sample_entities, subset_entities
from .io import sha256_file
from .manifest import Journal, Manifest, append_runlog
from .ned import Ned
from .records import GenRecord, Status

log = logging.getLogger(__name__)


def _map_in_windows(fn: Callable, items: Sequence, jobs: int) -> Iterable[tuple[object, object]]:
    """Yield ``(item, result_or_exception)`` in input order, keeping at most
    ``jobs`` calls in flight per window."""
    if jobs <= 1:
        for item in items:
            try:
                yield item, fn(item)
            except Exception as exc:  # noqa: BLE001 - caller decides
                yield item, exc
        return

    def safe(item):
        try:
            return fn(item)
        except Exception as exc:  # noqa: BLE001
            return exc

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for lo in range(0, len(items), jobs):
            window = items[lo:lo + jobs]
            yield from zip(window, pool.map(safe, window))


@dataclass
class StageResult:
    manifest: Manifest
    processed: int = 0
    failed: int = 0
    resumed: int = 0


# ---------------------------------------------------------------------------
# gen text

def gen_text(ned: Ned, config: RunConfig, out_path: str | Path, generator,
             resume: bool = False, ned_digest: str | None = None) -> StageResult:
    mode = config.tokenization
    pool = subset_entities(ned, config.data_size, config.seed)
    sample_cfg = config.sample_config()
    constraints = config.constraints()
    template = PromptTemplate.load(config.template_path) if config.template_path else PromptTemplate()
    extras = ned.entities if config.tag_all_ned_entities else ()

    def one(record_id: int) -> GenRecord:
        ents = sample_entities(pool, sample_cfg, record_id)
        text = generate_sentence(ents, generator, constraints, mode, config.domain, template, record_id)
        tagged = lexical_align(text, ents, mode, extra_entities=extras)
        return GenRecord(record_id, tuple(ents), tagged, make_target(tagged))

    journal = Journal(out_path, "gen_text")
    done = journal.replay() if resume else {}
    if not resume:
        journal.reset()
    records: dict[int, GenRecord] = {}
    failures = 0
    for rid, entry in done.items():
        if "record" in entry:
            records[rid] = GenRecord.from_json(entry["record"], mode)
        else:
            failures += 1

    max_ids = 2 * config.count + 10
    next_id = 0
    while len(records) < config.count and next_id < max_ids:
        window = [i for i in range(next_id, min(max_ids, next_id + 4 * config.jobs)) if i not in done]
        next_id = min(max_ids, next_id + 4 * config.jobs)
        for rid, result in _map_in_windows(one, window, config.jobs):
            if isinstance(result, (GenerationExhausted, AlignmentFailed)):
                log.warning("record %d dropped: %s", rid, result)
                journal.append(rid, failed=str(result))
                failures += 1
            elif isinstance(result, Exception):
                journal.close()
                raise result
            else:
                journal.append(rid, record=result.to_json())
                records[rid] = result
    if len(records) < config.count:
        log.warning("only %d of %d records generated", len(records), config.count)
    kept = sorted(records.values(), key=lambda r: r.id)[:config.count]

    header = {
        "seed": config.seed,
        "mode": mode.value,
        "types": list(ned.types),
        "config_digest": config.digest(),
        "data_size": config.data_size,
        "ned_sha256": ned_digest,
        "backends": {"text_generator": generator.identity},
        "stages": {"gen_text": {"requested": config.count, "failed_attempts": failures}},
    }
    manifest = Manifest(header, kept)
    manifest.save(out_path)
    journal.close(remove=True)
    append_runlog(out_path, {"stage": "gen_text", "config_digest": config.digest(),
                             "backend": generator.identity, "resumed": len(done)})
    return StageResult(manifest, len(kept), failures, len(done))


# ---------------------------------------------------------------------------
# gen audio

def gen_audio(manifest_path: str | Path, config: RunConfig, tts, audio_dir: str | Path | None = None,
              resume: bool = False) -> StageResult:
    manifest_path = Path(manifest_path)
    manifest = Manifest.load(manifest_path)
    base = manifest_path.parent
    audio_dir = Path(audio_dir) if audio_dir else base / "audio"
    seed = int(manifest.header.get("seed", config.seed))
    acfg = config.audio_config()
    acfg = audio_mod.AudioConfig(seed, acfg.speed_range, acfg.snr_range, acfg.effects)
    speakers = tts.speakers()

    def one(rec: GenRecord) -> GenRecord:
        plan = audio_mod.plan_synthesis(rec.id, acfg, speakers)
        if not config.noise:
            plan = audio_mod.SynthesisPlan(plan.speaker_id, plan.speed_factor, None, plan.effect)
        buf = audio_mod.synthesize(rec.transcript.text, plan, tts, record_id=rec.id)
        buf = audio_mod.augment(buf, plan, seed, rec.id)
        if buf.clipped:
            log.info("record %d: %d samples clipped", rec.id, buf.clipped)
        ref = audio_mod.write_audio(buf, audio_dir / f"{rec.id:08d}.wav", base)
        return rec.advance(audio=ref, status=Status.SYNTHESIZED)

    result = _run_record_stage(manifest, manifest_path, "gen_audio", one,
                               lambda r: r.status is Status.PENDING, config.jobs, resume,
                               soft_errors=(EmptyAudio,))
    manifest.header.setdefault("backends", {})["speech_synthesizer"] = tts.identity
    manifest.header.setdefault("stages", {})["gen_audio"] = {
        "speed_range": list(acfg.speed_range), "snr_range": list(acfg.snr_range) if config.noise else None,
        "effects": list(acfg.effects), "speakers": speakers}
    manifest.save(manifest_path)
    Journal(manifest_path, "gen_audio").close(remove=True)
    append_runlog(manifest_path, {"stage": "gen_audio", "backend": tts.identity,
                                  "processed": result.processed, "resumed": result.resumed})
    return result


# ---------------------------------------------------------------------------
# score

def score(manifest_path: str | Path, config: RunConfig, asr, lm=None, resume: bool = False) -> StageResult:
    manifest_path = Path(manifest_path)
    manifest = Manifest.load(manifest_path)
    base = manifest_path.parent
    fcfg = FilterConfig(manifest.mode, config.tau, config.wer_casefold, config.wer_strip_punct)
    entity_aware = bool(getattr(asr, "entity_aware", False))

    def one(rec: GenRecord) -> GenRecord:
        path = base / rec.audio.path
        if sha256_file(path) != rec.audio.sha256:
            raise DataError(f"record {rec.id}: audio digest mismatch for {path}")
        scored = score_record(rec, asr, fcfg, audio_mod.read_audio(path), entity_aware)
        if lm is not None:
            scored = scored.advance(ppl=float(lm.perplexity(rec.transcript.text, record_id=rec.id)))
        return scored

    result = _run_record_stage(manifest, manifest_path, "score", one,
                               lambda r: r.status is Status.SYNTHESIZED, config.jobs, resume)
    backends = manifest.header.setdefault("backends", {})
    backends["speech_recognizer"] = asr.identity
    if lm is not None:
        backends["lm_scorer"] = lm.identity
    manifest.header.setdefault("stages", {})["score"] = {
        "casefold": fcfg.casefold, "strip_punct": fcfg.strip_punct}
    manifest.save(manifest_path)
    Journal(manifest_path, "score").close(remove=True)
    append_runlog(manifest_path, {"stage": "score", "backend": asr.identity,
                                  "processed": result.processed, "resumed": result.resumed})
    return result


def _run_record_stage(manifest: Manifest, manifest_path: Path, stage: str, fn, select, jobs: int,
                      resume: bool, soft_errors: tuple = ()) -> StageResult:
    """Apply ``fn`` to every selected record, journaling each result. Hard
    errors stop the stage after completed work is journaled."""
    journal = Journal(manifest_path, stage)
    done = journal.replay() if resume else {}
    if not resume:
        journal.reset()
    by_id = {r.id: i for i, r in enumerate(manifest.records)}
    for rid, entry in done.items():
        if rid in by_id:
            manifest.records[by_id[rid]] = GenRecord.from_json(entry["record"], manifest.mode)
    todo = [r for r in manifest.records if select(r) and r.id not in done]
    res = StageResult(manifest, resumed=len(done))
    first_error = None
    try:
        for rec, out in _map_in_windows(fn, todo, jobs):
            if isinstance(out, soft_errors):
                log.warning("record %d left %s: %s", rec.id, rec.status.value, out)
                res.failed += 1
            elif isinstance(out, Exception):
                first_error = first_error or out
            else:
                journal.append(rec.id, record=out.to_json())
                manifest.records[by_id[rec.id]] = out
                res.processed += 1
            if first_error is not None:
                break
    finally:
        journal.close()
    if first_error is not None:
        raise first_error
    return res


# ---------------------------------------------------------------------------
# filter / sweep

def filter_manifest(manifest_path: str | Path, config: RunConfig, tau: float | None = None,
                    out_path: str | Path | None = None) -> Manifest:
    manifest = Manifest.load(manifest_path)
    fcfg = FilterConfig(manifest.mode, tau if tau is not None else config.tau)
    kept, filtered = apply_filter(manifest.records, fcfg)
    manifest.records = sorted(kept + filtered, key=lambda r: r.id)
    manifest.header.setdefault("stages", {})["filter"] = {"tau": fcfg.tau, "rule": "wer <= tau"}
    target = out_path or manifest_path
    manifest.save(target)
    append_runlog(target, {"stage": "filter", "tau": fcfg.tau, "kept": len(kept), "filtered": len(filtered)})
    return manifest


def sweep_manifest(manifest_path: str | Path, taus: Sequence[float]):
    manifest = Manifest.load(manifest_path)
    scored = [r for r in manifest.records if r.status in Status.scored_states()]
    if len(scored) != len(manifest.records):
        raise DataError("sweep needs every record scored")
    return threshold_sweep(scored, taus)
