"""Round-trip noise scoring: WER between a transcript and the ASR hypothesis
of its synthesised speech, threshold filtering and threshold sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .core import RESERVED_CHARS, TokenizationMode, is_punct, strip_markers, tokenize
from .errors import EmptyReference, UnscoredRecord
from .records import GenRecord, Status

DEFAULT_TAU = {TokenizationMode.WORD: 0.5, TokenizationMode.CHAR: 0.3}


@dataclass(frozen=True)
class FilterConfig:
    mode: TokenizationMode = TokenizationMode.WORD
    tau: float | None = None  # None -> per-mode default
    casefold: bool = True
    strip_punct: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", TokenizationMode.parse(self.mode))
        if self.tau is None:
            object.__setattr__(self, "tau", DEFAULT_TAU[self.mode])
        if not (self.tau >= 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be a finite non-negative number, got {self.tau}")


class EditOps(NamedTuple):
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def _as_ids(ref: Sequence[str], hyp: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[str, int] = {}
    r = np.fromiter((vocab.setdefault(t, len(vocab)) for t in ref), dtype=np.int64, count=len(ref))
    h = np.fromiter((vocab.setdefault(t, len(vocab)) for t in hyp), dtype=np.int64, count=len(hyp))
    return r, h


def edit_distance(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> EditOps:
    """Minimum-cost Levenshtein alignment; among equal-cost alignments the
    one with fewest substitutions, then fewest deletions."""
    if not ref_tokens:
        return EditOps(0, 0, len(hyp_tokens), 0)
    if not hyp_tokens:
        return EditOps(0, len(ref_tokens), 0, len(ref_tokens))
    s, d, i = kernels.edit_ops(*_as_ids(ref_tokens, hyp_tokens))
    return EditOps(s, d, i, len(ref_tokens))


def wer_tokens(text: str, mode: TokenizationMode | str, casefold: bool = True,
               strip_punct: bool = True) -> list[str]:
    """Tokens compared by WER after the configured normalisation."""
    mode = TokenizationMode.parse(mode)
    if casefold and mode is TokenizationMode.WORD:
        text = text.casefold()
    if strip_punct:
        text = "".join(ch for ch in text if not is_punct(ch))
    return tokenize(text, mode)


def wer_ops(ref: str, hyp: str, mode: TokenizationMode | str = TokenizationMode.WORD,
            casefold: bool = True, strip_punct: bool = True) -> EditOps:
    ref_toks = wer_tokens(ref, mode, casefold, strip_punct)
    if not ref_toks:
        raise EmptyReference(f"reference is empty after normalisation: {ref!r}")
    return edit_distance(ref_toks, wer_tokens(hyp, mode, casefold, strip_punct))


def compute_wer(ref: str, hyp: str, mode: TokenizationMode | str = TokenizationMode.WORD,
                casefold: bool = True, strip_punct: bool = True) -> float:
    ops = wer_ops(ref, hyp, mode, casefold, strip_punct)
    return ops.errors / ops.ref_len


def score_record(record: GenRecord, asr, config: FilterConfig, audio=None,
                 entity_aware: bool = False) -> GenRecord:
    """Recognise ``audio`` (an AudioBuffer for ``record``) and attach the
    round-trip WER. Backend errors propagate and leave ``record`` untouched."""
    if record.status is not Status.SYNTHESIZED:
        raise ValueError(f"record {record.id} is {record.status.value}, expected synthesized")
    if audio is None:
        raise ValueError(f"record {record.id} has no audio")
    hyp = asr.recognize(audio, record_id=record.id)
    if entity_aware or RESERVED_CHARS.intersection(hyp):
        hyp = strip_markers(hyp)
    wer = compute_wer(record.transcript.text, hyp, config.mode, config.casefold, config.strip_punct)
    return replace(record, asr_text=hyp, wer=wer, status=Status.SCORED)


def apply_filter(records: Iterable[GenRecord], config: FilterConfig
                 ) -> tuple[list[GenRecord], list[GenRecord]]:
    """Partition scored records into (kept, filtered) by ``wer <= tau``.

    Already-filtered manifests may be re-filtered with a different tau.
    """
    kept, filtered = [], []
    for rec in records:
        if rec.wer is None or rec.status not in Status.scored_states():
            raise UnscoredRecord(rec.id)
        if rec.wer <= config.tau:
            kept.append(replace(rec, status=Status.KEPT))
        else:
            filtered.append(replace(rec, status=Status.FILTERED))
    return kept, filtered


class SweepRow(NamedTuple):
    tau: float
    kept_count: int
    kept_fraction: float


def threshold_sweep(records: Sequence[GenRecord], taus: Iterable[float]) -> list[SweepRow]:
    wers = []
    for rec in records:
        if rec.wer is None:
            raise UnscoredRecord(rec.id)
        wers.append(rec.wer)
    arr = np.sort(np.asarray(wers, dtype=float))
    rows = []
    for tau in sorted(float(t) for t in taus):
        kept = int(np.searchsorted(arr, tau, side="right"))
        rows.append(SweepRow(tau, kept, kept / len(arr) if len(arr) else 0.0))
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "kept_count", "kept_fraction"])
    for r in rows:
        w.writerow([repr(r.tau), r.kept_count, repr(r.kept_fraction)])
    return buf.getvalue()


def sweep_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps([r._asdict() for r in rows], indent=2)


def perplexity_report(records: Sequence[GenRecord], lm=None,
                      reference_texts: Sequence[str] = ()) -> dict:
    """Mean LM perplexity of synthetic transcripts (diagnostic only).

    With ``lm`` each transcript is scored afresh; otherwise stored ``ppl``
    values are used. Means are reported overall and for kept / filtered
    records; a mean is omitted when its group is empty.
    """
    per_record = {}
    for rec in records:
        if lm is not None:
            per_record[rec.id] = float(lm.perplexity(rec.transcript.text, record_id=rec.id))
        elif rec.ppl is not None:
            per_record[rec.id] = rec.ppl

    def summary(values):
        values = list(values)
        out = {"count": len(values)}
        if values:
            out["mean"] = float(np.mean(values))
        return out

    report = summary(per_record.values())
    status_of = {r.id: r.status for r in records}
    report["kept"] = summary(v for k, v in per_record.items() if status_of[k] is Status.KEPT)
    report["filtered"] = summary(v for k, v in per_record.items() if status_of[k] is Status.FILTERED)
    if reference_texts:
        if lm is None:
            raise ValueError("reference texts need an lm to score them")
        report["reference"] = summary(float(lm.perplexity(t)) for t in reference_texts)
    report["per_record"] = per_record
    return report
