"""Spoken-NER scoring: corpus WER, span F1, Label-F1 and the seen/unseen
entity breakdown."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

from .core import Entity, TaggedTranscript, spans_from_tags, split_tag
from .errors import EmptyReference
from .filtering import wer_ops


class EvalPair(NamedTuple):
    gold: TaggedTranscript
    pred: TaggedTranscript
    uid: int | str | None = None


@dataclass(frozen=True)
class ScoreReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    precision_undefined: bool = False  # 0/0 reported as 0
    recall_undefined: bool = False

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "ScoreReport":
        p_undef, r_undef = tp + fp == 0, tp + fn == 0
        p = 0.0 if p_undef else tp / (tp + fp)
        r = 0.0 if r_undef else tp / (tp + fn)
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        return cls(p, r, f1, tp, fp, fn, p_undef, r_undef)

    def as_dict(self) -> dict:
        return asdict(self)


def _span_keys(tagged: TaggedTranscript, match: str) -> list[tuple]:
    if match == "offsets":
        return [(s.etype, s.start, s.end) for s in spans_from_tags(tagged)]
    if match == "text":
        return [(s.etype, s.surface) for s in spans_from_tags(tagged)]
    raise ValueError(f"match must be 'text' or 'offsets', got {match!r}")


def _multiset_counts(gold: Iterable, pred: Iterable) -> tuple[int, int, int]:
    g, p = Counter(gold), Counter(pred)
    tp = sum((g & p).values())
    return tp, sum(p.values()) - tp, sum(g.values()) - tp


def span_prf(pairs: Iterable[EvalPair], match: str = "text") -> ScoreReport:
    """Micro-averaged span precision/recall/F1. A predicted span is correct
    when an unused gold span in the same utterance has the same type and
    text (or the same token offsets with ``match="offsets"``)."""
    if match not in ("text", "offsets"):
        raise ValueError(f"match must be 'text' or 'offsets', got {match!r}")
    tp = fp = fn = 0
    for pair in pairs:
        a, b, c = _multiset_counts(_span_keys(pair.gold, match), _span_keys(pair.pred, match))
        tp, fp, fn = tp + a, fp + b, fn + c
    return ScoreReport.from_counts(tp, fp, fn)


def _token_types(tagged: TaggedTranscript) -> list[str]:
    return [t for _, t in map(split_tag, tagged.tags) if t is not None]


def label_f1(pairs: Iterable[EvalPair], unit: str = "types") -> ScoreReport:
    """F1 over entity types only.

    ``unit="types"`` compares the multiset of span types per utterance;
    ``unit="tokens"`` compares the multiset of per-token entity types.
    """
    if unit not in ("types", "tokens"):
        raise ValueError(f"unit must be 'types' or 'tokens', got {unit!r}")
    tp = fp = fn = 0
    for pair in pairs:
        if unit == "types":
            g = [s.etype for s in spans_from_tags(pair.gold)]
            p = [s.etype for s in spans_from_tags(pair.pred)]
        else:
            g, p = _token_types(pair.gold), _token_types(pair.pred)
        a, b, c = _multiset_counts(g, p)
        tp, fp, fn = tp + a, fp + b, fn + c
    return ScoreReport.from_counts(tp, fp, fn)


def corpus_wer(pairs: Iterable[EvalPair], casefold: bool = True, strip_punct: bool = True) -> float:
    """Total edit operations over total reference length."""
    errors = ref_len = 0
    for pair in pairs:
        ops = wer_ops(pair.gold.text, pair.pred.text, pair.gold.mode, casefold, strip_punct)
        errors += ops.errors
        ref_len += ops.ref_len
    if ref_len == 0:
        raise EmptyReference("no reference tokens to score")
    return errors / ref_len


def seen_unseen_report(pairs: Iterable[EvalPair], training_entities: Iterable[Entity]
                       ) -> tuple[ScoreReport, ScoreReport]:
    """(seen, unseen) span scores.

    Gold spans fall into "seen" when their casefolded (surface, type) is in
    ``training_entities``. A matched prediction counts in its gold span's
    partition; unmatched predictions count as false positives in their own.
    """
    known = {(e.surface.casefold(), e.etype) for e in training_entities}
    counts = {True: [0, 0, 0], False: [0, 0, 0]}  # seen? -> [tp, fp, fn]

    def seen(key: tuple) -> bool:
        return (key[1].casefold(), key[0]) in known

    for pair in pairs:
        gold = Counter(_span_keys(pair.gold, "text"))
        pred = Counter(_span_keys(pair.pred, "text"))
        for key in gold.keys() | pred.keys():
            hit = min(gold[key], pred[key])
            bucket = counts[seen(key)]
            bucket[0] += hit
            bucket[1] += pred[key] - hit
            bucket[2] += gold[key] - hit
    return ScoreReport.from_counts(*counts[True]), ScoreReport.from_counts(*counts[False])


def evaluate(pairs: Sequence[EvalPair], training_entities: Iterable[Entity] | None = None,
             match: str = "text", label_unit: str = "types") -> dict:
    spans = span_prf(pairs, match)
    labels = label_f1(pairs, label_unit)
    report = {
        "utterances": len(pairs),
        "wer": corpus_wer(pairs),
        "span": spans.as_dict(),
        "label": labels.as_dict(),
    }
    if training_entities is not None:
        seen, unseen = seen_unseen_report(pairs, training_entities)
        report["seen"] = seen.as_dict()
        report["unseen"] = unseen.as_dict()
    return report


def format_report(report: dict) -> str:
    lines = [f"{'utterances':<12}{report['utterances']:>10}",
             f"{'WER':<12}{100 * report['wer']:>10.2f}"]
    header = f"{'':<12}{'P':>10}{'R':>10}{'F1':>10}{'TP':>8}{'FP':>8}{'FN':>8}"
    lines.append(header)
    for name in ("span", "label", "seen", "unseen"):
        if name not in report:
            continue
        r = report[name]
        lines.append(f"{name:<12}{100 * r['precision']:>10.2f}{100 * r['recall']:>10.2f}"
                     f"{100 * r['f1']:>10.2f}{r['tp']:>8}{r['fp']:>8}{r['fn']:>8}")
    return "\n".join(lines)
