"""Named entity dictionary: construction from coarse NER output, judge-based
refinement and per-type statistics."""

from __future__ import annotations

import json
import logging
import re
import threading
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .core import DEFAULT_TYPES, Entity, check_type_label, dictionary_order, make_entity
from .errors import DataError, RejectedEntity
from .io import atomic_write_text, open_log_for_append
from .retry import RetryPolicy

log = logging.getLogger(__name__)

JUDGE_PROMPT = (
    "I will write you an entity and its type, you need to judge If it is an entity "
    "and the type is correct, print YES or NO.\n"
    "###User: My entity is '{entity}', the type is '{type}'\n"
    "####Response:"
)


class CoarseAnnotation(NamedTuple):
    doc_id: str
    surface: str
    etype: str
    count: int = 1


@dataclass(frozen=True)
class Ned:
    types: tuple[str, ...] = DEFAULT_TYPES
    entities: tuple[Entity, ...] = ()
    counts: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for t in self.types:
            check_type_label(t)
        ents = sorted(set(self.entities), key=dictionary_order)
        keys = [e.key for e in ents]
        if len(set(keys)) != len(keys):
            raise DataError("duplicate (surface, type) pairs in dictionary")
        for e in ents:
            if e.etype not in self.types:
                raise DataError(f"entity {e.surface!r} has type {e.etype} outside {self.types}")
        object.__setattr__(self, "entities", tuple(ents))

    def __len__(self) -> int:
        return len(self.entities)

    def count(self, entity: Entity) -> int:
        return self.counts.get(entity, 0)

    def to_json(self) -> dict:
        return {
            "types": list(self.types),
            "entities": [{"surface": e.surface, "type": e.etype, "count": self.count(e)}
                         for e in self.entities],
        }

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n")

    @classmethod
    def from_json(cls, obj: dict) -> "Ned":
        try:
            types = tuple(obj.get("types") or DEFAULT_TYPES)
            ents, counts = [], {}
            for item in obj.get("entities", []):
                ent = make_entity(item["surface"], item["type"])
                ents.append(ent)
                counts[ent] = int(item.get("count", 0))
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed dictionary ({exc!r})") from None
        return cls(types, tuple(ents), counts)

    @classmethod
    def load(cls, path: str | Path) -> "Ned":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read dictionary {path}: {exc}") from None
        return cls.from_json(obj)


def read_annotations(path: str | Path) -> Iterator[CoarseAnnotation]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                yield CoarseAnnotation(str(obj.get("doc_id", "")), obj["surface"], obj["type"],
                                       int(obj.get("count", 1)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad annotation line ({exc})") from None


def build_ned(annotations: Iterable[CoarseAnnotation], types=DEFAULT_TYPES,
              rejected: list | None = None) -> Ned:
    """Normalise and merge coarse annotations.

    Entries merge on (casefolded surface, type); the merged entity keeps the
    most frequent original casing (first seen wins ties). Bad entries are
    appended to ``rejected`` as :class:`RejectedEntity` and skipped.
    """
    types = tuple(types)
    casings: dict[tuple[str, str], Counter] = defaultdict(Counter)
    order: dict[tuple[str, str], dict[str, int]] = defaultdict(dict)
    for n, ann in enumerate(annotations):
        try:
            ent = make_entity(ann.surface, ann.etype)
            if ent.etype not in types:
                raise RejectedEntity(ann.surface, f"type {ann.etype} not in {list(types)}")
        except RejectedEntity as exc:
            log.debug("doc %s: %s", ann.doc_id, exc)
            if rejected is not None:
                rejected.append(exc)
            continue
        casings[ent.key][ent.surface] += ann.count
        order[ent.key].setdefault(ent.surface, n)

    ents, counts = [], {}
    for key, variants in casings.items():
        surface = min(variants, key=lambda s: (-variants[s], order[key][s]))
        ent = Entity(surface, key[1])
        ents.append(ent)
        counts[ent] = sum(variants.values())
    return Ned(types, tuple(ents), counts)


def ned_stats(ned: Ned) -> dict:
    per_type = {t: 0 for t in sorted(ned.types)}
    for e in ned.entities:
        per_type[e.etype] += 1
    return {"types": per_type, "total": len(ned)}


# ---------------------------------------------------------------------------
# refinement

class RefinementVerdict(NamedTuple):
    entity: Entity
    verdict: str  # accepted | rejected | indeterminate
    raw_response: str

    @property
    def flagged(self) -> bool:
        return self.verdict == "indeterminate"


_YES_NO = re.compile(r"(?<![^\W_])(yes|no)(?![^\W_])", re.IGNORECASE)


def parse_judgement(response: str) -> str | None:
    """First standalone YES/NO token (case-insensitive) -> accepted/rejected."""
    m = _YES_NO.search(response or "")
    if not m:
        return None
    return "accepted" if m.group(1).lower() == "yes" else "rejected"


def build_judge_prompt(entity: Entity) -> str:
    return JUDGE_PROMPT.format(entity=entity.surface, type=entity.etype)


def _judge_one(entity: Entity, judge, policy: RetryPolicy) -> RefinementVerdict:
    raw = ""
    for _ in range(policy.max_retries + 1):
        raw = judge.judge(entity.surface, entity.etype)
        verdict = parse_judgement(raw)
        if verdict is not None:
            return RefinementVerdict(entity, verdict, raw)
    return RefinementVerdict(entity, "indeterminate", raw)


def load_verdicts(path: str | Path) -> dict[tuple[str, str], RefinementVerdict]:
    out = {}
    p = Path(path)
    if not p.exists():
        return out
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            try:
                obj = json.loads(line)
            except ValueError:
                continue  # torn final line from an interrupted run
            ent = make_entity(obj["surface"], obj["type"])
            out[ent.key] = RefinementVerdict(ent, obj["verdict"], obj.get("raw_response", ""))
    return out


def refine_ned(ned: Ned, judge, policy: RetryPolicy = RetryPolicy(),
               verdict_log: str | Path | None = None, jobs: int = 1
               ) -> tuple[Ned, list[RefinementVerdict]]:
    """Ask ``judge`` about every entity; drop the ones it rejects.

    Unparsable answers are re-asked up to ``policy.max_retries`` times and then
    kept as ``indeterminate``. With ``verdict_log`` every verdict is appended
    as it arrives and entities already in the log are not re-asked. Backend
    errors propagate after in-flight verdicts are logged.
    """
    previous = load_verdicts(verdict_log) if verdict_log else {}
    todo = [e for e in ned.entities if e.key not in previous]
    lock = threading.Lock()
    fresh: dict[tuple[str, str], RefinementVerdict] = {}
    fh = open_log_for_append(verdict_log) if verdict_log else None

    def work(ent: Entity) -> None:
        v = _judge_one(ent, judge, policy)
        with lock:
            fresh[ent.key] = v
            if fh:
                fh.write(json.dumps({"surface": ent.surface, "type": ent.etype, "verdict": v.verdict,
                                     "raw_response": v.raw_response, "flagged": v.flagged},
                                    ensure_ascii=False) + "\n")
                fh.flush()

    try:
        if jobs <= 1:
            for ent in todo:
                work(ent)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for fut in [pool.submit(work, e) for e in todo]:
                    fut.result()
    finally:
        if fh:
            fh.close()

    verdicts = []
    for ent in ned.entities:
        v = previous.get(ent.key) or fresh[ent.key]
        verdicts.append(RefinementVerdict(ent, v.verdict, v.raw_response))
    kept = tuple(v.entity for v in verdicts if v.verdict != "rejected")
    for v in verdicts:
        if v.flagged:
            log.warning("indeterminate verdict for %r/%s, kept for review", v.entity.surface, v.entity.etype)
    return Ned(ned.types, kept, {e: ned.count(e) for e in kept}), verdicts
