"""Pipeline record and its manifest-line JSON form."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Any

from .core import Entity, TaggedTranscript, TokenizationMode, make_entity


class Status(str, enum.Enum):
    PENDING = "pending"
    SYNTHESIZED = "synthesized"
    SCORED = "scored"
    KEPT = "kept"
    FILTERED = "filtered"

    @property
    def rank(self) -> int:
        # kept and filtered share a tier so re-filtering can move between them
        return {"pending": 0, "synthesized": 1, "scored": 2, "kept": 3, "filtered": 3}[self.value]

    @classmethod
    def scored_states(cls) -> frozenset["Status"]:
        return frozenset({cls.SCORED, cls.KEPT, cls.FILTERED})


@dataclass(frozen=True)
class AudioRef:
    path: str  # relative to the manifest directory
    duration_ms: int
    sha256: str

    def to_json(self) -> dict:
        return {"path": self.path, "duration_ms": self.duration_ms, "sha256": self.sha256}

    @classmethod
    def from_json(cls, obj: dict) -> "AudioRef":
        return cls(obj["path"], int(obj["duration_ms"]), obj["sha256"])


@dataclass(frozen=True)
class GenRecord:
    id: int
    entities: tuple[Entity, ...]
    transcript: TaggedTranscript
    target: str
    audio: AudioRef | None = None
    asr_text: str | None = None
    wer: float | None = None
    ppl: float | None = None
    status: Status = Status.PENDING

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("record id must be non-negative")
        if not 1 <= len(self.entities) <= 2:
            raise ValueError(f"record {self.id}: expected 1 or 2 sampled entities")
        object.__setattr__(self, "status", Status(self.status))
        if (self.wer is not None) != (self.status in Status.scored_states()):
            raise ValueError(f"record {self.id}: wer must be present exactly when scored")
        if self.ppl is not None and not self.ppl > 0:
            raise ValueError(f"record {self.id}: perplexity must be positive")

    def advance(self, **changes) -> "GenRecord":
        new = replace(self, **changes)
        if new.status.rank < self.status.rank:
            raise ValueError(f"record {self.id}: cannot move from {self.status.value} to {new.status.value}")
        return new

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "entities": [{"surface": e.surface, "type": e.etype} for e in self.entities],
            "text": self.transcript.text,
            "tokens": list(self.transcript.tokens),
            "tags": list(self.transcript.tags),
            "target": self.target,
            "audio": self.audio.to_json() if self.audio else None,
            "asr_text": self.asr_text,
            "wer": self.wer,
            "ppl": self.ppl,
            "status": self.status.value,
        }

    @classmethod
    def from_json(cls, obj: dict, mode: TokenizationMode | str) -> "GenRecord":
        transcript = TaggedTranscript(obj["text"], tuple(obj["tokens"]), tuple(obj["tags"]), mode)
        return cls(
            id=int(obj["id"]),
            entities=tuple(make_entity(e["surface"], e["type"]) for e in obj["entities"]),
            transcript=transcript,
            target=obj["target"],
            audio=AudioRef.from_json(obj["audio"]) if obj.get("audio") else None,
            asr_text=obj.get("asr_text"),
            wer=obj.get("wer"),
            ppl=obj.get("ppl"),
            status=Status(obj.get("status", "pending")),
        )
