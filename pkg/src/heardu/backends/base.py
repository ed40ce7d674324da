"""Contracts for the five model roles the pipeline talks to."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

ROLES = ("text_generator", "entity_judge", "speech_synthesizer", "speech_recognizer", "lm_scorer")


@runtime_checkable
class TextGenerator(Protocol):
    identity: str

    def generate(self, prompt: str, record_id: int | None = None) -> str: ...


@runtime_checkable
class EntityJudge(Protocol):
    identity: str

    def judge(self, surface: str, etype: str) -> str: ...


@runtime_checkable
class SpeechSynthesizer(Protocol):
    identity: str

    def speakers(self) -> list[str]: ...

    def synthesize(self, text: str, speaker_id: str, speed: float, record_id: int | None = None): ...


@runtime_checkable
class SpeechRecognizer(Protocol):
    identity: str
    entity_aware: bool

    def recognize(self, audio, record_id: int | None = None) -> str: ...


@runtime_checkable
class LanguageModelScorer(Protocol):
    identity: str

    def perplexity(self, text: str, record_id: int | None = None) -> float: ...


@dataclass(frozen=True)
class BackendDescriptor:
    role: str
    kind: str  # "mock" | "remote" | "llm" (judge prompt sent to a generation endpoint)
    endpoint: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown backend role {self.role!r}")
        if self.kind not in ("mock", "remote", "llm"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "llm" and self.role != "entity_judge":
            raise ValueError("llm: descriptors are only meaningful for the entity judge")

    @property
    def identity(self) -> str:
        if self.kind == "mock":
            args = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
            return f"mock-{self.role}({args})"
        prefix = "llm:" if self.kind == "llm" else ""
        return prefix + self.endpoint
