"""Deterministic offline backends.

Every mock is a pure function of its constructor arguments and the call's
record id, so whole pipeline runs are reproducible byte for byte.
"""

from __future__ import annotations

import re
import time

import numpy as np

from .. import seeding
from ..audio import CANONICAL_RATE, AudioBuffer, apply_speed, to_int16
from ..core import TokenizationMode, tokenize
from ..errors import MalformedResponse

_PROMPT_ENTITIES = re.compile(
    r"My entit(?:y is|ies are) '(?P<entities>.*)', the types? (?:is|are) '(?P<types>[^']*)'")

FILLER_WORDS = (
    "the members discussed several important questions about regional policy during "
    "a long morning session while colleagues listened carefully and then raised further "
    "points regarding budgets transport energy agriculture education health research "
    "and cooperation between neighbouring countries over the coming years"
).split()
FILLER_CHARS = "今天我们一起讨论了很多关于天气音乐电影新闻交通导航时间闹钟提醒的问题并且听取大家的意见"


class MockTextGenerator:
    """Fills sampled entities into a fixed frame padded to ``words`` tokens
    (characters in char mode). Entities are read back out of the prompt."""

    def __init__(self, seed: int = 0, mode=TokenizationMode.WORD, words: int = 30, **_):
        self.seed = int(seed)
        self.mode = TokenizationMode.parse(mode)
        self.words = int(words)
        self.identity = f"mock-text_generator(words={self.words})"

    def generate(self, prompt: str, record_id: int | None = None) -> str:
        m = _PROMPT_ENTITIES.search(prompt)
        if not m:
            raise MalformedResponse("mock generator could not find entities in the prompt")
        surfaces = [s.strip() for s in m.group("entities").split(", ")]
        rng = seeding.record_rng(self.seed, record_id or 0, seeding.MOCK_TEXT)
        if self.mode is TokenizationMode.WORD:
            head = " and ".join(surfaces) + " appeared in a generated sentence ,"
            n_head = len(head.split()) - 1
            filler = rng.choice(FILLER_WORDS, size=max(0, self.words - n_head))
            return head + " " + " ".join(filler) + " ."
        head = "和".join(surfaces) + "出现在一个生成的句子里，"
        n_head = sum(1 for ch in head if not ch.isspace()) - 1
        filler = rng.choice(list(FILLER_CHARS), size=max(0, self.words - n_head))
        return head + "".join(filler) + "。"


class MockEntityJudge:
    """``always_yes``, ``always_no`` or ``denylist`` (NO for listed surfaces)."""

    def __init__(self, policy: str = "always_yes", deny=(), **_):
        if policy not in ("always_yes", "always_no", "denylist"):
            raise ValueError(f"unknown mock judge policy {policy!r}")
        self.policy = policy
        self.deny = {d.casefold() for d in ([deny] if isinstance(deny, str) else deny)}
        self.identity = f"mock-entity_judge(policy={policy})"

    def judge(self, surface: str, etype: str) -> str:
        if self.policy == "always_no":
            return "NO"
        if self.policy == "denylist" and surface.casefold() in self.deny:
            return "NO"
        return "YES"


class MockSpeechSynthesizer:
    """One 80 ms tone per character (silence for whitespace), pitched by the
    character and speaker, then time-scaled by ``speed``. The input text rides
    along in the buffer metadata for :class:`MockSpeechRecognizer`."""

    ms_per_char = 80
    amplitude = 6000.0

    def __init__(self, seed: int = 0, speakers: int = 4, delay: float = 0.0, **_):
        self.seed = int(seed)
        self._speakers = [f"mock-{i}" for i in range(int(speakers))]
        self.delay = float(delay)
        self.identity = f"mock-speech_synthesizer(speakers={len(self._speakers)})"

    def speakers(self) -> list[str]:
        return list(self._speakers)

    def synthesize(self, text: str, speaker_id: str, speed: float = 1.0,
                   record_id: int | None = None) -> AudioBuffer:
        if self.delay:
            time.sleep(self.delay)
        n = CANONICAL_RATE * self.ms_per_char // 1000
        t = np.arange(n) / CANONICAL_RATE
        base = 110.0 + 15.0 * (sum(map(ord, speaker_id)) % 8)
        pieces = []
        for ch in text:
            if ch.isspace():
                pieces.append(np.zeros(n))
            else:
                pieces.append(self.amplitude * np.sin(2 * np.pi * (base + 7.0 * (ord(ch) % 64)) * t))
        samples, _ = to_int16(np.concatenate(pieces) if pieces else np.zeros(0))
        buf = AudioBuffer(samples, CANONICAL_RATE, {"mock_text": text, "speaker": speaker_id})
        return apply_speed(buf, speed)


class MockSpeechRecognizer:
    """Returns the text embedded by the mock synthesizer, replacing each
    token with probability ``p``.

    The per-token uniforms come from the record's stream and do not depend on
    ``p``, so a larger ``p`` corrupts a superset of tokens.
    """

    entity_aware = False

    def __init__(self, seed: int = 0, p: float = 0.0, mode=TokenizationMode.WORD, **_):
        if not 0.0 <= float(p) <= 1.0:
            raise ValueError("substitution probability must be in [0, 1]")
        self.seed = int(seed)
        self.p = float(p)
        self.mode = TokenizationMode.parse(mode)
        self.identity = f"mock-speech_recognizer(p={self.p})"

    def recognize(self, audio: AudioBuffer, record_id: int | None = None) -> str:
        text = audio.metadata.get("mock_text")
        if text is None:
            raise MalformedResponse("audio was not produced by the mock synthesizer")
        tokens = tokenize(text, self.mode)
        if self.p > 0 and tokens:
            u = seeding.record_rng(self.seed, record_id or 0, seeding.MOCK_ASR).random(len(tokens))
            tokens = [self._replacement(tok) if u[i] < self.p else tok for i, tok in enumerate(tokens)]
        return (" " if self.mode is TokenizationMode.WORD else "").join(tokens)

    def _replacement(self, tok: str) -> str:
        if self.mode is TokenizationMode.WORD:
            return "xq" if tok.casefold() != "xq" else "qx"
        return "〇" if tok != "〇" else "口"


class MockLanguageModel:
    """``constant``: always ``ppl``; ``length``: ``ppl`` plus the word count."""

    def __init__(self, ppl: float = 100.0, kind: str = "constant", **_):
        if kind not in ("constant", "length"):
            raise ValueError(f"unknown mock lm kind {kind!r}")
        self.ppl = float(ppl)
        self.kind = kind
        self.identity = f"mock-lm_scorer(kind={kind},ppl={self.ppl})"

    def perplexity(self, text: str, record_id: int | None = None) -> float:
        if self.kind == "constant":
            return self.ppl
        return self.ppl + len(text.split())


MOCKS = {
    "text_generator": MockTextGenerator,
    "entity_judge": MockEntityJudge,
    "speech_synthesizer": MockSpeechSynthesizer,
    "speech_recognizer": MockSpeechRecognizer,
    "lm_scorer": MockLanguageModel,
}
