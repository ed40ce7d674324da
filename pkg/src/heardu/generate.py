"""Entity sampling, prompt construction and candidate-sentence validation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import seeding
from .align import count_words, entity_keys, find_occurrences, match_keys, normalize_transcript
from .core import RESERVED_CHARS, Entity, TokenizationMode, tokenize
from .errors import EmptyNed, GenerationExhausted
from .ned import Ned

log = logging.getLogger(__name__)

INSTRUCTION = (
    "I want you to act as a speaker in {domain}. I will write you entities and their type, "
    "you need to output a sentence containing these entities. The resulting sentence should "
    "be more than 20 words and less than 100 words."
)
SINGLE_TEMPLATE = INSTRUCTION + "\n###User: My entity is '{entities}', the type is '{types}'\n####Response:"
PAIR_TEMPLATE = INSTRUCTION + "\n###User: My entities are '{entities}', the types are '{types}'\n####Response:"

TEMPLATE_SEPARATOR = "\n%%\n"


@dataclass(frozen=True)
class PromptTemplate:
    single: str = SINGLE_TEMPLATE
    pair: str = PAIR_TEMPLATE

    @classmethod
    def load(cls, path: str | Path) -> "PromptTemplate":
        """Read a UTF-8 template file. An optional line holding only ``%%``
        separates the one-entity variant (first) from the two-entity one."""
        text = Path(path).read_text(encoding="utf-8").replace("\r\n", "\n")
        if TEMPLATE_SEPARATOR in text:
            single, pair = text.split(TEMPLATE_SEPARATOR, 1)
            return cls(single.strip("\n"), pair.strip("\n"))
        text = text.strip("\n")
        return cls(text, text)

    def render(self, entities: Sequence[Entity], domain: str) -> str:
        if not 1 <= len(entities) <= 2:
            raise ValueError("prompts take one or two entities")
        tmpl = self.single if len(entities) == 1 else self.pair
        return (tmpl.replace("{domain}", domain)
                .replace("{entities}", ", ".join(e.surface for e in entities))
                .replace("{types}", ",".join(e.etype for e in entities)))


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    entities_per_sentence: tuple[float, float] = (0.5, 0.5)  # P(size=1), P(size=2)
    domain: str = ""

    def __post_init__(self):
        p = tuple(float(x) for x in self.entities_per_sentence)
        if len(p) != 2 or min(p) < 0 or abs(sum(p) - 1.0) > 1e-9:
            raise ValueError(f"entities_per_sentence must be two probabilities summing to 1, got {p}")
        object.__setattr__(self, "entities_per_sentence", p)


@dataclass(frozen=True)
class GenerationConstraints:
    min_words: int = 20
    max_words: int = 100
    max_retries: int = 3

    def __post_init__(self):
        if not 0 < self.min_words < self.max_words:
            raise ValueError("need 0 < min_words < max_words")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def sample_entities(ned: Ned | Sequence[Entity], config: SampleConfig, record_id: int) -> list[Entity]:
    """Draw one or two distinct entities uniformly; deterministic in
    (seed, record_id)."""
    pool = ned.entities if isinstance(ned, Ned) else tuple(ned)
    if not pool:
        raise EmptyNed("cannot sample from an empty dictionary")
    rng = seeding.record_rng(config.seed, record_id, seeding.SAMPLE)
    size = 1 if rng.random() < config.entities_per_sentence[0] else 2
    if size > len(pool):
        log.warning("record %d: dictionary has %d entity, sampling %d instead of %d",
                    record_id, len(pool), len(pool), size)
        size = len(pool)
    idx = rng.choice(len(pool), size=size, replace=False)
    return [pool[int(i)] for i in idx]


def subset_entities(ned: Ned, fraction: float, seed: int) -> tuple[Entity, ...]:
    """Seed-fixed uniform subset holding ``fraction`` of the entities (at
    least one), in dictionary order."""
    if not 0 < fraction <= 1:
        raise ValueError("data size fraction must be in (0, 1]")
    if fraction == 1 or not ned.entities:
        return ned.entities
    k = max(1, int(np.floor(fraction * len(ned) + 0.5)))
    rng = seeding.run_rng(seed, seeding.SUBSET)
    idx = np.sort(rng.choice(len(ned), size=k, replace=False))
    return tuple(ned.entities[int(i)] for i in idx)


def build_generation_prompt(entities: Sequence[Entity], domain: str,
                            template: PromptTemplate = PromptTemplate()) -> str:
    return template.render(entities, domain)


class Accept(NamedTuple):
    text: str  # normalised transcript

    ok = True


class Reject(NamedTuple):
    reason: str

    ok = False


def validate_candidate(text: str, entities: Sequence[Entity], constraints: GenerationConstraints,
                       mode: TokenizationMode | str) -> Accept | Reject:
    """Check a generated sentence: no marker characters, length within
    bounds, and every entity present on token boundaries."""
    mode = TokenizationMode.parse(mode)
    if not text or not text.strip():
        return Reject("empty")
    if RESERVED_CHARS.intersection(text):
        return Reject("marker_chars")
    n = count_words(text, mode)
    if n < constraints.min_words:
        return Reject("too_short")
    if n > constraints.max_words:
        return Reject("too_long")
    norm = normalize_transcript(text, mode)
    keys = match_keys(tokenize(norm, mode), mode)
    for ent in entities:
        if not find_occurrences(keys, entity_keys(ent, mode)):
            return Reject(f"missing_entity:{ent.surface}")
    return Accept(norm)


def generate_sentence(entities: Sequence[Entity], backend, constraints: GenerationConstraints,
                      mode: TokenizationMode | str, domain: str = "",
                      template: PromptTemplate = PromptTemplate(), record_id: int = 0) -> str:
    """Prompt ``backend`` until a candidate validates; returns the normalised
    transcript. The same prompt is reused for every retry."""
    prompt = build_generation_prompt(entities, domain, template)
    rejected = []
    for _ in range(constraints.max_retries + 1):
        candidate = backend.generate(prompt, record_id=record_id)
        verdict = validate_candidate(candidate, entities, constraints, mode)
        if verdict.ok:
            return verdict.text
        rejected.append((candidate, verdict.reason))
    raise GenerationExhausted(
        f"record {record_id}: no valid sentence after {len(rejected)} attempts", rejected)
