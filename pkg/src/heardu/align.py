"""Lexical alignment of sampled entities onto a generated transcript.

Word-mode transcripts are first put into a CoNLL-like form where punctuation
clinging to the edges of a word becomes its own token ("Sudan," -> "Sudan ,"),
so entity mentions sit on whole-token boundaries. Matching is casefolded in
word mode and exact in char mode.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    DEFAULT_MARKERS,
    Entity,
    TaggedTranscript,
    TokenizationMode,
    dictionary_order,
    encode_entity_aware,
    is_punct,
    normalize_text,
    tokenize,
)
from .errors import AlignmentFailed


def _split_edges(word: str) -> list[str]:
    i, j = 0, len(word)
    while i < j and is_punct(word[i]):
        i += 1
    if i == j:
        return [word]
    while j > i and is_punct(word[j - 1]):
        j -= 1
    out = []
    if i:
        out.append(word[:i])
    out.append(word[i:j])
    if j < len(word):
        out.append(word[j:])
    return out


def normalize_transcript(text: str, mode: TokenizationMode | str) -> str:
    """Ingestion form of a generated sentence (idempotent)."""
    mode = TokenizationMode.parse(mode)
    text = normalize_text(text)
    if mode is TokenizationMode.CHAR:
        return text
    return " ".join(piece for word in text.split() for piece in _split_edges(word))


def match_keys(tokens: Iterable[str], mode: TokenizationMode) -> tuple[str, ...]:
    if mode is TokenizationMode.WORD:
        return tuple(t.casefold() for t in tokens)
    return tuple(tokens)


def entity_keys(entity: Entity, mode: TokenizationMode | str) -> tuple[str, ...]:
    mode = TokenizationMode.parse(mode)
    return match_keys(tokenize(normalize_transcript(entity.surface, mode), mode), mode)


def count_words(text: str, mode: TokenizationMode | str) -> int:
    """Length in words (word mode) or characters (char mode), ignoring
    punctuation-only tokens."""
    mode = TokenizationMode.parse(mode)
    toks = tokenize(normalize_transcript(text, mode), mode)
    return sum(1 for t in toks if not all(is_punct(c) for c in t))


@dataclass(frozen=True)
class MatchSpan:
    entity: Entity
    start_token: int
    end_token: int


def find_occurrences(keys: Sequence[str], ent_keys: Sequence[str]) -> list[int]:
    k = len(ent_keys)
    if k == 0:
        return []
    first = ent_keys[0]
    return [i for i in range(len(keys) - k + 1)
            if keys[i] == first and tuple(keys[i:i + k]) == tuple(ent_keys)]


def select_matches(text: str, entities: Sequence[Entity],
                   mode: TokenizationMode | str) -> list[MatchSpan]:
    """All non-overlapping entity occurrences after conflict resolution:
    longer match first, then leftmost, then dictionary order."""
    mode = TokenizationMode.parse(mode)
    keys = match_keys(tokenize(normalize_transcript(text, mode), mode), mode)
    by_first: dict[str, list[int]] = defaultdict(list)
    for i, k in enumerate(keys):
        by_first[k].append(i)

    candidates = []
    for idx, ent in enumerate(entities):
        ek = entity_keys(ent, mode)
        n = len(ek)
        for start in by_first.get(ek[0], ()):
            if keys[start:start + n] == ek:
                candidates.append((-n, start, dictionary_order(ent), idx))
    candidates.sort()

    taken = [False] * len(keys)
    chosen = []
    for neg_len, start, _, idx in candidates:
        end = start - neg_len
        if any(taken[start:end]):
            continue
        for i in range(start, end):
            taken[i] = True
        chosen.append(MatchSpan(entities[idx], start, end))
    chosen.sort(key=lambda m: m.start_token)
    return chosen


def lexical_align(text: str, entities: Sequence[Entity], mode: TokenizationMode | str,
                  extra_entities: Sequence[Entity] = ()) -> TaggedTranscript:
    """Tag every occurrence of ``entities`` in ``text`` with BIO labels.

    ``extra_entities`` (e.g. the rest of the dictionary) are tagged too when
    present but are not required to match.
    """
    mode = TokenizationMode.parse(mode)
    norm = normalize_transcript(text, mode)
    sampled = set(entities)
    pool = list(entities) + [e for e in extra_entities if e not in sampled]
    matches = select_matches(norm, pool, mode)
    tokens = tokenize(norm, mode)
    tags = ["O"] * len(tokens)
    for m in matches:
        tags[m.start_token] = "B-" + m.entity.etype
        for i in range(m.start_token + 1, m.end_token):
            tags[i] = "I-" + m.entity.etype
    found = {m.entity for m in matches}
    missing = [e for e in entities if e not in found]
    if missing:
        raise AlignmentFailed(
            "no span left for " + ", ".join(f"{e.surface!r}/{e.etype}" for e in missing), missing)
    return TaggedTranscript(norm, tuple(tokens), tuple(tags), mode)


def make_target(tagged: TaggedTranscript, markers=DEFAULT_MARKERS) -> str:
    return encode_entity_aware(tagged, markers)
