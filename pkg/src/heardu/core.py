"""Domain types shared by every stage: entities, BIO-tagged transcripts and
the bracket-marked entity-aware encoding.

Tags are plain strings (``"O"``, ``"B-PER"``, ``"I-LOC"``). All types here are
immutable and every function is pure.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import InvalidBioSequence, RejectedEntity, UnbalancedMarkers

DEFAULT_TYPES: tuple[str, ...] = ("PER", "LOC", "ORG")

# type -> (open, close)
DEFAULT_MARKERS: dict[str, tuple[str, str]] = {
    "PER": ("[", "]"),
    "LOC": ("(", ")"),
    "ORG": ("<", ">"),
}
RESERVED_CHARS = frozenset("[]()<>")

_TYPE_LABEL = re.compile(r"^[A-Z0-9]+$")
_WS = re.compile(r"\s+")


class TokenizationMode(str, enum.Enum):
    WORD = "word"
    CHAR = "char"

    @classmethod
    def parse(cls, value: "str | TokenizationMode") -> "TokenizationMode":
        if isinstance(value, cls):
            return value
        value = str(value).lower()
        if value in ("char", "character", "character-level", "zh"):
            return cls.CHAR
        if value in ("word", "word-level", "en"):
            return cls.WORD
        raise ValueError(f"unknown tokenization mode {value!r}")


def normalize_text(text: str) -> str:
    """NFC plus whitespace collapse; the ingestion normal form."""
    return _WS.sub(" ", unicodedata.normalize("NFC", text)).strip()


def tokenize(text: str, mode: TokenizationMode | str) -> list[str]:
    mode = TokenizationMode.parse(mode)
    if mode is TokenizationMode.WORD:
        return text.split()
    return [ch for ch in text if not ch.isspace()]


def join_tokens(tokens: Sequence[str], mode: TokenizationMode | str) -> str:
    mode = TokenizationMode.parse(mode)
    return (" " if mode is TokenizationMode.WORD else "").join(tokens)


def is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def check_type_label(label: str) -> str:
    if not isinstance(label, str) or not _TYPE_LABEL.match(label):
        raise ValueError(f"entity type label must be uppercase alphanumeric, got {label!r}")
    return label


@dataclass(frozen=True, order=True)
class Entity:
    surface: str
    etype: str

    def __post_init__(self):
        check_type_label(self.etype)
        if not self.surface or self.surface != normalize_text(self.surface):
            raise ValueError(f"entity surface is not normalised: {self.surface!r}")
        if RESERVED_CHARS.intersection(self.surface):
            raise ValueError(f"entity surface contains marker characters: {self.surface!r}")

    @property
    def key(self) -> tuple[str, str]:
        """Identity used for merging and seen/unseen membership."""
        return (self.surface.casefold(), self.etype)


def dictionary_order(entity: Entity) -> tuple[str, str, str]:
    """Sort key of entities inside a dictionary: type, then casefolded surface."""
    return entity.etype, entity.surface.casefold(), entity.surface


def make_entity(surface: str, etype: str) -> Entity:
    """Normalise ``surface`` and build an :class:`Entity`, raising
    :class:`RejectedEntity` instead of ``ValueError`` for bad surfaces."""
    norm = normalize_text(surface or "")
    if not norm:
        raise RejectedEntity(surface, "empty")
    if RESERVED_CHARS.intersection(norm):
        raise RejectedEntity(surface, "marker_chars")
    try:
        check_type_label(etype)
    except ValueError:
        raise RejectedEntity(surface, f"bad_type:{etype}") from None
    return Entity(norm, etype)


def split_tag(tag: str) -> tuple[str, str | None]:
    """``"B-PER"`` -> ``("B", "PER")``; ``"O"`` -> ``("O", None)``."""
    if tag == "O":
        return "O", None
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return tag[0], tag[2:]
    raise InvalidBioSequence(f"malformed tag {tag!r}")


def validate_bio(tags: Sequence[str]) -> None:
    prev_type = None
    for i, tag in enumerate(tags):
        try:
            prefix, etype = split_tag(tag)
        except InvalidBioSequence as exc:
            raise InvalidBioSequence(str(exc), i) from None
        if prefix == "I" and etype != prev_type:
            raise InvalidBioSequence(f"{tag} at {i} does not continue an entity of the same type", i)
        prev_type = etype


@dataclass(frozen=True)
class TaggedTranscript:
    text: str
    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    mode: TokenizationMode = TokenizationMode.WORD

    def __post_init__(self):
        object.__setattr__(self, "mode", TokenizationMode.parse(self.mode))
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise InvalidBioSequence(f"{len(self.tokens)} tokens but {len(self.tags)} tags")
        if tuple(tokenize(self.text, self.mode)) != self.tokens:
            raise ValueError("tokens do not reproduce the transcript text")
        validate_bio(self.tags)

    @classmethod
    def from_text(cls, text: str, tags: Sequence[str] | None = None,
                  mode: TokenizationMode | str = TokenizationMode.WORD) -> "TaggedTranscript":
        mode = TokenizationMode.parse(mode)
        text = normalize_text(text)
        tokens = tokenize(text, mode)
        if tags is None:
            tags = ["O"] * len(tokens)
        return cls(text, tuple(tokens), tuple(tags), mode)

    def char_offsets(self) -> list[int]:
        """Index into ``text`` of each token's first character."""
        offsets, pos = [], 0
        for tok in self.tokens:
            pos = self.text.index(tok, pos)
            offsets.append(pos)
            pos += len(tok)
        return offsets


class Span(NamedTuple):
    etype: str
    start: int
    end: int  # exclusive, in tokens
    surface: str


def _span_bounds(tags: Sequence[str]) -> list[tuple[str, int, int]]:
    spans: list[tuple[str, int, int]] = []
    cur_type, cur_start = None, 0
    for i, tag in enumerate(tags):
        try:
            prefix, etype = split_tag(tag)
        except InvalidBioSequence as exc:
            raise InvalidBioSequence(str(exc), i) from None
        if prefix == "I":
            if etype != cur_type:
                raise InvalidBioSequence(f"{tag} at {i} lacks a B-{etype}/I-{etype} predecessor", i)
            continue
        if cur_type is not None:
            spans.append((cur_type, cur_start, i))
        cur_type, cur_start = etype, i
    if cur_type is not None:
        spans.append((cur_type, cur_start, len(tags)))
    return spans


def spans_from_tags(tagged: TaggedTranscript) -> list[Span]:
    bounds = _span_bounds(tagged.tags)
    if not bounds:
        return []
    if tagged.mode is TokenizationMode.WORD:
        return [Span(t, s, e, " ".join(tagged.tokens[s:e])) for t, s, e in bounds]
    off = tagged.char_offsets()
    return [Span(t, s, e, tagged.text[off[s]:off[e - 1] + len(tagged.tokens[e - 1])])
            for t, s, e in bounds]


def encode_entity_aware(tagged: TaggedTranscript,
                        markers: dict[str, tuple[str, str]] = DEFAULT_MARKERS) -> str:
    """Wrap each entity span in its type's marker pair.

    Word mode separates markers with single spaces (``"[ salva kiir ] is"``);
    char mode places them flush against the span (``"[张三]在北京"``) and keeps
    the transcript's own spacing.
    """
    bounds = _span_bounds(tagged.tags)
    for etype, _, _ in bounds:
        if etype not in markers:
            raise InvalidBioSequence(f"no marker pair configured for type {etype}")
    opens = {s: markers[t][0] for t, s, _ in bounds}
    closes = {e - 1: markers[t][1] for t, _, e in bounds}
    if tagged.mode is TokenizationMode.WORD:
        out: list[str] = []
        for i, tok in enumerate(tagged.tokens):
            if i in opens:
                out.append(opens[i])
            out.append(tok)
            if i in closes:
                out.append(closes[i])
        return " ".join(out)
    pieces: list[str] = []
    k = 0
    for ch in tagged.text:
        if ch.isspace():
            pieces.append(ch)
            continue
        pieces.append(opens.get(k, "") + ch + closes.get(k, ""))
        k += 1
    return "".join(pieces)


class DroppedMarker(NamedTuple):
    position: int
    char: str
    reason: str


def parse_entity_aware(text: str, mode: TokenizationMode | str = TokenizationMode.WORD,
                       strict: bool = True,
                       markers: dict[str, tuple[str, str]] = DEFAULT_MARKERS,
                       ) -> tuple[TaggedTranscript, list[DroppedMarker]]:
    """Parse a marker-annotated string into tokens and BIO tags.

    Returns the transcript plus the markers discarded in lenient mode.
    Strict mode raises :class:`UnbalancedMarkers` on the first defect.
    Markers are token boundaries in word mode.
    """
    mode = TokenizationMode.parse(mode)
    text = unicodedata.normalize("NFC", text)
    open_type = {o: t for t, (o, _) in markers.items()}
    close_type = {c: t for t, (_, c) in markers.items()}

    dropped: list[DroppedMarker] = []
    span_of_pos: dict[int, int] = {}  # kept marker position -> span index
    inside: tuple[str, int] | None = None  # (type, open position)
    has_content = False
    n_spans = 0

    def reject(pos: int, reason: str):
        if strict:
            raise UnbalancedMarkers(reason, pos)
        dropped.append(DroppedMarker(pos, text[pos], reason))

    for pos, ch in enumerate(text):
        if ch in open_type:
            if inside is not None:
                reject(pos, "nested open marker")
            else:
                inside, has_content = (open_type[ch], pos), False
        elif ch in close_type:
            if inside is None:
                reject(pos, "close marker without open")
            elif close_type[ch] != inside[0]:
                reject(pos, "close marker of a different type")
            elif not has_content:
                reject(inside[1], "empty entity")
                reject(pos, "empty entity")
                inside = None
            else:
                span_of_pos[inside[1]] = span_of_pos[pos] = n_spans
                n_spans += 1
                inside = None
        elif inside is not None and not ch.isspace():
            has_content = True
    if inside is not None:
        reject(inside[1], "unclosed open marker")
    dropped.sort()

    span_type: list[str] = [""] * n_spans
    chars: list[str] = []
    owner: list[int] = []  # span index per emitted char, -1 outside
    current = -1
    for pos, ch in enumerate(text):
        if ch in open_type or ch in close_type:
            if pos in span_of_pos:
                s = span_of_pos[pos]
                if ch in open_type:
                    current = s
                    span_type[s] = open_type[ch]
                else:
                    current = -1
            if mode is TokenizationMode.WORD:
                chars.append(" ")
                owner.append(-1)
            continue
        chars.append(ch)
        owner.append(current)

    tokens: list[str] = []
    tags: list[str] = []
    last_span = -1
    if mode is TokenizationMode.WORD:
        buf: list[str] = []
        buf_owner = -1
        for ch, s in zip(chars + [" "], owner + [-1]):
            if ch.isspace():
                if buf:
                    tokens.append("".join(buf))
                    tags.append(_tag_for(buf_owner, last_span, span_type))
                    last_span = buf_owner
                    buf = []
                continue
            if not buf:
                buf_owner = s
            buf.append(ch)
    else:
        for ch, s in zip(chars, owner):
            if ch.isspace():
                continue
            tokens.append(ch)
            tags.append(_tag_for(s, last_span, span_type))
            last_span = s
    plain = normalize_text("".join(chars))
    return TaggedTranscript(plain, tuple(tokens), tuple(tags), mode), dropped


def _tag_for(span: int, last_span: int, span_type: list[str]) -> str:
    if span < 0:
        return "O"
    return ("I-" if span == last_span else "B-") + span_type[span]


def decode_entity_aware(text: str, mode: TokenizationMode | str = TokenizationMode.WORD,
                        strict: bool = True,
                        markers: dict[str, tuple[str, str]] = DEFAULT_MARKERS) -> TaggedTranscript:
    return parse_entity_aware(text, mode, strict, markers)[0]


def strip_markers(text: str, chars=RESERVED_CHARS) -> str:
    return normalize_text("".join(" " if ch in chars else ch for ch in text))
