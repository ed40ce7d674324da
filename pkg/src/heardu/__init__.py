"""Dictionary-driven synthetic spoken-NER data: generation, speech
round-trip filtering and evaluation."""

from .core import (Entity, TaggedTranscript, TokenizationMode, decode_entity_aware,
                   encode_entity_aware, parse_entity_aware, spans_from_tags)
from .errors import BackendError, ConfigError, DataError, HearduError

__version__ = "0.1.0"

__all__ = [
    "BackendError", "ConfigError", "DataError", "Entity", "HearduError", "TaggedTranscript",
    "TokenizationMode", "decode_entity_aware", "encode_entity_aware", "parse_entity_aware",
    "spans_from_tags", "__version__",
]
