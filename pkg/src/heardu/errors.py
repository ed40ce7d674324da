"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class HearduError(Exception):
    """Base class for all library errors."""


class DataError(HearduError):
    """Input data violates a contract (CLI exit code 4)."""


class ConfigError(HearduError):
    """Run configuration is invalid (CLI exit code 2)."""


class InvalidBioSequence(DataError):
    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class UnbalancedMarkers(DataError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class RejectedEntity(DataError):
    def __init__(self, surface: str, reason: str):
        super().__init__(f"rejected entity {surface!r}: {reason}")
        self.surface = surface
        self.reason = reason


class EmptyNed(DataError):
    pass


class AlignmentFailed(DataError):
    def __init__(self, message: str, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class GenerationExhausted(DataError):
    def __init__(self, message: str, rejected=()):
        super().__init__(message)
        # list of (candidate text, reason)
        self.rejected = list(rejected)


class EmptyReference(DataError):
    pass


class UnscoredRecord(DataError):
    def __init__(self, record_id: int):
        super().__init__(f"record {record_id} has not been scored")
        self.record_id = record_id


class FactorOutOfRange(DataError):
    pass


class SilentInput(DataError):
    pass


class EmptyAudio(DataError):
    pass


class NoSpeakers(DataError):
    pass


class BackendError(HearduError):
    """Any failure talking to a model backend (CLI exit code 3)."""


class BackendUnavailable(BackendError):
    pass


class BackendTimeout(BackendUnavailable):
    pass


class MalformedResponse(BackendError):
    pass
