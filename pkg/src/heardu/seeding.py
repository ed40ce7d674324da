"""Per-record random streams derived from (seed, record id, purpose)."""

from __future__ import annotations

import numpy as np

# purpose tags; changing these changes every generated dataset
SAMPLE = 1
PLAN = 2
AUGMENT = 3
SUBSET = 4
MOCK_TEXT = 11
MOCK_ASR = 12
MOCK_TTS = 13


def record_rng(seed: int, record_id: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), int(record_id), int(stream)])


def run_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), int(stream)])
