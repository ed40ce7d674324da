"""Retry/timeout policy shared by backend adapters and the NED judge loop."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    base_delay: float = 0.5
    max_delay: float = 8.0
    timeout: float = 30.0
