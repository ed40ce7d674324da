"""Run configuration: JSON file, ``HEARDU_*`` environment overrides, digest."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .audio import EFFECTS, AudioConfig
from .backends import ROLES
from .core import DEFAULT_TYPES, TokenizationMode, check_type_label
from .errors import ConfigError
from .filtering import FilterConfig
from .generate import GenerationConstraints, SampleConfig
from .retry import RetryPolicy

ENV_PREFIX = "HEARDU_"


@dataclass
class RunConfig:
    mode: str = "word"
    types: list = field(default_factory=lambda: list(DEFAULT_TYPES))
    ned_path: str | None = None
    template_path: str | None = None
    seed: int = 0
    entities_per_sentence: list = field(default_factory=lambda: [0.5, 0.5])
    domain: str = ""
    min_words: int = 20
    max_words: int = 100
    max_retries: int = 3
    speed_range: list = field(default_factory=lambda: [0.9, 1.1])
    snr_range: list = field(default_factory=lambda: [10.0, 30.0])
    effects: list = field(default_factory=lambda: list(EFFECTS))
    noise: bool = True
    tau: float | None = None
    wer_casefold: bool = True
    wer_strip_punct: bool = True
    backends: dict = field(default_factory=lambda: {r: "mock" for r in ROLES})
    output_dir: str = "."
    count: int = 100
    data_size: float = 1.0
    jobs: int = 1
    tag_all_ned_entities: bool = False
    retry: dict = field(default_factory=lambda: dataclasses.asdict(RetryPolicy()))

    def __post_init__(self):
        self.validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "backends" in data:
            data["backends"] = {**{r: "mock" for r in ROLES}, **data["backends"]}
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path | None = None, environ: Mapping[str, str] | None = None,
             overrides: Mapping[str, Any] | None = None) -> "RunConfig":
        """Defaults, then the JSON file, then ``HEARDU_<FIELD>`` variables,
        then explicit ``overrides`` (CLI flags; ``None`` values ignored)."""
        data: dict[str, Any] = {}
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
        environ = os.environ if environ is None else environ
        for f in dataclasses.fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is None:
                continue
            try:
                data[f.name] = json.loads(raw)
            except ValueError:
                data[f.name] = raw
        for k, v in (overrides or {}).items():
            if v is not None:
                data[k] = v
        return cls.from_dict(data)

    # -- checks -------------------------------------------------------------

    def validate(self) -> None:
        try:
            TokenizationMode.parse(self.mode)
            for t in self.types:
                check_type_label(t)
            if not isinstance(self.seed, int):
                raise ValueError("seed must be an integer")
            if not 0 < float(self.data_size) <= 1:
                raise ValueError("data_size must be in (0, 1]")
            if int(self.count) < 0 or int(self.jobs) < 1:
                raise ValueError("count must be >= 0 and jobs >= 1")
            if set(self.backends) - set(ROLES):
                raise ValueError(f"unknown backend roles {sorted(set(self.backends) - set(ROLES))}")
            self.sample_config()
            self.constraints()
            self.audio_config()
            self.filter_config()
            self.retry_policy()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    # -- typed views -------------------------------------------------------

    @property
    def tokenization(self) -> TokenizationMode:
        return TokenizationMode.parse(self.mode)

    def sample_config(self) -> SampleConfig:
        return SampleConfig(self.seed, tuple(self.entities_per_sentence), self.domain)

    def constraints(self) -> GenerationConstraints:
        return GenerationConstraints(int(self.min_words), int(self.max_words), int(self.max_retries))

    def audio_config(self) -> AudioConfig:
        return AudioConfig(self.seed, tuple(self.speed_range), tuple(self.snr_range), tuple(self.effects))

    def filter_config(self, tau: float | None = None) -> FilterConfig:
        return FilterConfig(self.tokenization, self.tau if tau is None else tau,
                            self.wer_casefold, self.wer_strip_punct)

    def retry_policy(self) -> RetryPolicy:
        return RetryPolicy(**self.retry)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()
