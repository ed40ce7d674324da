"""Backend adapters: descriptor parsing, construction and health checks.

Descriptor strings::

    mock                      deterministic offline mock
    mock:k=v,k=v              mock with parameters (e.g. ``mock:p=0.2``)
    mock:always_no            shorthand for ``mock:policy=always_no`` (judge)
    http://host:port          remote backend speaking the wire format
    llm:http://host:port      judge only: send the judge prompt to /v1/generate
"""

from __future__ import annotations

import os
from typing import NamedTuple

from ..core import Entity
from ..errors import ConfigError
from ..ned import build_judge_prompt
from ..retry import RetryPolicy
from .base import ROLES, BackendDescriptor
from .mock import MOCKS
from .remote import REMOTES, HttpClient, RemoteTextGenerator

__all__ = ["ROLES", "BackendDescriptor", "Health", "LLMJudge", "create_backend", "health_check",
           "parse_descriptor"]


def _coerce(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value


def parse_descriptor(text: str, role: str) -> BackendDescriptor:
    text = (text or "").strip()
    try:
        if text.startswith(("http://", "https://")):
            return BackendDescriptor(role, "remote", text)
        if text.startswith("llm:"):
            return BackendDescriptor(role, "llm", text[4:])
        if text == "mock" or text.startswith("mock:"):
            params = {}
            for item in filter(None, text[5:].split(",")):
                if "=" in item:
                    k, v = item.split("=", 1)
                    params[k.strip()] = _coerce(v.strip())
                elif role == "entity_judge":
                    params["policy"] = item.strip()
                else:
                    raise ConfigError(f"bad mock parameter {item!r} in {text!r}")
            if role == "entity_judge" and "deny" in params:
                params["deny"] = str(params["deny"])
            return BackendDescriptor(role, "mock", "", params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"cannot parse {role} backend {text!r}")


class LLMJudge:
    """Entity judge that sends the refinement prompt to a text generator."""

    def __init__(self, generator):
        self.generator = generator
        self.identity = "llm:" + getattr(generator, "identity", "?")

    def judge(self, surface: str, etype: str) -> str:
        return self.generator.generate(build_judge_prompt(Entity(surface, etype)))


def create_backend(desc: BackendDescriptor, seed: int = 0, mode="word",
                   policy: RetryPolicy = RetryPolicy()):
    if desc.kind == "mock":
        params = dict(desc.params)
        if desc.role == "entity_judge" and "deny" in params:
            params["deny"] = [d for d in str(params["deny"]).split("|") if d]
        try:
            return MOCKS[desc.role](seed=seed, mode=mode, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad mock parameters for {desc.role}: {exc}") from None
    client = HttpClient(desc.endpoint, policy, token=os.environ.get("HEARDU_BEARER_TOKEN"))
    if desc.kind == "llm":
        return LLMJudge(RemoteTextGenerator(client))
    if desc.role == "speech_recognizer":
        return REMOTES[desc.role](client, entity_aware=bool(desc.params.get("entity_aware", False)))
    return REMOTES[desc.role](client)


class Health(NamedTuple):
    healthy: bool
    reason: str = ""


def health_check(backend) -> Health:
    """Mocks are always healthy; remote adapters do one GET /v1/health."""
    if isinstance(backend, LLMJudge):
        backend = backend.generator
    probe = getattr(backend, "health", None)
    if probe is None:
        return Health(True, "ok")
    ok, reason, _ = probe()
    return Health(ok, reason)
