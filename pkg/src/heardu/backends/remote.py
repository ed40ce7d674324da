"""HTTP+JSON adapters for remotely hosted backends.

Wire format (UTF-8 JSON, POST unless noted)::

    /v1/generate {"prompt", "record_id"}        -> {"text"}
    /v1/judge    {"surface", "type"}            -> {"response"}
    /v1/tts      {"text", "speaker", "speed"}   -> {"wav_base64", "sample_rate"}
    /v1/asr      {"wav_base64", "sample_rate"}  -> {"text"}
    /v1/ppl      {"text"}                       -> {"perplexity"}
    GET /v1/health                              -> {"status": "ok", "role", "identity"[, "speakers"]}

Errors come back as non-200 with ``{"error": str}``. The record id, when
known, travels in the ``X-Record-Id`` header as an idempotency key.
"""

from __future__ import annotations

import base64
import json
import logging
import socket
import time
import urllib.error
import urllib.request
from typing import Callable

from ..audio import AudioBuffer
from ..errors import BackendTimeout, BackendUnavailable, MalformedResponse
from ..retry import RetryPolicy

log = logging.getLogger(__name__)


class HttpClient:
    def __init__(self, base_url: str, policy: RetryPolicy = RetryPolicy(), token: str | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.base_url = base_url.rstrip("/")
        self.policy = policy
        self.token = token
        self._sleep = sleep

    def _request(self, method: str, path: str, payload: dict | None, record_id: int | None) -> dict:
        data = None if payload is None else json.dumps(payload, ensure_ascii=False).encode("utf-8")
        req = urllib.request.Request(self.base_url + path, data=data, method=method)
        req.add_header("Content-Type", "application/json; charset=utf-8")
        if record_id is not None:
            req.add_header("X-Record-Id", str(record_id))
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        with urllib.request.urlopen(req, timeout=self.policy.timeout) as resp:
            body = resp.read()
        try:
            obj = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, ValueError):
            raise MalformedResponse(f"{path}: response is not JSON") from None
        if not isinstance(obj, dict):
            raise MalformedResponse(f"{path}: response is not a JSON object")
        return obj

    def call(self, path: str, payload: dict | None = None, record_id: int | None = None,
             method: str = "POST") -> dict:
        """Send one request, retrying timeouts, connection failures and 5xx
        with exponential backoff. 4xx and schema problems are not retried."""
        last: Exception | None = None
        for attempt in range(self.policy.max_retries + 1):
            if attempt:
                self._sleep(min(self.policy.max_delay, self.policy.base_delay * 2 ** (attempt - 1)))
            try:
                log.debug("record=%s %s %s", record_id, method, path)
                obj = self._request(method, path, payload, record_id)
                log.debug("record=%s %s ok", record_id, path)
                return obj
            except urllib.error.HTTPError as exc:
                detail = _error_detail(exc)
                if exc.code < 500 and exc.code != 429:
                    raise MalformedResponse(f"{path}: HTTP {exc.code}: {detail}") from None
                last = BackendUnavailable(f"{path}: HTTP {exc.code}: {detail}")
            except (socket.timeout, TimeoutError) as exc:
                last = BackendTimeout(f"{path}: timed out ({exc})")
            except urllib.error.URLError as exc:
                if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                    last = BackendTimeout(f"{path}: timed out")
                else:
                    last = BackendUnavailable(f"{path}: {exc.reason}")
            except (ConnectionError, OSError) as exc:
                last = BackendUnavailable(f"{path}: {exc}")
            log.info("record=%s %s attempt %d failed: %s", record_id, path, attempt + 1, last)
        assert last is not None
        raise last

    def health(self) -> tuple[bool, str, dict]:
        """(healthy, reason, body) from a single GET without retries."""
        try:
            obj = self._request("GET", "/v1/health", None, None)
        except MalformedResponse as exc:
            return False, f"protocol: {exc}", {}
        except urllib.error.HTTPError as exc:
            return False, f"http {exc.code}", {}
        except (socket.timeout, TimeoutError):
            return False, "timeout", {}
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                return False, "timeout", {}
            return False, f"unreachable: {exc.reason}", {}
        except OSError as exc:
            return False, f"unreachable: {exc}", {}
        if obj.get("status") != "ok" or not isinstance(obj.get("role"), str):
            return False, "protocol: malformed health body", obj
        return True, "ok", obj


def _error_detail(exc: urllib.error.HTTPError) -> str:
    try:
        return json.loads(exc.read().decode("utf-8")).get("error", "")
    except Exception:
        return exc.reason or ""


def _field(obj: dict, key: str, kind, path: str):
    value = obj.get(key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise MalformedResponse(f"{path}: field {key!r} missing or not {kind.__name__}")
    return value


class _Remote:
    role = ""

    def __init__(self, client: HttpClient):
        self.client = client
        self.identity = client.base_url

    def health(self) -> tuple[bool, str, dict]:
        ok, reason, body = self.client.health()
        if ok and body.get("role") != self.role:
            return False, f"protocol: endpoint serves role {body.get('role')!r}", body
        if ok and isinstance(body.get("identity"), str):
            self.identity = body["identity"]
        return ok, reason, body


class RemoteTextGenerator(_Remote):
    role = "text_generator"

    def generate(self, prompt: str, record_id: int | None = None) -> str:
        obj = self.client.call("/v1/generate", {"prompt": prompt, "record_id": record_id}, record_id)
        return _field(obj, "text", str, "/v1/generate")


class RemoteEntityJudge(_Remote):
    role = "entity_judge"

    def judge(self, surface: str, etype: str) -> str:
        obj = self.client.call("/v1/judge", {"surface": surface, "type": etype})
        return _field(obj, "response", str, "/v1/judge")


class RemoteSpeechSynthesizer(_Remote):
    role = "speech_synthesizer"

    def speakers(self) -> list[str]:
        ok, reason, body = self.client.health()
        if not ok:
            raise BackendUnavailable(f"tts health check failed: {reason}")
        speakers = body.get("speakers") or ["default"]
        if not all(isinstance(s, str) for s in speakers):
            raise MalformedResponse("/v1/health: speakers must be strings")
        return list(speakers)

    def synthesize(self, text: str, speaker_id: str, speed: float = 1.0,
                   record_id: int | None = None) -> AudioBuffer:
        obj = self.client.call("/v1/tts", {"text": text, "speaker": speaker_id, "speed": speed}, record_id)
        rate = _field(obj, "sample_rate", int, "/v1/tts")
        try:
            buf = AudioBuffer.from_wav(base64.b64decode(_field(obj, "wav_base64", str, "/v1/tts"),
                                                        validate=True))
        except ValueError as exc:
            raise MalformedResponse(f"/v1/tts: bad audio payload ({exc})") from None
        if buf.sample_rate != rate:
            raise MalformedResponse(f"/v1/tts: sample_rate {rate} disagrees with WAV header {buf.sample_rate}")
        return buf


class RemoteSpeechRecognizer(_Remote):
    role = "speech_recognizer"

    def __init__(self, client: HttpClient, entity_aware: bool = False):
        super().__init__(client)
        self.entity_aware = entity_aware

    def recognize(self, audio: AudioBuffer, record_id: int | None = None) -> str:
        payload = {"wav_base64": base64.b64encode(audio.to_wav()).decode("ascii"),
                   "sample_rate": audio.sample_rate}
        obj = self.client.call("/v1/asr", payload, record_id)
        return _field(obj, "text", str, "/v1/asr")


class RemoteLanguageModel(_Remote):
    role = "lm_scorer"

    def perplexity(self, text: str, record_id: int | None = None) -> float:
        obj = self.client.call("/v1/ppl", {"text": text}, record_id)
        value = _field(obj, "perplexity", float, "/v1/ppl")
        if not value > 0:
            raise MalformedResponse("/v1/ppl: perplexity must be positive")
        return value


REMOTES = {
    "text_generator": RemoteTextGenerator,
    "entity_judge": RemoteEntityJudge,
    "speech_synthesizer": RemoteSpeechSynthesizer,
    "speech_recognizer": RemoteSpeechRecognizer,
    "lm_scorer": RemoteLanguageModel,
}
