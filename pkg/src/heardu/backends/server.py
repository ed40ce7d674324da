"""Serve any in-process backend object over the HTTP+JSON wire format.

Handy for exposing the mocks to out-of-process consumers and for testing the
remote adapters end to end::

    with BackendServer("speech_recognizer", MockSpeechRecognizer(p=0.1)) as srv:
        asr = RemoteSpeechRecognizer(HttpClient(srv.url))
"""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..audio import AudioBuffer
from ..errors import HearduError

ROUTES = {
    "text_generator": "/v1/generate",
    "entity_judge": "/v1/judge",
    "speech_synthesizer": "/v1/tts",
    "speech_recognizer": "/v1/asr",
    "lm_scorer": "/v1/ppl",
}


def _dispatch(role: str, backend, body: dict, record_id: int | None) -> dict:
    if role == "text_generator":
        return {"text": backend.generate(body["prompt"], record_id=body.get("record_id", record_id))}
    if role == "entity_judge":
        return {"response": backend.judge(body["surface"], body["type"])}
    if role == "speech_synthesizer":
        buf = backend.synthesize(body["text"], body["speaker"], float(body.get("speed", 1.0)),
                                 record_id=record_id)
        return {"wav_base64": base64.b64encode(buf.to_wav()).decode("ascii"),
                "sample_rate": buf.sample_rate}
    if role == "speech_recognizer":
        audio = AudioBuffer.from_wav(base64.b64decode(body["wav_base64"]))
        return {"text": backend.recognize(audio, record_id=record_id)}
    if role == "lm_scorer":
        return {"perplexity": backend.perplexity(body["text"], record_id=record_id)}
    raise ValueError(role)


class BackendServer:
    def __init__(self, role: str, backend, host: str = "127.0.0.1", port: int = 0):
        self.role = role
        self.backend = backend
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, code: int, obj: dict):
                data = json.dumps(obj, ensure_ascii=False).encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def _health(self):
                body = {"status": "ok", "role": server.role,
                        "identity": getattr(server.backend, "identity", server.role)}
                if server.role == "speech_synthesizer":
                    body["speakers"] = server.backend.speakers()
                self._send(200, body)

            def do_GET(self):
                if self.path == "/v1/health":
                    self._health()
                else:
                    self._send(404, {"error": f"no route {self.path}"})

            def do_POST(self):
                if self.path == "/v1/health":
                    return self._health()
                if self.path != ROUTES[server.role]:
                    return self._send(404, {"error": f"no route {self.path}"})
                try:
                    length = int(self.headers.get("Content-Length", 0))
                    body = json.loads(self.rfile.read(length).decode("utf-8"))
                    rid = self.headers.get("X-Record-Id")
                    out = _dispatch(server.role, server.backend, body, int(rid) if rid else None)
                except (KeyError, ValueError, TypeError) as exc:
                    return self._send(400, {"error": f"bad request: {exc}"})
                except HearduError as exc:
                    return self._send(500, {"error": str(exc)})
                self._send(200, out)

        self.httpd = ThreadingHTTPServer((host, port), Handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "BackendServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def __enter__(self) -> "BackendServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
