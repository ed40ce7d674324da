"""RIFF/WAVE PCM-16 mono I/O with an optional JSON metadata chunk.

The stdlib ``wave`` module drops unknown chunks, and the mock recogniser
needs the ``hdmd`` chunk (UTF-8 JSON) to survive a disk round trip.
"""

from __future__ import annotations

import json
import struct

import numpy as np

META_CHUNK = b"hdmd"


def encode_wav(samples: np.ndarray, sample_rate: int, metadata: dict | None = None) -> bytes:
    pcm = np.asarray(samples, dtype="<i2").tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, sample_rate, sample_rate * 2, 2, 16)
    chunks = [b"fmt " + struct.pack("<I", len(fmt)) + fmt]
    if metadata:
        meta = json.dumps(metadata, ensure_ascii=False, sort_keys=True).encode("utf-8")
        if len(meta) % 2:
            meta += b" "
        chunks.append(META_CHUNK + struct.pack("<I", len(meta)) + meta)
    data = b"data" + struct.pack("<I", len(pcm)) + pcm
    if len(pcm) % 2:  # pragma: no cover - int16 data is always even
        data += b"\0"
    chunks.append(data)
    body = b"WAVE" + b"".join(chunks)
    return b"RIFF" + struct.pack("<I", len(body)) + body


def decode_wav(blob: bytes) -> tuple[np.ndarray, int, dict]:
    """Return (int16 samples, sample rate, metadata)."""
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise ValueError("not a RIFF/WAVE file")
    pos, sample_rate, samples, metadata = 12, None, None, {}
    while pos + 8 <= len(blob):
        cid, size = blob[pos:pos + 4], struct.unpack("<I", blob[pos + 4:pos + 8])[0]
        payload = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            tag, channels, sample_rate, _, _, bits = struct.unpack("<HHIIHH", payload[:16])
            if tag != 1 or channels != 1 or bits != 16:
                raise ValueError(f"unsupported WAV format (tag={tag}, channels={channels}, bits={bits})")
        elif cid == b"data":
            samples = np.frombuffer(payload, dtype="<i2").astype(np.int16)
        elif cid == META_CHUNK:
            metadata = json.loads(payload.decode("utf-8"))
        pos += 8 + size + (size % 2)
    if sample_rate is None or samples is None:
        raise ValueError("WAV file lacks fmt or data chunk")
    return samples, sample_rate, metadata
