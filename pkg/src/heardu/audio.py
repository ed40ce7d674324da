"""Speech synthesis plans and waveform augmentation (speed, effects, noise)."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import resample_poly

from . import kernels, seeding
from .errors import EmptyAudio, FactorOutOfRange, NoSpeakers, SilentInput
from .io import atomic_write_bytes, sha256_bytes
from .records import AudioRef
from .wav import decode_wav, encode_wav

CANONICAL_RATE = 16000
INT16_MIN, INT16_MAX = -32768, 32767
MIN_DURATION_MS = 50
EFFECTS = ("none", "gain", "echo")
ECHO_DELAY_S = 0.120
ECHO_AMPLITUDE = 0.3
GAIN_RANGE = (0.5, 1.0)


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE
    metadata: dict = field(default_factory=dict)
    clipped: int = 0  # samples clipped so far by the augmentation chain

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 1:
            raise ValueError("audio must be mono (1-D)")
        if arr.dtype != np.int16:
            raise ValueError(f"samples must be int16, got {arr.dtype}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", arr)

    channels = 1

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_ms(self) -> int:
        return int(round(1000 * len(self) / self.sample_rate))

    def with_samples(self, samples: np.ndarray, clipped: int = 0) -> "AudioBuffer":
        return replace(self, samples=samples, clipped=self.clipped + clipped)

    def to_wav(self) -> bytes:
        return encode_wav(self.samples, self.sample_rate, self.metadata)

    @classmethod
    def from_wav(cls, blob: bytes) -> "AudioBuffer":
        samples, rate, meta = decode_wav(blob)
        return cls(samples, rate, meta)


def to_int16(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Round and clip floats to the int16 range; returns (samples, n_clipped)."""
    r = np.rint(x)
    n_clipped = int(np.count_nonzero((r < INT16_MIN) | (r > INT16_MAX)))
    return np.clip(r, INT16_MIN, INT16_MAX).astype(np.int16), n_clipped


@dataclass(frozen=True)
class AudioConfig:
    seed: int = 0
    speed_range: tuple[float, float] = (0.9, 1.1)
    snr_range: tuple[float, float] = (10.0, 30.0)
    effects: tuple[str, ...] = EFFECTS

    def __post_init__(self):
        lo, hi = self.speed_range
        if not 0.5 < lo <= hi <= 2.0:
            raise ValueError(f"speed range must lie in (0.5, 2.0], got {self.speed_range}")
        if self.snr_range[0] > self.snr_range[1]:
            raise ValueError("snr range is reversed")
        if not self.effects or set(self.effects) - set(EFFECTS):
            raise ValueError(f"effects must be a non-empty subset of {EFFECTS}")


@dataclass(frozen=True)
class SynthesisPlan:
    speaker_id: str
    speed_factor: float
    noise_snr_db: float | None
    effect: str = "none"

    def __post_init__(self):
        if not self.speed_factor > 0:
            raise ValueError("speed_factor must be positive")
        if self.effect not in EFFECTS:
            raise ValueError(f"unknown effect {self.effect!r}")


def plan_synthesis(record_id: int, config: AudioConfig, speakers: Sequence[str]) -> SynthesisPlan:
    if not speakers:
        raise NoSpeakers("speech synthesizer advertises no speakers")
    rng = seeding.record_rng(config.seed, record_id, seeding.PLAN)
    speaker = speakers[int(rng.integers(len(speakers)))]
    speed = float(rng.uniform(*config.speed_range))
    snr = float(rng.uniform(*config.snr_range))
    effect = config.effects[int(rng.integers(len(config.effects)))]
    return SynthesisPlan(speaker, speed, snr, effect)


def apply_speed(buffer: AudioBuffer, factor: float) -> AudioBuffer:
    """Linear-interpolation resampling to ``round(len / factor)`` samples.
    Pitch shifts with the tempo."""
    if not 0.5 < factor <= 2.0:
        raise FactorOutOfRange(f"speed factor {factor} outside (0.5, 2.0]")
    n = len(buffer)
    if factor == 1.0 or n == 0:
        return buffer
    out_len = max(1, int(math.floor(n / factor + 0.5)))
    y = kernels.linear_resample(buffer.samples.astype(np.float64), factor, out_len)
    samples, clipped = to_int16(y)
    return buffer.with_samples(samples, clipped)


def apply_noise(buffer: AudioBuffer, snr_db: float, rng: np.random.Generator) -> AudioBuffer:
    """Add white Gaussian noise whose power sits exactly ``snr_db`` below the
    signal power (before int16 rounding)."""
    x = buffer.samples.astype(np.float64)
    p_signal = float(np.mean(x * x)) if x.size else 0.0
    if p_signal == 0.0:
        raise SilentInput("cannot set an SNR against a silent signal")
    noise = rng.standard_normal(x.shape[0])
    noise *= math.sqrt(p_signal / 10 ** (snr_db / 10) / float(np.mean(noise * noise)))
    samples, clipped = to_int16(x + noise)
    return buffer.with_samples(samples, clipped)


def apply_effect(buffer: AudioBuffer, effect: str, rng: np.random.Generator) -> AudioBuffer:
    """``gain``: scale by U(0.5, 1.0); ``echo``: one 120 ms tap at 0.3."""
    if effect == "none":
        return buffer
    x = buffer.samples.astype(np.float64)
    if effect == "gain":
        y = x * rng.uniform(*GAIN_RANGE)
    elif effect == "echo":
        delay = int(round(ECHO_DELAY_S * buffer.sample_rate))
        y = x.copy()
        if delay < x.shape[0]:
            y[delay:] += ECHO_AMPLITUDE * x[:-delay]
    else:
        raise ValueError(f"unknown effect {effect!r}")
    samples, clipped = to_int16(y)
    return buffer.with_samples(samples, clipped)


def to_canonical_rate(buffer: AudioBuffer, rate: int = CANONICAL_RATE) -> AudioBuffer:
    if buffer.sample_rate == rate:
        return buffer
    ratio = Fraction(rate, buffer.sample_rate)
    y = resample_poly(buffer.samples.astype(np.float64), ratio.numerator, ratio.denominator)
    samples, clipped = to_int16(y)
    return replace(buffer, samples=samples, sample_rate=rate, clipped=buffer.clipped + clipped)


def synthesize(text: str, plan: SynthesisPlan, backend, record_id: int = 0) -> AudioBuffer:
    """Run the speech backend with the plan's speaker and speed; the result is
    mono at the canonical rate."""
    if not text or not text.strip():
        raise ValueError("cannot synthesise empty text")
    buf = backend.synthesize(text, plan.speaker_id, plan.speed_factor, record_id=record_id)
    buf = to_canonical_rate(buf)
    if buf.duration_ms < MIN_DURATION_MS:
        raise EmptyAudio(f"record {record_id}: backend returned {buf.duration_ms} ms of audio")
    return buf


def augment(buffer: AudioBuffer, plan: SynthesisPlan, seed: int, record_id: int) -> AudioBuffer:
    """Effect then noise, from the record's augmentation stream."""
    rng = seeding.record_rng(seed, record_id, seeding.AUGMENT)
    out = apply_effect(buffer, plan.effect, rng)
    if plan.noise_snr_db is not None:
        out = apply_noise(out, plan.noise_snr_db, rng)
    return out


def write_audio(buffer: AudioBuffer, path: str | Path, relative_to: str | Path) -> AudioRef:
    blob = buffer.to_wav()
    atomic_write_bytes(path, blob)
    rel = os.path.relpath(Path(path).resolve(), Path(relative_to).resolve())
    return AudioRef(Path(rel).as_posix(), buffer.duration_ms, sha256_bytes(blob))


def read_audio(path: str | Path) -> AudioBuffer:
    return AudioBuffer.from_wav(Path(path).read_bytes())


def measured_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noisy, dtype=np.float64) - clean
    return 10 * math.log10(np.mean(clean * clean) / np.mean(noise * noise))
