"""PCM WAV decoding into mono float buffers.

Only uncompressed RIFF/WAVE is supported: 16-bit integer PCM (format tag 1)
or 32-bit IEEE float (format tag 3), 1 or 2 channels. Anything else is a
format error naming the chunk that failed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3

# 16-bit samples are scaled by 1/32768 so that -32768 maps to exactly -1.0.
_INT16_SCALE = 1.0 / 32768.0


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio signal: float samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )


def _iter_chunks(data: bytes):
    """Yield (chunk_id, payload) for every top-level RIFF sub-chunk."""
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        payload = data[pos + 8 : pos + 8 + size]
        if len(payload) < size:
            raise AudioFormatError(
                f"truncated {chunk_id.decode('ascii', 'replace')!r} chunk: "
                f"expected {size} bytes, got {len(payload)}"
            )
        yield chunk_id, payload
        pos += 8 + size + (size & 1)  # chunks are padded to even offsets


def load_audio(path: str | Path) -> AudioBuffer:
    """Decode a PCM WAV file; stereo is averaged to mono."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF":
        raise AudioFormatError("missing 'RIFF' chunk: not a RIFF file")
    if data[8:12] != b"WAVE":
        raise AudioFormatError("missing 'WAVE' form type in 'RIFF' chunk")

    fmt: bytes | None = None
    payload: bytes | None = None
    for chunk_id, chunk in _iter_chunks(data):
        if chunk_id == b"fmt " and fmt is None:
            fmt = chunk
        elif chunk_id == b"data" and payload is None:
            payload = chunk
    if fmt is None:
        raise AudioFormatError("missing 'fmt ' chunk")
    if payload is None:
        raise AudioFormatError("missing 'data' chunk")
    if len(fmt) < 16:
        raise AudioFormatError(f"'fmt ' chunk too short ({len(fmt)} bytes)")

    format_tag, n_channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt)
    if format_tag not in (_FORMAT_PCM, _FORMAT_IEEE_FLOAT):
        raise AudioFormatError(
            f"unsupported format tag {format_tag} in 'fmt ' chunk "
            "(only PCM16 and float32 are supported)"
        )
    if n_channels not in (1, 2):
        raise AudioFormatError(f"unsupported channel count {n_channels} in 'fmt ' chunk")
    if sample_rate <= 0:
        raise AudioFormatError(f"invalid sample rate {sample_rate} in 'fmt ' chunk")

    if format_tag == _FORMAT_PCM:
        if bits != 16:
            raise AudioFormatError(f"unsupported PCM bit depth {bits} in 'fmt ' chunk")
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) * _INT16_SCALE
    else:
        if bits != 32:
            raise AudioFormatError(f"unsupported float bit depth {bits} in 'fmt ' chunk")
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise AudioFormatError("non-finite sample values in 'data' chunk")
        samples = np.clip(samples, -1.0, 1.0)

    if n_channels == 2:
        samples = samples[: len(samples) - len(samples) % 2].reshape(-1, 2).mean(axis=1)
    if len(samples) == 0:
        raise AudioFormatError("empty 'data' chunk")
    return AudioBuffer(samples=samples, sample_rate=int(sample_rate))
