"""Shared fixture builders: synthetic audio, TextGrids, corpora, stub server."""

from __future__ import annotations

import json
import struct
import threading
import wave
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

SR = 16000


def tone(
    freq: float,
    dur_s: float,
    sr: int = SR,
    amp: float = 0.3,
    chirp: float = 0.0,
) -> np.ndarray:
    """Sine with optional linear frequency ramp (chirp in Hz/s)."""
    t = np.arange(int(round(dur_s * sr))) / sr
    return amp * np.sin(2 * np.pi * (freq * t + 0.5 * chirp * t * t))


def write_wav_pcm16(path: Path, samples: np.ndarray, sr: int = SR) -> Path:
    data = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(data * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sr)
        wf.writeframes(pcm.tobytes())
    return path


def write_wav_float32(path: Path, samples: np.ndarray, sr: int = SR, channels: int = 1) -> Path:
    """Hand-rolled RIFF with format tag 3 (IEEE float), which wave cannot write."""
    data = np.asarray(samples, dtype="<f4")
    if channels == 2:
        data = np.repeat(data[:, None], 2, axis=1).reshape(-1)
    payload = data.tobytes()
    fmt = struct.pack(
        "<HHIIHH", 3, channels, sr, sr * 4 * channels, 4 * channels, 32
    )
    riff = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    riff += b"data" + struct.pack("<I", len(payload)) + payload
    path.write_bytes(b"RIFF" + struct.pack("<I", len(riff)) + riff)
    return path


def textgrid_text(
    total: float,
    phones: list[tuple[float, float, str]],
    words: list[tuple[float, float, str]] | None = None,
) -> str:
    """Long-format TextGrid text, written independently of the serializer."""
    tiers = [("phones", phones)]
    if words is not None:
        tiers.append(("words", words))
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0",
        f"xmax = {total}",
        "tiers? <exists>",
        f"size = {len(tiers)}",
        "item []:",
    ]
    for i, (name, intervals) in enumerate(tiers, start=1):
        lines += [
            f"    item [{i}]:",
            '        class = "IntervalTier"',
            f'        name = "{name}"',
            "        xmin = 0",
            f"        xmax = {total}",
            f"        intervals: size = {len(intervals)}",
        ]
        for j, (s, e, label) in enumerate(intervals, start=1):
            lines += [
                f"        intervals [{j}]:",
                f"            xmin = {s}",
                f"            xmax = {e}",
                f'            text = "{label.replace(chr(34), chr(34) * 2)}"',
            ]
    return "\n".join(lines) + "\n"


def utterance_fixture(
    root: Path,
    utterance_id: str,
    speaker_id: str,
    base_f0: float,
    variant: int,
    label: str | None,
    language: str = "en",
) -> dict:
    """One synthetic utterance: two chirped vowel tones, noise consonant, silence.

    The variant index perturbs pitch, amplitude, chirp rate, and vowel
    durations so every LLD feature carries real variance across a corpus.
    """
    j = variant
    a_start, a_end = 0.10, round(0.28 + 0.014 * (j % 6), 3)
    b_start, b_end = 0.50, round(0.72 + 0.012 * (j % 7), 3)
    f0_a = base_f0 * (1.00 + 0.03 * (j % 5))
    f0_b = base_f0 * (0.95 + 0.04 * (j % 4))
    amp_a = 0.22 + 0.05 * (j % 3)
    amp_b = 0.27 + 0.04 * (j % 4)
    chirp_a = -30.0 + 12.0 * (j % 6)
    chirp_b = 25.0 - 9.0 * (j % 5)

    total = 1.0
    x = np.zeros(int(total * SR))

    def put(start: float, end: float, wave_: np.ndarray) -> None:
        i0 = int(round(start * SR))
        x[i0 : i0 + len(wave_)] = wave_

    put(a_start, a_end, tone(f0_a, a_end - a_start, amp=amp_a, chirp=chirp_a))
    put(b_start, b_end, tone(f0_b, b_end - b_start, amp=amp_b, chirp=chirp_b))
    rng = np.random.default_rng(7000 + j)
    c0, c1 = int(round((a_end + 0.02) * SR)), int(round(0.49 * SR))
    x[c0:c1] = 0.02 * rng.standard_normal(c1 - c0)

    wav = root / "wav" / f"{utterance_id}.wav"
    tg = root / "tg" / f"{utterance_id}.TextGrid"
    wav.parent.mkdir(exist_ok=True)
    tg.parent.mkdir(exist_ok=True)
    write_wav_pcm16(wav, x)

    phones = [
        (0.0, a_start, "sil"),
        (a_start, a_end, "AE1"),
        (a_end, b_start, "S"),
        (b_start, b_end, "IY1"),
        (b_end, total, "sil"),
    ]
    words = [
        (0.0, a_start, ""),
        (a_start, a_end, "cat"),
        (a_end, b_start, ""),
        (b_start, b_end, "see"),
        (b_end, total, ""),
    ]
    tg.write_text(textgrid_text(total, phones, words), encoding="utf-8")

    entry = {
        "utterance_id": utterance_id,
        "speaker_id": speaker_id,
        "language": language,
        "audio_path": str(wav.relative_to(root)),
        "alignment_path": str(tg.relative_to(root)),
        "transcript": f"cat see {j}",
        "context": [{"speaker": "other", "text": "And then what happened?"}],
    }
    if label is not None:
        entry["label"] = label
    return entry


LABELS = ["angry", "happy", "sad", "neutral", "excited"]


def build_corpus(
    root: Path,
    speakers: list[tuple[str, float, int]],
    labeled: bool = True,
) -> Path:
    """Write a manifest of synthetic utterances; speakers = (id, base_f0, n_utts)."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    n = 0
    for speaker_id, base_f0, count in speakers:
        for j in range(count):
            label = LABELS[n % len(LABELS)] if labeled else None
            entries.append(
                utterance_fixture(root, f"utt-{n:03d}", speaker_id, base_f0, j, label)
            )
            n += 1
    manifest = root / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry) + "\n")
    return manifest


@pytest.fixture
def three_speaker_manifest(tmp_path: Path) -> Path:
    """3 speakers x 6 utterances x 2 vowels = 36 segments, 12 per speaker."""
    return build_corpus(
        tmp_path / "corpus",
        [("spk-low", 120.0, 6), ("spk-mid", 200.0, 6), ("spk-high", 300.0, 6)],
    )


@pytest.fixture
def e2e_manifest(tmp_path: Path) -> Path:
    """10 utterances across 3 speakers for the end-to-end smoke run."""
    return build_corpus(
        tmp_path / "e2e",
        [("spk-a", 120.0, 4), ("spk-b", 200.0, 3), ("spk-c", 300.0, 3)],
    )


class StubChatServer:
    """In-process OpenAI-compatible chat endpoint with scripted responses.

    ``responder(prompt, index)`` returns (status, text); index is the global
    request counter. Defaults to echoing a fixed well-formed answer.
    """

    def __init__(self, responder=None):
        self.responder = responder or (lambda prompt, i: (200, "<answer>happy</answer>"))
        self.requests: list[str] = []
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                prompt = body["messages"][0]["content"]
                with outer._lock:
                    index = len(outer.requests)
                    outer.requests.append(prompt)
                status, text = outer.responder(prompt, index)
                if status == 200:
                    payload = json.dumps(
                        {"choices": [{"message": {"content": text}}]}
                    ).encode()
                else:
                    payload = json.dumps({"error": text}).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self._server.server_address[1]}/v1"

    @property
    def request_count(self) -> int:
        with self._lock:
            return len(self.requests)

    def start(self) -> "StubChatServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    """Factory fixture: start stub chat servers, stop them all at teardown."""
    servers: list[StubChatServer] = []

    def start(responder=None) -> StubChatServer:
        server = StubChatServer(responder).start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()
