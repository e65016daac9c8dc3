"""WAV decoding: PCM16 and float32, mono downmix, malformed-file errors."""

import struct

import numpy as np
import pytest

from vowelprompt import AudioFormatError, load_audio

from conftest import SR, tone, write_wav_float32, write_wav_pcm16


def test_pcm16_roundtrip(tmp_path):
    sig = tone(220.0, 0.5, amp=0.5)
    buf = load_audio(write_wav_pcm16(tmp_path / "t.wav", sig))
    assert buf.sample_rate == SR
    assert len(buf.samples) == len(sig)
    assert buf.samples.dtype == np.float64
    # 16-bit quantization error bound
    assert np.abs(buf.samples - sig).max() < 1.0 / 32000
    assert abs(buf.duration - 0.5) < 1e-9


def test_float32_roundtrip(tmp_path):
    sig = tone(150.0, 0.25, amp=0.9)
    buf = load_audio(write_wav_float32(tmp_path / "t.wav", sig))
    assert np.abs(buf.samples - sig).max() < 1e-6


def test_stereo_averages_to_mono(tmp_path):
    sig = tone(180.0, 0.2)
    buf = load_audio(write_wav_float32(tmp_path / "t.wav", sig, channels=2))
    assert np.abs(buf.samples - sig).max() < 1e-6


def test_amplitude_out_of_range_clipped(tmp_path):
    sig = 1.5 * np.ones(1000, dtype=np.float32)
    buf = load_audio(write_wav_float32(tmp_path / "t.wav", sig))
    assert buf.samples.max() <= 1.0


def test_not_riff(tmp_path):
    p = tmp_path / "bad.wav"
    p.write_bytes(b"not a wav file at all")
    with pytest.raises(AudioFormatError, match="RIFF"):
        load_audio(p)


def test_missing_data_chunk(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, SR, SR * 2, 2, 16)
    riff = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    p = tmp_path / "nodata.wav"
    p.write_bytes(b"RIFF" + struct.pack("<I", len(riff)) + riff)
    with pytest.raises(AudioFormatError, match="data"):
        load_audio(p)


def test_unsupported_format_tag(tmp_path):
    # format tag 85 = MP3-in-WAV; decoder only does PCM16 and float32
    fmt = struct.pack("<HHIIHH", 85, 1, SR, SR * 2, 2, 16)
    riff = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    riff += b"data" + struct.pack("<I", 4) + b"\x00" * 4
    p = tmp_path / "mp3.wav"
    p.write_bytes(b"RIFF" + struct.pack("<I", len(riff)) + riff)
    with pytest.raises(AudioFormatError, match="fmt"):
        load_audio(p)


def test_truncated_data_chunk(tmp_path):
    good = write_wav_pcm16(tmp_path / "good.wav", tone(220.0, 0.1))
    data = good.read_bytes()
    bad = tmp_path / "trunc.wav"
    bad.write_bytes(data[: len(data) // 2])
    with pytest.raises(AudioFormatError):
        load_audio(bad)


def test_empty_data(tmp_path):
    p = write_wav_float32(tmp_path / "empty.wav", np.zeros(0))
    with pytest.raises(AudioFormatError, match="data"):
        load_audio(p)


def test_nonfinite_float32_rejected(tmp_path):
    sig = np.array([0.0, np.nan, 0.5], dtype=np.float32)
    p = write_wav_float32(tmp_path / "nan.wav", sig)
    with pytest.raises(AudioFormatError):
        load_audio(p)
