"""F0 and intensity contour extraction plus per-vowel descriptor reduction.

Pitch uses Hann-windowed normalized autocorrelation with window-autocorrelation
compensation, parabolic peak refinement, a small octave cost to break ties
between period multiples, a voicing threshold, and a 3-frame median filter
over voiced runs. Intensity is windowed RMS in dB relative to full scale.
Both contours run on a 10 ms hop by default.

Pitch bounds are speaker-adaptive: a first pass with generic bounds estimates
the speaker's F0 range, and the working floor/ceiling derive from its
quartiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageError
from .segments import VowelSegment

GENERIC_PITCH_FLOOR_HZ = 60.0
GENERIC_PITCH_CEILING_HZ = 600.0
DEFAULT_VOICING_THRESHOLD = 0.45
DEFAULT_HOP_S = 0.01
DEFAULT_INTENSITY_WINDOW_S = 0.04
SILENCE_DB_FLOOR = -200.0

# Lag candidates at k times the true period tie with the fundamental on
# perfectly periodic signals; a per-octave cost breaks the tie upward.
_OCTAVE_COST = 0.01

_MIN_VOICED_FRAMES_FOR_PITCH = 3
_MIN_FRAMES_FOR_ADAPTIVE = 10


@dataclass(frozen=True)
class PitchBounds:
    floor: float
    ceiling: float

    def __post_init__(self) -> None:
        if not 0 < self.floor < self.ceiling:
            raise ValueError(f"invalid pitch bounds ({self.floor}, {self.ceiling})")


GENERIC_PITCH_BOUNDS = PitchBounds(GENERIC_PITCH_FLOOR_HZ, GENERIC_PITCH_CEILING_HZ)


@dataclass(frozen=True)
class Contour:
    """Frame-level values on a uniform grid; NaN marks unvoiced pitch frames."""

    values: np.ndarray
    frame_hop: float
    first_frame_center: float

    def times(self) -> np.ndarray:
        return self.first_frame_center + self.frame_hop * np.arange(len(self.values))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Contour):
            return NotImplemented
        return (
            self.frame_hop == other.frame_hop
            and self.first_frame_center == other.first_frame_center
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True)
class VowelLLD:
    """The six per-vowel descriptors; pitch fields are None when unavailable."""

    segment: VowelSegment
    f0_mean: float | None
    f0_slope: float | None
    f0_std: float | None
    intensity_mean: float
    intensity_std: float
    duration: float
    voiced_frames: int
    pitch_available: bool


def _frame_signal(samples: np.ndarray, win_len: int, hop: int) -> np.ndarray:
    if len(samples) < win_len:
        raise CoverageError(
            f"audio of {len(samples)} samples is shorter than one analysis "
            f"window of {win_len} samples"
        )
    return np.lib.stride_tricks.sliding_window_view(samples, win_len)[::hop]


def f0_contour(
    audio,
    bounds: PitchBounds,
    hop_s: float = DEFAULT_HOP_S,
    voicing_threshold: float = DEFAULT_VOICING_THRESHOLD,
) -> Contour:
    """Track F0 with Hann-windowed autocorrelation; unvoiced frames are NaN.

    The analysis window spans three periods of the pitch floor. Raises
    CoverageError when the audio is shorter than one window.
    """
    sr = audio.sample_rate
    win_len = max(8, int(round(3.0 / bounds.floor * sr)))
    hop = max(1, int(round(hop_s * sr)))
    frames = _frame_signal(audio.samples, win_len, hop).astype(np.float64)

    min_lag = max(2, int(math.floor(sr / bounds.ceiling)))
    max_lag = min(int(math.ceil(sr / bounds.floor)), win_len - 2)
    if min_lag >= max_lag:
        raise CoverageError(
            f"pitch bounds ({bounds.floor}, {bounds.ceiling}) leave no usable "
            f"lag range at sample rate {sr}"
        )

    window = np.hanning(win_len)
    nfft = 1 << (2 * win_len - 1).bit_length()
    n_keep = max_lag + 2

    # Normalized autocorrelation of the window itself, used to undo the
    # taper's damping of the signal autocorrelation at long lags.
    w_spec = np.fft.rfft(window, nfft)
    w_acf = np.fft.irfft(w_spec * np.conj(w_spec), nfft)[:n_keep]
    w_acf = np.maximum(w_acf / w_acf[0], 1e-6)

    frames = frames - frames.mean(axis=1, keepdims=True)
    frames *= window
    spec = np.fft.rfft(frames, nfft, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, :n_keep]

    r0 = acf[:, 0].copy()
    silent = r0 < 1e-12
    r0[silent] = 1.0
    comp = acf / r0[:, None] / w_acf

    lags = np.arange(min_lag, max_lag + 1)
    octave_bonus = -_OCTAVE_COST * np.log2(lags * bounds.floor / sr)
    scored = comp[:, min_lag : max_lag + 1] + octave_bonus
    best = np.argmax(scored, axis=1) + min_lag

    rows = np.arange(len(frames))
    a = comp[rows, best - 1]
    b = comp[rows, best]
    c = comp[rows, best + 1]
    denom = a - 2.0 * b + c
    local_max = (b >= a) & (b >= c) & (denom < -1e-12)
    safe_denom = np.where(local_max, denom, -1.0)
    shift = np.where(local_max, (a - c) / (2.0 * safe_denom), 0.0)
    height = np.where(local_max, b - (a - c) * shift / 4.0, b)
    lag = best + shift

    voiced = (height >= voicing_threshold) & ~silent
    f0 = np.full(len(frames), np.nan)
    f0[voiced] = np.clip(sr / lag[voiced], bounds.floor, bounds.ceiling)
    _median3_over_runs(f0)

    return Contour(
        values=f0,
        frame_hop=hop / sr,
        first_frame_center=0.5 * (win_len - 1) / sr,
    )


def _median3_over_runs(values: np.ndarray) -> None:
    """In-place 3-point median filter applied within each voiced (finite) run."""
    finite = np.isfinite(values)
    n = len(values)
    i = 0
    while i < n:
        if not finite[i]:
            i += 1
            continue
        j = i
        while j < n and finite[j]:
            j += 1
        if j - i >= 3:
            run = values[i:j]
            interior = np.median(
                np.stack([run[:-2], run[1:-1], run[2:]]), axis=0
            )
            values[i + 1 : j - 1] = interior
        i = j


def intensity_contour(
    audio,
    window_s: float = DEFAULT_INTENSITY_WINDOW_S,
    hop_s: float = DEFAULT_HOP_S,
) -> Contour:
    """Windowed RMS energy in dB relative to full scale; silence floors at -200 dB."""
    sr = audio.sample_rate
    win_len = max(4, int(round(window_s * sr)))
    hop = max(1, int(round(hop_s * sr)))
    frames = _frame_signal(audio.samples, win_len, hop).astype(np.float64)

    window = np.hanning(win_len)
    w_sq = window * window
    rms = np.sqrt((frames * frames) @ w_sq / w_sq.sum())
    db = 20.0 * np.log10(np.maximum(rms, 1e-10))

    return Contour(
        values=db,
        frame_hop=hop / sr,
        first_frame_center=0.5 * (win_len - 1) / sr,
    )


def adaptive_pitch_bounds(
    speaker_audio: list,
    hop_s: float = DEFAULT_HOP_S,
    voicing_threshold: float = DEFAULT_VOICING_THRESHOLD,
    generic: PitchBounds = GENERIC_PITCH_BOUNDS,
) -> PitchBounds:
    """Estimate per-speaker pitch bounds from a first pass with generic bounds.

    floor = 0.75 x 25th percentile and ceiling = 1.5 x 75th percentile of the
    first-pass voiced F0 values, clamped to [50, 800] Hz. Falls back to the
    generic bounds when the first pass finds fewer than 10 voiced frames.
    """
    if not speaker_audio:
        raise CoverageError("adaptive pitch bounds need at least one audio buffer")
    if not any(buf.duration >= 0.5 for buf in speaker_audio):
        raise CoverageError(
            "adaptive pitch bounds need at least one buffer of 0.5 s or longer"
        )

    voiced: list[np.ndarray] = []
    for buf in speaker_audio:
        if len(buf.samples) < int(round(3.0 / generic.floor * buf.sample_rate)):
            continue
        contour = f0_contour(buf, generic, hop_s=hop_s, voicing_threshold=voicing_threshold)
        vals = contour.values[np.isfinite(contour.values)]
        if len(vals):
            voiced.append(vals)

    values = np.concatenate(voiced) if voiced else np.empty(0)
    if len(values) < _MIN_FRAMES_FOR_ADAPTIVE:
        return generic

    floor = max(50.0, 0.75 * float(np.percentile(values, 25)))
    ceiling = min(800.0, 1.5 * float(np.percentile(values, 75)))
    if floor >= ceiling:
        return generic
    return PitchBounds(floor, ceiling)


def _select(contour: Contour, start: float, end: float) -> np.ndarray:
    times = contour.times()
    i0 = int(np.searchsorted(times, start, side="left"))
    i1 = int(np.searchsorted(times, end, side="left"))
    return contour.values[i0:i1]


def segment_lld(segment: VowelSegment, f0: Contour, intensity: Contour) -> VowelLLD:
    """Reduce one vowel segment to its six low-level descriptors.

    Frames whose centers fall in [start, end) are selected. Pitch statistics
    cover voiced frames only and require at least 3 of them; standard
    deviations use the population convention; the slope is an ordinary
    least-squares fit in Hz per second.
    """
    level = _select(intensity, segment.start, segment.end)
    if len(level) == 0:
        raise CoverageError(
            f"segment [{segment.start}, {segment.end}] of utterance "
            f"{segment.utterance_id!r} is outside intensity contour coverage"
        )

    f0_times = f0.times()
    i0 = int(np.searchsorted(f0_times, segment.start, side="left"))
    i1 = int(np.searchsorted(f0_times, segment.end, side="left"))
    f0_vals = f0.values[i0:i1]
    f0_t = f0_times[i0:i1]
    mask = np.isfinite(f0_vals)
    voiced_frames = int(mask.sum())
    pitch_available = voiced_frames >= _MIN_VOICED_FRAMES_FOR_PITCH

    f0_mean = f0_slope = f0_std = None
    if pitch_available:
        v = f0_vals[mask]
        t = f0_t[mask]
        f0_mean = float(v.mean())
        f0_std = float(v.std())
        tc = t - t.mean()
        f0_slope = float((tc * (v - v.mean())).sum() / (tc * tc).sum())

    return VowelLLD(
        segment=segment,
        f0_mean=f0_mean,
        f0_slope=f0_slope,
        f0_std=f0_std,
        intensity_mean=float(level.mean()),
        intensity_std=float(level.std()),
        duration=segment.end - segment.start,
        voiced_frames=voiced_frames,
        pitch_available=pitch_available,
    )
