"""AudioClip container, decoding, and sample-rate conversion."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.signal import upfirdn

from ..errors import NumericError, ParameterError
from .wavio import read_wav

CANONICAL_RATE = 44100
RESAMPLE_TAPS_PER_PHASE = 64
RESAMPLE_KAISER_BETA = 8.6


@dataclass(frozen=True)
class AudioClip:
    """Mono samples in [-1, 1] at a single sample rate."""

    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE
    source_id: str = ""
    species: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ParameterError(f"clip samples must be 1-d, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericError("clip contains non-finite samples")
        if self.sample_rate < 1:
            raise ParameterError("sample rate must be positive")
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate

    def __len__(self) -> int:
        return self.samples.shape[0]

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return replace(self, samples=samples)


def _kaiser_sinc_kernel(up: int, down: int) -> np.ndarray:
    """Linear-phase lowpass at the up-sampled rate, gain ``up``.

    Cutoff sits at half the narrower of the two Nyquist bands; length gives
    RESAMPLE_TAPS_PER_PHASE taps per polyphase branch, forced odd so the
    group delay is an integer.
    """
    cutoff = 0.5 / max(up, down)
    length = RESAMPLE_TAPS_PER_PHASE * max(up, down)
    if length % 2 == 0:
        length += 1
    n = np.arange(length) - (length - 1) / 2
    kernel = 2.0 * cutoff * np.sinc(2.0 * cutoff * n)
    kernel *= np.kaiser(length, RESAMPLE_KAISER_BETA)
    kernel *= up / kernel.sum()  # unit DC gain after the up-sampling dilution
    return kernel


def resample(samples: np.ndarray, sr_from: int, sr_to: int) -> np.ndarray:
    """Windowed-sinc rational-ratio resampling.

    The conversion ratio reduces exactly via integer arithmetic; the kernel
    is our own Kaiser-windowed sinc, executed as a polyphase filter.
    """
    if sr_from < 1 or sr_to < 1:
        raise ParameterError("sample rates must be positive")
    x = np.asarray(samples, dtype=np.float64)
    if sr_from == sr_to:
        return x.copy()
    if x.shape[0] == 0:
        return x.copy()
    ratio = Fraction(sr_to, sr_from)
    up, down = ratio.numerator, ratio.denominator
    kernel = _kaiser_sinc_kernel(up, down)
    delay = (len(kernel) - 1) // 2
    pre = (-delay) % down  # align the group delay to the output grid
    if pre:
        kernel = np.concatenate([np.zeros(pre), kernel])
        delay += pre
    n_out = -(-x.shape[0] * up // down)
    y = upfirdn(kernel, x, up=up, down=down)
    start = delay // down
    return y[start : start + n_out]


def decode_audio(path) -> AudioClip:
    """Decode a WAV file into a normalized clip at the canonical rate.

    Stereo is averaged to mono; other sample rates are resampled; values
    are clipped to [-1, 1] to absorb filter overshoot.
    """
    samples, rate = read_wav(path)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if rate != CANONICAL_RATE:
        samples = resample(samples, rate, CANONICAL_RATE)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples=samples, sample_rate=CANONICAL_RATE, source_id=Path(path).name)
