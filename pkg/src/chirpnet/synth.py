"""Synthetic benchmark clips: tones and frequency sweeps in noise.

Four classes with distinct spectro-temporal signatures: a low tone, a high
tone, an upward sweep, and a downward sweep. The two sweeps share the same
time-averaged spectrum, so any classifier that collapses time (such as a
nearest-neighbour on averaged spectra) must confuse them, while a model
that sees the time axis can tell them apart.
"""

from __future__ import annotations

import numpy as np

from .audio.clip import CANONICAL_RATE, AudioClip
from .errors import ParameterError

SPECIES = ("tone-low", "tone-high", "sweep-up", "sweep-down")
TONE_LOW_HZ = 2000.0
TONE_HIGH_HZ = 6000.0
SIGNATURE_AMPLITUDE = 0.3
DEFAULT_SNR_DB = 10.0


def signature_wave(
    kind: str,
    duration: float,
    sample_rate: int = CANONICAL_RATE,
    rng: np.random.Generator | None = None,
    amplitude: float = SIGNATURE_AMPLITUDE,
) -> np.ndarray:
    """Clean waveform for one species signature.

    Tones get a small per-clip frequency jitter and random phase when an
    rng is provided, so clips within a class are not identical.
    """
    if kind not in SPECIES:
        raise ParameterError(f"unknown signature {kind!r}; choose from {SPECIES}")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    jitter = 1.0
    phase = 0.0
    if rng is not None:
        jitter = 1.0 + rng.uniform(-0.02, 0.02)
        phase = rng.uniform(0, 2 * np.pi)
    if kind == "tone-low":
        inst_freq = np.full(n, TONE_LOW_HZ * jitter)
    elif kind == "tone-high":
        inst_freq = np.full(n, TONE_HIGH_HZ * jitter)
    elif kind == "sweep-up":
        inst_freq = (TONE_LOW_HZ + (TONE_HIGH_HZ - TONE_LOW_HZ) * t / duration) * jitter
    else:
        inst_freq = (TONE_HIGH_HZ - (TONE_HIGH_HZ - TONE_LOW_HZ) * t / duration) * jitter
    phase_acc = 2 * np.pi * np.cumsum(inst_freq) / sample_rate + phase
    return amplitude * np.sin(phase_acc)


def add_noise(signal: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """White Gaussian noise scaled to the requested signal-to-noise ratio."""
    sig_power = float(np.mean(signal * signal))
    noise_power = sig_power / (10.0 ** (snr_db / 10.0))
    noise = rng.normal(0.0, np.sqrt(noise_power), size=signal.shape)
    return np.clip(signal + noise, -1.0, 1.0)


def make_clip(
    kind: str,
    duration: float = 2.0,
    sample_rate: int = CANONICAL_RATE,
    snr_db: float = DEFAULT_SNR_DB,
    rng: np.random.Generator | None = None,
    source_id: str = "",
) -> AudioClip:
    rng = rng or np.random.default_rng()
    wave = signature_wave(kind, duration, sample_rate, rng)
    samples = add_noise(wave, snr_db, rng)
    return AudioClip(
        samples=samples, sample_rate=sample_rate, source_id=source_id, species=kind
    )


def make_desk_dataset(
    n_per_class: int = 40,
    duration: float = 2.0,
    sample_rate: int = CANONICAL_RATE,
    snr_db: float = DEFAULT_SNR_DB,
    seed: int = 0,
) -> tuple[list[AudioClip], list[int], list[str]]:
    """Balanced 4-class corpus: (clips, integer labels, label set)."""
    rng = np.random.default_rng(seed)
    clips = []
    labels = []
    label_set = list(SPECIES)
    for ci, kind in enumerate(label_set):
        for j in range(n_per_class):
            clips.append(
                make_clip(
                    kind,
                    duration=duration,
                    sample_rate=sample_rate,
                    snr_db=snr_db,
                    rng=rng,
                    source_id=f"{kind}-{j:03d}",
                )
            )
            labels.append(ci)
    return clips, labels, label_set


def make_transition_clip(
    first: str,
    second: str,
    seconds_each: float = 5.0,
    sample_rate: int = CANONICAL_RATE,
    snr_db: float = DEFAULT_SNR_DB,
    seed: int = 0,
) -> AudioClip:
    """One signature for the first half, another for the second half."""
    rng = np.random.default_rng(seed)
    a = signature_wave(first, seconds_each, sample_rate, rng)
    b = signature_wave(second, seconds_each, sample_rate, rng)
    samples = add_noise(np.concatenate([a, b]), snr_db, rng)
    return AudioClip(samples=samples, sample_rate=sample_rate, species=first)


def make_overdub_clip(
    base: str,
    overdub: str,
    duration: float,
    region_seconds: float,
    sample_rate: int = CANONICAL_RATE,
    snr_db: float = DEFAULT_SNR_DB,
    seed: int = 0,
    overdub_gain: float = 2.0,
) -> AudioClip:
    """Base signature throughout; alternating regions add a louder second
    signature so those stretches classify as the overdub class while the
    whole clip still averages to the base class.

    Regions tile the clip as [quiet, dubbed, quiet, dubbed, ...], each
    region_seconds long, so half the audio carries the overdub. The base
    signature restarts every region rather than stretching over the whole
    clip: a sweep stretched to the full duration would glide too slowly
    for any one region to resemble the class.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    region = int(round(region_seconds * sample_rate))
    pieces = []
    made = 0
    while made < n:
        m = min(region, n - made)
        pieces.append(signature_wave(base, m / sample_rate, sample_rate, rng))
        made += m
    wave = np.concatenate(pieces)
    start = region
    while start < n:
        stop = min(start + region, n)
        dub = signature_wave(
            overdub,
            (stop - start) / sample_rate,
            sample_rate,
            rng,
            amplitude=SIGNATURE_AMPLITUDE * overdub_gain,
        )
        wave[start:stop] += dub
        start += 2 * region
    samples = add_noise(wave, snr_db, rng)
    return AudioClip(samples=samples, sample_rate=sample_rate, species=base)
