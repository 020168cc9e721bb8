"""Mel scale conversion and the triangular filterbank."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, ShapeError
from .windowing import FrameParams


def mel_scale(f):
    """Hz to mel: 2595 * log10(1 + f/700). Accepts scalars or arrays."""
    arr = np.asarray(f, dtype=np.float64)
    if np.any(arr < 0):
        raise ParameterError("frequencies must be nonnegative")
    out = 2595.0 * np.log10(1.0 + arr / 700.0)
    return float(out) if np.isscalar(f) or arr.ndim == 0 else out


def mel_to_hz(m):
    """Inverse of mel_scale."""
    arr = np.asarray(m, dtype=np.float64)
    if np.any(arr < 0):
        raise ParameterError("mel values must be nonnegative")
    out = 700.0 * (np.power(10.0, arr / 2595.0) - 1.0)
    return float(out) if np.isscalar(m) or arr.ndim == 0 else out


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters, unit area over the sampled frequency grid.

    weights has one row per filter over the half-spectrum bins. Rows whose
    triangle is too narrow to touch any bin stay all-zero (reported by
    ``empty_rows``); the builder warns when that happens.
    """

    n_mels: int
    weights: np.ndarray
    fmin: float
    fmax: float
    edges_hz: np.ndarray = field(repr=False)
    sample_rate: int

    @property
    def centers_hz(self) -> np.ndarray:
        return self.edges_hz[1:-1]

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]

    def empty_rows(self) -> np.ndarray:
        return np.flatnonzero(~self.weights.any(axis=1))

    def energies(self, power_spec: np.ndarray) -> np.ndarray:
        return filterbank_energies(power_spec, self)


def build_filterbank(
    n_mels: int,
    fp: FrameParams,
    sample_rate: int,
    fmin: float = 0.0,
    fmax: float | None = None,
) -> MelFilterbank:
    """Construct n_mels triangular filters equally spaced on the mel axis.

    Each filter rises linearly between consecutive mel edge points, sampled
    at the FFT bin frequencies, then is normalized so its trapezoid area
    over Hz is one. fmax defaults to the Nyquist frequency.
    """
    if n_mels < 2:
        raise ParameterError("need at least 2 mel filters")
    nyquist = sample_rate / 2.0
    if fmax is None:
        fmax = nyquist
    if fmax > nyquist:
        raise ParameterError(f"fmax {fmax} exceeds Nyquist {nyquist}")
    if fmin < 0 or fmin >= fmax:
        raise ParameterError("need 0 <= fmin < fmax")

    edges_mel = np.linspace(mel_scale(fmin), mel_scale(fmax), n_mels + 2)
    edges_hz = mel_to_hz(edges_mel)
    bin_hz = np.arange(fp.n_bins) * (sample_rate / fp.fft_size)

    weights = np.zeros((n_mels, fp.n_bins))
    for m in range(n_mels):
        left, center, right = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rise = (bin_hz - left) / max(center - left, np.finfo(float).tiny)
        fall = (right - bin_hz) / max(right - center, np.finfo(float).tiny)
        weights[m] = np.maximum(0.0, np.minimum(rise, fall))

    areas = np.trapezoid(weights, dx=sample_rate / fp.fft_size, axis=1)
    live = areas > 0
    weights[live] /= areas[live, None]
    if not np.all(live):
        warnings.warn(
            f"{int((~live).sum())} mel filters cover no FFT bin at this resolution; "
            "their rows are zero",
            stacklevel=2,
        )
    return MelFilterbank(
        n_mels=n_mels,
        weights=weights,
        fmin=float(fmin),
        fmax=float(fmax),
        edges_hz=edges_hz,
        sample_rate=sample_rate,
    )


def filterbank_energies(power_spec: np.ndarray, fb: MelFilterbank) -> np.ndarray:
    """E[m] = sum_k power[k] * weights[m][k]^2 for each frame.

    Accepts one spectrum (n_bins,) or a batch (frames, n_bins); returns
    (n_mels,) or (frames, n_mels) accordingly.
    """
    p = np.asarray(power_spec, dtype=np.float64)
    squeeze = p.ndim == 1
    pm = p[None] if squeeze else p
    if pm.shape[-1] != fb.n_bins:
        raise ShapeError(
            f"spectrum has {pm.shape[-1]} bins, filterbank expects {fb.n_bins}"
        )
    e = pm @ (fb.weights * fb.weights).T
    return e[0] if squeeze else e
