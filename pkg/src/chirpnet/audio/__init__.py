"""Audio ingestion: WAV decoding, normalization, manifests, archive fetching."""

from .clip import CANONICAL_RATE, AudioClip, decode_audio, resample
from .fetch import FetchConfig, FetchQuery, FetchReport, fetch_recordings
from .manifest import DatasetManifest, ManifestEntry, load_manifest, write_manifest
from .preprocess import cap_duration, pad_to_length, trim_silence
from .wavio import WavInfo, read_wav, wav_info, write_wav

__all__ = [
    "CANONICAL_RATE",
    "AudioClip",
    "decode_audio",
    "resample",
    "FetchConfig",
    "FetchQuery",
    "FetchReport",
    "fetch_recordings",
    "DatasetManifest",
    "ManifestEntry",
    "load_manifest",
    "write_manifest",
    "cap_duration",
    "pad_to_length",
    "trim_silence",
    "WavInfo",
    "read_wav",
    "wav_info",
    "write_wav",
]
