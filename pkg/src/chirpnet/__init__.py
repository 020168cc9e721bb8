"""Bird sound classification: spectrogram features, a small convolutional
classifier with its own differentiation engine, Monte Carlo evaluation, and
chunked detection over long recordings."""

from .audio.clip import AudioClip, decode_audio, resample
from .audio.manifest import DatasetManifest, ManifestEntry, load_manifest, write_manifest
from .audio.preprocess import cap_duration, trim_silence
from .detect import ChunkParams, DetectionEvent, detect, merge_events, multispecies_eval
from .dsp.features import FeatureMatrix, extract_features, mel_spectrogram, mfcc
from .dsp.mel import MelFilterbank, build_filterbank, mel_scale, mel_to_hz
from .dsp.windowing import FrameParams
from .errors import ChirpnetError
from .metrics import EvalReport, confusion_matrix, evaluate_predictions
from .model import (
    FcnConfig,
    FcnModel,
    build_cnn_dense,
    build_model,
    canonical_config,
    load_weights,
    param_count,
    param_report,
    save_weights,
)
from .training import (
    CvSummary,
    FeatureSpec,
    TrainConfig,
    cross_validate,
    evaluate,
    monte_carlo_split,
    train_one,
)

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "ChirpnetError",
    "ChunkParams",
    "CvSummary",
    "DatasetManifest",
    "DetectionEvent",
    "EvalReport",
    "FcnConfig",
    "FcnModel",
    "FeatureMatrix",
    "FeatureSpec",
    "FrameParams",
    "ManifestEntry",
    "MelFilterbank",
    "TrainConfig",
    "build_cnn_dense",
    "build_filterbank",
    "build_model",
    "canonical_config",
    "cap_duration",
    "confusion_matrix",
    "cross_validate",
    "decode_audio",
    "detect",
    "evaluate",
    "evaluate_predictions",
    "extract_features",
    "load_manifest",
    "load_weights",
    "mel_scale",
    "mel_spectrogram",
    "mel_to_hz",
    "merge_events",
    "mfcc",
    "monte_carlo_split",
    "multispecies_eval",
    "param_count",
    "param_report",
    "resample",
    "save_weights",
    "train_one",
    "trim_silence",
    "write_manifest",
]
