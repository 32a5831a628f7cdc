"""Deterministic speech data augmentation, feature extraction, and scoring."""

from .audio_io import AudioBuffer, UtteranceRecord, load_manifest, read_wav, save_manifest, write_wav
from .augment import (
    AugmentationSpec,
    NoiseSpec,
    SpecAugmentSpec,
    SpeedSpec,
    add_gaussian_noise,
    derive_noise_std,
    freq_mask,
    measure_snr_db,
    pick_speed_factor,
    spec_augment,
    speed_perturb,
    time_mask,
    time_warp,
)
from .dsp import (
    FeatureParams,
    MelSpectrogram,
    compute_log_mel,
    read_spectrogram_dump,
    resample,
    rms,
    write_spectrogram_dump,
)
from .metrics import (
    EditCounts,
    ScoreReport,
    edit_distance,
    format_results_table,
    score_corpus,
)
from .render import ImageSpec, render_spectrogram

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "AugmentationSpec",
    "EditCounts",
    "FeatureParams",
    "ImageSpec",
    "MelSpectrogram",
    "NoiseSpec",
    "ScoreReport",
    "SpecAugmentSpec",
    "SpeedSpec",
    "UtteranceRecord",
    "add_gaussian_noise",
    "compute_log_mel",
    "derive_noise_std",
    "edit_distance",
    "format_results_table",
    "freq_mask",
    "load_manifest",
    "measure_snr_db",
    "pick_speed_factor",
    "read_spectrogram_dump",
    "read_wav",
    "render_spectrogram",
    "resample",
    "rms",
    "save_manifest",
    "score_corpus",
    "spec_augment",
    "speed_perturb",
    "time_mask",
    "time_warp",
    "write_spectrogram_dump",
    "write_wav",
]
