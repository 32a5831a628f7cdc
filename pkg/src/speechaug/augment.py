"""The three augmentations: SNR-targeted Gaussian noise, speed perturbation,
and SpecAugment-style masking/warping of log mel spectrograms.

All randomness flows through the seeded generators in ``speechaug.rng``.
Identical (input, spec) pairs produce identical output bytes regardless of
processing order, worker count, or platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .audio_io import AudioBuffer
from .dsp import MelSpectrogram, resample_by_factor, rms, spectrogram_with_values
from .errors import BadParamsError, SilentSignalError
from .rng import Xoshiro256StarStar, derive_seed, gaussian

FILL_MODES = ("floor", "utterance_mean")

DEFAULT_SNR_DB = 10.0
DEFAULT_SPEED_FACTORS = (0.5, 0.9, 1.0, 1.1, 1.5)
DEFAULT_TIME_WARP = 80
DEFAULT_FREQ_MASK = 27
DEFAULT_N_FREQ_MASKS = 2
DEFAULT_TIME_MASK = 100
DEFAULT_N_TIME_MASKS = 2


class MaskRng(Protocol):
    """The draw interface the spectrogram augmentations consume."""

    def rand_below(self, n: int) -> int: ...


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float = DEFAULT_SNR_DB
    seed: int = 0


@dataclass(frozen=True)
class SpeedSpec:
    factors: tuple[float, ...] = DEFAULT_SPEED_FACTORS
    seed: int = 0

    def __post_init__(self):
        if not self.factors:
            raise BadParamsError("factors must be nonempty")
        if any(f <= 0 for f in self.factors):
            raise BadParamsError("speed factors must be positive")


@dataclass(frozen=True)
class SpecAugmentSpec:
    time_warp_w: int = DEFAULT_TIME_WARP
    freq_mask_f: int = DEFAULT_FREQ_MASK
    n_freq_masks: int = DEFAULT_N_FREQ_MASKS
    time_mask_t: int = DEFAULT_TIME_MASK
    n_time_masks: int = DEFAULT_N_TIME_MASKS
    fill: str = "utterance_mean"
    seed: int = 0

    def __post_init__(self):
        counts = (self.time_warp_w, self.freq_mask_f, self.n_freq_masks,
                  self.time_mask_t, self.n_time_masks)
        if any(c < 0 for c in counts):
            raise BadParamsError("mask widths and counts must be nonnegative")
        if self.fill not in FILL_MODES:
            raise BadParamsError(f"fill must be one of {FILL_MODES}")


@dataclass(frozen=True)
class AugmentationSpec:
    """One bundle of parameters for all three augmentations.

    Serializes to a flat config mapping whose keys are exactly: snr_db,
    factors, time_warp_w, freq_mask_f, n_freq_masks, time_mask_t,
    n_time_masks, fill, seed.
    """

    snr_db: float = DEFAULT_SNR_DB
    factors: tuple[float, ...] = DEFAULT_SPEED_FACTORS
    time_warp_w: int = DEFAULT_TIME_WARP
    freq_mask_f: int = DEFAULT_FREQ_MASK
    n_freq_masks: int = DEFAULT_N_FREQ_MASKS
    time_mask_t: int = DEFAULT_TIME_MASK
    n_time_masks: int = DEFAULT_N_TIME_MASKS
    fill: str = "utterance_mean"
    seed: int = 0

    def noise_spec(self, seed: int | None = None) -> NoiseSpec:
        return NoiseSpec(self.snr_db, self.seed if seed is None else seed)

    def speed_spec(self, seed: int | None = None) -> SpeedSpec:
        return SpeedSpec(self.factors, self.seed if seed is None else seed)

    def specaugment_spec(self, seed: int | None = None) -> SpecAugmentSpec:
        return SpecAugmentSpec(
            time_warp_w=self.time_warp_w,
            freq_mask_f=self.freq_mask_f,
            n_freq_masks=self.n_freq_masks,
            time_mask_t=self.time_mask_t,
            n_time_masks=self.n_time_masks,
            fill=self.fill,
            seed=self.seed if seed is None else seed,
        )

    def to_config_dict(self) -> dict:
        return {
            "snr_db": self.snr_db,
            "factors": list(self.factors),
            "time_warp_w": self.time_warp_w,
            "freq_mask_f": self.freq_mask_f,
            "n_freq_masks": self.n_freq_masks,
            "time_mask_t": self.time_mask_t,
            "n_time_masks": self.n_time_masks,
            "fill": self.fill,
            "seed": self.seed,
        }

    @classmethod
    def from_config_dict(cls, mapping: dict) -> "AugmentationSpec":
        known = set(cls().to_config_dict())
        unknown = set(mapping) - known
        if unknown:
            raise BadParamsError(f"unknown augmentation keys: {sorted(unknown)}")
        kwargs = dict(mapping)
        if "factors" in kwargs:
            kwargs["factors"] = tuple(float(f) for f in kwargs["factors"])
        spec = cls(**kwargs)
        if spec.snr_db != spec.snr_db or spec.snr_db in (float("inf"), float("-inf")):
            raise BadParamsError("snr_db must be finite")
        return spec


def derive_noise_std(signal_rms: float, snr_db: float) -> float:
    """Gaussian noise std that hits ``snr_db`` against a signal of given RMS.

    SNR(dB) = 20 log10(rms_signal / rms_noise), and a zero-mean Gaussian's
    RMS equals its standard deviation, so std = rms / 10^(snr/20).
    """
    if signal_rms < 0:
        raise BadParamsError("signal_rms must be nonnegative")
    if signal_rms == 0:
        raise SilentSignalError("SNR is undefined for an all-zero signal")
    return signal_rms / 10.0 ** (snr_db / 20.0)


def add_gaussian_noise(buffer: AudioBuffer, spec: NoiseSpec) -> tuple[AudioBuffer, int]:
    """Add white Gaussian noise at the target SNR, saturating to [-1, 1].

    Returns the noisy buffer and the number of samples that hit the clamp.
    """
    std = derive_noise_std(rms(buffer), spec.snr_db)
    noise = std * gaussian(spec.seed, len(buffer))
    noisy = buffer.samples + noise
    clipped = np.abs(noisy) > 1.0
    clip_count = int(np.count_nonzero(clipped))
    if clip_count:
        noisy = np.clip(noisy, -1.0, 1.0)
    return AudioBuffer(noisy, buffer.sample_rate_hz), clip_count


def measure_snr_db(original: AudioBuffer, noisy: AudioBuffer) -> float:
    """Measured SNR of an additive-noise pair, skipping saturated samples.

    Treats noise as (noisy - original) wherever the noisy sample did not
    land on the clamp boundary.
    """
    keep = np.abs(noisy.samples) < 1.0
    if not keep.any():
        return float("nan")
    signal = original.samples[keep]
    noise = noisy.samples[keep] - signal
    noise_power = float(np.mean(np.square(noise)))
    if noise_power == 0.0:
        return float("inf")
    signal_power = float(np.mean(np.square(signal)))
    return 10.0 * np.log10(signal_power / noise_power)


def pick_speed_factor(spec: SpeedSpec, utterance_id: str) -> float:
    """Uniform draw from the factor set, deterministic per (seed, id).

    Factors are sorted ascending before indexing so the draw does not
    depend on the order the set was written in.
    """
    rng = Xoshiro256StarStar(derive_seed(spec.seed, utterance_id))
    ordered = sorted(set(spec.factors))
    return ordered[rng.rand_below(len(ordered))]


def speed_perturb(buffer: AudioBuffer, factor: float) -> AudioBuffer:
    """Play the audio ``factor`` times faster at an unchanged sample rate.

    The waveform x(t) becomes x(factor * t): length scales by 1/factor and
    every tone at f Hz moves to factor * f Hz.
    """
    if factor <= 0:
        raise BadParamsError("speed factor must be positive")
    return resample_by_factor(buffer, 1.0 / factor)


def _fill_value(spec_in: MelSpectrogram, fill: str) -> float:
    if fill == "floor":
        return spec_in.floor_db
    if fill == "utterance_mean":
        return float(spec_in.values.mean())
    raise BadParamsError(f"fill must be one of {FILL_MODES}")


def time_warp(spec_in: MelSpectrogram, warp: int, rng: MaskRng) -> MelSpectrogram:
    """Piecewise-linear warp of the frame axis, shared by all channels.

    Picks a source frame c in [warp, frames-warp-1] and a shift in
    [-warp, warp], then remaps so c lands at c+shift while frames 0 and
    frames-1 stay fixed.  Grids too short for the draw pass through
    untouched and consume no randomness.
    """
    n_frames = spec_in.n_frames
    if warp == 0 or n_frames <= 2 * warp:
        return spec_in
    center = warp + rng.rand_below(n_frames - 2 * warp)
    shift = rng.rand_below(2 * warp + 1) - warp
    if shift == 0:
        return spec_in

    pivot = center + shift
    last = n_frames - 1
    out_pos = np.arange(n_frames, dtype=np.float64)
    src = np.empty(n_frames, dtype=np.float64)
    left = out_pos <= pivot
    if pivot > 0:
        src[left] = out_pos[left] * (center / pivot)
    else:
        src[left] = 0.0
    if pivot < last:
        right = ~left
        src[right] = center + (out_pos[right] - pivot) * ((last - center) / (last - pivot))
    src[0] = 0.0
    src[last] = float(last)  # endpoints always fixed, even on degenerate draws

    lower = np.floor(src).astype(np.int64)
    lower = np.clip(lower, 0, last)
    upper = np.minimum(lower + 1, last)
    frac = (src - lower)[:, np.newaxis]
    grid = spec_in.values
    # lower + frac * (upper - lower): exact where frac == 0 or the field is constant
    warped = grid[lower] + frac * (grid[upper] - grid[lower])
    return spectrogram_with_values(spec_in, warped)


def freq_mask(
    spec_in: MelSpectrogram, width: int, n_masks: int, fill_value: float, rng: MaskRng
) -> MelSpectrogram:
    """Zero out (to the fill value) ``n_masks`` random mel channel bands.

    Each band: extent f ~ U{0..min(width, n_mels)}, start f0 ~ U{0..n_mels-f};
    channels [f0, f0+f) are set to ``fill_value`` across every frame.
    """
    n_mels = spec_in.n_mels
    cap = min(width, n_mels)
    values = None
    for _ in range(n_masks):
        extent = rng.rand_below(cap + 1)
        start = rng.rand_below(n_mels - extent + 1)
        if extent == 0:
            continue
        if values is None:
            values = spec_in.values.copy()
        values[:, start:start + extent] = fill_value
    if values is None:
        return spec_in
    return spectrogram_with_values(spec_in, values)


def time_mask(
    spec_in: MelSpectrogram, width: int, n_masks: int, fill_value: float, rng: MaskRng
) -> MelSpectrogram:
    """Like ``freq_mask`` but along the frame axis."""
    n_frames = spec_in.n_frames
    cap = min(width, n_frames)
    values = None
    for _ in range(n_masks):
        extent = rng.rand_below(cap + 1)
        start = rng.rand_below(n_frames - extent + 1)
        if extent == 0:
            continue
        if values is None:
            values = spec_in.values.copy()
        values[start:start + extent, :] = fill_value
    if values is None:
        return spec_in
    return spectrogram_with_values(spec_in, values)


def spec_augment(spec_in: MelSpectrogram, spec: SpecAugmentSpec) -> MelSpectrogram:
    """Time warp, then frequency masks, then time masks, one seeded stream.

    The fill value (utterance mean or the dB floor) is computed from the
    pristine input before anything is warped or masked.
    """
    fill_value = _fill_value(spec_in, spec.fill)
    rng = Xoshiro256StarStar(spec.seed)
    out = time_warp(spec_in, spec.time_warp_w, rng)
    out = freq_mask(out, spec.freq_mask_f, spec.n_freq_masks, fill_value, rng)
    out = time_mask(out, spec.time_mask_t, spec.n_time_masks, fill_value, rng)
    return out
