"""Core signal processing: RMS, resampling, and log-mel spectrograms.

The resampler is a windowed-sinc polyphase design (Kaiser window, beta 8.6,
32 zero-crossings per side).  Arbitrary rate ratios are realized through a
rational approximation with denominator <= 1000, which keeps the filter bank
finite while staying far inside every tolerance used downstream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer
from .errors import BadParamsError, EmptySignalError, MalformedDumpError, SignalTooShortError

ZERO_CROSSINGS = 32
KAISER_BETA = 8.6
MAX_RATIO_DENOMINATOR = 1000

DUMP_MAGIC = b"LMEL"
_DUMP_HEADER = struct.Struct("<4sII4x")  # magic, frames, mels, reserved


@dataclass(frozen=True, eq=False)
class MelSpectrogram:
    """Grid of log mel energies in dB, indexed [frame, mel channel]."""

    values: np.ndarray
    frame_hop_s: float
    window_s: float
    sample_rate_hz: int
    fmin_hz: float
    fmax_hz: float
    floor_db: float = -100.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)  # own copy, frozen below
        if values.ndim != 2:
            raise ValueError("values must be a 2-D [frame, mel] grid")
        if values.shape[1] < 1:
            raise ValueError("need at least one mel channel")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_mels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FeatureParams:
    """Front-end parameters: 25 ms Hann windows, 10 ms hop, 80 mels."""

    window_s: float = 0.025
    hop_s: float = 0.010
    fft_size: int = 512
    n_mels: int = 80
    fmin_hz: float = 0.0
    fmax_hz: float | None = None  # None means Nyquist
    floor_db: float = -100.0


def rms(buffer: AudioBuffer) -> float:
    """Root mean square of the samples."""
    if len(buffer) == 0:
        raise EmptySignalError("rms of an empty signal")
    return float(np.sqrt(np.mean(np.square(buffer.samples))))


def hz_to_mel(hz):
    """HTK mel scale: mel(f) = 2595 log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (np.power(10.0, np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def _design_bank(up: int, down: int) -> tuple[np.ndarray, int]:
    """Polyphase filter bank for up/down resampling, taps reversed per phase.

    Returns (bank, half) where bank[q] holds the taps h[q::up] reversed and
    zero-padded to a common length, ready for a dot product against a
    causal input window.
    """
    hi = max(up, down)
    half = ZERO_CROSSINGS * hi
    positions = np.arange(-half, half + 1, dtype=np.float64)
    taps = np.sinc(positions / hi) / hi * np.kaiser(2 * half + 1, KAISER_BETA)
    taps *= up / taps.sum()  # unity DC gain after zero stuffing

    per_phase = (2 * half) // up + 1
    bank = np.zeros((up, per_phase), dtype=np.float64)
    for q in range(up):
        phase = taps[q::up]
        bank[q, per_phase - len(phase):] = phase[::-1]
    return bank, half


def _resample_by_ratio(x: np.ndarray, up: int, down: int, n_out: int) -> np.ndarray:
    bank, half = _design_bank(up, down)
    per_phase = bank.shape[1]

    n = np.arange(n_out, dtype=np.int64)
    grid = n * down + half  # position on the zero-stuffed grid, shifted causal
    phase = grid % up
    newest = grid // up  # newest input sample each output depends on

    pad_right = max(0, int(newest[-1]) + 2 - len(x)) if n_out else 0
    padded = np.concatenate([
        np.zeros(per_phase), x, np.zeros(pad_right + per_phase),
    ])
    windows = np.lib.stride_tricks.sliding_window_view(padded, per_phase)

    out = np.empty(n_out, dtype=np.float64)
    chunk = 1 << 16  # bounds the gathered window matrix to ~32 MB
    for lo in range(0, n_out, chunk):
        sel = slice(lo, min(lo + chunk, n_out))
        out[sel] = np.einsum("nk,nk->n", windows[newest[sel] + 1], bank[phase[sel]])
    return out


def resample(buffer: AudioBuffer, out_rate_hz: int) -> AudioBuffer:
    """Band-limited resampling to ``out_rate_hz``.

    Output length is round(len * out_rate / in_rate); aliasing components
    are attenuated by the anti-imaging/anti-alias filter at the narrower
    Nyquist frequency.
    """
    if out_rate_hz <= 0:
        raise BadParamsError("out_rate_hz must be positive")
    if len(buffer) == 0:
        raise EmptySignalError("cannot resample an empty signal")
    if out_rate_hz == buffer.sample_rate_hz:
        return buffer
    ratio = Fraction(out_rate_hz, buffer.sample_rate_hz).limit_denominator(
        MAX_RATIO_DENOMINATOR
    )
    n_out = int(round(len(buffer) * out_rate_hz / buffer.sample_rate_hz))
    samples = _resample_by_ratio(
        buffer.samples, ratio.numerator, ratio.denominator, n_out
    )
    return AudioBuffer(samples, out_rate_hz)


def resample_by_factor(buffer: AudioBuffer, factor: float) -> AudioBuffer:
    """Resample by a real length factor, keeping the nominal rate label.

    The output has round(len * factor) samples and the same sample_rate_hz
    as the input; the waveform is band-limited interpolated as if the rate
    had changed by ``factor``.
    """
    if factor <= 0:
        raise BadParamsError("factor must be positive")
    if len(buffer) == 0:
        raise EmptySignalError("cannot resample an empty signal")
    ratio = Fraction(factor).limit_denominator(MAX_RATIO_DENOMINATOR)
    if ratio == 1:
        return buffer
    n_out = int(round(len(buffer) * factor))
    samples = _resample_by_ratio(
        buffer.samples, ratio.numerator, ratio.denominator, n_out
    )
    return AudioBuffer(samples, buffer.sample_rate_hz)


def mel_filterbank(
    n_mels: int, fft_size: int, sample_rate_hz: int, fmin_hz: float, fmax_hz: float
) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, fft_size // 2 + 1).

    Filter centers are equally spaced on the mel scale between fmin and
    fmax; each triangle is linear in Hz between its neighbors' centers.
    """
    n_bins = fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate_hz / fft_size
    mel_points = np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_mels + 2)
    hz_points = mel_to_hz(mel_points)

    weights = np.zeros((n_mels, n_bins), dtype=np.float64)
    for m in range(n_mels):
        lower, center, upper = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (bin_hz - lower) / max(center - lower, 1e-12)
        falling = (upper - bin_hz) / max(upper - center, 1e-12)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
    return weights


def _resolve_params(params: FeatureParams, rate: int) -> tuple[int, int, float]:
    win = int(round(params.window_s * rate))
    hop = int(round(params.hop_s * rate))
    if hop <= 0 or win < hop:
        raise BadParamsError("need window_s >= hop_s > 0")
    if params.fft_size < win:
        raise BadParamsError(
            f"fft_size {params.fft_size} smaller than window of {win} samples"
        )
    if params.n_mels < 1:
        raise BadParamsError("n_mels must be at least 1")
    fmax = params.fmax_hz if params.fmax_hz is not None else rate / 2
    if not 0 <= params.fmin_hz < fmax <= rate / 2:
        raise BadParamsError("need 0 <= fmin_hz < fmax_hz <= Nyquist")
    return win, hop, fmax


def compute_log_mel(
    buffer: AudioBuffer, params: FeatureParams = FeatureParams()
) -> MelSpectrogram:
    """Log mel spectrogram: Hann STFT -> power -> mel triangles -> dB.

    Produces 1 + (len - win) // hop frames; every cell is
    10 log10(filterbank energy) clamped below at ``floor_db``.
    """
    rate = buffer.sample_rate_hz
    win, hop, fmax = _resolve_params(params, rate)
    if len(buffer) < win:
        raise SignalTooShortError(
            f"signal of {len(buffer)} samples is shorter than one {win}-sample window"
        )

    n_frames = 1 + (len(buffer) - win) // hop
    frames = np.lib.stride_tricks.sliding_window_view(buffer.samples, win)[::hop]
    frames = frames[:n_frames]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(win) / win)  # periodic Hann
    spectrum = np.fft.rfft(frames * window, n=params.fft_size, axis=1)
    power = spectrum.real**2 + spectrum.imag**2

    weights = mel_filterbank(params.n_mels, params.fft_size, rate, params.fmin_hz, fmax)
    energy = power @ weights.T
    with np.errstate(divide="ignore"):
        values = 10.0 * np.log10(energy)
    values = np.maximum(values, params.floor_db)

    return MelSpectrogram(
        values=values,
        frame_hop_s=hop / rate,
        window_s=win / rate,
        sample_rate_hz=rate,
        fmin_hz=params.fmin_hz,
        fmax_hz=fmax,
        floor_db=params.floor_db,
    )


def spectrogram_dump_bytes(spec: MelSpectrogram) -> bytes:
    """Serialize the grid: 16-byte header then f32 LE values, frame-major."""
    header = _DUMP_HEADER.pack(DUMP_MAGIC, spec.n_frames, spec.n_mels)
    return header + spec.values.astype("<f4").tobytes()


def write_spectrogram_dump(spec: MelSpectrogram, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(spectrogram_dump_bytes(spec))


def read_spectrogram_dump(path: str | Path) -> MelSpectrogram:
    """Load a feature dump.

    The dump stores only the grid geometry and values; the returned
    spectrogram carries the default front-end metadata.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _DUMP_HEADER.size:
        raise MalformedDumpError("dump shorter than its header")
    magic, n_frames, n_mels = _DUMP_HEADER.unpack_from(data, 0)
    if magic != DUMP_MAGIC:
        raise MalformedDumpError("bad dump magic")
    expected = _DUMP_HEADER.size + 4 * n_frames * n_mels
    if len(data) != expected:
        raise MalformedDumpError(
            f"dump holds {len(data)} bytes, expected {expected} for "
            f"{n_frames}x{n_mels} cells"
        )
    values = np.frombuffer(data, dtype="<f4", offset=_DUMP_HEADER.size)
    values = values.astype(np.float64).reshape(n_frames, n_mels)
    defaults = FeatureParams()
    return MelSpectrogram(
        values=values,
        frame_hop_s=defaults.hop_s,
        window_s=defaults.window_s,
        sample_rate_hz=16000,
        fmin_hz=defaults.fmin_hz,
        fmax_hz=8000.0,
        floor_db=defaults.floor_db,
    )


def spectrogram_with_values(spec: MelSpectrogram, values: np.ndarray) -> MelSpectrogram:
    """Copy of ``spec`` with a replaced grid (metadata preserved)."""
    return replace(spec, values=values)
