import numpy as np
import pytest

from speechaug.audio_io import AudioBuffer
from speechaug.rng import Xoshiro256StarStar


def make_tone(freq_hz: float, rate: int = 16000, seconds: float = 1.0,
              amplitude: float = 0.5) -> AudioBuffer:
    t = np.arange(int(rate * seconds)) / rate
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), rate)


def make_speech_like(seed: int, rate: int = 16000, seconds: float = 1.0) -> AudioBuffer:
    """Multi-tone signal with a slow envelope; loosely speech-shaped."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(rate * seconds)) / rate
    x = np.zeros_like(t)
    for freq, amp in ((160, 0.30), (420, 0.22), (950, 0.15), (2200, 0.08)):
        x += amp * np.sin(2 * np.pi * (freq + rng.uniform(-20, 20)) * t
                          + rng.uniform(0, 2 * np.pi))
    envelope = 0.55 + 0.45 * np.sin(2 * np.pi * rng.uniform(1.5, 4.0) * t)
    x = x * envelope + 0.002 * rng.standard_normal(t.size)
    x = 0.6 * x / np.max(np.abs(x))
    return AudioBuffer(x, rate)


def dominant_hz(samples: np.ndarray, rate: int) -> tuple[float, float]:
    """(dominant frequency, bin width) of a windowed DFT of the signal."""
    window = np.hanning(len(samples))
    spectrum = np.abs(np.fft.rfft(samples * window))
    return float(np.argmax(spectrum) * rate / len(samples)), rate / len(samples)


def derive_mask_plan(spec, n_frames: int, n_mels: int):
    """Replay a SpecAugmentSpec's draw stream to predict warp and mask bands."""
    rng = Xoshiro256StarStar(spec.seed)
    warp = None
    if spec.time_warp_w > 0 and n_frames > 2 * spec.time_warp_w:
        center = spec.time_warp_w + rng.rand_below(n_frames - 2 * spec.time_warp_w)
        shift = rng.rand_below(2 * spec.time_warp_w + 1) - spec.time_warp_w
        warp = (center, shift)
    freq_bands = []
    for _ in range(spec.n_freq_masks):
        extent = rng.rand_below(min(spec.freq_mask_f, n_mels) + 1)
        start = rng.rand_below(n_mels - extent + 1)
        freq_bands.append((start, extent))
    time_bands = []
    for _ in range(spec.n_time_masks):
        extent = rng.rand_below(min(spec.time_mask_t, n_frames) + 1)
        start = rng.rand_below(n_frames - extent + 1)
        time_bands.append((start, extent))
    return warp, freq_bands, time_bands


@pytest.fixture
def tone440():
    return make_tone(440.0)


# --- acceptance reporting -------------------------------------------------
# Collect one outcome per test in tests/test_acceptance.py and echo a
# PASS/FAIL line per criterion at the end of the run.

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.outcome == "passed" else "FAIL"
        if _acceptance_results.get(name) != "FAIL":
            _acceptance_results[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_results):
        terminalreporter.write_line(f"{_acceptance_results[name]}  {name}")
