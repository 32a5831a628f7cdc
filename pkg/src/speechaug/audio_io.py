"""WAV file parsing/writing and corpus manifest handling.

The WAV surface is deliberately narrow: RIFF/WAVE containers holding mono
16-bit little-endian PCM, nothing else.  The parser is total over arbitrary
bytes: any input either yields an ``AudioBuffer`` or raises a structured
``MalformedWavError`` / ``UnsupportedFormatError``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestParseError, MalformedWavError, UnsupportedFormatError

TOKEN_KINDS = ("word", "phoneme")

_RIFF_HEADER = struct.Struct("<4sI4s")
_CHUNK_HEADER = struct.Struct("<4sI")
_FMT_BODY = struct.Struct("<HHIIHH")


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """A mono waveform: float64 samples in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)  # own copy, frozen below
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class UtteranceRecord:
    """One manifest entry: id, audio location, and reference transcript."""

    id: str
    audio_path: Path
    transcript: tuple[str, ...]
    token_kind: str
    duration_s: float | None = field(default=None)

    def __post_init__(self):
        if not self.id:
            raise ValueError("utterance id must be nonempty")
        if self.token_kind not in TOKEN_KINDS:
            raise ValueError(f"token_kind must be one of {TOKEN_KINDS}")


def parse_wav_bytes(data: bytes) -> AudioBuffer:
    """Decode a WAV byte string into an AudioBuffer.

    Accepts any chunk layout as long as one ``fmt `` and one ``data`` chunk
    are present and well-formed; unknown chunks are skipped.

    Raises:
        MalformedWavError: broken container structure.
        UnsupportedFormatError: valid container but not mono PCM16.
    """
    if len(data) < 12:
        raise MalformedWavError("file shorter than a RIFF header")
    magic, _, wave_id = _RIFF_HEADER.unpack_from(data, 0)
    if magic != b"RIFF" or wave_id != b"WAVE":
        raise MalformedWavError("not a RIFF/WAVE container")

    fmt_body = None
    data_body = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id, size = _CHUNK_HEADER.unpack_from(data, offset)
        offset += 8
        if size > len(data) - offset:
            raise MalformedWavError(
                f"chunk {chunk_id!r} claims {size} bytes but only "
                f"{len(data) - offset} remain"
            )
        body = data[offset:offset + size]
        if chunk_id == b"fmt " and fmt_body is None:
            fmt_body = body
        elif chunk_id == b"data" and data_body is None:
            data_body = body
        offset += size + (size & 1)  # chunks are word-aligned

    if fmt_body is None:
        raise MalformedWavError("missing fmt chunk")
    if data_body is None:
        raise MalformedWavError("missing data chunk")
    if len(fmt_body) < _FMT_BODY.size:
        raise MalformedWavError("fmt chunk shorter than 16 bytes")

    audio_format, channels, rate, _, _, bits = _FMT_BODY.unpack_from(fmt_body, 0)
    if audio_format != 1:
        raise UnsupportedFormatError(f"audio format code {audio_format}, want PCM (1)")
    if channels != 1:
        raise UnsupportedFormatError(f"{channels} channels, want mono")
    if bits != 16:
        raise UnsupportedFormatError(f"{bits}-bit samples, want 16")
    if rate == 0:
        raise MalformedWavError("sample rate is zero")
    if len(data_body) % 2:
        raise MalformedWavError("data chunk length is odd for 16-bit samples")

    raw = np.frombuffer(data_body, dtype="<i2")
    return AudioBuffer(raw.astype(np.float64) / 32768.0, rate)


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a mono PCM16 WAV file. See ``parse_wav_bytes`` for errors."""
    with open(path, "rb") as fh:
        return parse_wav_bytes(fh.read())


def wav_bytes(buffer: AudioBuffer) -> bytes:
    """Encode an AudioBuffer as a canonical 44-byte-header WAV byte string.

    Amplitudes quantize by round(x * 32768) saturated to [-32768, 32767],
    which keeps the read-back error within 1/32768 per sample.
    """
    quantized = np.clip(np.rint(buffer.samples * 32768.0), -32768, 32767)
    pcm = quantized.astype("<i2").tobytes()
    rate = buffer.sample_rate_hz
    header = _RIFF_HEADER.pack(b"RIFF", 36 + len(pcm), b"WAVE")
    fmt = _CHUNK_HEADER.pack(b"fmt ", 16) + _FMT_BODY.pack(1, 1, rate, rate * 2, 2, 16)
    return header + fmt + _CHUNK_HEADER.pack(b"data", len(pcm)) + pcm


def write_wav(buffer: AudioBuffer, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(wav_bytes(buffer))


def _record_from_line(obj: dict, lineno: int) -> UtteranceRecord:
    for key in ("id", "audio", "text", "kind"):
        if key not in obj:
            raise ManifestParseError(f"line {lineno}: missing field {key!r}")
    kind = obj["kind"]
    if kind not in TOKEN_KINDS:
        raise ManifestParseError(
            f"line {lineno}: kind must be one of {TOKEN_KINDS}, got {kind!r}"
        )
    duration = obj.get("duration_s")
    if duration is not None:
        if not isinstance(duration, (int, float)) or duration < 0:
            raise ManifestParseError(f"line {lineno}: duration_s must be >= 0")
        duration = float(duration)
    try:
        return UtteranceRecord(
            id=str(obj["id"]),
            audio_path=Path(obj["audio"]),
            transcript=tuple(str(obj["text"]).split()),
            token_kind=kind,
            duration_s=duration,
        )
    except ValueError as exc:
        raise ManifestParseError(f"line {lineno}: {exc}") from exc


def load_manifest(path: str | Path) -> list[UtteranceRecord]:
    """Load a JSONL manifest, preserving line order.

    Each nonempty line is an object with fields ``id``, ``audio``, ``text``,
    ``kind`` and optional ``duration_s``.  Transcripts are tokenized on runs
    of whitespace.  Duplicate ids and mixed token kinds are rejected.
    Relative audio paths resolve against the manifest's directory.
    """
    base = Path(path).parent
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    kind_seen: str | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestParseError(f"line {lineno}: expected a JSON object")
            record = _record_from_line(obj, lineno)
            if not record.audio_path.is_absolute():
                record = UtteranceRecord(
                    record.id, base / record.audio_path, record.transcript,
                    record.token_kind, record.duration_s,
                )
            if record.id in seen:
                raise ManifestParseError(f"line {lineno}: duplicate id {record.id!r}")
            if kind_seen is None:
                kind_seen = record.token_kind
            elif record.token_kind != kind_seen:
                raise ManifestParseError(
                    f"line {lineno}: token kind {record.token_kind!r} mixes with "
                    f"{kind_seen!r}; a manifest must use a single kind"
                )
            seen.add(record.id)
            records.append(record)
    return records


def manifest_line(record: UtteranceRecord) -> str:
    obj = {
        "id": record.id,
        "audio": str(record.audio_path),
        "text": " ".join(record.transcript),
        "kind": record.token_kind,
    }
    if record.duration_s is not None:
        obj["duration_s"] = round(record.duration_s, 6)
    return json.dumps(obj, sort_keys=False)


def save_manifest(records: list[UtteranceRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(manifest_line(record) + "\n")
