"""Exception types shared across the toolkit."""


class SpeechAugError(Exception):
    """Base class for all toolkit errors."""


class MalformedWavError(SpeechAugError):
    """The bytes are not a structurally valid RIFF/WAVE file."""


class UnsupportedFormatError(SpeechAugError):
    """The WAV file is valid but not mono 16-bit PCM."""


class ManifestParseError(SpeechAugError):
    """A manifest or hypothesis JSONL file could not be parsed."""


class MalformedDumpError(SpeechAugError):
    """A spectrogram dump file does not match its declared layout."""


class EmptySignalError(SpeechAugError):
    """An operation that needs at least one sample got an empty signal."""


class SilentSignalError(SpeechAugError):
    """Signal RMS is zero, so an SNR-relative quantity is undefined."""


class SignalTooShortError(SpeechAugError):
    """The signal is shorter than one analysis window."""


class BadParamsError(SpeechAugError):
    """Parameter values violate their documented constraints."""


class EmptyCorpusError(SpeechAugError):
    """Corpus-level scoring was asked to aggregate zero utterances."""


class MissingHypothesisError(SpeechAugError):
    """Reference and hypothesis utterance ids do not match up."""

    def __init__(self, utterance_id: str, message: str | None = None):
        self.utterance_id = utterance_id
        super().__init__(message or f"no hypothesis for utterance id {utterance_id!r}")


class ConfigError(SpeechAugError):
    """A config file is syntactically or semantically invalid."""
