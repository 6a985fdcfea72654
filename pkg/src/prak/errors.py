"""Exception types shared across the toolkit.

Everything user-facing raises a PrakError subclass; the CLI maps those to
exit code 1 (bad input / processing failure) while reserving 2 for usage
and configuration mistakes.
"""


class PrakError(Exception):
    """Base class for all errors raised on purpose by this package."""


class PhoneError(PrakError):
    """Unknown phone code or a broken inventory table."""


class TextError(PrakError):
    """Transcript bytes that cannot be turned into clean word tokens."""


class G2pError(PrakError):
    """Letter sequences the pronunciation rules cannot handle."""


class AudioError(PrakError):
    """Unreadable or unusable audio input."""


class ModelError(PrakError):
    """Acoustic model files that do not match what the code expects."""


class DecodeError(PrakError):
    """Alignment graph and audio that cannot be brought together."""


class TextGridError(PrakError):
    """Malformed TextGrid files or non-tiling annotation input."""


class ConfigError(PrakError):
    """Bad configuration files or option values."""


class ManifestError(ConfigError):
    """Corpus manifests that cannot be ingested.

    A subclass of ConfigError: pointing the trainer at a wrong or empty
    corpus is a usage mistake, so the CLI reports it as one.
    """
