"""Exception types shared across the package."""


class FaqGateError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FaqGateError):
    """Input fails a documented precondition (bad value, bad file line)."""


class DegenerateInputError(ValidationError):
    """Input is structurally unusable: empty text, zero vector, single-class scores."""


class ContractViolationError(FaqGateError):
    """Two components disagree on an interface contract (dimension, lengths)."""


class ConfigurationError(FaqGateError):
    """Configuration refuses to serve: unfrozen threshold, fingerprint mismatch, bad pattern."""


class IngestError(ValidationError):
    """A corpus file is malformed; message carries the offending line number."""


class CacheMissError(FaqGateError):
    """A file-cache provider has no vector for the requested text."""

    def __init__(self, text_sha256: str):
        super().__init__(f"embedding cache miss for text sha256={text_sha256}")
        self.text_sha256 = text_sha256


class TransportError(FaqGateError):
    """An external HTTP backend is unreachable or replied with garbage."""


class BackendUnavailableError(TransportError):
    """The small-talk generation backend failed; callers fall back to a static reply."""
