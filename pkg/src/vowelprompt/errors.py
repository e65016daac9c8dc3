"""Exception types shared across the pipeline."""

from __future__ import annotations


class VowelPromptError(Exception):
    """Base class for all pipeline errors."""


class AudioFormatError(VowelPromptError):
    """Raised when a WAV file cannot be decoded; message names the failing chunk."""


class TextGridParseError(VowelPromptError):
    """Raised on malformed TextGrid input, carrying the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructuralError(VowelPromptError):
    """Raised when a parsed document violates the alignment contract (missing tier, overlapping phones)."""


class ManifestError(VowelPromptError):
    """Raised on invalid corpus manifest records."""


class ConfigError(VowelPromptError):
    """Raised on invalid configuration or CLI arguments."""


class CoverageError(VowelPromptError):
    """Raised when a vowel segment lies outside the computed contour coverage."""


class GatewayError(VowelPromptError):
    """Raised on chat-completion failures, carrying the HTTP status when there is one."""

    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(message)
