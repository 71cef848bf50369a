"""Exception types shared across the rustforge package.

Plain argument violations raise the builtin ``ValueError``, index problems in
parsed files raise the builtin ``IndexError``, and filesystem failures surface
as ``OSError``; everything domain-specific lives in the hierarchy below.
"""


class ForgeError(Exception):
    """Base class for all rustforge-specific errors."""


class ParseError(ForgeError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingUvError(ParseError):
    """A face corner has no texture-coordinate index."""


class EmptyMeshError(ForgeError):
    """Operation requires at least one vertex position."""


class FormatError(ForgeError):
    """Unsupported or corrupt raster file content."""


class SceneError(ForgeError):
    """Scene references cannot be resolved or are inconsistent."""


class ConfigError(ForgeError):
    """Invalid or contradictory pipeline configuration."""


class GenerationError(ForgeError):
    """Dataset generation could not produce a valid sample."""
