"""Shared exception types for binary file formats (checkpoints, mask sets)."""


class FileFormatError(ValueError):
    """Base class for malformed binary artifact files."""


class BadMagicError(FileFormatError):
    """File does not start with the expected magic bytes."""


class FormatVersionError(FileFormatError):
    """File carries an unsupported format version."""


class PayloadLengthError(FileFormatError):
    """File payload is shorter or longer than the header promises."""
