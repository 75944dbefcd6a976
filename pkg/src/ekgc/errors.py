"""Exception types shared across the package."""


class EkgcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(EkgcError):
    """A text input file is malformed (bad field count, bad encoding, ...)."""


class FormatError(EkgcError):
    """A binary artifact has a bad magic, version, or is truncated."""


class ValidationError(EkgcError):
    """Data violates a documented invariant (NaN entries, shape mismatch, ...)."""


class ConfigError(EkgcError):
    """A configuration file or value is invalid."""


class OverwriteError(EkgcError):
    """Refusing to clobber an existing output without --force."""
