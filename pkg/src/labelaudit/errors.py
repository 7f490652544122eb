"""Exception types shared across the package."""


class LabelAuditError(Exception):
    """Base class for every error raised by labelaudit."""


class ConfigError(LabelAuditError):
    """Invalid parameter or parameter combination (CLI exit code 1)."""


class DataError(LabelAuditError):
    """Malformed, inconsistent, or unparseable input data (CLI exit code 2)."""
