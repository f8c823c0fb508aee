"""Exception hierarchy shared by every ztcm module."""

from __future__ import annotations


class ZtcmError(Exception):
    """Base class for all errors raised by ztcm."""

    exit_code = 1


class ConfigError(ZtcmError):
    """Invalid or incomplete run configuration (missing files, bad values)."""

    exit_code = 1


class DataValidationError(ZtcmError):
    """Input data violates a structural rule (bad header, duplicate id, ...)."""

    exit_code = 2


class NumericalError(ZtcmError):
    """A computation cannot proceed, e.g. a rank-deficient design."""

    exit_code = 3


class RankDeficiencyError(NumericalError):
    def __init__(self, columns: list[str], message: str | None = None):
        self.columns = list(columns)
        super().__init__(message or f"design matrix is rank deficient; dependent column(s): {', '.join(self.columns)}")
