from typing import Any


class DataShareError(Exception):
    """
    Base error of the package. Mirrors an HTTP exception: a human readable
    detail plus a status-like code, here the CLI exit code.
    """

    exit_code: int = 3

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class InvalidInputError(DataShareError):
    exit_code = 2


class ConfigurationError(DataShareError):
    exit_code = 2


class UnsupportedVariantError(DataShareError):
    exit_code = 2


class SizeLimitError(DataShareError):
    exit_code = 2


class DomainError(DataShareError):
    exit_code = 2


class ParameterError(DataShareError):
    exit_code = 2


class SimulationTimeoutError(DataShareError):
    exit_code = 3

    def __init__(self, detail: str, transcript: Any = None):
        super().__init__(detail)
        self.transcript = transcript


class ProtocolAbort(DataShareError):
    """A protocol run stopped early; the verdict, not the process, failed."""

    exit_code = 1
