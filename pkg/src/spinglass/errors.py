"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SpinGlassError(Exception):
    exit_code = 1


class ConfigurationError(SpinGlassError, ValueError):
    """Inconsistent dimensions or invalid run configuration."""

    exit_code = 2


class DomainError(SpinGlassError, ValueError):
    """A parameter lies outside the domain of an operation."""

    exit_code = 5


class CapacityError(SpinGlassError):
    """Exact enumeration requested above the configured site cap."""

    exit_code = 4


class DisorderError(SpinGlassError):
    """Disorder produced a non-finite energy."""

    exit_code = 5


class PreconditionError(SpinGlassError):
    exit_code = 5


class SchemaError(SpinGlassError):
    exit_code = 3


class PartialResultError(SpinGlassError):
    """Some disorder realizations failed; ``failed`` lists their indices."""

    exit_code = 1

    def __init__(self, failed, errors=None):
        self.failed = sorted(failed)
        self.errors = errors or {}
        super().__init__(f"realizations failed: {self.failed}")


class OutputError(SpinGlassError, OSError):
    """Reading or writing a result file failed."""

    exit_code = 3
