from typing import Optional


class FlocError(Exception):
    """Base class for every failure-localization error."""


class TopologyError(FlocError, ValueError):
    pass


class TopologyFormatError(TopologyError):
    """A topology, monitor or path file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


class PathSetError(TopologyFormatError):
    pass


class AnalysisError(FlocError, ValueError):
    pass


class GenerationError(FlocError, RuntimeError):
    pass


class CalibrationError(FlocError, ValueError):
    pass


class BudgetExceededError(FlocError, RuntimeError):
    pass


class ConfigError(FlocError, ValueError):
    pass


EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    return EXIT_RUNTIME
