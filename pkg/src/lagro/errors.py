# -*- coding: utf-8 -*-
import functools
import logging
import traceback
from typing import Any, Callable, Dict, Iterable, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_CONDITION_VIOLATION = 3
EXIT_LIMIT = 4
EXIT_ROBUST_INFEASIBLE = 5
EXIT_BOUND_TOO_SMALL = 6


class LagroError(Exception):
    """Base class for every error raised on purpose by the toolkit."""

    exit_code = EXIT_UNEXPECTED


class InputError(LagroError):
    exit_code = EXIT_INPUT


class DomainError(InputError):
    """An argument lies outside the domain of the evaluated function (λ < 0, ξ not binary, ...)."""


class InstanceFormatError(InputError):
    pass


class ConditionViolationError(LagroError):
    exit_code = EXIT_CONDITION_VIOLATION

    def __init__(self, message: str, failed: Optional[Iterable[str]] = None):
        super().__init__(message)
        self.failed = list(failed or [])


class InfeasibleDecisionError(LagroError):
    exit_code = EXIT_ROBUST_INFEASIBLE


class LimitExceededError(LagroError):
    exit_code = EXIT_LIMIT

    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        self.state = dict(state or {})
        if self.state:
            dump = ", ".join(f"{key}={value}" for key, value in self.state.items())
            message = f"{message} [state: {dump}]"
        super().__init__(message)


class BoundTooSmallError(LagroError):
    exit_code = EXIT_BOUND_TOO_SMALL


def handle_cli_errors(func: Callable[..., int]) -> Callable[..., int]:
    """Map exceptions escaping a command handler to process exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except LagroError as error:
            logger.error("%s: %s", type(error).__name__, error)
            return error.exit_code
        except FileNotFoundError as error:
            logger.error("File not found: %s", error)
            return EXIT_INPUT
        except Exception as error:
            logger.error("Unhandled exception: %s\n%s", error, traceback.format_exc())
            return EXIT_UNEXPECTED

    return wrapper
