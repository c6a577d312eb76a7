from django.core.management.base import CommandError
from rest_framework.exceptions import ValidationError

from .exceptions import NumericalError

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _flatten(detail, prefix=""):
    if isinstance(detail, dict):
        for key, value in detail.items():
            name = "" if key == "non_field_errors" else f"{key}: "
            yield from _flatten(value, name)
    elif isinstance(detail, (list, tuple)):
        for value in detail:
            yield from _flatten(value, prefix)
    else:
        yield f"{prefix}{detail}"


def custom_exception_handler(exc, context):
    """Map an exception raised by a command to a CommandError with its exit code.

    Returns None for exceptions that are bugs rather than user-facing failures.
    """
    command = context.get("command", "")
    if isinstance(exc, ValidationError):
        return CommandError("; ".join(_flatten(exc.detail)), returncode=EXIT_VALIDATION)

    if isinstance(exc, ValueError):
        return CommandError(str(exc), returncode=EXIT_VALIDATION)

    if isinstance(exc, ArithmeticError):
        kind = "numerical error" if isinstance(exc, NumericalError) else "runtime error"
        return CommandError(f"{command}: {kind}: {exc}", returncode=EXIT_NUMERICAL)

    if isinstance(exc, OSError):
        path = exc.filename or context.get("path", "")
        reason = exc.strerror or str(exc)
        return CommandError(f"{path}: {reason}", returncode=EXIT_IO)

    return None
