"""
Translates laboratory errors into management-command failures with exit codes.
"""

import logging

from django.core.management.base import CommandError
from rest_framework import serializers

from .exceptions import SymplecticLabError, USAGE_EXIT_CODE

logger = logging.getLogger('apps.common')


def flatten_validation_detail(detail):
    """Render a DRF error detail (dict/list/str) as one line."""
    if isinstance(detail, dict):
        parts = []
        for field, value in detail.items():
            parts.append(f"{field}: {flatten_validation_detail(value)}")
        return '; '.join(parts)
    if isinstance(detail, (list, tuple)):
        return '; '.join(flatten_validation_detail(item) for item in detail)
    return str(detail)


def command_error_from_exception(exc, command_name):
    """
    Map an exception raised inside a subcommand to a CommandError.

    Laboratory errors keep their error code and exit code; DRF validation
    errors are usage errors (exit 2).
    """
    if isinstance(exc, SymplecticLabError):
        logger.error(
            f"{command_name} failed: {exc.error_code}",
            extra={
                'error_code': exc.error_code,
                'error_message': str(exc.message),
                'command': command_name,
                **{f'ctx_{key}': value for key, value in exc.context.items()},
            }
        )
        return CommandError(f"{exc.error_code}: {exc.message}", returncode=exc.exit_code)

    if isinstance(exc, serializers.ValidationError):
        message = flatten_validation_detail(exc.detail)
        logger.error(
            f"{command_name} rejected its configuration",
            extra={'error_code': 'USAGE_ERROR', 'error_message': message, 'command': command_name}
        )
        return CommandError(f"USAGE_ERROR: {message}", returncode=USAGE_EXIT_CODE)

    raise exc
