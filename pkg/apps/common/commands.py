"""
Base class of the laboratory subcommands: config collection, validation,
CSV output with a reproducibility stamp, and error translation.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from django.core.management.base import BaseCommand
from rest_framework import serializers

import symplectic_lab
from .exception_handler import command_error_from_exception
from .exceptions import ConfigurationError, SymplecticLabError

logger = logging.getLogger('apps.common')

STAMP_PREFIX = '# symplectic-lab'


def format_cell(value: Any) -> str:
    """17 significant digits for floats, '.' decimal separator, no locale."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return '%.17g' % value
    return str(value)


class LabCommand(BaseCommand):
    """
    Subclasses declare `config_serializer_class`, add their own flags in
    `add_lab_arguments` and return (header, rows) from `compute`.
    """
    config_serializer_class = None
    requires_system_checks = []

    def add_arguments(self, parser):
        self._config_keys: List[str] = []
        self.add_option(parser, '--out', type=str, help='Write the CSV to PATH instead of stdout')
        self.add_option(parser, '--precision', type=int, help='Extended-precision digits')
        self.add_option(parser, '--threads', type=int, help='Worker threads for grids and sweeps')
        parser.add_argument('--config', type=str, default=None,
                            help='JSON file holding the same keys as the flags')
        self.add_lab_arguments(parser)

    def add_lab_arguments(self, parser):
        pass

    def add_option(self, parser, *flags, **kwargs):
        kwargs.setdefault('default', None)
        action = parser.add_argument(*flags, **kwargs)
        self._config_keys.append(action.dest)
        return action

    def compute(self, config: Dict[str, Any]):
        raise NotImplementedError

    @property
    def command_name(self) -> str:
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def handle(self, *args, **options):
        try:
            raw = self.collect_config(options)
            serializer = self.config_serializer_class(data=raw)
            serializer.is_valid(raise_exception=True)
            config = serializer.validated_data
            header, rows = self.compute(config)
            self.write_csv(raw, header, rows, config.get('out'))
        except (SymplecticLabError, serializers.ValidationError) as exc:
            raise command_error_from_exception(exc, self.command_name)

    def collect_config(self, options: Dict[str, Any]) -> Dict[str, Any]:
        raw: Dict[str, Any] = {}
        if options.get('config'):
            path = Path(options['config'])
            try:
                raw = json.loads(path.read_text(encoding='utf-8'))
            except (OSError, ValueError) as exc:
                raise ConfigurationError(f"Cannot read config file {path}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigurationError(f"Config file {path} must hold a JSON object")
        for key in self._config_keys:
            if options.get(key) is not None:
                raw[key] = options[key]
        return raw

    def write_csv(self, raw_config: Dict[str, Any], header: Sequence[str], rows: Iterable[Sequence[Any]],
                  out: str = None) -> None:
        stamp_config = dict(raw_config, subcommand=self.command_name)
        stamp = f"{STAMP_PREFIX} {symplectic_lab.__version__} config={json.dumps(stamp_config, sort_keys=True)}"
        lines = [[format_cell(cell) for cell in row] for row in rows]

        if out:
            with open(out, 'w', encoding='utf-8', newline='') as stream:
                self._emit(stream, stamp, header, lines)
            logger.info(f"{self.command_name}: wrote {len(lines)} rows to {out}",
                        extra={'command': self.command_name, 'rows': len(lines), 'path': out})
        else:
            self._emit(self.stdout, stamp, header, lines)

    @staticmethod
    def _emit(stream, stamp, header, lines):
        stream.write(stamp + '\n')
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(lines)
