from apps.common.commands import LabCommand
from apps.common.serializers import SchemesConfigSerializer
from apps.splitting.repositories import SchemeRepository


class Command(LabCommand):
    help = 'List the built-in schemes with their parameters and provenance'
    config_serializer_class = SchemesConfigSerializer

    def compute(self, config):
        rows = []
        for entry in SchemeRepository().builtin_table():
            params = ';'.join(
                f"{key}={'required' if value is None else repr(value)}" for key, value in entry['params'].items()
            )
            rows.append((entry['name'], entry['family'], params, entry['provenance']))
        return ('name', 'family', 'params', 'provenance'), rows
