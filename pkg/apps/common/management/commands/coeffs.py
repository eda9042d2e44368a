from apps.algebra.services import CoefficientService
from apps.common.commands import LabCommand
from apps.common.serializers import CoeffsConfigSerializer


class Command(LabCommand):
    help = 'Error coefficients of a scheme in the seven-stage frame'
    config_serializer_class = CoeffsConfigSerializer

    def add_lab_arguments(self, parser):
        self.add_option(parser, '--scheme', type=str, help='builtin:NAME(k=v,...) or file:PATH')

    def compute(self, config):
        service = CoefficientService()
        scheme = config['scheme']
        frame = service.frame_from_scheme(scheme)
        coefficients = service.raw_error_coefficients(frame)

        rows = [(f'frame_{name}', value) for name, value in frame.as_dict().items()]
        rows += list(coefficients.as_dict().items())
        rows += [
            ('fourth_order', service.is_fourth_order(coefficients)),
            ('correctable_second_order', service.is_correctable_second_order(coefficients)),
            ('correctable_fourth_order', service.is_correctable_fourth_order(coefficients)),
        ]
        return ('name', 'value'), rows
