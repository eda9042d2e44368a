from apps.common.commands import LabCommand
from apps.common.serializers import FigureConfigSerializer
from apps.kepler.services import KeplerService
from apps.splitting.services import SchemeFactory
from apps.sweeps.services import SweepService
from .scan import SCAN_COLUMNS, scan_rows

FORWARD_INTERVAL = (0.0, 0.21)
DEFAULT_ECCENTRICITIES = tuple(round(0.90 + 0.005 * k, 3) for k in range(11))

# figure number -> (curve kind, p_y of the orbit, built-in schemes)
CURVE_FIGURES = {
    3: ('energy', 0.1, ('C',)),
    4: ('angle', 0.1, ('C',)),
    5: ('angle', 0.08, ('C', 'Opt-C')),
}
SWEEP_FIGURES = {
    6: ('C',),
    7: ('C', 'Opt-C'),
}


class Command(LabCommand):
    help = 'Datasets behind figures 1-7 as CSV'
    config_serializer_class = FigureConfigSerializer

    def add_lab_arguments(self, parser):
        self.add_option(parser, 'number', type=int, nargs='?', help='Figure number 1-7')
        self.add_option(parser, '--points', type=int, help='Grid points of figures 1 and 2')
        self.add_option(parser, '--scheme', dest='schemes', action='append',
                        help='Extra scheme selector for figures 3-7 (repeatable)')
        self.add_option(parser, '--eccentricities', type=float, nargs='+', help='Eccentricities of figures 6 and 7')

    def compute(self, config):
        number = config['number']
        if number in (1, 2):
            sweeps = SweepService(threads=config['threads'], precision=config['precision'])
            if number == 1:
                result = sweeps.scan_freq6(FORWARD_INTERVAL, config['points'])
            else:
                result = sweeps.scan_energy10(FORWARD_INTERVAL, config['points'])
            return SCAN_COLUMNS, scan_rows(result)

        kepler = KeplerService(threads=config['threads'])
        factory = SchemeFactory()
        if number in CURVE_FIGURES:
            kind, py, names = CURVE_FIGURES[number]
            schemes = [factory.from_builtin(name) for name in names] + list(config['schemes'])
            return self._curves(kepler, schemes, kind, py)

        schemes = [factory.from_builtin(name) for name in SWEEP_FIGURES[number]] + list(config['schemes'])
        eccentricities = config.get('eccentricities') or DEFAULT_ECCENTRICITIES
        columns = [kepler.eccentricity_sweep(scheme, eccentricities) for scheme in schemes]
        header = ['e'] + [f'theta4[{scheme.name}]' for scheme in schemes]
        rows = [
            [eccentricity] + [column[index].theta4_at_period for column in columns]
            for index, eccentricity in enumerate(eccentricities)
        ]
        return header, rows

    @staticmethod
    def _curves(kepler, schemes, kind, py):
        spec = kepler.orbit_from_py(py)
        series = [kepler.limit_curve(scheme, spec, kind=kind) for scheme in schemes]
        label = 'h4' if kind == 'energy' else 'theta4'
        header = ['t_over_T'] + [f'{label}[{scheme.name}]' for scheme in schemes]
        phases = series[0].phases(spec.period)
        values = [curve.h4 if kind == 'energy' else curve.theta4 for curve in series]
        rows = [[phase] + [column[index] for column in values] for index, phase in enumerate(phases)]
        return header, rows
