from apps.common.commands import LabCommand
from apps.common.serializers import ScanConfigSerializer
from apps.kepler.services import KeplerService
from apps.sweeps.services import SweepService

SCAN_COLUMNS = ('kind', 't0', 'alpha', 'value', 'status')


def scan_rows(result):
    """Grid rows first, then one row per located extremum."""
    rows = [('grid', point.t0, point.alpha, point.value, point.status) for point in result.points]
    rows += [(extremum.kind, extremum.location, None, extremum.value, None) for extremum in result.extrema]
    return rows


class Command(LabCommand):
    help = 'Scan the 4ACB family over t0: freq6, energy10 or kepler-precession'
    config_serializer_class = ScanConfigSerializer

    def add_lab_arguments(self, parser):
        self.add_option(parser, '--objective', type=str, help='freq6 | energy10 | kepler-precession')
        self.add_option(parser, '--interval', type=float, nargs=2, metavar=('LOW', 'HIGH'))
        self.add_option(parser, '--points', type=int)
        self.add_option(parser, '--omega', type=float)
        self.add_option(parser, '--q0', type=float)
        self.add_option(parser, '--p0', type=float)
        self.add_option(parser, '--alpha', type=float, help='Fixed alpha of the Kepler objective')
        self.add_option(parser, '--e', type=float)
        self.add_option(parser, '--py', type=float)

    def compute(self, config):
        service = SweepService(threads=config['threads'], precision=config['precision'])
        objective, interval, points = config['objective'], config['interval'], config['points']
        if objective == 'freq6':
            result = service.scan_freq6(interval, points, omega=config['omega'])
        elif objective == 'energy10':
            result = service.scan_energy10(interval, points, q0=config['q0'], p0=config['p0'], omega=config['omega'])
        else:
            kepler = KeplerService()
            spec = (kepler.orbit_from_eccentricity(config['e']) if config['e'] is not None
                    else kepler.orbit_from_py(config['py']))
            result = service.scan_kepler(interval, points, config['alpha'], spec)
        return SCAN_COLUMNS, scan_rows(result)
