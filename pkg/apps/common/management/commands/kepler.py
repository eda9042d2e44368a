from apps.common.commands import LabCommand
from apps.common.serializers import KeplerConfigSerializer
from apps.kepler.services import KeplerService


class Command(LabCommand):
    help = 'One-period Kepler diagnostics: H4(t), theta4(t), precession or shadow drift'
    config_serializer_class = KeplerConfigSerializer

    def add_lab_arguments(self, parser):
        self.add_option(parser, '--scheme', type=str, help='builtin:NAME(k=v,...) or file:PATH')
        self.add_option(parser, '--kind', type=str, help='energy | angle | precession | shadow')
        self.add_option(parser, '--e', type=float, help='Eccentricity of the q0 = (10, 0) orbit')
        self.add_option(parser, '--py', type=float, help='Starting momentum p0 = (0, py)')
        self.add_option(parser, '--N', dest='n', type=int, help='Steps per period')
        self.add_option(parser, '--sample-every', type=int)

    def compute(self, config):
        service = KeplerService(threads=config['threads'])
        scheme, kind = config['scheme'], config['kind']
        if config['e'] is not None:
            spec = service.orbit_from_eccentricity(config['e'])
        else:
            spec = service.orbit_from_py(config['py'])

        if kind == 'precession':
            result = service.precession_after_period(scheme, spec, n=config['n'])
            return ('e', 'theta4_at_period', 'steps', 'check_value', 'check_steps', 'converged'), [
                (spec.eccentricity, result.value, result.steps, result.check_value, result.check_steps,
                 result.converged)
            ]
        if kind == 'shadow':
            samples = service.shadow_series(scheme, spec, n=config['n'], sample_every=config['sample_every'])
            return ('t_over_T', 'energy', 'shadow_energy', 'drift'), [
                (sample.t / spec.period, sample.energy, sample.shadow_energy, sample.drift) for sample in samples
            ]

        series = service.limit_curve(scheme, spec, kind=kind, n=config['n'], sample_every=config['sample_every'])
        return ('t_over_T', 'h4', 'theta', 'theta4'), list(
            zip(series.phases(spec.period), series.h4, series.theta, series.theta4)
        )
