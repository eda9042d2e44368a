from apps.common.commands import LabCommand
from apps.common.serializers import OscillatorConfigSerializer
from apps.oscillator.services import OscillatorService
from apps.splitting.models import PhaseState

SERIES_COLUMNS = ('order', 'value', 'residual', 'predicted', 'extended')


class Command(LabCommand):
    help = 'Harmonic-oscillator diagnostics: frequency or energy series, stability limit, shadow trajectory'
    config_serializer_class = OscillatorConfigSerializer

    def add_lab_arguments(self, parser):
        self.add_option(parser, '--scheme', type=str, help='builtin:NAME(k=v,...) or file:PATH')
        self.add_option(parser, '--kind', type=str, help='frequency | energy | stability | shadow')
        self.add_option(parser, '--omega', type=float)
        self.add_option(parser, '--q0', type=float)
        self.add_option(parser, '--p0', type=float)
        self.add_option(parser, '--max-order', type=int)
        self.add_option(parser, '--eps', type=float, help='Step for the report at one eps or the shadow run')
        self.add_option(parser, '--N', dest='n', type=int, help='Steps of the shadow run')

    def compute(self, config):
        service = OscillatorService(precision=config['precision'])
        scheme, omega, kind = config['scheme'], config['omega'], config['kind']

        if kind == 'frequency':
            report = service.frequency_series(scheme, omega, config['max_order'] or 6, eps=config['eps'])
            rows = self._series_rows(report.terms)
            if report.eps is not None:
                rows += [('omega_a', report.omega_a, None, None, None),
                         ('phase_error', report.phase_error, None, None, None)]
            return SERIES_COLUMNS, rows
        if kind == 'energy':
            report = service.energy_error_series(scheme, omega, config['q0'], config['p0'], config['max_order'] or 10)
            return SERIES_COLUMNS, self._series_rows(report.terms)
        if kind == 'stability':
            limit = service.stability_limit(scheme, omega)
            return ('omega', 'eps_limit', 'omega_eps_limit'), [(omega, limit, omega * limit)]

        s0 = PhaseState(q=[config['q0']], p=[config['p0']])
        samples = service.shadow_trajectory(scheme, omega, s0, config['eps'], config['n'],
                                            order=scheme.nominal_order)
        return ('t', 'energy', 'shadow_energy', 'drift'), [
            (sample.t, sample.energy, sample.shadow_energy, sample.drift) for sample in samples
        ]

    @staticmethod
    def _series_rows(terms):
        return [(term.order, term.value, term.residual, term.predicted, term.extended) for term in terms]
