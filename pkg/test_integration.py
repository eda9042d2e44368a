"""
Integration tests for the laboratory subcommands.
Drives every management command end to end and checks the CSV it writes.

Usage:
    # Run with pytest (recommended):
    pytest test_integration.py

    # Or with the Django test runner:
    python manage.py test test_integration
"""

import csv
import json
import os
import tempfile
from io import StringIO
from pathlib import Path

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'symplectic_lab.settings')
django.setup()

from django.core.cache import cache
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

import symplectic_lab
from apps.splitting.repositories import SchemeRepository
from apps.splitting.services import SchemeFactory


def run(command, *args, **options):
    """Run a subcommand and return (stamp line, header, rows)."""
    out = StringIO()
    call_command(command, *args, stdout=out, **options)
    lines = out.getvalue().splitlines()
    table = list(csv.reader(lines[1:]))
    return lines[0], table[0], table[1:]


class SubcommandIntegrationTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.workdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.workdir.cleanup)

    def path(self, name):
        return str(Path(self.workdir.name) / name)

    def test_schemes_lists_presets(self):
        stamp, header, rows = run('schemes')
        self.assertTrue(stamp.startswith(f'# symplectic-lab {symplectic_lab.__version__} config='))
        self.assertEqual(header, ['name', 'family', 'params', 'provenance'])
        by_name = {row[0]: row for row in rows}
        self.assertEqual(by_name['C'][2], f't0={1.0 / 6.0!r};alpha=0.0')
        self.assertEqual(by_name['Opt-C'][2], 't0=0.16616;alpha=0.0')
        self.assertEqual(by_name['TI'][2], f'alpha={1.0 / 24.0!r}')

    def test_coeffs_of_the_correctable_second_order_scheme(self):
        stamp, header, rows = run('coeffs', scheme='builtin:TI')
        values = {name: value for name, value in rows}
        self.assertEqual(header, ['name', 'value'])
        self.assertAlmostEqual(float(values['e_ttv']), -1.0 / 24.0, places=15)
        self.assertAlmostEqual(float(values['e_vtv']), -1.0 / 24.0, places=15)
        self.assertEqual(values['correctable_second_order'], '1')
        self.assertEqual(values['fourth_order'], '0')
        config = json.loads(stamp.split('config=', 1)[1])
        self.assertEqual(config, {'scheme': 'builtin:TI', 'subcommand': 'coeffs'})

    def test_coeffs_of_a_scheme_file(self):
        scheme = SchemeFactory().make_4acb(0.1, 0.0)
        path = SchemeRepository().write_file(scheme, self.path('scheme.json'))
        _, _, rows = run('coeffs', scheme=f'file:{path}')
        values = {name: float(value) for name, value in rows}
        self.assertEqual(values['fourth_order'], 1.0)
        self.assertAlmostEqual(values['frame_t0'], 0.1, places=15)

    def test_output_is_byte_identical(self):
        first, second = self.path('a.csv'), self.path('b.csv')
        call_command('coeffs', scheme='builtin:4acb(t0=1/6,alpha=0)', out=first, stdout=StringIO())
        call_command('coeffs', scheme='builtin:4acb(t0=1/6,alpha=0)', out=second, stdout=StringIO())
        first_text = Path(first).read_bytes()
        self.assertEqual(first_text.replace(b'a.csv', b'b.csv'), Path(second).read_bytes())

    def test_oscillator_frequency_series(self):
        _, header, rows = run('oscillator', scheme='builtin:TI', kind='frequency', max_order=4)
        self.assertEqual(header, ['order', 'value', 'residual', 'predicted', 'extended'])
        values = {int(row[0]): float(row[1]) for row in rows}
        self.assertLess(abs(values[2]), 1e-20)
        self.assertAlmostEqual(values[4] / (-1.0 / 720.0), 1.0, delta=1e-9)

    def test_oscillator_stability_limit(self):
        _, header, rows = run('oscillator', scheme='builtin:leapfrog', kind='stability')
        self.assertEqual(header, ['omega', 'eps_limit', 'omega_eps_limit'])
        self.assertAlmostEqual(float(rows[0][2]), 2.0, places=10)

    def test_kepler_energy_curve(self):
        _, header, rows = run('kepler', scheme='builtin:C', py=0.1, n=3000, kind='energy', sample_every=100)
        self.assertEqual(header, ['t_over_T', 'h4', 'theta', 'theta4'])
        self.assertEqual(len(rows), 31)
        self.assertEqual(float(rows[0][0]), 0.0)
        self.assertAlmostEqual(float(rows[-1][0]), 1.0, places=12)

    def test_kepler_precession(self):
        _, header, rows = run('kepler', scheme='builtin:C', e=0.9, kind='precession')
        self.assertEqual(header[:2], ['e', 'theta4_at_period'])
        self.assertAlmostEqual(float(rows[0][1]), 0.003557, delta=1e-4)

    def test_scan_writes_grid_and_extrema(self):
        _, header, rows = run('scan', objective='freq6', interval=[0.2, 0.3], points=11)
        self.assertEqual(header, ['kind', 't0', 'alpha', 'value', 'status'])
        self.assertEqual(sum(1 for row in rows if row[0] == 'grid'), 11)
        zeros = [float(row[1]) for row in rows if row[0] == 'zero']
        self.assertTrue(any(abs(z - 0.24265927253055103) < 1e-6 for z in zeros))

    def test_figure_six_rows_follow_eccentricities(self):
        _, header, rows = run('figure', '6', eccentricities=[0.9, 0.95])
        self.assertEqual(header, ['e', 'theta4[C]'])
        self.assertEqual([float(row[0]) for row in rows], [0.9, 0.95])

    def test_config_file_is_merged_with_flags(self):
        config = self.path('run.json')
        Path(config).write_text(json.dumps({'scheme': 'builtin:leapfrog', 'kind': 'frequency'}))
        _, _, rows = run('oscillator', config=config, scheme='builtin:TI', max_order=4)
        self.assertLess(abs(float(rows[0][1])), 1e-20)


class SubcommandErrorTest(SimpleTestCase):
    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.workdir.cleanup)
        self.out = str(Path(self.workdir.name) / 'out.csv')

    def assertExit(self, code, command, *args, **options):
        with self.assertRaises(CommandError) as ctx:
            call_command(command, *args, stdout=StringIO(), out=self.out, **options)
        self.assertEqual(ctx.exception.returncode, code)
        self.assertFalse(Path(self.out).exists())
        return ctx.exception

    def test_empty_grid_is_a_usage_error(self):
        self.assertExit(2, 'scan', objective='freq6', interval=[0.0, 0.21], points=0)

    def test_unknown_config_keys_are_rejected(self):
        config = Path(self.workdir.name) / 'run.json'
        config.write_text(json.dumps({'scheme': 'builtin:C', 'colour': 'blue'}))
        error = self.assertExit(2, 'coeffs', config=str(config))
        self.assertIn('colour', str(error))

    def test_unknown_builtin_is_a_usage_error(self):
        self.assertExit(2, 'coeffs', scheme='builtin:yoshida')

    def test_shadow_run_needs_step_and_count(self):
        self.assertExit(2, 'oscillator', scheme='builtin:leapfrog', kind='shadow')

    def test_computation_error_exits_with_one(self):
        error = self.assertExit(1, 'kepler', scheme='builtin:C', e=1.0)
        self.assertIn('DOMAIN_ERROR', str(error))

    def test_missing_builtin_parameter_is_reported(self):
        error = self.assertExit(2, 'coeffs', scheme='builtin:second')
        self.assertIn('needs alpha', str(error))
