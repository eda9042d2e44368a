import math

from django.core.cache import cache
from django.test import SimpleTestCase
from rest_framework import serializers

from .cache_utils import CacheKeys, CacheManager
from .commands import format_cell
from .exception_handler import command_error_from_exception, flatten_validation_detail
from .exceptions import ConfigurationError, DomainError, PoleError
from .serializers import FigureConfigSerializer, KeplerConfigSerializer, ScanConfigSerializer


class FormatCellTest(SimpleTestCase):
    def test_floats_round_trip(self):
        for value in (0.1, 1.0 / 3.0, -1.3398713813012635e-9, 7.718621317057857e-7):
            self.assertEqual(float(format_cell(value)), value)

    def test_special_values(self):
        self.assertEqual(format_cell(math.nan), 'nan')
        self.assertEqual(format_cell(math.inf), 'inf')
        self.assertEqual(format_cell(-math.inf), '-inf')
        self.assertEqual(format_cell(None), '')
        self.assertEqual(format_cell(True), '1')
        self.assertEqual(format_cell(3), '3')


class ErrorTranslationTest(SimpleTestCase):
    def test_computation_errors_exit_with_one(self):
        error = command_error_from_exception(PoleError("pole at t0", t0=0.1388), 'scan')
        self.assertEqual(error.returncode, 1)
        self.assertTrue(str(error).startswith('POLE:'))

    def test_configuration_errors_exit_with_two(self):
        error = command_error_from_exception(ConfigurationError("bad selector"), 'coeffs')
        self.assertEqual(error.returncode, 2)

    def test_validation_errors_exit_with_two(self):
        exc = serializers.ValidationError({'points': ['too small'], 'interval': ['must exclude t0 = 1/2']})
        error = command_error_from_exception(exc, 'scan')
        self.assertEqual(error.returncode, 2)
        self.assertIn('points: too small', str(error))

    def test_flatten_nested_detail(self):
        self.assertEqual(flatten_validation_detail({'a': ['x', 'y'], 'b': 'z'}), 'a: x; y; b: z')

    def test_other_exceptions_propagate(self):
        with self.assertRaises(KeyError):
            command_error_from_exception(KeyError('boom'), 'coeffs')


class CacheManagerTest(SimpleTestCase):
    def setUp(self):
        cache.clear()

    def test_fingerprint_is_stable(self):
        self.assertEqual(CacheKeys.fingerprint('C', 0.1, 6), CacheKeys.fingerprint('C', 0.1, 6))
        self.assertNotEqual(CacheKeys.fingerprint('C', 0.1, 6), CacheKeys.fingerprint('C', 0.1, 8))

    def test_get_or_compute_computes_once(self):
        calls = []

        def compute():
            calls.append(1)
            return DomainError.default_message

        first = CacheManager.get_or_compute('test:key', compute)
        second = CacheManager.get_or_compute('test:key', compute)
        self.assertEqual(first, second)
        self.assertEqual(len(calls), 1)

    def test_cached_none_is_a_hit(self):
        CacheManager.set('test:none', None)
        self.assertIsNone(CacheManager.get_or_compute('test:none', lambda: 'recomputed'))


class RunConfigSerializerTest(SimpleTestCase):
    def test_orbit_defaults_to_py(self):
        serializer = KeplerConfigSerializer(data={'scheme': 'builtin:C'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['py'], 0.1)
        self.assertEqual(serializer.validated_data['scheme'].name, 'C')

    def test_e_and_py_are_exclusive(self):
        serializer = KeplerConfigSerializer(data={'scheme': 'builtin:C', 'e': 0.9, 'py': 0.1})
        self.assertFalse(serializer.is_valid())
        self.assertIn('e', serializer.errors)

    def test_scan_interval_must_exclude_half(self):
        serializer = ScanConfigSerializer(data={'objective': 'freq6', 'interval': [0.4, 0.6], 'points': 10})
        self.assertFalse(serializer.is_valid())
        self.assertIn('interval', serializer.errors)

    def test_unknown_keys_rejected(self):
        serializer = FigureConfigSerializer(data={'number': 1, 'colour': 'blue'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('unknown_keys', serializer.errors)

    def test_bad_selector_is_a_field_error(self):
        serializer = KeplerConfigSerializer(data={'scheme': 'builtin:nope'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('scheme', serializer.errors)
