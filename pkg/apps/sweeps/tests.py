from django.core.cache import cache
from django.test import SimpleTestCase

from apps.common.exceptions import DomainError, ExtractionError
from apps.kepler.services import KeplerService
from apps.splitting.services import SchemeFactory
from .optimization import golden_section_minimize
from .services import SweepService

FREQ6_MIN_LOCATION = 0.12129085056575276
FREQ6_MIN_VALUE = 7.718621317057857e-7
ENERGY10_MIN_LOCATION = 0.12482248354859667
ENERGY10_MIN_VALUE = -1.3398713813012635e-9
SHARED_POLE = 0.13882413776781183
SHARED_ZERO = 0.24265927253055103


def nearest(extrema, location):
    return min(extrema, key=lambda extremum: abs(extremum.location - location))


class GoldenSectionTest(SimpleTestCase):
    def test_quadratic_minimum(self):
        f = lambda x: (x - 0.3) ** 2 + 2.0
        result = golden_section_minimize(f, 0.0, 1.0, 1e-6)
        self.assertAlmostEqual(result.x, 0.3, delta=1e-6)
        self.assertLessEqual(result.width, 1e-6)
        self.assertLessEqual(result.low, result.x)
        self.assertLessEqual(result.x, result.high)
        self.assertGreaterEqual(f(result.low), result.value)
        self.assertGreaterEqual(f(result.high), result.value)

    def test_reversed_ends(self):
        result = golden_section_minimize(lambda x: abs(x + 1.0), 2.0, -3.0, 1e-8)
        self.assertAlmostEqual(result.x, -1.0, delta=1e-8)

    def test_degenerate_interval(self):
        result = golden_section_minimize(lambda x: x * x, 0.25, 0.25, 1e-12)
        self.assertEqual(result.x, 0.25)
        self.assertEqual(result.value, 0.0625)
        self.assertEqual(result.evaluations, 1)

    def test_tolerance_must_be_positive(self):
        with self.assertRaises(DomainError):
            golden_section_minimize(lambda x: x, 0.0, 1.0, 0.0)


class ScanMechanicsTest(SimpleTestCase):
    """Scans of closed-form objectives with alpha held fixed."""

    def setUp(self):
        self.service = SweepService(threads=1)
        self.fixed = lambda t0: 0.0

    def test_zeros_and_minimum(self):
        result = self.service.scan_1d(
            lambda t: (t - 0.1) * (t - 0.3), (0.0, 0.45), 46, alpha_of=self.fixed
        )
        self.assertEqual(len(result.points), 46)
        self.assertTrue(all(point.status == 'ok' for point in result.points))
        self.assertEqual([round(z.location, 9) for z in result.zeros], [0.1, 0.3])
        self.assertEqual(len(result.minima), 1)
        self.assertAlmostEqual(result.minima[0].location, 0.2, delta=1e-6)
        self.assertAlmostEqual(result.minima[0].value, -0.01, places=12)
        self.assertEqual(result.poles, ())

    def test_magnitude_minimum_on_negative_branch(self):
        result = self.service.scan_1d(lambda t: -(t - 0.2) ** 2 - 0.05, (0.0, 0.4), 41, alpha_of=self.fixed)
        self.assertEqual(result.zeros, ())
        self.assertEqual(len(result.minima), 1)
        self.assertAlmostEqual(result.minima[0].location, 0.2, delta=1e-6)
        self.assertAlmostEqual(result.minima[0].value, -0.05, places=12)

    def test_failed_zero_refinement_keeps_secant_estimate(self):
        grid = {round(t, 12) for t in (0.2, 0.22, 0.24, 0.26, 0.28, 0.3)}

        def objective(t):
            if round(t, 12) not in grid and abs(t - 0.2345) < 1e-3:
                raise ExtractionError("ladder did not settle")
            return t - 0.2345

        result = self.service.scan_1d(objective, (0.2, 0.3), 6, alpha_of=self.fixed)
        self.assertEqual(len(result.zeros), 1)
        self.assertAlmostEqual(result.zeros[0].location, 0.2345, delta=1e-12)

    def test_pole_adjacent_points_are_flagged(self):
        result = self.service.scan_1d(lambda t: (t - 0.2137) ** -4, (0.0, 0.4), 41, alpha_of=self.fixed)
        flagged = [point.t0 for point in result.points if point.status == 'pole']
        self.assertIn(0.21, [round(t, 12) for t in flagged])
        self.assertEqual(len(result.poles), 1)
        self.assertAlmostEqual(result.poles[0].location, 0.2137, delta=0.011)
        self.assertEqual(result.minima, ())

    def test_failed_points_are_recorded(self):
        def objective(t):
            if t > 0.35:
                raise DomainError("outside")
            return t
        result = self.service.scan_1d(objective, (0.0, 0.4), 5, alpha_of=self.fixed)
        self.assertEqual([point.status for point in result.points], ['ok', 'ok', 'ok', 'ok', 'failed'])

    def test_rejects_bad_requests(self):
        for interval, points in (((0.4, 0.6), 10), ((0.2, 0.1), 10), ((0.0, 0.2), 2), ((0.0,), 10)):
            with self.assertRaises(DomainError):
                self.service.scan_1d(lambda t: t, interval, points, alpha_of=self.fixed)

    def test_deterministic(self):
        objective = lambda t: (t - 0.17) ** 2
        first = self.service.scan_1d(objective, (0.0, 0.3), 31, alpha_of=self.fixed)
        second = SweepService(threads=3).scan_1d(objective, (0.0, 0.3), 31, alpha_of=self.fixed)
        self.assertEqual(first, second)


class FrequencyScanTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = SweepService()

    def test_minimum_and_pole_on_forward_range(self):
        result = self.service.scan_freq6((0.0, 0.21), 43)
        minimum = nearest(result.minima, FREQ6_MIN_LOCATION)
        self.assertAlmostEqual(minimum.location, FREQ6_MIN_LOCATION, delta=1e-6)
        self.assertAlmostEqual(minimum.value, FREQ6_MIN_VALUE, delta=1e-4 * FREQ6_MIN_VALUE)
        pole = nearest(result.poles, SHARED_POLE)
        self.assertAlmostEqual(pole.location, SHARED_POLE, delta=1e-6)
        self.assertTrue(all(0.0 <= e.location <= 0.21 for e in result.extrema))

    def test_zero_beyond_the_forward_range(self):
        result = self.service.scan_freq6((0.2, 0.3), 21)
        zero = nearest(result.zeros, SHARED_ZERO)
        self.assertAlmostEqual(zero.location, SHARED_ZERO, delta=1e-6)

    def test_threaded_scan_is_identical(self):
        sequential = self.service.scan_freq6((0.0, 0.1), 11)
        cache.clear()
        threaded = SweepService(threads=4).scan_freq6((0.0, 0.1), 11)
        self.assertEqual(sequential, threaded)


class EnergyScanTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = SweepService()

    def test_minimum_and_pole(self):
        result = self.service.scan_energy10((0.0, 0.21), 43)
        minimum = nearest(result.minima, ENERGY10_MIN_LOCATION)
        self.assertAlmostEqual(minimum.location, ENERGY10_MIN_LOCATION, delta=1e-5)
        self.assertAlmostEqual(minimum.value, ENERGY10_MIN_VALUE, delta=1e-3 * abs(ENERGY10_MIN_VALUE))
        self.assertAlmostEqual(nearest(result.poles, SHARED_POLE).location, SHARED_POLE, delta=1e-6)

    def test_shares_the_frequency_zero(self):
        result = self.service.scan_energy10((0.2, 0.3), 11)
        self.assertAlmostEqual(nearest(result.zeros, SHARED_ZERO).location, SHARED_ZERO, delta=1e-5)


class KeplerOptimizationTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = SweepService()
        self.spec = KeplerService().orbit_from_py(0.08)
        self.baseline = abs(
            KeplerService().precession_after_period(SchemeFactory().from_builtin('C'), self.spec).value
        )

    def test_optimal_t0_near_canonical_value(self):
        optimum = self.service.optimize_kepler((0.160, 0.172), 0.0, self.spec)
        self.assertAlmostEqual(optimum.t0, 0.166160, delta=0.001)
        self.assertEqual(optimum.steps, 5000)
        self.assertEqual(len(optimum.eccentricities), 2)
        self.assertAlmostEqual(optimum.eccentricities[1], 0.95, places=12)
        self.assertLessEqual(optimum.value, optimum.worst)
        self.assertAlmostEqual(optimum.value, 0.0077, delta=0.15 * 0.0077)
        self.assertAlmostEqual(self.baseline / optimum.value, 5.0, delta=1.0)

    def test_reported_value_is_the_searched_run(self):
        optimum = self.service.optimize_kepler((0.160, 0.172), 0.0, self.spec)
        scheme = SchemeFactory().make_4acb(optimum.t0, 0.0)
        at_period = KeplerService().theta4_at_period(scheme, self.spec, optimum.steps)
        self.assertEqual(optimum.value, abs(at_period))

    def test_single_orbit_reaches_the_sign_change(self):
        optimum = self.service.optimize_kepler((0.160, 0.172), 0.0, self.spec, eccentricities=())
        self.assertEqual(len(optimum.eccentricities), 1)
        self.assertEqual(optimum.value, optimum.worst)
        self.assertAlmostEqual(optimum.t0, 0.166160, delta=0.001)
        self.assertLess(optimum.value, 0.05 * self.baseline)

    def test_degenerate_interval(self):
        optimum = self.service.optimize_kepler((1.0 / 6.0, 1.0 / 6.0), 0.0, self.spec)
        self.assertEqual(optimum.t0, 1.0 / 6.0)
        expected = KeplerService().precession_after_period(SchemeFactory().make_4acb(1.0 / 6.0, 0.0), self.spec)
        self.assertEqual(optimum.value, abs(expected.value))

    def test_kepler_scan_evaluates_every_point(self):
        result = self.service.scan_kepler((0.16, 0.17), 3, 0.0, self.spec)
        self.assertEqual([point.status for point in result.points], ['ok', 'ok', 'ok'])
        self.assertTrue(all(point.alpha == 0.0 for point in result.points))
