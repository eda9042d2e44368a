import math

import numpy as np
from django.core.cache import cache
from django.test import SimpleTestCase

from apps.common.exceptions import DegenerateOrbitError, DomainError, SingularityError
from apps.splitting.models import PhaseState
from apps.splitting.services import IntegratorService, SchemeFactory
from apps.splitting.forces import kepler_force_model
from .factories import KeplerOrbitSpecFactory
from .services import KeplerService

# theta4(T) at N = 5000 from the aphelion start q0 = (10, 0)
C_THETA4_AT_E090 = 0.003557
OPT_C_THETA4_AT_E0936 = 0.00650
OPT_C_THETA4_AT_E095 = -0.00915


class OrbitSetupTest(SimpleTestCase):
    def setUp(self):
        self.service = KeplerService()

    def test_eccentricity_of_the_aphelion_family(self):
        self.assertAlmostEqual(self.service.orbit_from_py(0.1).eccentricity, 0.9, places=12)
        self.assertAlmostEqual(self.service.orbit_from_py(0.08).eccentricity, 0.936, places=12)
        self.assertLess(self.service.orbit_from_py(math.sqrt(0.1)).eccentricity, 1e-12)

    def test_energy_axis_and_period(self):
        spec = KeplerOrbitSpecFactory(py=0.1)
        self.assertAlmostEqual(spec.energy, -0.095, places=15)
        self.assertAlmostEqual(spec.semi_major_axis, 1.0 / 0.19, places=12)
        self.assertAlmostEqual(spec.period, 2.0 * math.pi * (1.0 / 0.19) ** 1.5, places=10)
        self.assertEqual(spec.q0, (10.0, 0.0))
        self.assertEqual(spec.p0, (0.0, 0.1))
        self.assertAlmostEqual(spec.angular_momentum, 1.0, places=15)

    def test_unbound_or_radial_start_is_rejected(self):
        for py in (0.5, 0.0, -0.1):
            with self.assertRaises(DomainError):
                self.service.orbit_from_py(py)
        with self.assertRaises(SingularityError):
            self.service.orbit_from_state((0.0, 0.0), (0.0, 1.0))
        with self.assertRaises(DomainError):
            self.service.orbit_from_state((1.0,), (0.5,))

    def test_from_eccentricity(self):
        for e in (0.0, 0.5, 0.9, 0.95):
            self.assertAlmostEqual(self.service.orbit_from_eccentricity(e).eccentricity, e, places=12)
        self.assertAlmostEqual(self.service.orbit_from_eccentricity(0.95).p0[1] ** 2, 0.005, places=15)
        for e in (1.0, -0.1, float('nan')):
            with self.assertRaises(DomainError):
                self.service.orbit_from_eccentricity(e)

    def test_perihelion_shrinks_with_eccentricity(self):
        perihelia = [self.service.orbit_from_eccentricity(e).perihelion for e in (0.5, 0.9, 0.936, 0.95)]
        self.assertTrue(all(a > b for a, b in zip(perihelia, perihelia[1:])))
        self.assertAlmostEqual(self.service.orbit_from_eccentricity(0.9).perihelion, 10.0 * 0.1 / 1.9, places=10)


class LrlVectorTest(SimpleTestCase):
    def setUp(self):
        self.service = KeplerService()

    def test_aphelion_example(self):
        state = PhaseState(q=[10.0, 0.0], p=[0.0, 0.1])
        np.testing.assert_allclose(self.service.lrl_vector(state), [-0.9, 0.0], rtol=0, atol=1e-15)
        self.assertAlmostEqual(self.service.lrl_angle(state), math.pi, places=15)

    def test_origin_is_singular(self):
        with self.assertRaises(SingularityError):
            self.service.lrl_vector(PhaseState(q=[0.0, 0.0], p=[0.0, 1.0]))

    def test_circular_orbit_is_degenerate(self):
        with self.assertRaises(DegenerateOrbitError):
            self.service.lrl_angle(PhaseState(q=[10.0, 0.0], p=[0.0, math.sqrt(0.1)]))

    def test_constant_along_the_exact_flow(self):
        spec = KeplerOrbitSpecFactory(py=0.1)
        reference = self.service.reference_series(spec, n=3000, sample_every=100)
        self.assertLess(max(abs(value) for value in reference.theta), 1e-9)


class LimitCurveTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = KeplerService()
        self.scheme = SchemeFactory().from_builtin('C')
        self.spec = KeplerOrbitSpecFactory(py=0.1)

    def test_energy_curve_reverts_after_one_period(self):
        series = self.service.limit_curve(self.scheme, self.spec, kind='energy')
        self.assertEqual(series.steps, 5000)
        self.assertEqual(len({len(series.times), len(series.h4), len(series.theta), len(series.theta4)}), 1)
        self.assertEqual(series.times[0], 0.0)
        self.assertTrue(all(a < b for a, b in zip(series.times, series.times[1:])))
        self.assertAlmostEqual(series.times[-1] / self.spec.period, 1.0, places=12)
        peak = max(abs(value) for value in series.h4)
        self.assertGreater(peak, 0.0)
        self.assertLess(abs(series.h4_at_period), 0.01 * peak)

    def test_theta4_is_flat_away_from_perihelion(self):
        series = self.service.limit_curve(self.scheme, self.spec, kind='angle')
        final = abs(series.theta4_at_period)
        phases = series.phases(self.spec.period)
        early = [v for t, v in zip(phases, series.theta4) if t < 0.3]
        late = [v for t, v in zip(phases, series.theta4) if t > 0.7]
        self.assertLess(max(early) - min(early), 0.02 * final)
        self.assertLess(max(late) - min(late), 0.02 * final)

    def test_curve_is_converged_in_the_step(self):
        coarse = self.service.limit_curve(self.scheme, self.spec, kind='energy', n=5000, sample_every=10)
        fine = self.service.limit_curve(self.scheme, self.spec, kind='energy', n=8000, sample_every=16)
        self.assertEqual(len(coarse.h4), len(fine.h4))
        peak = max(abs(value) for value in coarse.h4)
        worst = max(abs(a - b) for a, b in zip(coarse.h4, fine.h4))
        self.assertLess(worst, 0.02 * peak)

    def test_angular_momentum_is_conserved(self):
        s0 = self.spec.initial_state()
        final = IntegratorService().integrate(
            self.scheme, kepler_force_model(), s0, self.spec.period / 5000, 5000, sample_every=5000
        )[-1]
        momentum = final.q[0] * final.p[1] - final.q[1] * final.p[0]
        self.assertLess(abs(momentum - self.spec.angular_momentum) / abs(self.spec.angular_momentum), 1e-12)

    def test_rejects_short_runs_and_unknown_kinds(self):
        with self.assertRaises(DomainError):
            self.service.limit_curve(self.scheme, self.spec, n=1000)
        with self.assertRaises(DomainError):
            self.service.limit_curve(self.scheme, self.spec, kind='momentum')

    def test_circular_orbit(self):
        circular = KeplerOrbitSpecFactory(py=math.sqrt(0.1))
        with self.assertRaises(DegenerateOrbitError):
            self.service.limit_curve(self.scheme, circular, kind='angle', n=3000)
        series = self.service.limit_curve(self.scheme, circular, kind='energy', n=3000, sample_every=100)
        self.assertTrue(all(math.isnan(value) for value in series.theta4))
        self.assertTrue(all(math.isfinite(value) for value in series.h4))

    def test_reference_flow_is_flat(self):
        reference = self.service.reference_series(self.spec)
        self.assertEqual(reference.scheme_name, 'reference')
        self.assertLess(max(abs(value) for value in reference.h4), 1e-3)
        self.assertLess(max(abs(value) for value in reference.theta4), 2e-3)


class PrecessionTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = KeplerService()
        self.factory = SchemeFactory()

    def test_algorithm_c_moderate_eccentricity(self):
        result = self.service.precession_after_period(
            self.factory.from_builtin('C'), self.service.orbit_from_eccentricity(0.9)
        )
        self.assertEqual((result.steps, result.check_steps), (5000, 3000))
        self.assertAlmostEqual(result.value, C_THETA4_AT_E090, delta=1e-4)
        self.assertTrue(result.converged, result.warning)
        self.assertEqual(result.warning, '')

    def test_algorithm_c_is_settled_in_the_step(self):
        spec = self.service.orbit_from_eccentricity(0.9)
        scheme = self.factory.from_builtin('C')
        coarse = self.service.theta4_at_period(scheme, spec, 5000)
        fine = self.service.theta4_at_period(scheme, spec, 10000)
        self.assertAlmostEqual(coarse, fine, delta=0.01 * abs(fine))

    def test_algorithm_c_high_eccentricity(self):
        result = self.service.precession_after_period(
            self.factory.from_builtin('C'), self.service.orbit_from_eccentricity(0.95)
        )
        self.assertAlmostEqual(result.value, 0.1244, delta=0.1 * 0.1244)

    def test_algorithm_c_at_higher_eccentricity(self):
        result = self.service.precession_after_period(self.factory.from_builtin('C'), self.service.orbit_from_py(0.08))
        self.assertAlmostEqual(result.value, 0.0360, delta=0.05 * 0.0360)

    def test_optimized_c(self):
        scheme = self.factory.from_builtin('Opt-C')
        at_936 = self.service.precession_after_period(scheme, self.service.orbit_from_py(0.08))
        at_95 = self.service.precession_after_period(scheme, self.service.orbit_from_eccentricity(0.95))
        self.assertAlmostEqual(at_936.value, OPT_C_THETA4_AT_E0936, delta=0.05 * OPT_C_THETA4_AT_E0936)
        self.assertAlmostEqual(at_95.value, OPT_C_THETA4_AT_E095, delta=0.05 * abs(OPT_C_THETA4_AT_E095))
        self.assertLess(abs(at_95.value), 0.1 * 0.1244)

    def test_shift_from_c_to_optimized_c(self):
        # the move from t0 = 1/6 to 0.166160 lowers theta4(T) by 0.0360 - 0.0077 at e = 0.936
        # and by 0.12363 + 0.00357 at e = 0.95
        c, opt_c = self.factory.from_builtin('C'), self.factory.from_builtin('Opt-C')
        for spec, shift, tolerance in ((self.service.orbit_from_py(0.08), 0.0360 - 0.0077, 0.03),
                                       (self.service.orbit_from_eccentricity(0.95), 0.12363 + 0.00357, 0.1)):
            measured = (self.service.precession_after_period(c, spec).value
                        - self.service.precession_after_period(opt_c, spec).value)
            self.assertAlmostEqual(measured, shift, delta=tolerance * shift)

    def test_circular_orbit_is_degenerate(self):
        with self.assertRaises(DegenerateOrbitError):
            self.service.precession_after_period(self.factory.from_builtin('C'), self.service.orbit_from_eccentricity(0.0))

    def test_cached_result_carries_the_callers_name(self):
        spec = self.service.orbit_from_eccentricity(0.9)
        first = self.service.precession_after_period(self.factory.from_builtin('C'), spec)
        second = self.service.precession_after_period(self.factory.make_4acb(1.0 / 6.0, 0.0), spec)
        self.assertEqual(first.value, second.value)
        self.assertEqual(first.scheme_name, 'C')
        self.assertNotEqual(second.scheme_name, 'C')

    def test_end_state_rotation_matches_curve(self):
        spec = self.service.orbit_from_eccentricity(0.9)
        scheme = self.factory.from_builtin('C')
        curve = self.service.limit_curve(scheme, spec, kind='angle', n=3000)
        self.assertAlmostEqual(curve.theta4_at_period, self.service.theta4_at_period(scheme, spec, 3000), places=9)

    def test_precession_matches_end_state_rotation(self):
        spec = self.service.orbit_from_eccentricity(0.9)
        scheme = self.factory.from_builtin('C')
        result = self.service.precession_after_period(scheme, spec)
        self.assertEqual(result.value, self.service.theta4_at_period(scheme, spec, 5000))
        self.assertEqual(result.check_value, self.service.theta4_at_period(scheme, spec, 3000))

class EccentricitySweepTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = KeplerService()
        self.scheme = SchemeFactory().from_builtin('C')

    def test_rows_keep_input_order_and_record_failures(self):
        rows = self.service.eccentricity_sweep(self.scheme, [0.95, 0.0, 0.90, 1.5], threads=2)
        self.assertEqual([row.eccentricity for row in rows], [0.95, 0.0, 0.90, 1.5])
        self.assertEqual([row.status for row in rows], ['ok', 'degenerate', 'ok', 'error'])
        self.assertLess(rows[0].perihelion, rows[2].perihelion)
        self.assertGreater(abs(rows[0].theta4_at_period), abs(rows[2].theta4_at_period))
        self.assertIsNone(rows[1].theta4_at_period)

    def test_threaded_sweep_matches_sequential(self):
        sequential = self.service.eccentricity_sweep(self.scheme, [0.9, 0.92], threads=1)
        cache.clear()
        threaded = self.service.eccentricity_sweep(self.scheme, [0.9, 0.92], threads=2)
        self.assertEqual(sequential, threaded)


class EnergyOrderTest(SimpleTestCase):
    def setUp(self):
        self.service = KeplerService()
        self.factory = SchemeFactory()
        # just past perihelion of an e = 0.39 orbit
        self.spec = self.service.orbit_from_state((1.0, 0.0), (0.3, 1.1))

    def test_fourth_order_scheme_after_one_period(self):
        # E(T) - E0 of a fourth-order scheme leads at eps^8
        slope = self.service.period_energy_order(self.factory.from_builtin('C'), self.spec, (200, 400, 800))
        self.assertAlmostEqual(slope, 8.0, delta=0.3)

    def test_leapfrog_after_one_period(self):
        slope = self.service.period_energy_order(self.factory.make_second_order(0.0), self.spec, (200, 400, 800))
        self.assertAlmostEqual(slope, 4.0, delta=0.3)

    def test_roundoff_floor_is_rejected(self):
        with self.assertRaises(DomainError) as ctx:
            self.service.period_energy_order(self.factory.from_builtin('C'), self.spec, (200, 400), precision=15)
        self.assertEqual(ctx.exception.context['precision'], 15)

    def test_extended_stepping_matches_the_integrator(self):
        scheme = self.factory.from_builtin('C')
        n = 50
        final = IntegratorService().integrate(
            scheme, kepler_force_model(), self.spec.initial_state(), self.spec.period / n, n, sample_every=n
        )[-1]
        double = 0.5 * float(final.p @ final.p) - 1.0 / math.hypot(*final.q) - self.spec.energy
        extended = self.service.period_energy_deviation(scheme, self.spec, n)
        self.assertNotEqual(extended, 0.0)
        self.assertAlmostEqual(extended, double, delta=1e-12)

    def test_needs_two_step_counts(self):
        with self.assertRaises(DomainError):
            self.service.period_energy_order(self.factory.from_builtin('C'), KeplerOrbitSpecFactory(), (400,))


class ShadowSeriesTest(SimpleTestCase):
    def test_shadow_hamiltonian_drifts_at_higher_order(self):
        service = KeplerService()
        scheme = SchemeFactory().from_builtin('C')
        spec = KeplerOrbitSpecFactory(py=0.1)
        raw, shadow = [], []
        for n, every in ((2000, 10), (4000, 20)):
            samples = service.shadow_series(scheme, spec, n=n, sample_every=every)
            self.assertEqual(samples[0].drift, 0.0)
            raw.append(max(abs(s.energy - spec.energy) for s in samples))
            shadow.append(max(abs(s.drift) for s in samples))
        raw_slope = math.log2(raw[0] / raw[1])
        shadow_slope = math.log2(shadow[0] / shadow[1])
        self.assertAlmostEqual(raw_slope, 4.0, delta=0.5)
        self.assertGreaterEqual(shadow_slope, raw_slope + 1.0)
