import math

import numpy as np
from django.core.cache import cache
from django.test import SimpleTestCase, override_settings

from apps.algebra.services import CoefficientService
from apps.common.exceptions import DomainError, ExtractionError, InstabilityError
from apps.splitting.forces import harmonic_force_model
from apps.splitting.models import PhaseState
from apps.splitting.services import IntegratorService, SchemeFactory
from .series import extract_coefficients, fit_power_series
from .services import OscillatorService, extended_stages, lift, make_context


class StepMatrixTest(SimpleTestCase):
    def setUp(self):
        self.service = OscillatorService()
        self.factory = SchemeFactory()

    def test_zero_step_is_identity(self):
        matrix = self.service.step_matrix(self.factory.make_4acb(0.1, 0.3), 1.0, 0.0)
        np.testing.assert_array_equal(matrix.as_array(), np.eye(2))

    def test_leapfrog_half_trace(self):
        for eps in (0.01, 0.3, 1.5):
            matrix = self.service.step_matrix(self.factory.make_second_order(0.0), 1.0, eps)
            self.assertAlmostEqual(matrix.half_trace, 1.0 - eps ** 2 / 2.0, places=14)

    def test_unit_determinant(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            scheme = self.factory.make_4acb(float(rng.uniform(0.0, 0.2)), float(rng.uniform(-1.0, 1.0)))
            matrix = self.service.step_matrix(scheme, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.0, 1.0)))
            self.assertAlmostEqual(matrix.determinant, 1.0, delta=1e-13)

    def test_agrees_with_stepper(self):
        rng = np.random.default_rng(4)
        schemes = [
            self.factory.make_second_order(0.0),
            self.factory.make_second_order(1.0 / 24.0),
            self.factory.make_4acb(1.0 / 6.0, 0.0),
            self.factory.make_4acb(0.2, 0.5),
        ]
        integrator = IntegratorService()
        for index in range(200):
            scheme = schemes[index % len(schemes)]
            omega = float(rng.uniform(0.5, 2.0))
            eps = float(rng.uniform(0.01, 1.0))
            q, p = rng.uniform(-1.0, 1.0, 2)
            stepped = integrator.step_once(scheme, harmonic_force_model(omega), PhaseState(q=[q], p=[p]), eps)
            mapped = self.service.step_matrix(scheme, omega, eps).apply(q, p)
            np.testing.assert_allclose([stepped.q[0], stepped.p[0]], mapped, rtol=1e-14, atol=1e-15)

    def test_negative_step_rejected(self):
        with self.assertRaises(DomainError):
            self.service.step_matrix(self.factory.make_second_order(0.0), 1.0, -0.1)


class ApproxFrequencyTest(SimpleTestCase):
    def setUp(self):
        self.service = OscillatorService()
        self.leapfrog = SchemeFactory().make_second_order(0.0)

    def test_leapfrog_closed_form(self):
        for eps in (0.1, 0.5, 1.2):
            self.assertAlmostEqual(
                self.service.approx_frequency(self.leapfrog, 1.0, eps), math.acos(1.0 - eps ** 2 / 2.0) / eps, places=13
            )

    def test_zero_step_returns_omega(self):
        self.assertEqual(self.service.approx_frequency(self.leapfrog, 1.7, 0.0), 1.7)
        self.assertLess(abs(self.service.approx_frequency(self.leapfrog, 1.7, 1e-6) - 1.7), 1e-11)

    def test_instability_beyond_limit(self):
        self.service.approx_frequency(self.leapfrog, 1.0, 1.99)
        with self.assertRaises(InstabilityError):
            self.service.approx_frequency(self.leapfrog, 1.0, 2.01)

    def test_stability_limit(self):
        self.assertAlmostEqual(self.service.stability_limit(self.leapfrog, 1.0), 2.0, delta=1e-9)
        self.assertAlmostEqual(self.service.stability_limit(self.leapfrog, 4.0), 0.5, delta=1e-9)
        scheme_c = SchemeFactory().make_4acb(1.0 / 6.0, 0.0)
        limit = self.service.stability_limit(scheme_c, 1.0)
        self.assertGreater(limit, 1.0)
        self.service.approx_frequency(scheme_c, 1.0, 0.999 * limit)

    def test_phase_error(self):
        eps = 0.2
        omega_a = self.service.approx_frequency(self.leapfrog, 1.0, eps)
        self.assertAlmostEqual(self.service.phase_error(self.leapfrog, 1.0, eps), 2.0 * math.pi * (omega_a - 1.0),
                               places=15)


class FrequencySeriesTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = OscillatorService()
        self.factory = SchemeFactory()

    def test_leapfrog_coefficients(self):
        report = self.service.frequency_series(self.factory.make_second_order(0.0), 1.0)
        self.assertAlmostEqual(report.coefficient(2), 1.0 / 24.0, delta=1e-15)
        self.assertAlmostEqual(report.coefficient(4), 3.0 / 640.0, delta=1e-14)
        self.assertAlmostEqual(report.coefficient(6), 5.0 / 7168.0, delta=1e-12)
        self.assertAlmostEqual(report.terms[0].predicted, 1.0 / 24.0, places=15)

    def test_correctable_second_order(self):
        report = self.service.frequency_series(self.factory.make_second_order(1.0 / 24.0), 1.0)
        self.assertLess(abs(report.coefficient(2)), 1e-20)
        self.assertAlmostEqual(report.coefficient(4), -1.0 / 720.0, delta=1e-15)
        self.assertAlmostEqual(report.terms[1].predicted, -1.0 / 720.0, places=15)

    def test_frequency_scaling(self):
        report = self.service.frequency_series(self.factory.make_second_order(0.0), 2.5)
        self.assertAlmostEqual(report.coefficient(2), 1.0 / 24.0, delta=1e-15)

    def test_correctable_fourth_order_family(self):
        for t0 in (0.0, 0.1, 0.2):
            alpha = CoefficientService().correctable_alpha(t0)
            report = self.service.frequency_series(self.factory.make_4acb(t0, alpha), 1.0)
            self.assertLess(abs(report.coefficient(2)), 1e-20)
            self.assertLess(abs(report.coefficient(4)), 1e-20)
            self.assertGreater(abs(report.coefficient(6)), 1e-8)

    def test_fourth_order_prediction(self):
        scheme = self.factory.make_4acb(1.0 / 6.0, 0.0)
        report = self.service.frequency_series(scheme, 1.0)
        e = CoefficientService().coefficients_for_scheme(scheme)
        self.assertAlmostEqual(report.coefficient(4), 2.0 * (e.e_vtvtv - e.e_ttvtv), delta=1e-14)
        self.assertEqual(report.terms[1].predicted, 2.0 * (e.e_vtvtv - e.e_ttvtv))

    def test_report_at_step(self):
        scheme = self.factory.make_second_order(0.0)
        report = self.service.frequency_series(scheme, 1.0, max_order=4, eps=0.1)
        self.assertEqual(len(report.terms), 2)
        self.assertAlmostEqual(report.omega_a, math.acos(1.0 - 0.005) / 0.1, places=13)
        self.assertAlmostEqual(report.phase_error, 2.0 * math.pi * (report.omega_a - 1.0), places=15)

    def test_cached_reports_keep_scheme_name(self):
        first = self.service.frequency_series(self.factory.from_selector('builtin:leapfrog'), 1.0)
        second = self.service.frequency_series(self.factory.make_second_order(0.0), 1.0)
        self.assertEqual(first.terms, second.terms)
        self.assertEqual(second.scheme_name, 'second(alpha=0.0)')

    def test_unsupported_order(self):
        with self.assertRaises(DomainError):
            self.service.frequency_series(self.factory.make_second_order(0.0), 1.0, max_order=5)


class EffectiveParamsTest(SimpleTestCase):
    def setUp(self):
        self.service = OscillatorService()
        self.algebra = CoefficientService()

    def test_zero_step(self):
        e = self.algebra.raw_error_coefficients(self.algebra.family_point(0.1, 0.2))
        effective = self.service.effective_params(e, 1.4, 0.0)
        self.assertEqual(effective.m_star, 1.0)
        self.assertAlmostEqual(effective.k_star, 1.4 ** 2, places=15)

    def test_leapfrog_agrees_to_sixth_order(self):
        scheme = SchemeFactory().make_second_order(0.0)
        e = self.algebra.coefficients_for_scheme(scheme)
        differences = []
        for eps in (0.1, 0.05):
            differences.append(abs(
                self.service.effective_params(e, 1.0, eps).omega_a - self.service.approx_frequency(scheme, 1.0, eps)
            ))
        self.assertLess(differences[0], 1e-8)
        self.assertGreater(differences[0] / differences[1], 50.0)
        self.assertLess(differences[0] / differences[1], 80.0)

    def test_fourth_order_mass(self):
        e = self.algebra.raw_error_coefficients(self.algebra.family_point(1.0 / 6.0, 0.0))
        omega, eps = 1.0, 0.2
        effective = self.service.effective_params(e, omega, eps)
        self.assertAlmostEqual(effective.m_star, 1.0 / (1.0 - 4.0 * eps ** 4 * e.e_ttvtv), places=14)


class EnergyErrorTest(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.service = OscillatorService()
        self.factory = SchemeFactory()

    def test_exact_rotation_conserves_energy(self):
        self.assertLess(abs(self.service.one_period_energy_error(None, 1.3, 0.7, 0.4, 16)), 1e-50)

    def test_too_few_steps(self):
        with self.assertRaises(DomainError):
            self.service.one_period_energy_error(self.factory.make_second_order(0.0), 1.0, 1.0, 1.0, 3)

    def test_leapfrog_is_fourth_order_after_one_period(self):
        report = self.service.energy_error_series(self.factory.make_second_order(0.0), 1.0, 0.8, 0.6)
        self.assertEqual(report.leading_order, 4)
        self.assertLess(abs(report.coefficient(2)), 1e-20)
        expected = -math.pi * 0.8 * 0.6 / 48.0
        self.assertLess(abs(report.coefficient(4) - expected), 1e-6 * abs(expected))

    def test_general_second_order_prediction(self):
        rng = np.random.default_rng(5)
        for alpha in rng.uniform(-0.5, 0.5, 3):
            report = self.service.energy_error_series(self.factory.make_second_order(float(alpha)), 1.0, 1.0, 0.5)
            predicted = report.terms[1].predicted
            self.assertLess(abs(report.coefficient(4) - predicted), 1e-6 * abs(predicted))

    def test_correctable_second_order_is_sixth_order(self):
        q0, p0 = 0.9, 0.7
        report = self.service.energy_error_series(self.factory.make_second_order(1.0 / 24.0), 1.0, q0, p0)
        self.assertEqual(report.leading_order, 6)
        expected = math.pi / 2160.0 * p0 * q0
        self.assertLess(abs(report.coefficient(6) - expected), 1e-6 * expected)
        self.assertAlmostEqual(report.terms[2].predicted, expected, places=15)

    def test_correctable_second_order_at_unit_state(self):
        report = self.service.energy_error_series(self.factory.make_second_order(1.0 / 24.0), 1.0, 1.0, 1.0)
        expected = math.pi / 2160.0
        self.assertEqual(report.leading_order, 6)
        self.assertLess(abs(report.coefficient(6) - expected), 1e-6 * expected)

    def test_extraction_settles_at_the_shared_zero(self):
        t0 = 0.242659
        scheme = self.factory.make_4acb(t0, CoefficientService().correctable_alpha(t0))
        report = self.service.energy_error_series(scheme, 1.0, 1.0, 1.0)
        self.assertLess(abs(report.coefficient(10)), 1e-9)

    def test_correctable_second_order_from_turning_point(self):
        for q0, p0 in ((1.0, 0.0), (0.0, 1.0)):
            report = self.service.energy_error_series(self.factory.make_second_order(1.0 / 24.0), 1.0, q0, p0)
            self.assertLess(abs(report.coefficient(4)), 1e-20)
            self.assertLess(abs(report.coefficient(6)), 1e-20)
            self.assertTrue(report.leading_order is None or report.leading_order >= 10)

    def test_fourth_order_e8_prediction(self):
        rng = np.random.default_rng(6)
        for t0, alpha in zip(rng.uniform(0.05, 0.2, 3), rng.uniform(0.0, 1.0, 3)):
            scheme = self.factory.make_4acb(float(t0), float(alpha))
            report = self.service.energy_error_series(scheme, 1.0, 0.6, 0.8)
            self.assertEqual(report.leading_order, 8)
            predicted = report.terms[3].predicted
            self.assertLess(abs(report.coefficient(8) - predicted), 1e-4 * abs(predicted))

    def test_correctable_fourth_order_is_tenth_order(self):
        t0 = 0.1
        scheme = self.factory.make_4acb(t0, CoefficientService().correctable_alpha(t0))
        report = self.service.energy_error_series(scheme, 1.0, 0.6, 0.8)
        self.assertTrue(report.leading_order is None or report.leading_order >= 10)

    def test_precision_is_configurable(self):
        report = OscillatorService(precision=80).energy_error_series(self.factory.make_second_order(0.0), 1.0, 0.8, 0.6)
        self.assertEqual(report.precision, 80)
        self.assertEqual(report.leading_order, 4)


class ShadowTrajectoryTest(SimpleTestCase):
    def test_drift_starts_at_zero_and_stays_small(self):
        service = OscillatorService()
        samples = service.shadow_trajectory(
            SchemeFactory().make_second_order(0.0), 1.0, PhaseState(q=[1.0], p=[0.0]), 0.05, 400, sample_every=20,
        )
        self.assertEqual(len(samples), 21)
        self.assertEqual(samples[0].drift, 0.0)
        self.assertLess(max(abs(sample.drift) for sample in samples), 1e-5)
        self.assertGreater(max(abs(sample.energy - samples[0].energy) for sample in samples), 1e-5)


class SeriesFitTest(SimpleTestCase):
    def setUp(self):
        self.ctx = make_context(50)

    def test_polynomial_recovered(self):
        h = [self.ctx.mpf(1) / 4 ** k for k in range(6)]
        y = [3 + 2 * x - 5 * x ** 2 for x in h]
        coefficients = fit_power_series(self.ctx, h, y)
        self.assertAlmostEqual(float(coefficients[0]), 3.0, places=14)
        self.assertAlmostEqual(float(coefficients[1]), 2.0, places=14)
        self.assertAlmostEqual(float(coefficients[2]), -5.0, places=14)

    def test_unsettled_ladder_raises(self):
        h = [self.ctx.mpf(1) / 2 ** k for k in range(5)]
        y = [self.ctx.sqrt(x) for x in h]
        with self.assertRaises(ExtractionError):
            extract_coefficients(self.ctx, h, y, 2, 1e-6, 1e-20, 'sqrt')

    def test_vanishing_coefficients_use_the_sample_floor(self):
        h = [self.ctx.mpf(1) / 100 / 2 ** k for k in range(9)]
        y = [x ** 5 * self.ctx.exp(x) for x in h]
        fitted = extract_coefficients(self.ctx, h, y, 5, 1e-6, 1e-20, 'h^5 exp(h)')
        self.assertTrue(all(abs(value) < 1e-9 for value, _ in fitted))

    def test_short_ladder_raises(self):
        with self.assertRaises(ExtractionError):
            extract_coefficients(self.ctx, [self.ctx.mpf(1)], [self.ctx.mpf(1)], 1, 1e-6, 1e-20, 'short')

    def test_lift_recovers_fractions(self):
        self.assertEqual(lift(self.ctx, 1.0 / 24.0), self.ctx.mpf(1) / 24)
        self.assertEqual(lift(self.ctx, math.pi), self.ctx.mpf(math.pi))

    def test_correctable_alpha_is_snapped(self):
        t0 = 0.1
        alpha = CoefficientService().correctable_alpha(t0)
        stages = extended_stages(self.ctx, SchemeFactory().make_4acb(t0, alpha))
        outer, inner = stages[1][2], stages[3][2]
        snapped = 2 * outer / (2 * outer + inner)
        self.assertLess(abs(snapped - CoefficientService().correctable_alpha(self.ctx.mpf(1) / 10)), 1e-45)


@override_settings(LADDER_DEPTH=3)
class ShortLadderTest(SimpleTestCase):
    def test_too_shallow_for_requested_orders(self):
        cache.clear()
        with self.assertRaises(ExtractionError):
            OscillatorService().frequency_series(SchemeFactory().make_second_order(0.0), 1.0, max_order=6)


class GlobalErrorSlopeTest(SimpleTestCase):
    def setUp(self):
        self.service = OscillatorService()
        self.factory = SchemeFactory()
        self.n_values = [256, 512, 1024, 2048, 4096]

    def test_algorithm_c_is_fourth_order(self):
        slope = self.service.global_error_slope(self.factory.from_builtin('C'), 1.0, self.n_values)
        self.assertAlmostEqual(slope, 4.0, delta=0.1)

    def test_leapfrog_is_second_order(self):
        slope = self.service.global_error_slope(self.factory.make_second_order(0.0), 1.0, self.n_values)
        self.assertAlmostEqual(slope, 2.0, delta=0.1)

    def test_needs_two_step_counts(self):
        with self.assertRaises(DomainError):
            self.service.global_error_slope(self.factory.make_second_order(0.0), 1.0, [256])
