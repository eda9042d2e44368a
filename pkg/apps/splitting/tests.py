import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import DomainError, ForceModelError, SchemeValidationError, SingularityError, ConfigurationError
from .factories import PhaseStateFactory, PlanarPhaseStateFactory, RandomPhaseStateFactory, SecondOrderSchemeFactory
from .forces import ForceModel, harmonic_force_model, kepler_force_model
from .models import PhaseState, SplittingScheme, Stage
from .repositories import SchemeRepository
from .services import FORWARD_LIMIT_T0, IntegratorService, SchemeFactory


class PhaseStateModelTest(SimpleTestCase):
    def test_state_is_read_only(self):
        state = PhaseStateFactory()
        with self.assertRaises(ValueError):
            state.q[0] = 2.0

    def test_mismatched_dimensions_rejected(self):
        with self.assertRaises(DomainError):
            PhaseState(q=[1.0, 0.0], p=[0.0])

    def test_non_finite_rejected(self):
        with self.assertRaises(DomainError):
            PhaseState(q=[float('nan')], p=[0.0])

    def test_three_dimensions_rejected(self):
        with self.assertRaises(DomainError):
            PhaseState(q=[1.0, 0.0, 0.0], p=[0.0, 0.0, 0.0])


class SplittingSchemeModelTest(SimpleTestCase):
    def test_drift_with_gradient_weight_rejected(self):
        with self.assertRaises(SchemeValidationError) as ctx:
            Stage('drift', 0.5, 0.1)
        self.assertEqual(ctx.exception.invariant, 'drift-grad-weight')

    def test_weight_sum_enforced(self):
        with self.assertRaises(SchemeValidationError) as ctx:
            SplittingScheme('bad', (Stage.drift(0.5), Stage.kick(0.9), Stage.drift(0.5)), 2)
        self.assertEqual(ctx.exception.invariant, 'weight-sum')

    def test_palindrome_enforced(self):
        with self.assertRaises(SchemeValidationError) as ctx:
            SplittingScheme('bad', (Stage.drift(0.25), Stage.kick(1.0), Stage.drift(0.75)), 2)
        self.assertEqual(ctx.exception.invariant, 'palindrome')

    def test_empty_scheme_rejected(self):
        with self.assertRaises(SchemeValidationError):
            SplittingScheme('empty', (), 2)


class SchemeFactoryTest(SimpleTestCase):
    def setUp(self):
        self.factory = SchemeFactory()

    def test_second_order_stages(self):
        scheme = self.factory.make_second_order(1.0 / 24.0)
        self.assertEqual(len(scheme.stages), 3)
        self.assertEqual(scheme.stages[1].grad_weight, 1.0 / 24.0)
        self.assertEqual(scheme.nominal_order, 2)
        self.assertTrue(scheme.forward)

    def test_second_order_matches_factory(self):
        scheme = self.factory.make_second_order(0.3)
        self.assertEqual(scheme.fingerprint(), SecondOrderSchemeFactory(alpha=0.3).fingerprint())

    def test_algorithm_c_weights(self):
        scheme = self.factory.make_4acb(1.0 / 6.0, 0.0)
        weights = [stage.weight for stage in scheme.stages]
        expected = [1 / 6, 3 / 8, 1 / 3, 1 / 4, 1 / 3, 3 / 8, 1 / 6]
        for got, want in zip(weights, expected):
            self.assertAlmostEqual(got, want, places=15)
        self.assertAlmostEqual(scheme.stages[3].grad_weight, 1.0 / 192.0, places=15)
        self.assertEqual(scheme.stages[1].grad_weight, 0.0)
        self.assertTrue(self.factory.is_forward(scheme))

    def test_alpha_splits_gradient(self):
        scheme = self.factory.make_4acb(0.1, 0.4)
        u0 = 2.0 * scheme.stages[1].grad_weight + scheme.stages[3].grad_weight
        self.assertAlmostEqual(2.0 * scheme.stages[1].grad_weight / u0, 0.4, places=12)

    def test_forward_limit_has_vanishing_middle_kick(self):
        scheme = self.factory.make_4acb(FORWARD_LIMIT_T0, 0.0)
        self.assertLess(abs(scheme.stages[3].weight), 1e-14)

    def test_beyond_forward_limit_warns(self):
        with self.assertLogs('apps.splitting', level='WARNING') as logs:
            scheme = self.factory.make_4acb(0.25, 0.0)
        self.assertLess(scheme.stages[3].weight, 0.0)
        self.assertFalse(self.factory.is_forward(scheme))
        self.assertIn('not a forward scheme', logs.output[0])

    def test_half_is_outside_family(self):
        with self.assertRaises(DomainError):
            self.factory.make_4acb(0.5, 0.0)

    def test_builtin_presets(self):
        self.assertEqual(self.factory.from_selector('builtin:leapfrog').name, 'leapfrog')
        self.assertEqual(self.factory.from_selector('builtin:TI').stages[1].grad_weight, 1.0 / 24.0)
        self.assertEqual(self.factory.from_selector('builtin:C').fingerprint(),
                         self.factory.make_4acb(1.0 / 6.0, 0.0).fingerprint())
        self.assertEqual(self.factory.from_selector('builtin:Opt-C').params.t0, 0.166160)

    def test_selector_with_fraction_arguments(self):
        scheme = self.factory.from_selector('builtin:4acb(t0=1/6,alpha=0)')
        self.assertEqual(scheme.params.t0, 1.0 / 6.0)
        self.assertEqual(scheme.params.alpha, 0.0)

    def test_selector_errors(self):
        with self.assertRaises(ConfigurationError):
            self.factory.from_selector('builtin:nope')
        with self.assertRaises(ConfigurationError):
            self.factory.from_selector('builtin:4acb(t0=0.1)')
        with self.assertRaises(ConfigurationError):
            self.factory.from_selector('leapfrog')
        with self.assertRaises(ConfigurationError):
            self.factory.from_selector('builtin:second(alpha=x)')


class SchemeRepositoryTest(SimpleTestCase):
    def setUp(self):
        self.repo = SchemeRepository()
        self.factory = SchemeFactory()

    def test_round_trip_is_exact(self):
        for scheme in (self.factory.make_4acb(1.0 / 6.0, 0.0),
                       self.factory.make_4acb(0.1213, 0.37),
                       self.factory.make_second_order(1.0 / 24.0)):
            loaded = self.repo.load_scheme(self.repo.save_scheme(scheme))
            self.assertEqual(loaded, scheme)

    def test_kick_weights_summing_to_point_nine(self):
        document = {
            'name': 'short',
            'nominal_order': 2,
            'stages': [
                {'kind': 'drift', 'weight': 0.5},
                {'kind': 'kick', 'weight': 0.9, 'grad_weight': 0.0},
                {'kind': 'drift', 'weight': 0.5},
            ],
        }
        with self.assertRaises(SchemeValidationError) as ctx:
            self.repo.load_scheme(document)
        self.assertEqual(ctx.exception.invariant, 'weight-sum')

    def test_non_palindromic_document(self):
        document = {
            'name': 'lopsided',
            'nominal_order': 2,
            'stages': [
                {'kind': 'drift', 'weight': 0.25},
                {'kind': 'kick', 'weight': 1.0},
                {'kind': 'drift', 'weight': 0.75},
            ],
        }
        with self.assertRaises(SchemeValidationError) as ctx:
            self.repo.load_scheme(document)
        self.assertEqual(ctx.exception.invariant, 'palindrome')

    def test_unknown_key_rejected(self):
        document = self.repo.scheme_to_document(self.factory.make_second_order(0.0))
        document['colour'] = 'blue'
        with self.assertRaises(SchemeValidationError) as ctx:
            self.repo.load_scheme(document)
        self.assertEqual(ctx.exception.invariant, 'unknown_keys')

    def test_malformed_text(self):
        with self.assertRaises(SchemeValidationError) as ctx:
            self.repo.load_scheme('{"name": ')
        self.assertEqual(ctx.exception.invariant, 'format')

    def test_hand_written_leapfrog(self):
        text = '''
        {"name": "leapfrog", "nominal_order": 2,
         "stages": [{"kind": "drift", "weight": 0.5},
                    {"kind": "kick", "weight": 1},
                    {"kind": "drift", "weight": 0.5}]}
        '''
        scheme = self.repo.load_scheme(text)
        self.assertEqual(scheme.fingerprint(), self.factory.make_second_order(0.0).fingerprint())
        self.assertIsNone(scheme.params)

    def test_file_round_trip(self):
        import tempfile
        from pathlib import Path

        scheme = self.factory.make_4acb(0.2, 0.5)
        with tempfile.TemporaryDirectory() as directory:
            path = self.repo.write_file(scheme, Path(directory) / 'scheme.json')
            self.assertEqual(self.factory.from_selector(f'file:{path}'), scheme)

    def test_builtin_table_lists_presets(self):
        names = [entry['name'] for entry in self.repo.builtin_table()]
        self.assertEqual(names, ['leapfrog', 'TI', 'second', '4acb', 'C', 'Opt-C'])


class ForceModelTest(SimpleTestCase):
    def test_harmonic_verifies(self):
        rng = np.random.default_rng(1)
        harmonic_force_model(1.3).verify(rng.uniform(-2.0, 2.0, size=(10, 1)))

    def test_kepler_verifies(self):
        rng = np.random.default_rng(2)
        points = rng.uniform(0.5, 3.0, size=(10, 2)) * rng.choice([-1.0, 1.0], size=(10, 2))
        kepler_force_model().verify(points)

    def test_wrong_gradient_detected(self):
        good = harmonic_force_model(1.0)
        broken = ForceModel(
            name='broken', dimension=1, potential=good.potential, force=good.force,
            force_gradient=lambda q: 3.0 * q, hessian=good.hessian,
            third_derivatives=good.third_derivatives,
        )
        with self.assertRaises(ForceModelError):
            broken.verify([np.array([0.7])])

    def test_kepler_hessian_matches_force(self):
        model = kepler_force_model()
        q = np.array([0.8, -1.1])
        step = 1e-6
        numeric = np.column_stack([
            -(model.force(q + step * e) - model.force(q - step * e)) / (2.0 * step) for e in np.eye(2)
        ])
        np.testing.assert_allclose(model.hessian(q), numeric, rtol=1e-7, atol=1e-9)


class IntegratorServiceTest(SimpleTestCase):
    def setUp(self):
        self.integrator = IntegratorService()
        self.factory = SchemeFactory()
        self.harmonic = harmonic_force_model(1.0)
        self.kepler = kepler_force_model()

    def test_zero_step_is_identity(self):
        state = RandomPhaseStateFactory()
        for scheme in (self.factory.make_second_order(0.1), self.factory.make_4acb(1.0 / 6.0, 0.0)):
            result = self.integrator.step_once(scheme, self.harmonic, state, 0.0)
            self.assertEqual(result.q.tolist(), state.q.tolist())
            self.assertEqual(result.p.tolist(), state.p.tolist())

    def test_leapfrog_single_step(self):
        state = PhaseStateFactory()
        result = self.integrator.step_once(self.factory.make_second_order(0.0), self.harmonic, state, 0.1)
        self.assertAlmostEqual(result.q[0], 0.995, places=15)
        self.assertAlmostEqual(result.p[0], -0.1, places=15)
        self.assertAlmostEqual(result.t, 0.1, places=15)

    def test_gradient_kick_single_step(self):
        # G = 2 omega^4 q is evaluated after the first half drift, where q is still 1
        state = PhaseStateFactory()
        result = self.integrator.step_once(self.factory.make_second_order(1.0 / 24.0), self.harmonic, state, 0.1)
        p_expected = -0.1 + 0.001 * (1.0 / 24.0) * 2.0
        self.assertAlmostEqual(result.p[0], p_expected, places=15)
        self.assertAlmostEqual(result.q[0], 1.0 + 0.05 * p_expected, places=15)

    def test_negative_step_rejected(self):
        with self.assertRaises(DomainError):
            self.integrator.step_once(self.factory.make_second_order(0.0), self.harmonic, PhaseStateFactory(), -0.1)

    def test_one_step_integrate_equals_step_once(self):
        scheme = self.factory.make_4acb(0.1, 0.3)
        state = RandomPhaseStateFactory()
        single = self.integrator.step_once(scheme, self.harmonic, state, 0.07)
        [integrated] = self.integrator.integrate(scheme, self.harmonic, state, 0.07, 1)
        self.assertEqual(single.q.tolist(), integrated.q.tolist())
        self.assertEqual(single.p.tolist(), integrated.p.tolist())

    def test_sampling_includes_final_state(self):
        samples = self.integrator.integrate(
            self.factory.make_second_order(0.0), self.harmonic, PhaseStateFactory(), 0.01, 10, sample_every=3
        )
        self.assertEqual(len(samples), 4)
        self.assertAlmostEqual(samples[-1].t, 0.1, places=14)
        self.assertAlmostEqual(samples[0].t, 0.03, places=14)

    def test_invalid_counts(self):
        scheme = self.factory.make_second_order(0.0)
        with self.assertRaises(DomainError):
            self.integrator.integrate(scheme, self.harmonic, PhaseStateFactory(), 0.1, 0)
        with self.assertRaises(DomainError):
            self.integrator.integrate(scheme, self.harmonic, PhaseStateFactory(), 0.1, 5, sample_every=0)

    def test_leapfrog_period_accuracy(self):
        n = 1000
        s0 = PhaseStateFactory()
        final = self.integrator.integrate(
            self.factory.make_second_order(0.0), self.harmonic, s0, 2.0 * math.pi / n, n, sample_every=n
        )[-1]
        self.assertLess(final.distance_to(s0), 1e-4)
        self.assertAlmostEqual(final.t, 2.0 * math.pi, places=10)

    def test_time_reversal(self):
        schemes = (
            self.factory.make_second_order(1.0 / 24.0),
            self.factory.make_4acb(1.0 / 6.0, 0.0),
            self.factory.make_4acb(0.25, 0.7),
        )
        cases = (
            (self.harmonic, RandomPhaseStateFactory(), 0.05),
            (self.kepler, PlanarPhaseStateFactory(), 0.1),
        )
        for scheme in schemes:
            for force, s0, eps in cases:
                forward = self.integrator.integrate(scheme, force, s0, eps, 100, sample_every=100)[-1]
                back = self.integrator.integrate(scheme, force, forward.with_momentum_flipped(), eps, 100,
                                                 sample_every=100)[-1]
                self.assertLess(back.with_momentum_flipped().distance_to(s0), 1e-10)

    def test_harmonic_step_is_area_preserving(self):
        scheme = self.factory.make_4acb(0.12, 0.3)
        for eps in (0.01, 0.3, 1.1):
            jacobian = self._jacobian(scheme, self.harmonic, np.array([0.4]), np.array([-0.2]), eps, 0.1)
            self.assertAlmostEqual(np.linalg.det(jacobian), 1.0, delta=1e-13)

    def test_kepler_step_is_symplectic(self):
        for scheme in (self.factory.make_second_order(1.0 / 24.0), self.factory.make_4acb(1.0 / 6.0, 0.0)):
            jacobian = self._jacobian(scheme, self.kepler, np.array([10.0, 0.0]), np.array([0.0, 0.1]), 1.0, 1e-6)
            self.assertAlmostEqual(np.linalg.det(jacobian), 1.0, delta=1e-7)

    def test_singularity_identifies_stage(self):
        state = PhaseState(q=[0.0, 0.0], p=[0.0, 0.0])
        with self.assertRaises(SingularityError) as ctx:
            self.integrator.integrate(self.factory.make_second_order(0.0), self.kepler, state, 0.1, 3)
        self.assertEqual(ctx.exception.stage_index, 1)
        self.assertEqual(ctx.exception.step_index, 0)

    def test_convergence_orders(self):
        leapfrog = self.integrator.convergence_slope(self.factory.make_second_order(0.0), 1.0, [256, 512, 1024, 2048, 4096])
        self.assertAlmostEqual(leapfrog, 2.0, delta=0.1)
        fourth = self.integrator.convergence_slope(self.factory.make_4acb(1.0 / 6.0, 0.0), 1.0, [64, 128, 256, 512])
        self.assertAlmostEqual(fourth, 4.0, delta=0.1)

    def test_convergence_logs_slope(self):
        with mock.patch('apps.splitting.services.logger') as logger:
            self.integrator.convergence_slope(self.factory.make_second_order(0.0), 1.0, [256, 512])
        logger.info.assert_called_once()

    def _jacobian(self, scheme, force, q, p, eps, step):
        dimension = q.size
        columns = []
        for index in range(2 * dimension):
            offset = np.zeros(2 * dimension)
            offset[index] = step
            images = []
            for sign in (1.0, -1.0):
                shifted = np.concatenate([q, p]) + sign * offset
                result = self.integrator.step_once(
                    scheme, force, PhaseState(q=shifted[:dimension], p=shifted[dimension:]), eps
                )
                images.append(np.concatenate([result.q, result.p]))
            columns.append((images[0] - images[1]) / (2.0 * step))
        return np.column_stack(columns)
