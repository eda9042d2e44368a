import numpy as np
from django.test import SimpleTestCase
from mpmath.ctx_mp import MPContext

from apps.algebra.services import CoefficientService
from apps.common.exceptions import CapabilityError, SingularityError
from apps.splitting.factories import PlanarPhaseStateFactory
from apps.splitting.forces import ForceModel, harmonic_force_model, kepler_force_model
from apps.splitting.models import PhaseState
from apps.splitting.services import IntegratorService, SchemeFactory
from .services import BracketService


def poisson_oracle(q, p):
    """
    Nested Poisson brackets of H = p^2/2 - 1/|q| from directional derivatives.

    {T, W(q)} = -d/ds W(q + s p) and {V, X} = -d/dsigma X(q, p + sigma F), so every
    bracket reduces to derivatives of V or of W = -|F|^2 along p and F.
    """
    ctx = MPContext()
    ctx.dps = 40
    q = [ctx.mpf(float(x)) for x in q]
    p = [ctx.mpf(float(x)) for x in p]

    def potential(x, y):
        return -1 / ctx.sqrt(x * x + y * y)

    def force(x, y):
        return [-ctx.diff(lambda s: potential(x + s, y), 0), -ctx.diff(lambda s: potential(x, y + s), 0)]

    def w(x, y):
        fx, fy = force(x, y)
        return -(fx * fx + fy * fy)

    f = force(*q)

    def along(function, direction, order):
        return ctx.diff(lambda s: function(q[0] + s * direction[0], q[1] + s * direction[1]), 0, order)

    return {
        'tv': -along(potential, p, 1),
        'ttv': along(potential, p, 2),
        'vtv': along(potential, f, 1),
        'tt3v': along(potential, p, 4),
        'vt3v': 3 * ctx.diff(
            lambda s, t: potential(q[0] + s * p[0] + t * f[0], q[1] + s * p[1] + t * f[1]), (0, 0), (2, 1)
        ),
        'ttvtv': along(w, p, 2),
        'vtvtv': along(w, f, 1),
    }


class EvalBracketsTest(SimpleTestCase):
    def setUp(self):
        self.service = BracketService()

    def test_harmonic_closed_forms(self):
        values = self.service.eval_brackets(harmonic_force_model(1.0), PhaseState(q=[2.0], p=[3.0]))
        self.assertAlmostEqual(values.ttv, 9.0, places=14)
        self.assertAlmostEqual(values.vtv, -4.0, places=14)
        self.assertAlmostEqual(values.ttvtv, -18.0, places=14)
        self.assertAlmostEqual(values.vtvtv, 8.0, places=14)
        self.assertEqual(values.tt3v, 0.0)
        self.assertEqual(values.vt3v, 0.0)

    def test_harmonic_with_frequency(self):
        omega, q, p = 1.7, 0.4, -1.2
        values = self.service.eval_brackets(harmonic_force_model(omega), PhaseState(q=[q], p=[p]))
        self.assertAlmostEqual(values.ttv, omega ** 2 * p ** 2, places=12)
        self.assertAlmostEqual(values.vtv, -omega ** 4 * q ** 2, places=12)
        self.assertAlmostEqual(values.ttvtv, -2.0 * omega ** 4 * p ** 2, places=12)
        self.assertAlmostEqual(values.vtvtv, 2.0 * omega ** 6 * q ** 2, places=12)

    def test_momentum_contractions_vanish_at_rest(self):
        values = self.service.eval_brackets(kepler_force_model(), PhaseState(q=[1.3, -0.4], p=[0.0, 0.0]))
        self.assertEqual(values.ttv, 0.0)
        self.assertEqual(values.tt3v, 0.0)
        self.assertEqual(values.tv, 0.0)

    def test_kepler_against_poisson_oracle(self):
        rng = np.random.default_rng(11)
        states = [PlanarPhaseStateFactory()] + [
            PhaseState(q=rng.uniform(0.5, 2.0, 2) * rng.choice([-1.0, 1.0], 2), p=rng.uniform(-1.0, 1.0, 2))
            for _ in range(5)
        ]
        for state in states:
            values = self.service.eval_brackets(kepler_force_model(), state).as_dict()
            oracle = poisson_oracle(state.q, state.p)
            for name, expected in oracle.items():
                expected = float(expected)
                self.assertLessEqual(abs(values[name] - expected), 1e-6 * abs(expected) + 1e-20,
                                     msg=f"{name} at {state}")

    def test_missing_fourth_derivatives(self):
        harmonic = harmonic_force_model(1.0)
        reduced = ForceModel(
            name='no-fourth', dimension=1, potential=harmonic.potential, force=harmonic.force,
            force_gradient=harmonic.force_gradient, hessian=harmonic.hessian,
            third_derivatives=harmonic.third_derivatives,
        )
        state = PhaseState(q=[1.0], p=[1.0])
        partial = self.service.eval_brackets(reduced, state)
        full = self.service.eval_brackets(harmonic, state)
        self.assertIsNone(partial.tt3v)
        self.assertEqual(partial.unavailable, ('tt3v',))
        for name in ('tv', 'ttv', 'vtv', 'vt3v', 'ttvtv', 'vtvtv'):
            self.assertEqual(getattr(partial, name), getattr(full, name))
        partial.require('tv', 'vtvtv')
        with self.assertRaises(CapabilityError) as ctx:
            partial.require('tt3v')
        self.assertEqual(ctx.exception.context['bracket'], 'tt3v')

        algebra = CoefficientService()
        e = algebra.raw_error_coefficients(algebra.second_order_embedding(0.0))
        self.service.modified_hamiltonian(e, reduced, state, 0.1, order=2)
        with self.assertRaises(CapabilityError):
            self.service.modified_hamiltonian(e, reduced, state, 0.1, order=4)


class ModifiedHamiltonianTest(SimpleTestCase):
    def setUp(self):
        self.service = BracketService()
        self.algebra = CoefficientService()
        self.harmonic = harmonic_force_model(1.0)

    def test_zero_step_is_energy(self):
        e = self.algebra.coefficients_for_scheme(SchemeFactory().make_4acb(1.0 / 6.0, 0.0))
        state = PlanarPhaseStateFactory()
        force = kepler_force_model()
        self.assertEqual(self.service.modified_hamiltonian(e, force, state, 0.0), self.service.hamiltonian(force, state))

    def test_second_order_closed_form(self):
        omega, eps, q, p = 1.3, 0.2, 0.7, -0.5
        for alpha in (0.0, 1.0 / 24.0):
            e = self.algebra.raw_error_coefficients(self.algebra.second_order_embedding(alpha))
            value = self.service.modified_hamiltonian(
                e, harmonic_force_model(omega), PhaseState(q=[q], p=[p]), eps, order=2
            )
            expected = (0.5 * p ** 2 + 0.5 * omega ** 2 * q ** 2
                        + eps ** 2 * (e.e_ttv * omega ** 2 * p ** 2 - e.e_vtv * omega ** 4 * q ** 2))
            self.assertAlmostEqual(value, expected, places=14)

    def test_leapfrog_shadow_drift_is_fourth_order(self):
        scheme = SchemeFactory().make_second_order(0.0)
        e = self.algebra.coefficients_for_scheme(scheme)
        integrator = IntegratorService()
        s0 = PhaseState(q=[1.0], p=[0.3])
        drifts = []
        for eps, n in ((0.1, 5000), (0.05, 10000)):
            initial = self.service.modified_hamiltonian(e, self.harmonic, s0, eps, order=2)
            states = integrator.integrate(scheme, self.harmonic, s0, eps, n, sample_every=7)
            drifts.append(max(
                abs(self.service.modified_hamiltonian(e, self.harmonic, s, eps, order=2) - initial) for s in states
            ))
        slope = np.log(drifts[0] / drifts[1]) / np.log(2.0)
        self.assertAlmostEqual(slope, 4.0, delta=0.5)


class KeplerThirdDerivativesTest(SimpleTestCase):
    def setUp(self):
        self.service = BracketService()

    def test_fully_symmetric(self):
        tensor = self.service.kepler_third_derivatives([0.3, -1.4])
        for axes in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
            np.testing.assert_allclose(tensor, np.transpose(tensor, axes), rtol=0, atol=1e-15)

    def test_axis_value(self):
        self.assertAlmostEqual(self.service.kepler_third_derivatives([1.0, 0.0])[0, 0, 0], 6.0, places=12)

    def test_matches_hessian_differences(self):
        hessian = kepler_force_model().hessian
        q = np.array([0.9, 0.6])
        step = 1e-5
        tensor = self.service.kepler_third_derivatives(q)
        for k, direction in enumerate(np.eye(2)):
            numeric = (hessian(q + step * direction) - hessian(q - step * direction)) / (2.0 * step)
            np.testing.assert_allclose(tensor[:, :, k], numeric, rtol=1e-6, atol=1e-8)

    def test_homogeneity(self):
        q = np.array([0.8, 1.1])
        np.testing.assert_allclose(
            self.service.kepler_third_derivatives(2.5 * q),
            2.5 ** -4 * self.service.kepler_third_derivatives(q),
            rtol=1e-13,
        )

    def test_origin_is_singular(self):
        with self.assertRaises(SingularityError):
            self.service.kepler_third_derivatives([0.0, 0.0])
