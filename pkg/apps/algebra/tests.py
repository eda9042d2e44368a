import numpy as np
from django.test import SimpleTestCase
from scipy.optimize import brentq

from apps.common.exceptions import CapabilityError, DomainError, PoleError
from apps.splitting.models import SplittingScheme, Stage
from apps.splitting.services import SchemeFactory
from .models import FamilyPoint
from .services import CoefficientService

FIG_POLE = 0.13882413776781183


class RawErrorCoefficientsTest(SimpleTestCase):
    def setUp(self):
        self.service = CoefficientService()

    def test_second_order_embedding(self):
        for alpha in (0.0, 1.0 / 24.0, 0.3):
            e = self.service.raw_error_coefficients(self.service.second_order_embedding(alpha))
            self.assertAlmostEqual(e.e_t, 1.0, places=15)
            self.assertAlmostEqual(e.e_v, 1.0, places=15)
            self.assertAlmostEqual(e.e_ttv, -1.0 / 24.0, places=15)
            self.assertAlmostEqual(e.e_vtv, alpha - 1.0 / 12.0, places=15)
            self.assertAlmostEqual(e.e_ttvtv, 1.0 / 480.0 - alpha / 24.0, places=15)
            self.assertAlmostEqual(e.e_vtvtv, 1.0 / 120.0 - alpha / 6.0, places=15)

    def test_zero_scheme(self):
        e = self.service.raw_error_coefficients(FamilyPoint(0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
        self.assertTrue(all(value == 0.0 for value in e.as_dict().values()))

    def test_coefficient_names(self):
        e = self.service.raw_error_coefficients(self.service.family_point(0.1, 0.0))
        self.assertEqual(
            list(e.as_dict()),
            ['e_t', 'e_v', 'e_ttv', 'e_vtv', 'e_ttttv', 'e_vtttv', 'e_ttvtv', 'e_vtvtv'],
        )


class FamilyPointTest(SimpleTestCase):
    def setUp(self):
        self.service = CoefficientService()

    def test_algorithm_c_point(self):
        point = self.service.family_point(1.0 / 6.0, 0.0)
        self.assertAlmostEqual(point.t1, 1.0 / 3.0, places=15)
        self.assertAlmostEqual(point.v1, 3.0 / 8.0, places=15)
        self.assertAlmostEqual(point.v2, 1.0 / 4.0, places=15)
        self.assertAlmostEqual(point.u0, 1.0 / 192.0, places=15)

    def test_origin_point(self):
        point = self.service.family_point(0.0, 0.0)
        self.assertAlmostEqual(point.v1, 1.0 / 6.0, places=15)
        self.assertAlmostEqual(point.v2, 2.0 / 3.0, places=15)
        self.assertAlmostEqual(point.u0, 1.0 / 72.0, places=15)

    def test_fourth_order_conditions_hold(self):
        for t0 in np.linspace(0.0, 0.45, 46):
            e = self.service.raw_error_coefficients(self.service.family_point(float(t0), 0.37))
            self.assertTrue(self.service.is_fourth_order(e), msg=f't0={t0}')

    def test_half_rejected(self):
        with self.assertRaises(DomainError):
            self.service.family_point(0.5, 0.0)
        with self.assertRaises(DomainError):
            self.service.fourth_family_coefficients(0.5, 0.0)


class FourthFamilyCoefficientsTest(SimpleTestCase):
    def setUp(self):
        self.service = CoefficientService()

    def test_origin_values(self):
        e_ttvtv, e_vtvtv = self.service.fourth_family_coefficients(0.0, 0.0)
        self.assertAlmostEqual(e_ttvtv, 1.0 / 2880.0, places=16)
        self.assertAlmostEqual(e_vtvtv, 1.0 / 4320.0, places=16)

    def test_closed_forms_agree_with_frame_route(self):
        for t0 in np.linspace(0.0, 0.45, 100):
            for alpha in (-1.0, 0.0, 0.5, 2.0):
                e = self.service.raw_error_coefficients(self.service.family_point(float(t0), alpha))
                e_ttvtv, e_vtvtv = self.service.fourth_family_coefficients(float(t0), alpha)
                self.assertLess(abs(e.e_ttvtv - e_ttvtv), 1e-12)
                self.assertLess(abs(e.e_vtvtv - e_vtvtv), 1e-12)

    def test_random_parameters_agree(self):
        rng = np.random.default_rng(7)
        for t0, alpha in zip(rng.uniform(-0.2, 0.4, 50), rng.uniform(-3.0, 3.0, 50)):
            e = self.service.raw_error_coefficients(self.service.family_point(float(t0), float(alpha)))
            e_ttvtv, e_vtvtv = self.service.fourth_family_coefficients(float(t0), float(alpha))
            self.assertLess(abs(e.e_ttvtv - e_ttvtv), 1e-12)
            self.assertLess(abs(e.e_vtvtv - e_vtvtv), 1e-12)

    def test_difference_is_affine_in_alpha(self):
        for t0 in (0.0, 0.1, 0.2, 0.3):
            values = [np.subtract(*self.service.fourth_family_coefficients(t0, alpha)) for alpha in (-1.0, 0.5, 2.0)]
            self.assertAlmostEqual((values[1] - values[0]) / 1.5, (values[2] - values[1]) / 1.5, places=12)

    def test_no_simultaneous_zero(self):
        grid = np.linspace(0.0, 0.49, 4901)
        residuals = np.array([self.service.simultaneous_zero_residual(float(t0)) for t0 in grid])
        self.assertTrue(np.all(residuals > 0.0) or np.all(residuals < 0.0))


class CorrectableAlphaTest(SimpleTestCase):
    def setUp(self):
        self.service = CoefficientService()

    def _near_pole(self, t0):
        return abs(t0 - FIG_POLE) < 1e-3

    def test_equalizes_sixth_order_pair(self):
        for t0 in np.linspace(0.0, 0.21, 211):
            t0 = float(t0)
            if self._near_pole(t0):
                continue
            alpha = self.service.correctable_alpha(t0)
            e_ttvtv, e_vtvtv = self.service.fourth_family_coefficients(t0, alpha)
            self.assertLess(abs(e_ttvtv - e_vtvtv), 1e-12, msg=f't0={t0}')

    def test_matches_numerical_root(self):
        for t0 in (0.0, 0.05, 0.1, 0.12, 0.16, 0.2):
            difference = lambda alpha: np.subtract(*self.service.fourth_family_coefficients(t0, alpha))
            root = brentq(difference, -1e3, 1e3, xtol=1e-14)
            self.assertAlmostEqual(root, self.service.correctable_alpha(t0), delta=1e-10)

    def test_pole_reported(self):
        with self.assertRaises(PoleError):
            self.service.correctable_alpha(FIG_POLE)

    def test_pole_located(self):
        poles = self.service.correctable_alpha_poles((0.0, 0.5))
        self.assertEqual(len(poles), 1)
        self.assertAlmostEqual(poles[0], FIG_POLE, delta=1e-12)
        self.assertEqual(self.service.correctable_alpha_poles((0.2, 0.5)), [])

    def test_correctability_predicates(self):
        ti = self.service.raw_error_coefficients(self.service.second_order_embedding(1.0 / 24.0))
        leapfrog = self.service.raw_error_coefficients(self.service.second_order_embedding(0.0))
        self.assertTrue(self.service.is_correctable_second_order(ti))
        self.assertFalse(self.service.is_correctable_second_order(leapfrog))

        t0 = 0.1
        point = self.service.family_point(t0, self.service.correctable_alpha(t0))
        self.assertTrue(self.service.is_correctable_fourth_order(self.service.raw_error_coefficients(point)))
        self.assertFalse(self.service.is_correctable_fourth_order(
            self.service.raw_error_coefficients(self.service.family_point(t0, 0.0))
        ))


class FrameFromSchemeTest(SimpleTestCase):
    def setUp(self):
        self.service = CoefficientService()
        self.factory = SchemeFactory()

    def test_family_member_recovers_point(self):
        scheme = self.factory.make_4acb(0.12, 0.6)
        recovered = self.service.frame_from_scheme(scheme)
        expected = self.service.family_point(0.12, 0.6)
        for key, value in expected.as_dict().items():
            self.assertAlmostEqual(getattr(recovered, key), value, places=14)

    def test_second_order_scheme_embedded(self):
        point = self.service.frame_from_scheme(self.factory.make_second_order(1.0 / 24.0))
        self.assertEqual(point, self.service.second_order_embedding(1.0 / 24.0))

    def test_coefficients_for_algorithm_c(self):
        e = self.service.coefficients_for_scheme(self.factory.from_selector('builtin:C'))
        self.assertTrue(self.service.is_fourth_order(e))
        self.assertAlmostEqual(e.e_ttvtv, -1.0 / 1920.0, places=15)

    def test_other_shapes_unsupported(self):
        kick_first = SplittingScheme(
            'kdk', (Stage.kick(0.5), Stage.drift(1.0), Stage.kick(0.5)), 2
        )
        with self.assertRaises(CapabilityError):
            self.service.frame_from_scheme(kick_first)

    def test_cancelling_gradients_unsupported(self):
        scheme = SplittingScheme('cancel', (
            Stage.drift(0.2), Stage.kick(0.3, 0.01), Stage.drift(0.3), Stage.kick(0.4, -0.02),
            Stage.drift(0.3), Stage.kick(0.3, 0.01), Stage.drift(0.2),
        ), 2)
        with self.assertRaises(CapabilityError):
            self.service.frame_from_scheme(scheme)
