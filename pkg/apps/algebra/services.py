import logging
from typing import List, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy.optimize import brentq

from apps.common.exceptions import CapabilityError, DomainError, PoleError
from apps.splitting.models import SplittingScheme
from .models import ErrorCoefficientSet, FamilyPoint

logger = logging.getLogger('apps.algebra')

# Cubic factors of the correctable-alpha denominator, highest power first:
# 1 - 12 t (1 - 2t)^2 and 1 - 6 t (1 + 2t - 4t^2)
DENOMINATOR_FACTORS = (
    (-48.0, 48.0, -12.0, 1.0),
    (24.0, -12.0, -6.0, 1.0),
)


class CoefficientService:
    """Closed-form error coefficients of the seven-stage frame and the 4ACB family."""

    def raw_error_coefficients(self, point: FamilyPoint) -> ErrorCoefficientSet:
        t0, t1, v1, v2, u0, a = point.t0, point.t1, point.v1, point.v2, point.u0, point.alpha
        s = 2.0 * v1 + v2

        e_t = 2.0 * (t0 + t1)
        e_v = s
        e_ttv = -(t1 ** 2 * (-4.0 * v1 + v2) + t0 ** 2 * s + 2.0 * t0 * t1 * s) / 6.0
        e_vtv = (6.0 * u0 - t0 * s ** 2 + t1 * (2.0 * v1 ** 2 + 2.0 * v1 * v2 - v2 ** 2)) / 6.0
        e_ttttv = (
            7.0 * t0 ** 3 * (t0 + 4.0 * t1) * s
            + t1 ** 3 * (4.0 * t0 + t1) * (7.0 * v2 - 16.0 * v1)
            + 6.0 * t0 ** 2 * t1 ** 2 * (4.0 * v1 + 7.0 * v2)
        ) / 360.0
        e_vtttv = (
            2.0 * t0 ** 2 * (t0 + 3.0 * t1) * s ** 2
            - 6.0 * t0 * t1 ** 2 * (6.0 * v1 ** 2 + v1 * v2 - v2 ** 2)
            + t1 ** 3 * (8.0 * v1 ** 2 - 7.0 * v1 * v2 + 2.0 * v2 ** 2)
        ) / 90.0
        e_ttvtv = (
            t0 ** 3 * s ** 2
            + t1 ** 2 * (10.0 * (3.0 * a - 1.0) * u0 + t1 * (-16.0 * v1 ** 2 + 4.0 * v1 * v2 + v2 ** 2))
            + t0 ** 2 * (-10.0 * u0 + t1 * (2.0 * v1 ** 2 + 2.0 * v1 * v2 + 3.0 * v2 ** 2))
            + t0 * t1 * (-20.0 * u0 + t1 * (12.0 * v1 ** 2 + 2.0 * v1 * v2 + 3.0 * v2 ** 2))
        ) / 60.0
        e_vtvtv = (
            2.0 * t0 ** 2 * s ** 3
            - 4.0 * t0 * s * (5.0 * u0 + t1 * (v1 ** 2 + v1 * v2 - v2 ** 2))
            + t1 * (
                10.0 * u0 * (2.0 * v1 + (3.0 * a - 2.0) * v2)
                - t1 * (4.0 * v1 ** 3 + v1 ** 2 * v2 + 3.0 * v1 * v2 ** 2 - 2.0 * v2 ** 3)
            )
        ) / 60.0

        return ErrorCoefficientSet(
            e_t=e_t, e_v=e_v, e_ttv=e_ttv, e_vtv=e_vtv,
            e_ttttv=e_ttttv, e_vtttv=e_vtttv, e_ttvtv=e_ttvtv, e_vtvtv=e_vtvtv,
        )

    def family_point(self, t0: float, alpha: float) -> FamilyPoint:
        """Solve the fourth-order conditions for a given t0."""
        self._check_t0(t0)
        w = 1.0 - 2.0 * t0
        v1 = 1.0 / (6.0 * w * w)
        return FamilyPoint(
            t0=t0,
            t1=0.5 - t0,
            v1=v1,
            v2=1.0 - 2.0 * v1,
            u0=(1.0 - 1.0 / w + 1.0 / (6.0 * w * w * w)) / 12.0,
            alpha=alpha,
        )

    def fourth_family_coefficients(self, t0: float, alpha: float) -> Tuple[float, float]:
        """(e_ttvtv, e_vtvtv) of 4ACB(t0, alpha) from the reduced closed forms."""
        self._check_t0(t0)
        w = 1.0 - 2.0 * t0
        e_ttvtv = (
            1.0 + 5.0 * alpha - 12.0 * t0 * (1.0 + 5.0 * alpha + 20.0 * alpha * t0 * (-1.0 + t0))
        ) / (2880.0 * w)
        e_vtvtv = (
            1.0 + 10.0 * alpha - 6.0 * t0 * (
                3.0 + 30.0 * alpha - t0 * (
                    9.0 + 210.0 * alpha + 8.0 * t0 * (
                        1.0 - 85.0 * alpha - 3.0 * t0 * (1.0 - 40.0 * alpha + 20.0 * alpha * t0)
                    )
                )
            )
        ) / (4320.0 * w ** 4)
        return e_ttvtv, e_vtvtv

    def correctable_alpha_denominator(self, t0: float) -> float:
        return 5.0 * (1.0 - 12.0 * t0 * (1.0 - 2.0 * t0) ** 2) * (1.0 - 6.0 * t0 * (1.0 + 2.0 * t0 - 4.0 * t0 ** 2))

    def correctable_alpha(self, t0: float) -> float:
        """alpha(t0) with e_ttvtv = e_vtvtv."""
        self._check_t0(t0)
        denominator = self.correctable_alpha_denominator(t0)
        if abs(denominator) < settings.POLE_DENOMINATOR_TOLERANCE:
            logger.warning(f"Correctable alpha pole at t0={t0!r}", extra={'t0': t0, 'denominator': denominator})
            raise PoleError(f"Correctable alpha diverges at t0={t0!r}", t0=t0, denominator=denominator)
        numerator = 1.0 + 6.0 * t0 * (-3.0 + 4.0 * t0 * (6.0 + t0 * (-23.0 + 24.0 * t0)))
        return numerator / denominator

    def correctable_alpha_poles(self, interval: Sequence[float]) -> List[float]:
        """Real roots of the correctable-alpha denominator inside [a, b], ascending."""
        low, high = min(interval), max(interval)
        poles = []
        for coefficients in DENOMINATOR_FACTORS:
            polynomial = np.poly1d(coefficients)
            for root in np.roots(coefficients):
                if abs(root.imag) > 1e-9:
                    continue
                location = float(root.real)
                width = 1e-7 * max(1.0, abs(location))
                a, b = location - width, location + width
                if polynomial(a) * polynomial(b) < 0.0:
                    location = brentq(polynomial, a, b, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)
                if low <= location <= high:
                    poles.append(location)
        return sorted(poles)

    def simultaneous_zero_residual(self, t0: float) -> float:
        """e_vtvtv at the alpha that makes e_ttvtv vanish."""
        base, _ = self.fourth_family_coefficients(t0, 0.0)
        slope = self.fourth_family_coefficients(t0, 1.0)[0] - base
        if slope == 0.0:
            raise DomainError(f"e_ttvtv does not depend on alpha at t0={t0!r}")
        return self.fourth_family_coefficients(t0, -base / slope)[1]

    def is_correctable_second_order(self, coefficients: ErrorCoefficientSet) -> bool:
        return abs(coefficients.e_ttv - coefficients.e_vtv) <= settings.COEFFICIENT_EQUALITY_TOLERANCE

    def is_correctable_fourth_order(self, coefficients: ErrorCoefficientSet) -> bool:
        return abs(coefficients.e_ttvtv - coefficients.e_vtvtv) <= settings.COEFFICIENT_EQUALITY_TOLERANCE

    def is_fourth_order(self, coefficients: ErrorCoefficientSet) -> bool:
        tol = settings.COEFFICIENT_EQUALITY_TOLERANCE
        return (abs(coefficients.e_t - 1.0) <= tol and abs(coefficients.e_v - 1.0) <= tol
                and abs(coefficients.e_ttv) <= tol and abs(coefficients.e_vtv) <= tol)

    def second_order_embedding(self, alpha: float) -> FamilyPoint:
        """D(1/2) K(1, alpha) D(1/2) written in the seven-stage frame."""
        return FamilyPoint(t0=0.25, t1=0.25, v1=0.0, v2=1.0, u0=alpha, alpha=0.0)

    def frame_from_scheme(self, scheme: SplittingScheme) -> FamilyPoint:
        """Recover frame parameters from a 3- or 7-stage drift-first palindrome."""
        kinds = [stage.is_drift for stage in scheme.stages]
        stages = scheme.stages
        if kinds == [True, False, True]:
            return self.second_order_embedding(stages[1].grad_weight)
        if kinds == [True, False, True, False, True, False, True]:
            outer, inner = stages[1].grad_weight, stages[3].grad_weight
            u0 = 2.0 * outer + inner
            if u0 == 0.0:
                if outer != 0.0:
                    raise CapabilityError(
                        f"Gradient weights of '{scheme.name}' cancel; alpha is undefined",
                        scheme=scheme.name,
                    )
                alpha = 0.0
            else:
                alpha = 2.0 * outer / u0
            return FamilyPoint(
                t0=stages[0].weight, t1=stages[2].weight,
                v1=stages[1].weight, v2=stages[3].weight,
                u0=u0, alpha=alpha,
            )
        raise CapabilityError(
            f"Scheme '{scheme.name}' lies outside the seven-stage drift-first frame",
            scheme=scheme.name,
        )

    def coefficients_for_scheme(self, scheme: SplittingScheme) -> ErrorCoefficientSet:
        return self.raw_error_coefficients(self.frame_from_scheme(scheme))

    @staticmethod
    def _check_t0(t0: float) -> None:
        if t0 == 0.5:
            raise DomainError("t0 = 1/2 is outside the 4ACB family (v1 is singular)", t0=t0)
