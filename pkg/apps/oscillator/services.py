import logging
import math
from dataclasses import replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from mpmath.ctx_mp import MPContext
from scipy.optimize import brentq

from apps.algebra.models import ErrorCoefficientSet
from apps.algebra.services import CoefficientService
from apps.brackets.models import ShadowSample
from apps.brackets.services import BracketService
from apps.common.cache_utils import CacheKeys, CacheManager
from apps.common.exceptions import CapabilityError, DomainError, InstabilityError, PoleError
from apps.splitting.forces import harmonic_force_model
from apps.splitting.models import PhaseState, SplittingScheme
from apps.splitting.services import IntegratorService
from .models import EffectiveOscillator, EnergyErrorReport, FrequencyReport, SeriesTerm, StepMatrix
from .series import extract_coefficients

logger = logging.getLogger('apps.oscillator')

LIFT_MAX_DENOMINATOR = 10 ** 6
STABILITY_SCAN_LIMIT = 20.0
STABILITY_SCAN_STEP = 1e-3

# (kind is drift, weight, grad_weight) in extended precision
ExtendedStage = Tuple[bool, object, object]


def make_context(precision: Optional[int] = None) -> MPContext:
    """A private mpmath context, so concurrent computations never share precision state."""
    ctx = MPContext()
    ctx.dps = int(precision or settings.LAB_PRECISION_DIGITS)
    return ctx


def lift(ctx, value: float):
    """
    Extended-precision value of a double.

    A double that is the correctly rounded value of a fraction with a small
    denominator (1/24, 3/8, 0.1, ...) is lifted to that fraction exactly.
    """
    fraction = Fraction(value).limit_denominator(LIFT_MAX_DENOMINATOR)
    if float(fraction) == value:
        return ctx.mpf(fraction.numerator) / fraction.denominator
    return ctx.mpf(value)


def extended_stages(ctx, scheme: SplittingScheme) -> List[ExtendedStage]:
    """Stage weights of scheme at the context's precision."""
    lifted = [(stage.is_drift, lift(ctx, stage.weight), lift(ctx, stage.grad_weight)) for stage in scheme.stages]
    if scheme.params is None or len(scheme.stages) != 7:
        return lifted

    # family members are regenerated from (t0, alpha); a correctable alpha is
    # replaced by its extended value
    coefficients = CoefficientService()
    t0 = lift(ctx, scheme.params.t0)
    alpha = lift(ctx, scheme.params.alpha)
    try:
        correctable = coefficients.correctable_alpha(t0)
        if math.isclose(float(correctable), scheme.params.alpha, rel_tol=1e-13, abs_tol=1e-16):
            alpha = correctable
    except (PoleError, DomainError):
        pass
    point = coefficients.family_point(t0, alpha)
    outer = alpha * point.u0 / 2
    regenerated = [
        (True, point.t0, ctx.zero), (False, point.v1, outer), (True, point.t1, ctx.zero),
        (False, point.v2, (1 - alpha) * point.u0),
        (True, point.t1, ctx.zero), (False, point.v1, outer), (True, point.t0, ctx.zero),
    ]
    for (is_drift, weight, grad), stage in zip(regenerated, scheme.stages):
        if (is_drift != stage.is_drift or abs(float(weight) - stage.weight) > 1e-12 * max(1.0, abs(stage.weight))
                or abs(float(grad) - stage.grad_weight) > 1e-12 * max(1.0, abs(stage.grad_weight))):
            return lifted
    return regenerated


def stage_product(ctx, stages: Sequence[ExtendedStage], omega, eps):
    """M = S_k ... S_1 with drift [[1, eps c], [0, 1]] and kick [[1, 0], [-eps v w^2 + 2 eps^3 u w^4, 1]]."""
    w2 = omega * omega
    w4 = w2 * w2
    eps3 = eps * eps * eps
    m11, m12, m21, m22 = ctx.one, ctx.zero, ctx.zero, ctx.one
    for is_drift, weight, grad in stages:
        if is_drift:
            c = eps * weight
            m11, m12 = m11 + c * m21, m12 + c * m22
        else:
            k = -eps * weight * w2 + 2 * eps3 * grad * w4
            m21, m22 = m21 + k * m11, m22 + k * m12
    return m11, m12, m21, m22


def rotation_product(ctx, omega, eps):
    """Exact flow of the oscillator over eps."""
    c, s = ctx.cos(omega * eps), ctx.sin(omega * eps)
    return c, s / omega, -omega * s, c


class OscillatorService:
    """Exact matrix analysis of symmetric schemes on H = p^2/2 + omega^2 q^2/2."""

    def __init__(self, precision: Optional[int] = None):
        self.precision = int(precision or settings.LAB_PRECISION_DIGITS)
        self.coefficients = CoefficientService()

    def step_matrix(self, scheme: SplittingScheme, omega: float, eps: float) -> StepMatrix:
        if not math.isfinite(eps) or eps < 0.0:
            raise DomainError(f"Step size must be finite and non-negative, got {eps!r}")
        m = np.eye(2)
        w2 = omega * omega
        for stage in scheme.stages:
            if stage.is_drift:
                factor = np.array([[1.0, eps * stage.weight], [0.0, 1.0]])
            else:
                kick = -eps * stage.weight * w2 + 2.0 * eps ** 3 * stage.grad_weight * w2 * w2
                factor = np.array([[1.0, 0.0], [kick, 1.0]])
            m = factor @ m
        return StepMatrix(m11=float(m[0, 0]), m12=float(m[0, 1]), m21=float(m[1, 0]), m22=float(m[1, 1]),
                          omega=omega, eps=eps)

    def approx_frequency(self, scheme: SplittingScheme, omega: float, eps: float) -> float:
        """omega_A = arccos(trace/2)/eps from the exact one-step matrix."""
        if eps == 0.0:
            return float(omega)
        ctx = make_context(self.precision)
        return float(self._omega_a(ctx, extended_stages(ctx, scheme), lift(ctx, omega), lift(ctx, eps)))

    def phase_error(self, scheme: SplittingScheme, omega: float, eps: float) -> float:
        """Phase error per period, 2 pi (omega_A/omega - 1)."""
        return 2.0 * math.pi * (self.approx_frequency(scheme, omega, eps) / omega - 1.0)

    def frequency_series(self, scheme: SplittingScheme, omega: float, max_order: int = 6,
                         eps: Optional[float] = None) -> FrequencyReport:
        if max_order not in (2, 4, 6, 8):
            raise DomainError(f"Frequency series order must be 2, 4, 6 or 8, got {max_order}")
        key = CacheKeys.FREQUENCY_SERIES.format(fingerprint=CacheKeys.fingerprint(
            scheme.fingerprint(), scheme.params, omega, max_order, self.precision,
            settings.FREQUENCY_LADDER_EPS0, settings.LADDER_RATIO, settings.LADDER_DEPTH,
        ))
        report = CacheManager.get_or_compute(key, lambda: self._frequency_series(scheme, omega, max_order))
        if eps is None:
            return replace(report, scheme_name=scheme.name)
        omega_a = self.approx_frequency(scheme, omega, eps)
        return FrequencyReport(
            scheme_name=scheme.name, omega=omega, terms=report.terms, precision=self.precision,
            eps=eps, omega_a=omega_a, phase_error=2.0 * math.pi * (omega_a / omega - 1.0),
        )

    def effective_params(self, coefficients: ErrorCoefficientSet, omega: float, eps: float) -> EffectiveOscillator:
        x2 = (omega * eps) ** 2
        x4 = x2 * x2
        m_star = 1.0 / (1.0 + 2.0 * x2 * coefficients.e_ttv - 4.0 * x4 * coefficients.e_ttvtv)
        k_star = omega * omega * (1.0 - 2.0 * x2 * coefficients.e_vtv + 4.0 * x4 * coefficients.e_vtvtv)
        return EffectiveOscillator(m_star=m_star, k_star=k_star)

    def one_period_energy_error(self, scheme: Optional[SplittingScheme], omega: float, q0: float, p0: float,
                                n: int) -> float:
        """
        H(q_T, p_T) - H(q0, p0) after n steps of eps = T/n.

        scheme None applies the exact rotation instead of a scheme.
        """
        ctx = make_context(self.precision)
        return float(self._energy_deviation(ctx, scheme, lift(ctx, omega), lift(ctx, q0), lift(ctx, p0), n))

    def energy_error_series(self, scheme: SplittingScheme, omega: float, q0: float, p0: float,
                            max_order: int = 10) -> EnergyErrorReport:
        if max_order not in (2, 4, 6, 8, 10):
            raise DomainError(f"Energy series order must be an even number up to 10, got {max_order}")
        key = CacheKeys.ENERGY_SERIES.format(fingerprint=CacheKeys.fingerprint(
            scheme.fingerprint(), scheme.params, omega, q0, p0, max_order, self.precision,
            settings.ENERGY_LADDER_BASE_STEPS, settings.LADDER_DEPTH,
        ))
        report = CacheManager.get_or_compute(
            key, lambda: self._energy_error_series(scheme, omega, q0, p0, max_order)
        )
        return replace(report, scheme_name=scheme.name)

    def global_error_slope(self, scheme: SplittingScheme, omega: float, n_values: Sequence[int],
                           q0: float = 1.0, p0: float = 0.0) -> float:
        """Log-log slope of |z(T) - z0| against eps = T/n, free of double roundoff."""
        if len(n_values) < 2:
            raise DomainError("A convergence slope needs at least two step counts", n_values=list(n_values))
        ctx = make_context(self.precision)
        w, q, p = lift(ctx, omega), lift(ctx, q0), lift(ctx, p0)
        steps, errors = [], []
        for n in n_values:
            q_n, p_n = self._period_state(ctx, scheme, w, q, p, n)
            steps.append(2.0 * math.pi / omega / n)
            errors.append(float(ctx.sqrt((q_n - q) ** 2 + (p_n - p) ** 2)))
        slope = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
        logger.info(
            f"Extended-precision convergence slope of {scheme.name}: {slope:.4f}",
            extra={'scheme': scheme.name, 'omega': omega, 'n_values': list(n_values), 'slope': slope}
        )
        return slope

    def stability_limit(self, scheme: SplittingScheme, omega: float) -> float:
        """Smallest eps at which |trace|/2 first exceeds 1."""
        excess = lambda eps: abs(self.step_matrix(scheme, omega, eps).half_trace) - 1.0
        previous = 0.0
        for x in np.arange(STABILITY_SCAN_STEP, STABILITY_SCAN_LIMIT, STABILITY_SCAN_STEP):
            eps = float(x) / omega
            if excess(eps) > 0.0:
                limit = brentq(excess, previous, eps, xtol=1e-15)
                logger.info(
                    f"Stability limit of {scheme.name}: omega*eps = {omega * limit:.12g}",
                    extra={'scheme': scheme.name, 'omega': omega, 'eps_limit': limit}
                )
                return limit
            previous = eps
        logger.warning(
            f"No instability of {scheme.name} below omega*eps = {STABILITY_SCAN_LIMIT}",
            extra={'scheme': scheme.name, 'omega': omega}
        )
        return math.inf

    def shadow_trajectory(self, scheme: SplittingScheme, omega: float, s0: PhaseState, eps: float, n: int,
                          sample_every: int = 1, order: int = 2) -> List[ShadowSample]:
        """Energy and modified energy along a trajectory; drift is H_A(t) - H_A(0)."""
        force = harmonic_force_model(omega)
        coefficients = self.coefficients.coefficients_for_scheme(scheme)
        brackets = BracketService()
        states = [s0] + IntegratorService().integrate(scheme, force, s0, eps, n, sample_every)
        initial = brackets.modified_hamiltonian(coefficients, force, s0, eps, order)
        samples = []
        for state in states:
            shadow = brackets.modified_hamiltonian(coefficients, force, state, eps, order)
            samples.append(ShadowSample(
                t=state.t,
                energy=brackets.hamiltonian(force, state),
                shadow_energy=shadow,
                drift=shadow - initial,
            ))
        return samples

    def _omega_a(self, ctx, stages, omega, eps):
        m11, _, _, m22 = stage_product(ctx, stages, omega, eps)
        half_trace = (m11 + m22) / 2
        if abs(half_trace) > 1:
            raise InstabilityError(
                f"|trace|/2 = {ctx.nstr(abs(half_trace), 12)} > 1 at eps={ctx.nstr(eps, 17)}",
                eps=float(eps), half_trace=float(half_trace),
            )
        return ctx.acos(half_trace) / eps

    def _energy_deviation(self, ctx, scheme, omega, q0, p0, n: int):
        q, p = self._period_state(ctx, scheme, omega, q0, p0, n)
        w2 = omega * omega
        return (p * p + w2 * q * q - p0 * p0 - w2 * q0 * q0) / 2

    def _period_state(self, ctx, scheme, omega, q0, p0, n: int):
        if n < 4:
            raise DomainError(f"One-period runs need N >= 4, got {n}")
        eps = 2 * ctx.pi / omega / n
        if scheme is None:
            m11, m12, m21, m22 = rotation_product(ctx, omega, eps)
        else:
            m11, m12, m21, m22 = stage_product(ctx, extended_stages(ctx, scheme), omega, eps)
        half_trace = (m11 + m22) / 2
        if abs(half_trace) >= 1:
            raise InstabilityError(
                f"Step T/{n} is not inside the stable range (|trace|/2 = {ctx.nstr(abs(half_trace), 12)})",
                n=n, half_trace=float(half_trace),
            )
        # M^n = cos(n theta) I + sin(n theta)/sin(theta) (M - cos(theta) I)
        theta = ctx.acos(half_trace)
        c = ctx.cos(n * theta)
        s = ctx.sin(n * theta) / ctx.sin(theta)
        q = c * q0 + s * ((m11 - half_trace) * q0 + m12 * p0)
        p = c * p0 + s * (m21 * q0 + (m22 - half_trace) * p0)
        return q, p

    def _frequency_series(self, scheme: SplittingScheme, omega: float, max_order: int) -> FrequencyReport:
        ctx = make_context(self.precision)
        stages = extended_stages(ctx, scheme)
        w = lift(ctx, omega)
        x0 = lift(ctx, settings.FREQUENCY_LADDER_EPS0)
        ratio = lift(ctx, settings.LADDER_RATIO)

        h_values, y_values = [], []
        for k in range(settings.LADDER_DEPTH + 1):
            x = x0 * ratio ** k
            g = self._omega_a(ctx, stages, w, x / w) / w - 1
            h_values.append(x * x)
            y_values.append(g / (x * x))

        fitted = extract_coefficients(
            ctx, h_values, y_values, max_order // 2,
            settings.SERIES_TOLERANCE, settings.SERIES_ZERO_TOLERANCE, f'frequency series of {scheme.name}',
        )
        predictions = self._frequency_predictions(scheme)
        terms = tuple(
            SeriesTerm(order=2 * (k + 1), value=float(value), residual=float(residual),
                       predicted=predictions.get(2 * (k + 1)), extended=ctx.nstr(value, self.precision))
            for k, (value, residual) in enumerate(fitted)
        )
        logger.info(
            f"Frequency series of {scheme.name} at {self.precision} digits",
            extra={'scheme': scheme.name, 'omega': omega, 'precision': self.precision,
                   'coefficients': [term.value for term in terms]}
        )
        return FrequencyReport(scheme_name=scheme.name, omega=omega, terms=terms, precision=self.precision)

    def _energy_error_series(self, scheme: SplittingScheme, omega: float, q0: float, p0: float,
                             max_order: int) -> EnergyErrorReport:
        ctx = make_context(self.precision)
        w, q, p = lift(ctx, omega), lift(ctx, q0), lift(ctx, p0)
        period = 2 * ctx.pi / w

        h_values, y_values = [], []
        for k in range(settings.LADDER_DEPTH + 1):
            n = settings.ENERGY_LADDER_BASE_STEPS * 2 ** k
            eps = period / n
            h_values.append(eps * eps)
            y_values.append(self._energy_deviation(ctx, scheme, w, q, p, n) / (eps * eps))

        fitted = extract_coefficients(
            ctx, h_values, y_values, max_order // 2,
            settings.SERIES_TOLERANCE, settings.SERIES_ZERO_TOLERANCE, f'energy series of {scheme.name}',
        )
        predictions = self._energy_predictions(scheme, omega, q0, p0)
        terms = tuple(
            SeriesTerm(order=2 * (k + 1), value=float(value), residual=float(residual),
                       predicted=predictions.get(2 * (k + 1)), extended=ctx.nstr(value, self.precision))
            for k, (value, residual) in enumerate(fitted)
        )
        leading = next((term.order for term in terms if abs(term.value) > settings.SERIES_ZERO_TOLERANCE), None)
        logger.info(
            f"Energy series of {scheme.name}: leading order {leading}",
            extra={'scheme': scheme.name, 'omega': omega, 'q0': q0, 'p0': p0, 'leading_order': leading}
        )
        return EnergyErrorReport(scheme_name=scheme.name, omega=omega, q0=q0, p0=p0, terms=terms,
                                 leading_order=leading, precision=self.precision)

    def _scheme_coefficients(self, scheme: SplittingScheme) -> Optional[ErrorCoefficientSet]:
        try:
            return self.coefficients.coefficients_for_scheme(scheme)
        except CapabilityError:
            return None

    def _frequency_predictions(self, scheme: SplittingScheme) -> Dict[int, float]:
        e = self._scheme_coefficients(scheme)
        if e is None:
            return {}
        predictions = {2: e.e_ttv - e.e_vtv}
        if self.coefficients.is_fourth_order(e):
            predictions[4] = 2.0 * (e.e_vtvtv - e.e_ttvtv)
        elif self.coefficients.is_correctable_second_order(e):
            predictions[4] = 2.0 * (e.e_vtvtv - e.e_ttv ** 2 - e.e_ttvtv)
        return predictions

    def _energy_predictions(self, scheme: SplittingScheme, omega: float, q0: float, p0: float) -> Dict[int, float]:
        e = self._scheme_coefficients(scheme)
        if e is None:
            return {}
        pi = math.pi
        pq = p0 * q0
        predictions = {2: 0.0}
        if self.coefficients.is_fourth_order(e):
            predictions[4] = 0.0
            predictions[6] = 0.0
            predictions[8] = 16.0 * pi * omega ** 9 * (e.e_ttvtv ** 2 - e.e_vtvtv ** 2) * pq
            return predictions

        plus, minus = e.e_ttv + e.e_vtv, e.e_ttv - e.e_vtv
        predictions[4] = 4.0 * pi * omega ** 5 * pq * minus * plus
        predictions[6] = (
            2.0 * pi * omega ** 6 * (2.0 * pi * (p0 ** 2 - omega ** 2 * q0 ** 2) - pq * omega) * plus * minus ** 2
            - 4.0 * pi * pq * omega ** 7 * plus * (2.0 * (e.e_ttvtv - e.e_vtvtv) + e.e_ttv ** 2 + e.e_vtv ** 2)
        )
        return predictions
