import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np
from django.conf import settings
from scipy.integrate import solve_ivp

from apps.algebra.services import CoefficientService
from apps.brackets.models import ShadowSample
from apps.brackets.services import BracketService
from apps.common.cache_utils import CacheKeys, CacheManager
from apps.common.exceptions import (
    DegenerateOrbitError, DomainError, SingularityError, SymplecticLabError,
)
from apps.oscillator.services import extended_stages, lift, make_context
from apps.splitting.forces import kepler_force, kepler_force_model
from apps.splitting.models import PhaseState, SplittingScheme
from apps.splitting.services import IntegratorService
from .models import DiagnosticsSeries, KeplerOrbitSpec, PrecessionResult, SweepRow

logger = logging.getLogger('apps.kepler')

APHELION = (10.0, 0.0)
MIN_LIMIT_STEPS = 3000
DEGENERATE_ECCENTRICITY = 1e-9
REFERENCE_RTOL = 1e-13
REFERENCE_ATOL = 1e-15
ROUNDOFF_MARGIN_DIGITS = 10
CURVE_KINDS = ('energy', 'angle')


class KeplerService:
    """
    One-period diagnostics of splitting schemes on H = p^2/2 - 1/|q|.

    Orbits start at q0 = (10, 0) unless built from an explicit state; the
    step is eps = T/N and the energy and LRL-angle errors are reported in
    units of eps^4.
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.LAB_THREADS
        self.integrator = IntegratorService()
        self.brackets = BracketService()
        self.force = kepler_force_model()

    # orbits

    def orbit_from_py(self, py: float) -> KeplerOrbitSpec:
        py = float(py)
        if not math.isfinite(py) or py <= 0.0:
            raise DomainError(f"p_y must be positive, got {py!r}", py=py)
        return self.orbit_from_state(APHELION, (0.0, py))

    def orbit_from_eccentricity(self, eccentricity: float) -> KeplerOrbitSpec:
        """Orbit of the q0 = (10, 0) family with e = 1 - 10 p_y^2."""
        eccentricity = float(eccentricity)
        if not (0.0 <= eccentricity < 1.0):
            raise DomainError(f"Eccentricity must lie in [0, 1), got {eccentricity!r}", eccentricity=eccentricity)
        return self.orbit_from_py(math.sqrt((1.0 - eccentricity) / 10.0))

    def orbit_from_state(self, q0: Sequence[float], p0: Sequence[float]) -> KeplerOrbitSpec:
        state = PhaseState(q=q0, p=p0)
        if state.dimension != 2:
            raise DomainError("Kepler orbits are planar: q0 and p0 must be 2-vectors")
        if not np.any(state.q):
            raise SingularityError("Kepler orbit cannot start at q = 0", q=state.q.tolist())
        energy = self.brackets.hamiltonian(self.force, state)
        if energy >= 0.0:
            raise DomainError(
                f"Orbit with E0 = {energy!r} is unbound", energy=energy, q0=state.q.tolist(), p0=state.p.tolist()
            )
        semi_major_axis = -1.0 / (2.0 * energy)
        return KeplerOrbitSpec(
            q0=tuple(state.q.tolist()),
            p0=tuple(state.p.tolist()),
            energy=energy,
            semi_major_axis=semi_major_axis,
            period=2.0 * math.pi * semi_major_axis ** 1.5,
            eccentricity=float(np.linalg.norm(self.lrl_vector(state))),
        )

    # Laplace-Runge-Lenz vector

    def lrl_vector(self, state: PhaseState) -> np.ndarray:
        """A = p x L - q/|q| with L = q x p along z."""
        q, p = state.q, state.p
        r = math.hypot(q[0], q[1])
        if r == 0.0:
            raise SingularityError("LRL vector is singular at q = 0", q=q.tolist())
        angular_momentum = q[0] * p[1] - q[1] * p[0]
        # + 0.0 clears signed zeros so atan2 stays in (-pi, pi]
        return np.array([p[1] * angular_momentum - q[0] / r, -p[0] * angular_momentum - q[1] / r]) + 0.0

    def lrl_angle(self, state: PhaseState) -> float:
        vector = self.lrl_vector(state)
        if math.hypot(vector[0], vector[1]) < DEGENERATE_ECCENTRICITY:
            raise DegenerateOrbitError(q=state.q.tolist(), p=state.p.tolist())
        return math.atan2(vector[1], vector[0])

    # one-period diagnostics

    def limit_curve(self, scheme: SplittingScheme, spec: KeplerOrbitSpec, kind: str = 'angle',
                    n: Optional[int] = None, sample_every: Optional[int] = None) -> DiagnosticsSeries:
        if kind not in CURVE_KINDS:
            raise DomainError(f"Curve kind must be one of {CURVE_KINDS}, got '{kind}'")
        n = n or settings.KEPLER_STEPS
        sample_every = sample_every or settings.KEPLER_SAMPLE_EVERY
        if n < MIN_LIMIT_STEPS:
            raise DomainError(f"Limit curves need N >= {MIN_LIMIT_STEPS}, got {n}", steps=n)
        if kind == 'angle':
            self._check_not_degenerate(spec)

        eps = spec.period / n
        s0 = spec.initial_state()
        states = [s0] + self.integrator.integrate(scheme, self.force, s0, eps, n, sample_every=sample_every)
        series = self._diagnostics(scheme.name, kind, n, eps, spec, states)
        logger.info(
            f"{kind} curve of {scheme.name} at e={spec.eccentricity:.6g}, N={n}",
            extra={'scheme': scheme.name, 'eccentricity': spec.eccentricity, 'steps': n, 'eps': eps,
                   'h4_at_period': series.h4_at_period, 'theta4_at_period': series.theta4_at_period}
        )
        return series

    def reference_series(self, spec: KeplerOrbitSpec, n: Optional[int] = None,
                         sample_every: Optional[int] = None) -> DiagnosticsSeries:
        """Exact-flow oracle: DOP853 at tight tolerance, reported in the units of eps = T/n."""
        n = n or settings.KEPLER_STEPS
        sample_every = sample_every or settings.KEPLER_SAMPLE_EVERY
        eps = spec.period / n
        steps = sorted(set(range(0, n + 1, sample_every)) | {n})
        times = np.minimum(np.array(steps) * eps, spec.period)

        def equations_of_motion(t, y):
            return np.concatenate([y[2:], kepler_force(y[:2])])

        solution = solve_ivp(
            equations_of_motion, (0.0, spec.period), np.concatenate([spec.q0, spec.p0]),
            method='DOP853', t_eval=times, rtol=REFERENCE_RTOL, atol=REFERENCE_ATOL,
        )
        if not solution.success:
            raise SingularityError(f"Reference integration failed: {solution.message}")
        states = [PhaseState(q=y[:2], p=y[2:], t=t) for t, y in zip(solution.t, solution.y.T)]
        return self._diagnostics('reference', 'angle', n, eps, spec, states)

    def precession_after_period(self, scheme: SplittingScheme, spec: KeplerOrbitSpec, n: Optional[int] = None,
                                check_n: Optional[int] = None) -> PrecessionResult:
        n = n or settings.KEPLER_STEPS
        check_n = check_n or settings.KEPLER_CHECK_STEPS
        for steps in (n, check_n):
            if steps < MIN_LIMIT_STEPS:
                raise DomainError(f"Precession needs N >= {MIN_LIMIT_STEPS}, got {steps}", steps=steps)
        self._check_not_degenerate(spec)

        key = CacheKeys.KEPLER_PRECESSION.format(fingerprint=CacheKeys.fingerprint(
            scheme.fingerprint(), spec.as_dict(), n, check_n, settings.KEPLER_CONVERGENCE_TOLERANCE,
            settings.KEPLER_SAMPLE_EVERY,
        ))
        result = CacheManager.get_or_compute(key, lambda: self._precession(scheme, spec, n, check_n))
        return replace(result, scheme_name=scheme.name)

    def theta4_at_period(self, scheme: SplittingScheme, spec: KeplerOrbitSpec, n: int) -> float:
        """LRL rotation after one period over eps^4, from the end states only."""
        return self._rotation_run(scheme, spec, n, sample_every=n)[0]

    def eccentricity_sweep(self, scheme: SplittingScheme, eccentricities: Sequence[float],
                           n: Optional[int] = None, threads: Optional[int] = None) -> List[SweepRow]:
        """Rows in input order; a failing row is recorded and the sweep goes on."""
        threads = threads or self.threads

        def row(eccentricity):
            return self._sweep_row(scheme, eccentricity, n)

        if threads > 1 and len(eccentricities) > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                rows = list(executor.map(row, eccentricities))
        else:
            rows = [row(e) for e in eccentricities]

        placed = sorted((r for r in rows if math.isfinite(r.perihelion)), key=lambda r: r.eccentricity)
        for inner, outer in zip(placed, placed[1:]):
            if outer.eccentricity > inner.eccentricity and not outer.perihelion < inner.perihelion:
                logger.warning(
                    f"Perihelion does not shrink from e={inner.eccentricity} to e={outer.eccentricity}",
                    extra={'scheme': scheme.name, 'perihelia': [inner.perihelion, outer.perihelion]}
                )
        return rows

    def period_energy_deviation(self, scheme: SplittingScheme, spec: KeplerOrbitSpec, n: int,
                                precision: Optional[int] = None) -> float:
        """E(T) - E0 after n steps of eps = T/n, stepped in extended precision."""
        ctx = make_context(precision)
        return float(self._extended_deviation(ctx, extended_stages(ctx, scheme), spec, n))

    def period_energy_order(self, scheme: SplittingScheme, spec: KeplerOrbitSpec, n_values: Sequence[int],
                            precision: Optional[int] = None) -> float:
        """
        Log-log slope of |E(T) - E0| against eps = T/N.

        Deviations are computed in extended precision; one that is not well
        above the working precision's roundoff floor is rejected.
        """
        if len(n_values) < 2:
            raise DomainError("period_energy_order needs at least two step counts")
        ctx = make_context(precision)
        stages = extended_stages(ctx, scheme)
        floor = abs(lift(ctx, spec.energy)) * ctx.mpf(10) ** (ROUNDOFF_MARGIN_DIGITS - ctx.dps)

        log_steps, log_deviations = [], []
        for n in n_values:
            deviation = abs(self._extended_deviation(ctx, stages, spec, n))
            if deviation <= floor:
                raise DomainError(
                    f"Energy deviation {ctx.nstr(deviation, 6)} at N={n} sits at the roundoff floor "
                    f"of {ctx.dps} digits; no slope to fit",
                    steps=n, precision=ctx.dps,
                )
            log_steps.append(float(ctx.log(spec.period / n)))
            log_deviations.append(float(ctx.log(deviation)))
        slope = float(np.polyfit(log_steps, log_deviations, 1)[0])
        logger.info(
            f"One-period energy order of {scheme.name}: {slope:.3f}",
            extra={'scheme': scheme.name, 'n_values': list(n_values), 'slope': slope, 'precision': ctx.dps}
        )
        return slope

    def shadow_series(self, scheme: SplittingScheme, spec: KeplerOrbitSpec, n: Optional[int] = None,
                      sample_every: Optional[int] = None, order: int = 4) -> List[ShadowSample]:
        """H and H_A along one period; drift is H_A(t) - H_A(0)."""
        n = n or settings.KEPLER_STEPS
        sample_every = sample_every or settings.KEPLER_SAMPLE_EVERY
        coefficients = CoefficientService().coefficients_for_scheme(scheme)
        eps = spec.period / n
        s0 = spec.initial_state()
        states = [s0] + self.integrator.integrate(scheme, self.force, s0, eps, n, sample_every=sample_every)

        initial = self.brackets.modified_hamiltonian(coefficients, self.force, s0, eps, order=order)
        samples = []
        for state in states:
            shadow = self.brackets.modified_hamiltonian(coefficients, self.force, state, eps, order=order)
            samples.append(ShadowSample(
                t=state.t,
                energy=self.brackets.hamiltonian(self.force, state),
                shadow_energy=shadow,
                drift=shadow - initial,
            ))
        return samples

    # helpers

    def _rotation_run(self, scheme, spec, n, sample_every):
        """(theta4 at t = T, max |theta4(t)| over the samples) for one run at eps = T/n."""
        eps = spec.period / n
        eps4 = eps ** 4
        s0 = spec.initial_state()
        start = self.lrl_angle(s0)
        states = self.integrator.integrate(scheme, self.force, s0, eps, n, sample_every=sample_every)
        rotations = [math.remainder(self.lrl_angle(state) - start, 2.0 * math.pi) for state in states]
        return rotations[-1] / eps4, max(abs(rotation) for rotation in rotations) / eps4

    def _precession(self, scheme, spec, n, check_n) -> PrecessionResult:
        sample_every = settings.KEPLER_SAMPLE_EVERY
        value, peak = self._rotation_run(scheme, spec, n, sample_every)
        check_value = value if check_n == n else self._rotation_run(scheme, spec, check_n, sample_every)[0]
        tolerance = settings.KEPLER_CONVERGENCE_TOLERANCE
        # scale is the whole theta4(t) curve, not its end value
        scale = max(abs(value), peak)
        converged = abs(value - check_value) <= tolerance * scale
        warning = ''
        if not converged:
            warning = (f"theta4(T) differs between N={n} ({value:.6g}) and N={check_n} ({check_value:.6g}) "
                       f"by more than {tolerance:.0%} of the curve's peak {scale:.6g}")
            logger.warning(
                warning,
                extra={'scheme': scheme.name, 'eccentricity': spec.eccentricity, 'steps': n, 'check_steps': check_n}
            )
        return PrecessionResult(
            scheme_name=scheme.name,
            eccentricity=spec.eccentricity,
            value=value,
            steps=n,
            check_value=check_value,
            check_steps=check_n,
            converged=converged,
            warning=warning,
        )

    def _sweep_row(self, scheme, eccentricity, n) -> SweepRow:
        try:
            spec = self.orbit_from_eccentricity(eccentricity)
        except DomainError as exc:
            logger.warning(f"Sweep row e={eccentricity!r} rejected: {exc.message}",
                           extra={'error_code': exc.error_code})
            return SweepRow(eccentricity, math.nan, math.nan, None, 'error', exc.message)

        py = spec.p0[1]
        try:
            result = self.precession_after_period(scheme, spec, n=n)
        except DegenerateOrbitError as exc:
            return SweepRow(eccentricity, py, spec.perihelion, None, 'degenerate', exc.message)
        except SymplecticLabError as exc:
            logger.warning(
                f"Sweep row e={eccentricity!r} failed: {exc.message}",
                extra={'scheme': scheme.name, 'error_code': exc.error_code, 'context': exc.context}
            )
            return SweepRow(eccentricity, py, spec.perihelion, None, 'error', exc.message)
        return SweepRow(eccentricity, py, spec.perihelion, result.value, 'ok', result.warning)

    @staticmethod
    def _extended_deviation(ctx, stages, spec: KeplerOrbitSpec, n: int):
        """Drift-kick stepping of H = p^2/2 - 1/|q| at the context's precision."""
        if n < 1:
            raise DomainError(f"One-period energy deviation needs N >= 1, got {n}", steps=n)
        x, y = lift(ctx, spec.q0[0]), lift(ctx, spec.q0[1])
        px, py = lift(ctx, spec.p0[0]), lift(ctx, spec.p0[1])
        energy0 = (px * px + py * py) / 2 - 1 / ctx.sqrt(x * x + y * y)
        period = 2 * ctx.pi * (-1 / (2 * energy0)) ** ctx.mpf(1.5)
        eps = period / n
        eps3 = eps * eps * eps

        for step in range(n):
            for index, (is_drift, weight, grad) in enumerate(stages):
                if is_drift:
                    c = eps * weight
                    x, y = x + c * px, y + c * py
                    continue
                r2 = x * x + y * y
                if r2 == 0:
                    raise SingularityError(
                        f"Kick at q = 0 in stage {index} of step {step}", stage_index=index, step_index=step,
                    )
                r3 = r2 * ctx.sqrt(r2)
                # F = -q/r^3 and grad |F|^2 = -4 q/r^6
                k = eps * weight / r3 + 4 * eps3 * grad / (r3 * r3)
                px, py = px - k * x, py - k * y
        return (px * px + py * py) / 2 - 1 / ctx.sqrt(x * x + y * y) - energy0

    @staticmethod
    def _check_not_degenerate(spec: KeplerOrbitSpec) -> None:
        if spec.eccentricity < DEGENERATE_ECCENTRICITY:
            raise DegenerateOrbitError(eccentricity=spec.eccentricity)

    def _diagnostics(self, name, kind, n, eps, spec, states) -> DiagnosticsSeries:
        eps4 = eps ** 4
        energies = np.array([self.brackets.hamiltonian(self.force, state) for state in states])
        h4 = (energies - spec.energy) / (eps4 * spec.energy)
        if spec.eccentricity < DEGENERATE_ECCENTRICITY:
            theta = np.full(len(states), math.nan)
        else:
            angles = np.unwrap([self.lrl_angle(state) for state in states])
            theta = angles - angles[0]
        return DiagnosticsSeries(
            scheme_name=name,
            kind=kind,
            steps=n,
            eps=eps,
            times=tuple(float(state.t) for state in states),
            h4=tuple(h4.tolist()),
            theta=tuple(theta.tolist()),
            theta4=tuple((theta / eps4).tolist()),
        )
