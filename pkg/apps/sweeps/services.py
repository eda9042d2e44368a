import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
from django.conf import settings
from scipy.optimize import brentq

from apps.algebra.services import CoefficientService
from apps.common.exceptions import DomainError, InstabilityError, PoleError, SymplecticLabError
from apps.kepler.models import KeplerOrbitSpec
from apps.kepler.services import KeplerService
from apps.oscillator.services import OscillatorService
from apps.splitting.models import SplittingScheme
from apps.splitting.services import SchemeFactory
from .models import Extremum, KeplerOptimum, ScanPoint, ScanResult
from .optimization import golden_section_minimize

logger = logging.getLogger('apps.sweeps')

MIN_SCAN_POINTS = 3


class SweepService:
    """
    Scans of the 4ACB family over t0 with pole, zero and minimum localization.

    Unless an alpha rule is given, every grid point uses the correctable
    alpha(t0), whose poles are known in closed form.
    """

    def __init__(self, threads: Optional[int] = None, precision: Optional[int] = None):
        self.threads = threads or settings.LAB_THREADS
        self.coefficients = CoefficientService()
        self.oscillator = OscillatorService(precision=precision)
        self.kepler = KeplerService(threads=1)
        self.scheme_factory = SchemeFactory()

    def correctable_scheme(self, t0: float) -> SplittingScheme:
        return self.scheme_factory.make_4acb(t0, self.coefficients.correctable_alpha(t0))

    def scan_1d(self, objective: Callable[[float], float], interval: Sequence[float], points: int,
                name: str = 'objective', alpha_of: Optional[Callable[[float], float]] = None,
                tolerance: Optional[float] = None) -> ScanResult:
        low, high = self._check_interval(interval, points)
        tolerance = tolerance or settings.GOLDEN_SECTION_TOLERANCE
        correctable = alpha_of is None
        alpha_of = alpha_of or self.coefficients.correctable_alpha

        grid = np.linspace(low, high, points)
        evaluated = self._map(lambda t0: self._evaluate(objective, alpha_of, float(t0)), grid)
        known_poles = self.coefficients.correctable_alpha_poles((low, high)) if correctable else []
        scan_points = self._flag_pole_adjacent(evaluated)

        extrema = [Extremum('pole', location, math.inf) for location in known_poles]
        extrema += self._unexplained_poles(scan_points, known_poles, grid[1] - grid[0])
        extrema += self._zeros(objective, scan_points, known_poles, tolerance)
        extrema += self._minima(objective, scan_points, known_poles, tolerance)
        extrema.sort(key=lambda extremum: extremum.location)

        logger.info(
            f"Scan of {name} over [{low}, {high}] with {points} points",
            extra={'objective': name, 'interval': [low, high], 'points': points,
                   'statuses': {status: sum(1 for p in scan_points if p.status == status)
                                for status in {p.status for p in scan_points}},
                   'extrema': [(e.kind, e.location) for e in extrema]}
        )
        return ScanResult(objective=name, interval=(low, high), points=tuple(scan_points), extrema=tuple(extrema))

    def scan_freq6(self, interval: Sequence[float], points: int, omega: float = 1.0) -> ScanResult:
        """Sixth-order frequency coefficient of the correctable 4ACB members."""
        def objective(t0):
            return self.oscillator.frequency_series(self.correctable_scheme(t0), omega, max_order=6).coefficient(6)
        return self.scan_1d(objective, interval, points, name='freq6')

    def scan_energy10(self, interval: Sequence[float], points: int, q0: float = 1.0, p0: float = 1.0,
                      omega: float = 1.0) -> ScanResult:
        """Tenth-order one-period energy coefficient of the correctable 4ACB members."""
        def objective(t0):
            report = self.oscillator.energy_error_series(self.correctable_scheme(t0), omega, q0, p0, max_order=10)
            return report.coefficient(10)
        return self.scan_1d(objective, interval, points, name='energy10')

    def scan_kepler(self, interval: Sequence[float], points: int, alpha: float, spec: KeplerOrbitSpec,
                    n: Optional[int] = None) -> ScanResult:
        """theta4 after one period of 4ACB(t0, alpha) at the reporting step count."""
        n = n or settings.KEPLER_STEPS

        def objective(t0):
            return self.kepler.theta4_at_period(self.scheme_factory.make_4acb(t0, alpha), spec, n)
        return self.scan_1d(objective, interval, points, name='kepler-precession', alpha_of=lambda t0: alpha)

    def optimize_kepler(self, interval: Sequence[float], alpha: float, spec: KeplerOrbitSpec,
                        tolerance: Optional[float] = None,
                        eccentricities: Optional[Sequence[float]] = None) -> KeplerOptimum:
        """
        Minimize the worst |theta4(T)| over t0 with alpha held fixed.

        The worst case runs over spec's orbit and the aphelion-family orbits
        of `eccentricities` (default KEPLER_UNIFORM_ECCENTRICITIES); an empty
        sequence minimizes |theta4(T)| on spec alone. Search and report share
        the step count N = KEPLER_STEPS.
        """
        tolerance = tolerance or settings.KEPLER_OPTIMIZE_TOLERANCE
        if eccentricities is None:
            eccentricities = settings.KEPLER_UNIFORM_ECCENTRICITIES
        steps = settings.KEPLER_STEPS
        alpha = float(alpha)
        orbits = [spec] + [
            self.kepler.orbit_from_eccentricity(e) for e in eccentricities
            if not math.isclose(e, spec.eccentricity, rel_tol=0.0, abs_tol=1e-12)
        ]

        def objective(t0):
            scheme = self.scheme_factory.make_4acb(t0, alpha)
            try:
                return max(abs(self.kepler.theta4_at_period(scheme, orbit, steps)) for orbit in orbits)
            except SymplecticLabError as exc:
                exc.context.setdefault('t0', t0)
                raise

        search = golden_section_minimize(objective, float(min(interval)), float(max(interval)), tolerance)
        final = self.kepler.precession_after_period(self.scheme_factory.make_4acb(search.x, alpha), spec, n=steps)
        logger.info(
            f"Kepler-optimal t0 = {search.x:.8f} (alpha={alpha!r}, e={spec.eccentricity:.6g})",
            extra={'t0': search.x, 'alpha': alpha, 'value': final.value, 'worst': search.value,
                   'eccentricities': [orbit.eccentricity for orbit in orbits], 'evaluations': search.evaluations}
        )
        return KeplerOptimum(
            t0=search.x,
            alpha=alpha,
            value=abs(final.value),
            worst=search.value,
            steps=steps,
            eccentricities=tuple(orbit.eccentricity for orbit in orbits),
        )

    # grid helpers

    def _map(self, function, items: Iterable) -> List:
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                return list(executor.map(function, items))
        return [function(item) for item in items]

    @staticmethod
    def _check_interval(interval: Sequence[float], points: int):
        if len(interval) != 2:
            raise DomainError(f"Scan interval needs two ends, got {list(interval)}")
        low, high = float(interval[0]), float(interval[1])
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise DomainError(f"Scan interval [{low}, {high}] is empty")
        if low <= 0.5 <= high:
            raise DomainError("Scan interval must exclude t0 = 1/2", interval=[low, high])
        if points < MIN_SCAN_POINTS:
            raise DomainError(f"A scan needs at least {MIN_SCAN_POINTS} points, got {points}", points=points)
        return low, high

    @staticmethod
    def _evaluate(objective, alpha_of, t0: float) -> ScanPoint:
        try:
            alpha = float(alpha_of(t0))
        except PoleError:
            return ScanPoint(t0, None, None, 'pole')
        try:
            return ScanPoint(t0, alpha, float(objective(t0)), 'ok')
        except PoleError:
            return ScanPoint(t0, alpha, None, 'pole')
        except InstabilityError:
            return ScanPoint(t0, alpha, None, 'unstable')
        except SymplecticLabError as exc:
            logger.warning(
                f"Objective failed at t0={t0!r}: {exc.message}",
                extra={'t0': t0, 'error_code': exc.error_code}
            )
            return ScanPoint(t0, alpha, None, 'failed')

    @staticmethod
    def _flag_pole_adjacent(points: List[ScanPoint]) -> List[ScanPoint]:
        values = [abs(p.value) for p in points if p.status == 'ok']
        if not values:
            return points
        median = float(np.median(values))
        if median == 0.0:
            return points
        limit = settings.POLE_MEDIAN_FACTOR * median
        flagged = []
        for point in points:
            if point.status == 'ok' and abs(point.value) > limit:
                logger.warning(
                    f"Grid point t0={point.t0!r} is pole-adjacent (|f| > {settings.POLE_MEDIAN_FACTOR:g} x median)",
                    extra={'t0': point.t0, 'value': point.value, 'median': median}
                )
                point = ScanPoint(point.t0, point.alpha, point.value, 'pole')
            flagged.append(point)
        return flagged

    @staticmethod
    def _unexplained_poles(points: List[ScanPoint], known: Sequence[float], spacing: float) -> List[Extremum]:
        """One pole per run of flagged grid points with no known pole nearby."""
        clusters, current = [], []
        for point in points:
            if point.status == 'pole':
                current.append(point)
            elif current:
                clusters.append(current)
                current = []
        if current:
            clusters.append(current)

        poles = []
        for cluster in clusters:
            start, end = cluster[0].t0 - spacing, cluster[-1].t0 + spacing
            if any(start <= pole <= end for pole in known):
                continue
            with_values = [p for p in cluster if p.value is not None]
            peak = max(with_values, key=lambda p: abs(p.value)) if with_values else cluster[len(cluster) // 2]
            poles.append(Extremum('pole', peak.t0, math.inf))
        return poles

    @staticmethod
    def _crosses_pole(a: float, b: float, poles: Sequence[float]) -> bool:
        return any(a <= pole <= b for pole in poles)

    def _zeros(self, objective, points: List[ScanPoint], poles: Sequence[float], tolerance: float) -> List[Extremum]:
        zeros = []
        for left, right in zip(points, points[1:]):
            if left.status != 'ok' or right.status != 'ok' or self._crosses_pole(left.t0, right.t0, poles):
                continue
            if left.value == 0.0:
                zeros.append(Extremum('zero', left.t0, 0.0))
            elif left.value * right.value < 0.0:
                try:
                    location = brentq(objective, left.t0, right.t0, xtol=tolerance, rtol=4.0 * np.finfo(float).eps)
                except SymplecticLabError as exc:
                    # secant step through the bracket ends
                    location = left.t0 - left.value * (right.t0 - left.t0) / (right.value - left.value)
                    logger.warning(f"Zero refinement in [{left.t0}, {right.t0}] failed: {exc.message}; "
                                   f"keeping the secant estimate {location!r}",
                                   extra={'error_code': exc.error_code, 'location': location})
                zeros.append(Extremum('zero', float(location), 0.0))
        if points[-1].status == 'ok' and points[-1].value == 0.0:
            zeros.append(Extremum('zero', points[-1].t0, 0.0))
        return zeros

    def _minima(self, objective, points: List[ScanPoint], poles: Sequence[float], tolerance: float) -> List[Extremum]:
        """Local minima of f, plus local minima of |f| where f stays negative (signed maxima)."""
        minima = []
        for left, middle, right in zip(points, points[1:], points[2:]):
            if any(p.status != 'ok' for p in (left, middle, right)):
                continue
            if middle.value <= left.value and middle.value < right.value:
                sign = 1.0
            elif max(left.value, middle.value, right.value) < 0.0 and left.value <= middle.value > right.value:
                sign = -1.0
            else:
                continue
            if self._crosses_pole(left.t0, right.t0, poles):
                continue
            try:
                result = golden_section_minimize(lambda t0: sign * objective(t0), left.t0, right.t0, tolerance)
            except SymplecticLabError as exc:
                logger.warning(f"Minimum refinement near t0={middle.t0!r} failed: {exc.message}",
                               extra={'error_code': exc.error_code})
                continue
            minima.append(Extremum('min', result.x, sign * result.value))
        return minima
