from dataclasses import dataclass
from typing import Optional, Tuple

POINT_STATUSES = ('ok', 'pole', 'unstable', 'failed')
EXTREMUM_KINDS = ('min', 'zero', 'pole')


@dataclass(frozen=True)
class ScanPoint:
    t0: float
    alpha: Optional[float]
    value: Optional[float]
    status: str = 'ok'


@dataclass(frozen=True)
class Extremum:
    kind: str
    location: float
    value: float


@dataclass(frozen=True)
class ScanResult:
    """Grid evaluation of an objective over t0 and the extrema located on it."""
    objective: str
    interval: Tuple[float, float]
    points: Tuple[ScanPoint, ...]
    extrema: Tuple[Extremum, ...]

    def of_kind(self, kind: str) -> Tuple[Extremum, ...]:
        return tuple(extremum for extremum in self.extrema if extremum.kind == kind)

    @property
    def minima(self) -> Tuple[Extremum, ...]:
        return self.of_kind('min')

    @property
    def zeros(self) -> Tuple[Extremum, ...]:
        return self.of_kind('zero')

    @property
    def poles(self) -> Tuple[Extremum, ...]:
        return self.of_kind('pole')


@dataclass(frozen=True)
class GoldenSectionResult:
    """Best point found and the final bracket [low, high] around it."""
    x: float
    value: float
    low: float
    high: float
    evaluations: int

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass(frozen=True)
class KeplerOptimum:
    """value is |theta4(T)| on the requested orbit; worst is the minimized objective over `eccentricities`."""
    t0: float
    alpha: float
    value: float
    worst: float
    steps: int
    eccentricities: Tuple[float, ...]
