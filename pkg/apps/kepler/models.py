from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apps.splitting.models import PhaseState


@dataclass(frozen=True)
class KeplerOrbitSpec:
    """
    Bound orbit of H = p^2/2 - 1/|q| with its starting point.

    energy is E0, semi_major_axis a = -1/(2 E0), period T = 2 pi a^(3/2) and
    eccentricity the length of the Laplace-Runge-Lenz vector.
    """
    q0: Tuple[float, float]
    p0: Tuple[float, float]
    energy: float
    semi_major_axis: float
    period: float
    eccentricity: float

    @property
    def perihelion(self) -> float:
        return self.semi_major_axis * (1.0 - self.eccentricity)

    @property
    def angular_momentum(self) -> float:
        return self.q0[0] * self.p0[1] - self.q0[1] * self.p0[0]

    def initial_state(self) -> PhaseState:
        return PhaseState(q=np.array(self.q0), p=np.array(self.p0))

    def as_dict(self) -> dict:
        return {
            'q0': list(self.q0),
            'p0': list(self.p0),
            'energy': self.energy,
            'semi_major_axis': self.semi_major_axis,
            'period': self.period,
            'eccentricity': self.eccentricity,
        }


@dataclass(frozen=True)
class DiagnosticsSeries:
    """
    One period of a scheme on a Kepler orbit, sampled at `times`.

    h4 = (E - E0) / (eps^4 E0); theta is the unwrapped LRL rotation since t = 0
    and theta4 = theta / eps^4. theta and theta4 are NaN on a circular orbit.
    """
    scheme_name: str
    kind: str
    steps: int
    eps: float
    times: Tuple[float, ...]
    h4: Tuple[float, ...]
    theta: Tuple[float, ...]
    theta4: Tuple[float, ...]

    @property
    def h4_at_period(self) -> float:
        return self.h4[-1]

    @property
    def theta4_at_period(self) -> float:
        return self.theta4[-1]

    @property
    def summary(self) -> dict:
        return {'h4_at_period': self.h4_at_period, 'theta4_at_period': self.theta4_at_period}

    def phases(self, period: float) -> Tuple[float, ...]:
        return tuple(t / period for t in self.times)


@dataclass(frozen=True)
class PrecessionResult:
    """theta4 after one period at `steps`, checked against a run at `check_steps`."""
    scheme_name: str
    eccentricity: float
    value: float
    steps: int
    check_value: float
    check_steps: int
    converged: bool
    warning: str = ''


@dataclass(frozen=True)
class SweepRow:
    eccentricity: float
    py: float
    perihelion: float
    theta4_at_period: Optional[float]
    status: str
    error: str = ''
