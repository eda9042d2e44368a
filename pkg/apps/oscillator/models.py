from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class StepMatrix:
    """One-step map of a scheme on the harmonic oscillator, acting on (q, p)."""
    m11: float
    m12: float
    m21: float
    m22: float
    omega: float
    eps: float

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    @property
    def half_trace(self) -> float:
        return 0.5 * (self.m11 + self.m22)

    @property
    def determinant(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def is_stable(self) -> bool:
        return abs(self.half_trace) <= 1.0

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def apply(self, q: float, p: float) -> Tuple[float, float]:
        return self.m11 * q + self.m12 * p, self.m21 * q + self.m22 * p


@dataclass(frozen=True)
class SeriesTerm:
    """
    One fitted expansion coefficient.

    residual is the change of the coefficient when the coarsest ladder sample
    is dropped; predicted is the closed-form value when one exists.
    """
    order: int
    value: float
    residual: float
    predicted: Optional[float] = None
    extended: str = ''


@dataclass(frozen=True)
class FrequencyReport:
    """omega_A/omega = 1 + c2 (omega eps)^2 + c4 (omega eps)^4 + ..."""
    scheme_name: str
    omega: float
    terms: Tuple[SeriesTerm, ...]
    precision: int
    eps: Optional[float] = None
    omega_a: Optional[float] = None
    phase_error: Optional[float] = None

    def coefficient(self, order: int) -> float:
        for term in self.terms:
            if term.order == order:
                return term.value
        raise KeyError(order)


@dataclass(frozen=True)
class EnergyErrorReport:
    """One-period energy deviation Delta E_T = sum_n E_n eps^n over even n."""
    scheme_name: str
    omega: float
    q0: float
    p0: float
    terms: Tuple[SeriesTerm, ...]
    leading_order: Optional[int]
    precision: int

    def coefficient(self, order: int) -> float:
        for term in self.terms:
            if term.order == order:
                return term.value
        raise KeyError(order)


@dataclass(frozen=True)
class EffectiveOscillator:
    m_star: float
    k_star: float

    @property
    def omega_a(self) -> float:
        return float(np.sqrt(self.k_star / self.m_star))
