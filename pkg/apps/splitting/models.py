"""
Domain records of the splitting core: phase states, stages and schemes.

These are immutable value objects, not database tables.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from apps.common.exceptions import DomainError, SchemeValidationError

WEIGHT_SUM_TOLERANCE = 1e-12
SUPPORTED_DIMENSIONS = (1, 2)
SUPPORTED_ORDERS = (2, 4)


class StageKind(str, Enum):
    DRIFT = 'drift'
    KICK = 'kick'


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Canonical pair (q, p) at time t, stored as read-only float vectors."""
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float, ndmin=1)
        p = np.array(self.p, dtype=float, ndmin=1)
        if q.ndim != 1 or q.shape != p.shape:
            raise DomainError(f"q and p must be vectors of equal dimension, got {q.shape} and {p.shape}")
        if q.size not in SUPPORTED_DIMENSIONS:
            raise DomainError(f"Phase-space dimension {q.size} is not supported")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.isfinite(self.t)):
            raise DomainError("Phase state has non-finite components")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 't', float(self.t))

    @property
    def dimension(self) -> int:
        return self.q.size

    def with_momentum_flipped(self) -> 'PhaseState':
        return PhaseState(q=self.q, p=-self.p, t=self.t)

    def distance_to(self, other: 'PhaseState') -> float:
        """Euclidean phase-space distance (time ignored)."""
        return float(np.sqrt(np.sum((self.q - other.q) ** 2) + np.sum((self.p - other.p) ** 2)))

    def __repr__(self):
        return f"PhaseState(q={self.q.tolist()}, p={self.p.tolist()}, t={self.t!r})"


@dataclass(frozen=True)
class Stage:
    """
    One drift or kick of a composition.

    A drift with weight c maps q -> q + eps*c*p. A kick with weight v and
    grad_weight u maps p -> p + eps*v*F(q) + eps**3*u*G(q).
    """
    kind: StageKind
    weight: float
    grad_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', StageKind(self.kind))
        object.__setattr__(self, 'weight', float(self.weight))
        object.__setattr__(self, 'grad_weight', float(self.grad_weight))
        if self.kind is StageKind.DRIFT and self.grad_weight != 0.0:
            raise SchemeValidationError(
                "Drift stages cannot carry a gradient weight",
                invariant='drift-grad-weight',
            )

    @property
    def is_drift(self) -> bool:
        return self.kind is StageKind.DRIFT

    @classmethod
    def drift(cls, weight: float) -> 'Stage':
        return cls(StageKind.DRIFT, weight)

    @classmethod
    def kick(cls, weight: float, grad_weight: float = 0.0) -> 'Stage':
        return cls(StageKind.KICK, weight, grad_weight)


@dataclass(frozen=True)
class SchemeParams:
    """Family parameters of a generated scheme."""
    t0: float
    alpha: float


@dataclass(frozen=True)
class SplittingScheme:
    """
    A symmetric drift-kick composition.

    Construction enforces the consistency conditions (drift and kick weights
    each sum to one) and palindromic symmetry.
    """
    name: str
    stages: Tuple[Stage, ...]
    nominal_order: int
    params: Optional[SchemeParams] = None
    forward: bool = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'stages', tuple(self.stages))
        if not self.stages:
            raise SchemeValidationError("A scheme needs at least one stage", invariant='non-empty')
        if self.nominal_order not in SUPPORTED_ORDERS:
            raise SchemeValidationError(
                f"Nominal order {self.nominal_order} is not one of {SUPPORTED_ORDERS}",
                invariant='nominal-order',
            )

        drift_sum = self.drift_weight_sum
        kick_sum = self.kick_weight_sum
        if abs(drift_sum - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise SchemeValidationError(
                f"Drift weights of '{self.name}' sum to {drift_sum!r}, expected 1",
                invariant='weight-sum',
            )
        if abs(kick_sum - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise SchemeValidationError(
                f"Kick weights of '{self.name}' sum to {kick_sum!r}, expected 1",
                invariant='weight-sum',
            )

        for stage, mirror in zip(self.stages, reversed(self.stages)):
            if (stage.kind is not mirror.kind
                    or abs(stage.weight - mirror.weight) > WEIGHT_SUM_TOLERANCE
                    or abs(stage.grad_weight - mirror.grad_weight) > WEIGHT_SUM_TOLERANCE):
                raise SchemeValidationError(
                    f"Stage list of '{self.name}' is not palindromic",
                    invariant='palindrome',
                )

        object.__setattr__(self, 'forward', all(stage.weight >= 0.0 for stage in self.stages))

    @property
    def drift_weight_sum(self) -> float:
        return float(sum(stage.weight for stage in self.stages if stage.is_drift))

    @property
    def kick_weight_sum(self) -> float:
        return float(sum(stage.weight for stage in self.stages if not stage.is_drift))

    @property
    def kick_count(self) -> int:
        return sum(1 for stage in self.stages if not stage.is_drift)

    def fingerprint(self) -> tuple:
        """Hashable identity of the map the scheme applies (name excluded)."""
        return tuple((stage.kind.value, stage.weight, stage.grad_weight) for stage in self.stages)
