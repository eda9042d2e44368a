"""
Force models for separable Hamiltonians H = p^2/2 + V(q).

A ForceModel bundles the potential, the force F = -grad V, the force
gradient G = grad |F|^2 used by gradient kicks, and the potential derivative
tensors needed by the bracket engine.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from apps.common.exceptions import ForceModelError

logger = logging.getLogger('apps.splitting')

Vector = np.ndarray
ScalarField = Callable[[Vector], float]
VectorField = Callable[[Vector], Vector]
TensorField = Callable[[Vector], np.ndarray]


@dataclass(frozen=True)
class ForceModel:
    name: str
    dimension: int
    potential: ScalarField
    force: VectorField
    force_gradient: VectorField
    hessian: TensorField
    third_derivatives: TensorField
    fourth_derivatives: Optional[TensorField] = None

    @property
    def max_derivative_order(self) -> int:
        return 4 if self.fourth_derivatives is not None else 3

    def verify(self, points: Iterable[Vector], step: float = 1e-5, tolerance: float = 1e-6) -> None:
        """
        Check F = -grad V and G = grad |F|^2 by central differences.

        Raises ForceModelError at the first point where either relative
        error exceeds tolerance.
        """
        for point in points:
            q = np.asarray(point, dtype=float)
            numeric_force = -central_gradient(self.potential, q, step)
            numeric_gradient = central_gradient(lambda x: float(np.dot(self.force(x), self.force(x))), q, step)
            for label, analytic, numeric in (
                ('force', self.force(q), numeric_force),
                ('force_gradient', self.force_gradient(q), numeric_gradient),
            ):
                scale = max(float(np.linalg.norm(analytic)), np.finfo(float).tiny)
                error = float(np.linalg.norm(analytic - numeric)) / scale
                if error > tolerance:
                    logger.error(
                        f"Force model {self.name} failed {label} check",
                        extra={'force_model': self.name, 'point': q.tolist(), 'relative_error': error}
                    )
                    raise ForceModelError(
                        f"{self.name}: {label} disagrees with finite differences at q={q.tolist()} "
                        f"(relative error {error:.3e})",
                        check=label,
                    )


def central_gradient(function: ScalarField, q: Vector, step: float) -> Vector:
    gradient = np.empty_like(q)
    for i in range(q.size):
        offset = np.zeros_like(q)
        offset[i] = step
        gradient[i] = (function(q + offset) - function(q - offset)) / (2.0 * step)
    return gradient


def harmonic_force_model(omega: float = 1.0) -> ForceModel:
    """One-dimensional oscillator V = omega^2 q^2 / 2."""
    w2 = omega * omega
    w4 = w2 * w2

    return ForceModel(
        name=f'harmonic(omega={omega!r})',
        dimension=1,
        potential=lambda q: 0.5 * w2 * float(np.dot(q, q)),
        force=lambda q: -w2 * q,
        force_gradient=lambda q: 2.0 * w4 * q,
        hessian=lambda q: np.full((1, 1), w2),
        third_derivatives=lambda q: np.zeros((1, 1, 1)),
        fourth_derivatives=lambda q: np.zeros((1, 1, 1, 1)),
    )


# Kepler potential V = -1/|q| in the plane; all expressions are homogeneous in r.

def kepler_potential(q: Vector) -> float:
    with np.errstate(divide='ignore'):
        return float(-1.0 / np.sqrt(np.dot(q, q)))


def kepler_force(q: Vector) -> Vector:
    r2 = np.dot(q, q)
    with np.errstate(divide='ignore', invalid='ignore'):
        return -q / (r2 * np.sqrt(r2))


def kepler_force_gradient(q: Vector) -> Vector:
    # |F|^2 = r^-4, so grad |F|^2 = -4 q / r^6
    r2 = np.dot(q, q)
    with np.errstate(divide='ignore', invalid='ignore'):
        return -4.0 * q / (r2 * r2 * r2)


def kepler_hessian(q: Vector) -> np.ndarray:
    r2 = float(np.dot(q, q))
    r = np.sqrt(r2)
    identity = np.eye(q.size)
    return identity / (r2 * r) - 3.0 * np.outer(q, q) / (r2 * r2 * r)


def kepler_third_derivatives(q: Vector) -> np.ndarray:
    r2 = float(np.dot(q, q))
    r = np.sqrt(r2)
    d = np.eye(q.size)
    delta_q = (np.einsum('ij,k->ijk', d, q)
               + np.einsum('ik,j->ijk', d, q)
               + np.einsum('jk,i->ijk', d, q))
    qqq = np.einsum('i,j,k->ijk', q, q, q)
    return -3.0 * delta_q / (r2 * r2 * r) + 15.0 * qqq / (r2 * r2 * r2 * r)


def kepler_fourth_derivatives(q: Vector) -> np.ndarray:
    r2 = float(np.dot(q, q))
    r = np.sqrt(r2)
    d = np.eye(q.size)
    delta_delta = (np.einsum('ij,kl->ijkl', d, d)
                   + np.einsum('ik,jl->ijkl', d, d)
                   + np.einsum('il,jk->ijkl', d, d))
    delta_qq = (np.einsum('ij,k,l->ijkl', d, q, q)
                + np.einsum('ik,j,l->ijkl', d, q, q)
                + np.einsum('il,j,k->ijkl', d, q, q)
                + np.einsum('jk,i,l->ijkl', d, q, q)
                + np.einsum('jl,i,k->ijkl', d, q, q)
                + np.einsum('kl,i,j->ijkl', d, q, q))
    qqqq = np.einsum('i,j,k,l->ijkl', q, q, q, q)
    r5 = r2 * r2 * r
    return -3.0 * delta_delta / r5 + 15.0 * delta_qq / (r5 * r2) - 105.0 * qqqq / (r5 * r2 * r2)


def kepler_force_model() -> ForceModel:
    """Planar Kepler problem H = p^2/2 - 1/|q| (unit gravitational parameter)."""
    return ForceModel(
        name='kepler',
        dimension=2,
        potential=kepler_potential,
        force=kepler_force,
        force_gradient=kepler_force_gradient,
        hessian=kepler_hessian,
        third_derivatives=kepler_third_derivatives,
        fourth_derivatives=kepler_fourth_derivatives,
    )
