import logging

import numpy as np

from apps.algebra.models import ErrorCoefficientSet
from apps.common.exceptions import DomainError, SingularityError
from apps.splitting.forces import ForceModel, kepler_third_derivatives
from apps.splitting.models import PhaseState
from .models import BracketValues

logger = logging.getLogger('apps.brackets')


class BracketService:
    """Poisson brackets of separable Hamiltonians and the modified Hamiltonian H_A."""

    def eval_brackets(self, force: ForceModel, state: PhaseState) -> BracketValues:
        """All seven brackets; tt3v is None when the force model has no fourth derivatives."""
        p = state.p
        gradient, hessian = self._low_order(force, state)
        third = force.third_derivatives(state.q)
        if force.fourth_derivatives is None:
            logger.debug(f"Force model {force.name} has no fourth derivatives; {{TTTTV}} left out",
                         extra={'force_model': force.name, 'bracket': 'tt3v'})
            tt3v, unavailable = None, ('tt3v',)
        else:
            fourth = force.fourth_derivatives(state.q)
            tt3v, unavailable = float(np.einsum('ijkl,i,j,k,l->', fourth, p, p, p, p)), ()

        return BracketValues(
            tv=float(-p @ gradient),
            ttv=float(p @ hessian @ p),
            vtv=float(-gradient @ gradient),
            tt3v=tt3v,
            vt3v=float(-3.0 * np.einsum('ijk,i,j,k->', third, p, p, gradient)),
            ttvtv=float(-2.0 * (np.einsum('ikj,k,i,j->', third, gradient, p, p) + p @ hessian @ hessian @ p)),
            vtvtv=float(2.0 * gradient @ hessian @ gradient),
            unavailable=unavailable,
        )

    def hamiltonian(self, force: ForceModel, state: PhaseState) -> float:
        return 0.5 * float(state.p @ state.p) + float(force.potential(state.q))

    def modified_hamiltonian(self, coefficients: ErrorCoefficientSet, force: ForceModel, state: PhaseState,
                             eps: float, order: int = 4) -> float:
        """
        H_A = H + eps^2 (e_ttv {TTV} + e_vtv {VTV})
                + eps^4 (e_ttttv {TTTTV} + e_vtttv {VTTTV} + e_ttvtv {T(TV)^2} + e_vtvtv {V(TV)^2}).

        order 2 keeps only the eps^2 terms.
        """
        if order not in (2, 4):
            raise DomainError(f"Modified Hamiltonian order must be 2 or 4, got {order}")
        energy = self.hamiltonian(force, state)
        if order == 2:
            gradient, hessian = self._low_order(force, state)
            ttv = float(state.p @ hessian @ state.p)
            vtv = float(-gradient @ gradient)
            return energy + eps ** 2 * (coefficients.e_ttv * ttv + coefficients.e_vtv * vtv)

        b = self.eval_brackets(force, state)
        b.require('tt3v')
        return (
            energy
            + eps ** 2 * (coefficients.e_ttv * b.ttv + coefficients.e_vtv * b.vtv)
            + eps ** 4 * (coefficients.e_ttttv * b.tt3v + coefficients.e_vtttv * b.vt3v
                          + coefficients.e_ttvtv * b.ttvtv + coefficients.e_vtvtv * b.vtvtv)
        )

    def kepler_third_derivatives(self, q) -> np.ndarray:
        """V_ijk of V = -1/|q|."""
        q = np.asarray(q, dtype=float)
        if q.shape != (2,):
            raise DomainError(f"Kepler positions are 2-vectors, got shape {q.shape}")
        if not np.any(q):
            raise SingularityError("Kepler derivatives are singular at q = 0", q=q.tolist())
        return kepler_third_derivatives(q)

    @staticmethod
    def _low_order(force: ForceModel, state: PhaseState):
        gradient = -np.asarray(force.force(state.q), dtype=float)
        hessian = np.asarray(force.hessian(state.q), dtype=float)
        if not (np.all(np.isfinite(gradient)) and np.all(np.isfinite(hessian))):
            raise SingularityError(
                f"{force.name}: potential derivatives are not finite at q={state.q.tolist()}",
                q=state.q.tolist(),
            )
        return gradient, hessian
