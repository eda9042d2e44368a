"""
factory-boy factories for laboratory value objects, shared by the test suites.
"""

import factory
import numpy as np

from .models import PhaseState, SplittingScheme, Stage


class PhaseStateFactory(factory.Factory):
    class Meta:
        model = PhaseState

    q = factory.LazyFunction(lambda: np.array([1.0]))
    p = factory.LazyFunction(lambda: np.array([0.0]))
    t = 0.0


class PlanarPhaseStateFactory(PhaseStateFactory):
    """Kepler starting point q = (10, 0), p = (0, 0.1)."""
    q = factory.LazyFunction(lambda: np.array([10.0, 0.0]))
    p = factory.LazyFunction(lambda: np.array([0.0, 0.1]))


class RandomPhaseStateFactory(PhaseStateFactory):
    """One-dimensional state drawn from a seeded sequence."""

    class Params:
        seed = factory.Sequence(lambda n: n)

    q = factory.LazyAttribute(lambda o: np.random.default_rng(o.seed).uniform(-2.0, 2.0, size=1))
    p = factory.LazyAttribute(lambda o: np.random.default_rng(o.seed + 10_000).uniform(-2.0, 2.0, size=1))


class SecondOrderSchemeFactory(factory.Factory):
    """Scheme D(1/2) K(1, alpha) D(1/2)."""

    class Meta:
        model = SplittingScheme

    class Params:
        alpha = 0.0

    name = factory.LazyAttribute(lambda o: f'second(alpha={float(o.alpha)!r})')
    stages = factory.LazyAttribute(
        lambda o: (Stage.drift(0.5), Stage.kick(1.0, float(o.alpha)), Stage.drift(0.5))
    )
    nominal_order = 2
    params = None
