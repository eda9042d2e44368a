import factory

from .models import KeplerOrbitSpec
from .services import KeplerService


class KeplerOrbitSpecFactory(factory.Factory):
    """Orbit of the q0 = (10, 0) family; py = 0.1 gives e = 0.9."""

    class Meta:
        model = KeplerOrbitSpec

    py = 0.1

    @classmethod
    def _build(cls, model_class, *args, **kwargs):
        return KeplerService().orbit_from_py(kwargs['py'])

    @classmethod
    def _create(cls, model_class, *args, **kwargs):
        return cls._build(model_class, *args, **kwargs)
