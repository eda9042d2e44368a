"""
Run-configuration serializers for the laboratory subcommands.

Every subcommand validates its whole configuration (command-line flags merged
over an optional --config JSON file) before any computation starts.
"""
from rest_framework import serializers

from apps.splitting.serializers import StrictSerializer
from apps.splitting.services import SchemeFactory
from .exceptions import ConfigurationError

MAX_PRECISION_DIGITS = 1000
FIGURE_NUMBERS = (1, 2, 3, 4, 5, 6, 7)


def resolve_selector(selector):
    try:
        return SchemeFactory().from_selector(selector)
    except ConfigurationError as exc:
        raise serializers.ValidationError(exc.message)


class SchemeSelectorField(serializers.CharField):
    """A 'builtin:NAME(k=v,...)' or 'file:PATH' selector, resolved to a scheme."""

    def to_internal_value(self, data):
        return resolve_selector(super().to_internal_value(data))


class RunConfigSerializer(StrictSerializer):
    """Flags shared by every subcommand."""
    out = serializers.CharField(required=False, allow_null=True, default=None)
    precision = serializers.IntegerField(required=False, allow_null=True, default=None,
                                         min_value=16, max_value=MAX_PRECISION_DIGITS)
    threads = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)


class CoeffsConfigSerializer(RunConfigSerializer):
    scheme = SchemeSelectorField()


class OscillatorConfigSerializer(RunConfigSerializer):
    KINDS = ('frequency', 'energy', 'stability', 'shadow')

    scheme = SchemeSelectorField()
    kind = serializers.ChoiceField(choices=KINDS, default='frequency')
    omega = serializers.FloatField(default=1.0)
    q0 = serializers.FloatField(default=1.0)
    p0 = serializers.FloatField(default=1.0)
    max_order = serializers.IntegerField(required=False, allow_null=True, default=None)
    eps = serializers.FloatField(required=False, allow_null=True, default=None, min_value=0.0)
    n = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)

    def validate_omega(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("omega must be positive")
        return value

    def validate(self, attrs):
        attrs = super().validate(attrs)
        kind, max_order = attrs['kind'], attrs.get('max_order')
        allowed = {'frequency': (2, 4, 6, 8), 'energy': (2, 4, 6, 8, 10)}.get(kind)
        if max_order is not None and allowed is not None and max_order not in allowed:
            raise serializers.ValidationError({'max_order': f"{kind} series orders are {allowed}"})
        if kind == 'shadow' and (attrs.get('eps') is None or attrs.get('n') is None):
            raise serializers.ValidationError({'kind': "shadow trajectories need eps and n"})
        return attrs


class OrbitSelectionMixin(serializers.Serializer):
    """Either an eccentricity e or a starting momentum py for q0 = (10, 0)."""
    e = serializers.FloatField(required=False, allow_null=True, default=None, min_value=0.0, max_value=1.0)
    py = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if attrs.get('e') is not None and attrs.get('py') is not None:
            raise serializers.ValidationError({'e': "give either e or py, not both"})
        if attrs.get('e') is None and attrs.get('py') is None:
            attrs['py'] = 0.1
        return attrs


class KeplerConfigSerializer(OrbitSelectionMixin, RunConfigSerializer):
    KINDS = ('energy', 'angle', 'precession', 'shadow')

    scheme = SchemeSelectorField()
    kind = serializers.ChoiceField(choices=KINDS, default='angle')
    n = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)
    sample_every = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)


class ScanConfigSerializer(OrbitSelectionMixin, RunConfigSerializer):
    OBJECTIVES = ('freq6', 'energy10', 'kepler-precession')

    objective = serializers.ChoiceField(choices=OBJECTIVES)
    interval = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    points = serializers.IntegerField(min_value=3)
    omega = serializers.FloatField(default=1.0)
    q0 = serializers.FloatField(default=1.0)
    p0 = serializers.FloatField(default=1.0)
    alpha = serializers.FloatField(default=0.0)

    def validate_interval(self, value):
        low, high = value
        if not low < high:
            raise serializers.ValidationError("interval must be increasing")
        if low <= 0.5 <= high:
            raise serializers.ValidationError("interval must exclude t0 = 1/2")
        return value


class FigureConfigSerializer(RunConfigSerializer):
    number = serializers.ChoiceField(choices=FIGURE_NUMBERS)
    points = serializers.IntegerField(default=43, min_value=3)
    schemes = serializers.ListField(child=SchemeSelectorField(), default=list)
    eccentricities = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=0.999), required=False, allow_empty=False,
    )


class SchemesConfigSerializer(RunConfigSerializer):
    pass
