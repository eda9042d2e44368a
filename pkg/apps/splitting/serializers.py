from rest_framework import serializers

from .models import StageKind, SUPPORTED_ORDERS, WEIGHT_SUM_TOLERANCE


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if isinstance(self.initial_data, dict):
            unknown = sorted(set(self.initial_data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({'unknown_keys': f"Unknown keys: {', '.join(unknown)}"})
        return attrs


class StageSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[kind.value for kind in StageKind])
    weight = serializers.FloatField()
    grad_weight = serializers.FloatField(required=False, default=0.0)

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({'unknown_keys': f"Unknown stage keys: {', '.join(unknown)}"})
        return super().to_internal_value(data)

    def validate(self, attrs):
        if attrs['kind'] == StageKind.DRIFT.value and attrs.get('grad_weight', 0.0) != 0.0:
            raise serializers.ValidationError(
                {'grad_weight': "drift-grad-weight: drift stages cannot carry a gradient weight"}
            )
        return attrs


class SchemeParamsSerializer(serializers.Serializer):
    t0 = serializers.FloatField()
    alpha = serializers.FloatField()


class SchemeDocumentSerializer(StrictSerializer):
    """
    Validates a scheme file document.

    Failed invariants are reported under the key of the invariant name
    (weight-sum, palindrome, drift-grad-weight).
    """
    name = serializers.CharField(max_length=200)
    nominal_order = serializers.ChoiceField(choices=list(SUPPORTED_ORDERS))
    params = SchemeParamsSerializer(required=False, allow_null=True, default=None)
    stages = StageSerializer(many=True, allow_empty=False)

    def validate_stages(self, value):
        drift_sum = sum(stage['weight'] for stage in value if stage['kind'] == StageKind.DRIFT.value)
        kick_sum = sum(stage['weight'] for stage in value if stage['kind'] == StageKind.KICK.value)
        if abs(drift_sum - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise serializers.ValidationError(f"weight-sum: drift weights sum to {drift_sum!r}, expected 1")
        if abs(kick_sum - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise serializers.ValidationError(f"weight-sum: kick weights sum to {kick_sum!r}, expected 1")

        for stage, mirror in zip(value, reversed(value)):
            if (stage['kind'] != mirror['kind']
                    or abs(stage['weight'] - mirror['weight']) > WEIGHT_SUM_TOLERANCE
                    or abs(stage.get('grad_weight', 0.0) - mirror.get('grad_weight', 0.0)) > WEIGHT_SUM_TOLERANCE):
                raise serializers.ValidationError("palindrome: stage list differs from its reverse")
        return value
