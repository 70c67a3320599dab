import json

import numpy as np
from rest_framework import serializers

from clarke.settings import clarke_settings

MECHANISM_CHOICES = ("vcg", "auction1", "auction2", "auction3", "auction4", "dm2")
TIE_CHOICES = ("lex", "random")

#: mechanisms whose designer needs the valuation model even when bids are given
MODEL_REQUIRED = ("auction1", "auction2")


def round_floats(data, digits: int = None):
    """
    Recursively convert numpy scalars and arrays to plain Python values
    and round every float to ``digits`` significant digits.
    """
    if digits is None:
        digits = clarke_settings.FLOAT_DIGITS
    if isinstance(data, dict):
        return {str(key): round_floats(value, digits) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [round_floats(value, digits) for value in data]
    if isinstance(data, np.ndarray):
        return round_floats(data.tolist(), digits)
    if isinstance(data, (bool, np.bool_)):
        return bool(data)
    if isinstance(data, (int, np.integer)):
        return int(data)
    if isinstance(data, (float, np.floating)):
        value = float(data)
        if not np.isfinite(value):
            return None
        rounded = float("{0:.{1}g}".format(value, digits))
        # keep -0.0 out of reports
        return rounded + 0.0
    return data


def render_json(data) -> str:
    return json.dumps(round_floats(data), sort_keys=True, indent=2)


class RejectUnknownFieldsMixin:
    """Fail validation on keys the serializer does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: "Unknown field." for key in unknown})
        return super().to_internal_value(data)


class ValuationModelSerializer(RejectUnknownFieldsMixin, serializers.Serializer):
    f_slope = serializers.ListField(child=serializers.FloatField(), min_length=1)
    f_intercept = serializers.ListField(child=serializers.FloatField(), required=False)
    c = serializers.ListField(child=serializers.FloatField(), min_length=1)
    d = serializers.ListField(child=serializers.FloatField(), required=False)


class SubsetBidItemSerializer(RejectUnknownFieldsMixin, serializers.Serializer):
    goods = serializers.ListField(child=serializers.IntegerField(min_value=0))
    bid = serializers.FloatField()


class AffineBidSerializer(RejectUnknownFieldsMixin, serializers.Serializer):
    intercept = serializers.FloatField()
    slope = serializers.FloatField()


def _matrix_field():
    return serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))


#: per mechanism, a factory for the serializer field validating ``bids``
BID_FIELDS = {
    "vcg": lambda: serializers.ListField(child=SubsetBidItemSerializer(many=True)),
    "auction1": _matrix_field,
    "auction2": _matrix_field,
    "auction3": lambda: serializers.ListField(child=_matrix_field()),
    "auction4": lambda: serializers.ListField(child=_matrix_field()),
    "dm2": lambda: AffineBidSerializer(many=True),
}


class ScenarioSerializer(RejectUnknownFieldsMixin, serializers.Serializer):
    """
    Validates a scenario document. Only the layout is checked here; whether
    its dimensions fit the mechanism is decided by
    :meth:`clarke.scenarios.Scenario.from_validated_data`.
    """

    mechanism = serializers.ChoiceField(choices=MECHANISM_CHOICES)
    model = ValuationModelSerializer(required=False)
    signals = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField()), required=False
    )
    bids = serializers.JSONField(required=False)
    #: true bundle values of a VCG scenario, laid out like its ``bids``
    values = serializers.JSONField(required=False)
    tie = serializers.ChoiceField(choices=TIE_CHOICES, required=False)
    seed = serializers.IntegerField(required=False)
    epsilon = serializers.FloatField(required=False, min_value=0.0)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        mechanism = attrs["mechanism"]
        if "values" in attrs:
            if mechanism != "vcg":
                raise serializers.ValidationError({"values": "Only VCG scenarios carry bundle values."})
            if "model" in attrs:
                raise serializers.ValidationError({"values": "Give either a model or bundle values."})
            try:
                attrs["values"] = BID_FIELDS["vcg"]().run_validation(attrs["values"])
            except serializers.ValidationError as exc:
                raise serializers.ValidationError({"values": exc.detail})
        if "bids" in attrs:
            field = BID_FIELDS[mechanism]()
            try:
                attrs["bids"] = field.run_validation(attrs["bids"])
            except serializers.ValidationError as exc:
                raise serializers.ValidationError({"bids": exc.detail})
        elif "values" not in attrs:
            missing = [key for key in ("model", "signals") if key not in attrs]
            if missing:
                raise serializers.ValidationError(
                    {key: "Required when no bids are given." for key in missing}
                )
        if mechanism in MODEL_REQUIRED and "model" not in attrs:
            raise serializers.ValidationError(
                {"model": "The {0} designer needs the valuation model.".format(mechanism)}
            )
        if "signals" in attrs and "model" not in attrs:
            raise serializers.ValidationError({"model": "Signals need a model."})
        return attrs


class SignificantFloatField(serializers.FloatField):
    def to_representation(self, value):
        return round_floats(float(value))


class RoundedJSONField(serializers.Field):
    def to_representation(self, value):
        return round_floats(value)


class OutcomeReportSerializer(serializers.Serializer):
    """Read-only rendering of a :class:`clarke.models.AuctionOutcome`."""

    mechanism = serializers.CharField()
    allocated = serializers.BooleanField()
    allocation = serializers.ListField(
        source="allocation.assigned", child=serializers.IntegerField(allow_null=True)
    )
    payments = serializers.ListField(child=SignificantFloatField())
    utilities = serializers.ListField(child=SignificantFloatField())
    welfare = SignificantFloatField()
    diagnostics = RoundedJSONField()
    warnings = serializers.ListField(child=serializers.CharField())
