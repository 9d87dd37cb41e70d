"""
Serializers for model files, the domain config file and risk API requests
"""
from rest_framework import serializers

from apps.ingest.buckets import BucketMaps
from apps.networks.railbreak import resolve_evidence
from core.exceptions import RailRiskError

SCHEMA_VERSION = 1
FIT_MODES = ['factorized', 'full_joint']


class VariableSerializer(serializers.Serializer):
    name = serializers.CharField()
    label = serializers.CharField(required=False, allow_blank=True)
    states = serializers.ListField(child=serializers.CharField(), min_length=2)
    state_labels = serializers.ListField(child=serializers.CharField(), required=False)


class TableSerializer(serializers.Serializer):
    name = serializers.CharField()
    scope = serializers.ListField(child=serializers.CharField())
    values = serializers.ListField(child=serializers.FloatField())


class StructureSerializer(serializers.Serializer):
    edges = serializers.ListField(
        child=serializers.ListField(child=serializers.CharField(), min_length=2, max_length=2)
    )


class ModelFileSerializer(serializers.Serializer):
    """Versioned JSON model file"""
    schema_version = serializers.IntegerField()
    tool_version = serializers.CharField()
    kind = serializers.ChoiceField(choices=FIT_MODES)
    variables = VariableSerializer(many=True)
    structure = StructureSerializer()
    tables = TableSerializer(many=True)
    provenance = serializers.DictField(required=False, default=dict)

    def validate_schema_version(self, value):
        if value != SCHEMA_VERSION:
            raise serializers.ValidationError(
                f"Unsupported schema version {value}; this tool reads version {SCHEMA_VERSION}"
            )
        return value

    def validate(self, attrs):
        names = [t['name'] for t in attrs['tables']]
        if len(set(names)) != len(names):
            raise serializers.ValidationError('Table names must be unique')
        return attrs


def _month_list(value):
    try:
        months = [int(part) for part in str(value).split(',') if part.strip()]
    except ValueError:
        raise serializers.ValidationError('Expected comma-separated month numbers') from None
    if not months:
        raise serializers.ValidationError('At least one month is required')
    return months


class RiskConfigSerializer(serializers.Serializer):
    """Key-value domain config; keys mirror config/railrisk.env"""
    SEASON_EARLY_SUMMER_MONTHS = serializers.CharField(required=False, default='10,11,12')
    SEASON_LATE_SUMMER_MONTHS = serializers.CharField(required=False, default='1,2,3')
    SEASON_WINTER_MONTHS = serializers.CharField(required=False, default='4,5,6,7')
    SEASON_LATE_WINTER_MONTHS = serializers.CharField(required=False, default='8,9')
    MORNING_START_HOUR = serializers.IntegerField(required=False, default=4, min_value=0, max_value=23)
    MORNING_END_HOUR = serializers.IntegerField(required=False, default=11, min_value=1, max_value=24)
    TRAINS_PER_DAY = serializers.CharField(required=False, default='auto')
    PERIOD_START = serializers.DateField(required=False, default=None, allow_null=True)
    PERIOD_END = serializers.DateField(required=False, default=None, allow_null=True)
    ALPHA = serializers.FloatField(required=False, default=1.0, min_value=0)
    FIT_MODE = serializers.ChoiceField(choices=FIT_MODES, required=False, default='factorized')

    def validate_TRAINS_PER_DAY(self, value):
        if value.strip().lower() == 'auto':
            return None
        try:
            trains = float(value)
        except ValueError:
            raise serializers.ValidationError("Expected a positive number or 'auto'") from None
        if not trains > 0 or trains == float('inf'):
            raise serializers.ValidationError('Trains per day must be positive')
        return trains

    def validate(self, attrs):
        unknown = sorted(set(self.initial_data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError(f"Unknown config keys: {', '.join(unknown)}")

        start, end = attrs.get('PERIOD_START'), attrs.get('PERIOD_END')
        if start and end and end < start:
            raise serializers.ValidationError('PERIOD_END must not be before PERIOD_START')

        try:
            attrs['maps'] = BucketMaps.from_ranges(
                {
                    's0': _month_list(attrs['SEASON_EARLY_SUMMER_MONTHS']),
                    's1': _month_list(attrs['SEASON_LATE_SUMMER_MONTHS']),
                    's2': _month_list(attrs['SEASON_WINTER_MONTHS']),
                    's3': _month_list(attrs['SEASON_LATE_WINTER_MONTHS']),
                },
                (attrs['MORNING_START_HOUR'], attrs['MORNING_END_HOUR']),
            )
        except RailRiskError as e:
            raise serializers.ValidationError(str(e)) from None
        return attrs


class RiskQuerySerializer(serializers.Serializer):
    season = serializers.CharField(required=False, allow_blank=True)
    time = serializers.CharField(required=False, allow_blank=True)
    location = serializers.CharField(required=False, allow_blank=True)

    def validate(self, attrs):
        try:
            attrs['evidence'] = resolve_evidence(attrs)
        except RailRiskError as e:
            raise serializers.ValidationError(str(e)) from None
        return attrs


class TripLegSerializer(serializers.Serializer):
    section = serializers.CharField()
    time = serializers.CharField(required=False, allow_null=True, default=None)
    season = serializers.CharField(required=False, allow_null=True, default=None)


class TripSerializer(serializers.Serializer):
    legs = TripLegSerializer(many=True, allow_empty=False)
    complement = serializers.BooleanField(required=False, default=False)
