from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from .evaluation import EvalConfig
from .ingest import FORMATS, WindowSpec
from .matrix import DENOMINATORS
from .measures import BASELINES, MEASURES
from .synth import SynthConfig
from .utils import split_list


class CommaSeparatedField(serializers.ListField):
    """List field that also accepts a comma separated string (flags, config files)."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = split_list(data)
        return super().to_internal_value(data)


class ExistingPathField(serializers.CharField):

    def to_internal_value(self, data):
        path = Path(super().to_internal_value(data))
        if not path.exists():
            raise serializers.ValidationError(f'{path} does not exist')
        return path


class RunConfigSerializer(serializers.Serializer):
    """
    Validates the merged settings/config-file/flag options of `build`.
    Defaults come from the DESTSIM_* settings.
    """
    input = CommaSeparatedField(child=ExistingPathField(), allow_empty=False)
    format = serializers.ChoiceField(choices=FORMATS, required=False, allow_null=True, default=None)
    market = CommaSeparatedField(child=serializers.CharField(), required=False, default=list)
    train_start = serializers.DateTimeField(required=False, allow_null=True, default=None)
    train_end = serializers.DateTimeField(required=False, allow_null=True, default=None)
    measures = CommaSeparatedField(child=serializers.ChoiceField(choices=MEASURES), allow_empty=False,
                                   required=False, default=lambda: list(MEASURES))
    w = CommaSeparatedField(child=serializers.FloatField(min_value=0.0), allow_empty=False,
                            required=False, default=lambda: [settings.DESTSIM_DEFAULT_W])
    k = serializers.IntegerField(min_value=1, required=False, default=lambda: settings.DESTSIM_TOP_K)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, required=False,
                                    default=lambda: settings.DESTSIM_SEED)
    out = serializers.CharField(required=False, default=lambda: settings.DESTSIM_OUTPUT_DIR)
    popularity_denominator = serializers.ChoiceField(choices=DENOMINATORS, required=False,
                                                     default=lambda: settings.DESTSIM_POPULARITY_DENOMINATOR)
    max_degree = serializers.IntegerField(min_value=1, required=False,
                                          default=lambda: settings.DESTSIM_MAX_USER_DEGREE)
    min_support = serializers.IntegerField(min_value=1, required=False,
                                           default=lambda: settings.DESTSIM_MIN_SUPPORT)
    malformed_threshold = serializers.FloatField(min_value=0.0, max_value=1.0, required=False,
                                                 default=lambda: settings.DESTSIM_MALFORMED_THRESHOLD)
    workers = serializers.IntegerField(min_value=1, required=False, default=lambda: settings.DESTSIM_WORKERS)
    deterministic = serializers.BooleanField(required=False, default=False)
    export_interactions = serializers.BooleanField(required=False, default=False)

    def validate_w(self, value):
        if any(w >= 1 for w in value):
            raise serializers.ValidationError('w must lie in [0, 1)')
        return value

    def validate_market(self, value):
        return [market.upper() for market in value]

    def validate(self, attrs):
        start, end = attrs.get('train_start'), attrs.get('train_end')
        if (start is None) != (end is None):
            raise serializers.ValidationError('train_start and train_end must be given together')
        if start is not None and start >= end:
            raise serializers.ValidationError('train_start must precede train_end')
        return attrs


class EvaluateConfigSerializer(RunConfigSerializer):
    train_start = serializers.DateTimeField()
    train_end = serializers.DateTimeField()
    test_start = serializers.DateTimeField()
    test_end = serializers.DateTimeField()
    w = CommaSeparatedField(child=serializers.FloatField(min_value=0.0), allow_empty=False,
                            required=False, default=lambda: list(settings.DESTSIM_W_GRID))
    periods = serializers.IntegerField(min_value=1, required=False, default=1)
    train_weeks = CommaSeparatedField(child=serializers.IntegerField(min_value=1), required=False, default=list)
    baseline = serializers.CharField(required=False, default=lambda: settings.DESTSIM_BASELINE_MEASURE)
    with_baselines = serializers.BooleanField(required=False, default=False)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        try:
            attrs['window'] = WindowSpec(attrs['train_start'], attrs['train_end'],
                                         attrs['test_start'], attrs['test_end'])
            attrs['eval_config'] = EvalConfig(
                measures=tuple(attrs['measures']),
                w_grid=tuple(attrs['w']),
                k=attrs['k'],
                seed=attrs['seed'],
                window=attrs['window'],
                baselines=BASELINES if attrs['with_baselines'] else (),
                popularity_denominator=attrs['popularity_denominator'],
                max_degree=attrs['max_degree'],
                min_support=attrs['min_support'],
                workers=attrs['workers'],
            )
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        if attrs['baseline'] not in attrs['eval_config'].labels:
            raise serializers.ValidationError(
                {'baseline': f"'{attrs['baseline']}' is not one of the evaluated measures"}
            )
        return attrs


class RecommendConfigSerializer(serializers.Serializer):
    matrix = ExistingPathField()
    searched = CommaSeparatedField(child=serializers.CharField(), allow_empty=False)
    k = serializers.IntegerField(min_value=1, required=False, default=lambda: settings.DESTSIM_TOP_K)

    def validate_searched(self, value):
        return [code.upper() for code in value]


class SynthConfigSerializer(serializers.Serializer):
    users = serializers.IntegerField(min_value=1, required=False, default=SynthConfig.n_users)
    destinations = serializers.IntegerField(min_value=1, required=False, default=SynthConfig.n_destinations)
    clusters = serializers.IntegerField(min_value=1, required=False, default=SynthConfig.n_clusters)
    zipf = serializers.FloatField(min_value=0.0, required=False, default=SynthConfig.zipf_exponent)
    searches = CommaSeparatedField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2,
                                   required=False, default=lambda: list(SynthConfig.searches_per_user))
    noise = serializers.FloatField(min_value=0.0, max_value=1.0, required=False, default=SynthConfig.noise)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, required=False,
                                    default=lambda: settings.DESTSIM_SEED)
    market = CommaSeparatedField(child=serializers.CharField(), allow_empty=False, required=False,
                                 default=lambda: [SynthConfig.market])
    start = serializers.DateTimeField(required=False, default=SynthConfig.start)
    end = serializers.DateTimeField(required=False, default=SynthConfig.end)
    out = serializers.CharField()
    format = serializers.ChoiceField(choices=FORMATS, required=False, allow_null=True, default=None)

    def validate_market(self, value):
        return [market.upper() for market in value]

    def validate(self, attrs):
        try:
            attrs['config'] = SynthConfig(
                n_users=attrs['users'],
                n_destinations=attrs['destinations'],
                n_clusters=attrs['clusters'],
                zipf_exponent=attrs['zipf'],
                searches_per_user=tuple(attrs['searches']),
                noise=attrs['noise'],
                seed=attrs['seed'],
                market=attrs['market'][0],
                start=attrs['start'],
                end=attrs['end'],
            )
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class RecommendationSerializer(serializers.Serializer):
    destination = serializers.CharField()
    score = serializers.FloatField()
    rank = serializers.IntegerField()
