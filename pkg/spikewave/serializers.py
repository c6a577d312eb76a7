import math

from rest_framework import serializers

from .models import (
    ReconstructionMode,
    ReconstructionPath,
    RunConfig,
    ScaleParams,
)
from .services.analysis_service import AnalysisService
from .services.signal_service import EXPERIMENT_SIGNALS, SignalService


class CommaSeparatedListField(serializers.ListField):
    """Accepts a list or a 'a,b,c' string (flags and config files)."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item.strip() for item in data.split(",") if item.strip()]
        return super().to_internal_value(data)


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise serializers.ValidationError(f"{name} must be positive and finite")
    return value


# ---------------------------------------------------------------------------
# Command configuration
# ---------------------------------------------------------------------------
class CommandConfigSerializer(serializers.Serializer):
    out_dir = serializers.CharField()
    dt = serializers.FloatField()

    def validate_dt(self, value):
        return _positive("dt", value)

    def build_params(self, attrs):
        return None

    def build_signal(self, attrs):
        return None

    def validate(self, attrs):
        try:
            self.build_params(attrs)
            self.build_signal(attrs)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc)) from exc
        return attrs

    def create(self, validated_data):
        return RunConfig(
            command=self.context.get("command", ""),
            values=dict(validated_data),
            params=self.build_params(validated_data),
            signal=self.build_signal(validated_data),
        )


class ScaleParamsSerializer(CommandConfigSerializer):
    c = serializers.FloatField()
    k = serializers.IntegerField(min_value=1)
    tau_max = serializers.FloatField()
    theta = serializers.FloatField()
    eps_trunc = serializers.FloatField()

    def validate_c(self, value):
        if not value > 1:
            raise serializers.ValidationError("c must exceed 1")
        return value

    def validate_tau_max(self, value):
        return _positive("tau_max", value)

    def validate_theta(self, value):
        return _positive("theta", value)

    def validate_eps_trunc(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("eps_trunc must lie in (0, 1)")
        return value

    def build_params(self, attrs):
        return ScaleParams(c=attrs["c"], k=attrs["k"], tau_max=attrs["tau_max"], theta_thr=attrs["theta"])


class SignalConfigSerializer(ScaleParamsSerializer):
    signal = serializers.ChoiceField(choices=EXPERIMENT_SIGNALS)
    duration = serializers.FloatField()
    signal_csv = serializers.CharField(required=False, allow_blank=True, allow_null=True)

    def validate_duration(self, value):
        return _positive("duration", value)

    def build_signal(self, attrs):
        if attrs.get("signal_csv"):
            return None
        return SignalService.experiment_signal(attrs["signal"], attrs["duration"], attrs["dt"])


class KernelsConfigSerializer(ScaleParamsSerializer):
    convergence_k_max = serializers.IntegerField(min_value=1, required=False, allow_null=True)


class EncodeConfigSerializer(SignalConfigSerializer):
    negate = serializers.BooleanField()
    traces = serializers.BooleanField()


class ReconstructConfigSerializer(SignalConfigSerializer):
    bin_width = serializers.FloatField()
    path = serializers.ChoiceField(choices=ReconstructionPath.choices)
    mode = serializers.ChoiceField(choices=ReconstructionMode.choices)

    def validate_bin_width(self, value):
        return _positive("bin_width", value)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if attrs["bin_width"] < attrs["dt"] * (1 - 1e-9):
            raise serializers.ValidationError({"bin_width": "bin_width must not be below dt"})
        if not attrs.get("signal_csv"):
            # The error window drops the skip at both ends.
            skip = AnalysisService.schedule_skip(self.build_params(attrs))
            if attrs["duration"] <= 2 * skip:
                raise serializers.ValidationError(
                    {"duration": f"duration must exceed {2 * skip:g} s, twice the {skip:g} s transient skip"}
                )
        return attrs


class CovarianceConfigSerializer(SignalConfigSerializer):
    s_values = CommaSeparatedListField(child=serializers.FloatField(), allow_empty=False)
    halve_dt = serializers.BooleanField()

    def validate_s_values(self, value):
        for s in value:
            _positive("s", s)
        return value

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if attrs["halve_dt"] and attrs.get("signal_csv"):
            raise serializers.ValidationError({"halve_dt": "dt halving needs a generated signal"})
        return attrs


class CompareConfigSerializer(CommandConfigSerializer):
    tau_max = serializers.FloatField()
    theta = serializers.FloatField()
    eps_trunc = serializers.FloatField()
    methods = CommaSeparatedListField(child=serializers.CharField(), allow_empty=False)
    signals = CommaSeparatedListField(child=serializers.ChoiceField(choices=EXPERIMENT_SIGNALS), allow_empty=False)
    with_default_schedule = serializers.BooleanField()
    bin_width = serializers.FloatField()
    duration = serializers.FloatField(required=False, allow_null=True)
    scales = serializers.IntegerField(min_value=2)
    morlet_sigma = serializers.FloatField()
    morlet_omega0 = serializers.FloatField()
    trunc_exp_order = serializers.ChoiceField(choices=[1, 2])

    def validate_tau_max(self, value):
        return _positive("tau_max", value)

    def validate_theta(self, value):
        return _positive("theta", value)

    def validate_bin_width(self, value):
        return _positive("bin_width", value)

    def validate_morlet_sigma(self, value):
        return _positive("morlet_sigma", value)

    def validate_morlet_omega0(self, value):
        return _positive("morlet_omega0", value)

    def validate_duration(self, value):
        if value is None:
            return value
        return _positive("duration", value)

    def validate_methods(self, value):
        known = [m.name for m in AnalysisService.experiment_methods(include_default_schedule=True)]
        unknown = [name for name in value if name not in known]
        if unknown:
            raise serializers.ValidationError(
                f"unknown method(s) {', '.join(unknown)}; choose from {', '.join(known)}"
            )
        if len(set(value)) != len(value):
            raise serializers.ValidationError("methods must be unique")
        return value

    def build_signal(self, attrs):
        for name in attrs["signals"]:
            SignalService.experiment_signal(name, attrs.get("duration") or 1.0, attrs["dt"])
        return None


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------
class ComparisonRowSerializer(serializers.Serializer):
    method = serializers.CharField()
    params = serializers.CharField(allow_blank=True)
    rmse = serializers.SerializerMethodField()
    rel_l2 = serializers.SerializerMethodField()
    max_abs = serializers.SerializerMethodField()
    status = serializers.CharField()

    def _metric(self, obj, name):
        if obj.report is None:
            return None
        return getattr(obj.report, name)

    def get_rmse(self, obj):
        return self._metric(obj, "rmse")

    def get_rel_l2(self, obj):
        return self._metric(obj, "rel_l2")

    def get_max_abs(self, obj):
        return self._metric(obj, "max_abs")
