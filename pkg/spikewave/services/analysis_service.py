import dataclasses
import logging
import math

import numpy as np

from spikewave.exceptions import GridMismatchError, NumericalError
from spikewave.models import (
    AdmissibilityReport,
    ComparisonRow,
    ComparisonTable,
    CovarianceRow,
    DifferenceKernel,
    ErrorReport,
    MethodConfig,
    MethodKind,
    MotherWavelet,
    NeuronConfig,
    ReconstructionMode,
    ReconstructionPath,
    SampledSignal,
    SignalSpec,
    TimeConstantSchedule,
)
from spikewave.services.classical_wavelet_service import ClassicalWaveletService
from spikewave.services.neuron_service import NeuronService
from spikewave.services.scale_space_service import ScaleSpaceService
from spikewave.services.signal_service import SignalService
from spikewave.services.spiking_wavelet_service import SpikingWaveletService

logger = logging.getLogger(__name__)

ADMISSIBLE_MASS = 1e-4
UNIT_NORM_TOLERANCE = 1e-6
PLATEAU_MARGIN = 0.2
TRANSIENT_FACTOR = 3.0

STATUS_OK = "ok"
STATUS_DEGENERATE = "degenerate-reference"

EXPERIMENT_C = math.sqrt(2.0)
EXPERIMENT_TAU_MAX = 3.4
EXPERIMENT_THETA = 0.1


def _resample_deviation(times, values, transformed_times, transformed_values, s):
    """max |L'(s*t) - L(t)| with L' linearly interpolated."""
    resampled = np.interp(s * times, transformed_times, transformed_values)
    return float(np.max(np.abs(resampled - values)))


def _fixed_rate(source, signal, s):
    """The transformed signal f'(t') = f(t'/s) sampled at the original dt."""
    if s == 1:
        return signal
    if isinstance(source, SignalSpec):
        return SignalService.generate(SignalService.rescale_spec(source, s))
    n = max(1, int(round(len(signal) * s)))
    times = signal.t0 * s + signal.dt * np.arange(n)
    samples = np.interp(times / s, signal.times, signal.samples)
    return SampledSignal(dt=signal.dt, samples=samples, t0=signal.t0 * s)


class AnalysisService:

    @staticmethod
    def error_report(reference, candidate, skip_transient=0.0, skip_tail=0.0):
        if not reference.same_grid(candidate):
            raise GridMismatchError("reference and candidate must share dt, t0 and length")
        if skip_transient < 0 or skip_tail < 0:
            raise ValueError("skip_transient and skip_tail must not be negative")
        if skip_transient + skip_tail >= reference.duration:
            raise ValueError("skip_transient must be shorter than the signal duration")
        t = reference.times
        window = (t >= reference.t0 + skip_transient) & (t <= t[-1] - skip_tail)
        if not window.any():
            raise ValueError("no samples left after skipping transient and tail")
        ref = reference.samples[window]
        error = candidate.samples[window] - ref
        rmse = math.sqrt(float(np.mean(error ** 2)))
        max_abs = float(np.max(np.abs(error)))
        ref_norm = float(np.linalg.norm(ref))
        if ref_norm == 0:
            return ErrorReport(rmse=rmse, rel_l2=math.nan, max_abs=max_abs, degenerate=True)
        return ErrorReport(rmse=rmse, rel_l2=float(np.linalg.norm(error)) / ref_norm, max_abs=max_abs)

    @staticmethod
    def verify_admissibility(kernel):
        if isinstance(kernel, (MotherWavelet, DifferenceKernel)):
            kernel = kernel.kernel
        mass = float(abs(kernel.mass))
        l2 = kernel.l2
        passed = mass <= ADMISSIBLE_MASS and abs(l2 - 1.0) <= UNIT_NORM_TOLERANCE
        return AdmissibilityReport(mass=mass, l2=l2, passed=passed)

    @staticmethod
    def _subthreshold_deviation(source, signal, schedule, s):
        deviation = 0.0
        transformed = _fixed_rate(source, signal, s)
        for mu in sorted(set(schedule.mus)):
            run = NeuronService.covariance_probe(
                signal, NeuronConfig(mu=mu, theta_thr=math.inf), s, transformed=transformed
            )
            deviation = max(deviation, NeuronService.trace_deviation(run, s))
        return deviation

    @staticmethod
    def _smoothing_deviation(source, signal, schedule, s, eps_trunc):
        transformed = _fixed_rate(source, signal, s)
        scaled = TimeConstantSchedule(mus=tuple(mu * s for mu in schedule.mus))
        smoothed = ScaleSpaceService.scale_space_transform(
            signal, ScaleSpaceService.compose_cascade(schedule, signal.dt, eps_trunc)
        )
        transformed_smoothed = ScaleSpaceService.scale_space_transform(
            transformed, ScaleSpaceService.compose_cascade(scaled, transformed.dt, eps_trunc)
        )
        if s == 1:
            return float(np.max(np.abs(transformed_smoothed.samples - smoothed.samples)))
        return _resample_deviation(
            smoothed.times, smoothed.samples, transformed_smoothed.times, transformed_smoothed.samples, s
        )

    @staticmethod
    def _spike_count_delta(signal, params, schedule, s):
        scaled = TimeConstantSchedule(mus=tuple(mu * s for mu in schedule.mus))
        encoding = NeuronService.two_channel_encode(signal, params, schedule=schedule)
        transformed = NeuronService.two_channel_encode(
            SignalService.rescale_time(signal, s), params, schedule=scaled
        )
        return sum(abs(len(a) - len(b)) for a, b in zip(encoding.trains, transformed.trains))

    @staticmethod
    def verify_covariance(source, params, s_values, refine=False, eps_trunc=1e-6):
        """Per-s deviations of the sub-threshold, spiking and smoothing paths.

        The sub-threshold and smoothing paths compare against the transformed
        signal sampled at the original dt, so their deviation is the
        discretization error and shrinks with dt. Spike counts compare
        against the stretched grid (dt' = s*dt), which is exact when s is a
        power of two.
        """
        if not s_values:
            raise ValueError("s_values must not be empty")
        if any(not s > 0 for s in s_values):
            raise ValueError("s values must be positive")
        if isinstance(source, SignalSpec):
            signal = SignalService.generate(source)
        elif isinstance(source, SampledSignal):
            if refine:
                raise ValueError("dt refinement needs a signal spec")
            signal = source
        else:
            raise ValueError("source must be a SignalSpec or a SampledSignal")

        schedule = ScaleSpaceService.time_constants(params)
        refined_source = refined = None
        if refine:
            refined_source = dataclasses.replace(source, dt=source.dt / 2)
            refined = SignalService.generate(refined_source)

        rows = []
        for s in s_values:
            half_dt = None
            if refine:
                half_dt = AnalysisService._subthreshold_deviation(refined_source, refined, schedule, s)
            row = CovarianceRow(
                s=float(s),
                subthreshold_deviation=AnalysisService._subthreshold_deviation(source, signal, schedule, s),
                spike_count_delta=AnalysisService._spike_count_delta(signal, params, schedule, s),
                smoothing_deviation=AnalysisService._smoothing_deviation(source, signal, schedule, s, eps_trunc),
                subthreshold_deviation_half_dt=half_dt,
            )
            logger.debug("covariance s=%g: %s", s, row)
            rows.append(row)
        return rows

    @staticmethod
    def spike_count_bound(signal, params):
        """Upper bound on the total spike count of the two-channel encoder.

        Each polarity spends theta per spike out of at most dt/mu times its
        rectified drive, so a scale emits no more than sum|f|*dt/(theta*mu)
        spikes; the constant term absorbs start-up and carried surplus.
        """
        schedule = ScaleSpaceService.time_constants(params)
        drive = float(np.sum(np.abs(signal.samples))) * signal.dt / params.theta_thr
        peak = float(np.max(np.abs(signal.samples))) / params.theta_thr
        return sum(drive / mu for mu in schedule.mus) + 2 * schedule.k * (1 + peak)

    @staticmethod
    def experiment_methods(include_default_schedule=False):
        methods = [
            MethodConfig(name="morlet", kind=MethodKind.MORLET),
            MethodConfig(name="trunc-exp", kind=MethodKind.TRUNC_EXP, k=5, c=EXPERIMENT_C, tau_max=EXPERIMENT_TAU_MAX),
            MethodConfig(name="spiking-k3", kind=MethodKind.SPIKING, k=3, c=EXPERIMENT_C),
            MethodConfig(name="spiking-k6", kind=MethodKind.SPIKING, k=6, c=3.0),
            MethodConfig(name="spiking-k12", kind=MethodKind.SPIKING, k=12, c=1.6),
        ]
        if include_default_schedule:
            methods += [
                MethodConfig(name="spiking-k6-sqrt2", kind=MethodKind.SPIKING, k=6, c=EXPERIMENT_C),
                MethodConfig(name="spiking-k12-sqrt2", kind=MethodKind.SPIKING, k=12, c=EXPERIMENT_C),
            ]
        return methods

    @staticmethod
    def _analysis_band(spec, signal):
        band = SignalService.spec_band(spec) or SignalService.signal_band(signal)
        if band is not None:
            return band
        if spec.components:
            omegas = [2 * math.pi * c.frequency for c in spec.components]
            return min(omegas), max(omegas)
        return 2 * math.pi / signal.duration, math.pi / (4 * signal.dt)

    @staticmethod
    def schedule_skip(params):
        return TRANSIENT_FACTOR * max(ScaleSpaceService.time_constants(params).mus)

    @staticmethod
    def transient_skip(methods):
        skips = [AnalysisService.schedule_skip(m.scale_params) for m in methods if m.kind != MethodKind.MORLET]
        return max(skips, default=0.0)

    @staticmethod
    def _reconstruct(method, signal, band, options, skip):
        if method.kind == MethodKind.SPIKING:
            result = SpikingWaveletService.run_pipeline(
                signal,
                method.scale_params,
                options["bin_width"],
                path=options["path"],
                mode=options["mode"],
                calibration=signal,
                eps_trunc=options["eps_trunc"],
                skip_transient=skip,
            )
            return result.reconstruction.combined, result.reconstruction.weights, None
        if method.kind == MethodKind.MORLET:
            mother = ClassicalWaveletService.morlet(options["morlet_sigma"], options["morlet_omega0"], signal.dt)
        else:
            mother = ClassicalWaveletService.limit_kernel_wavelet(
                method.scale_params, method.order, signal.dt, options["eps_trunc"]
            )
        scales = ClassicalWaveletService.scale_grid(mother, band, options["scale_count"], signal.dt)
        grid = ClassicalWaveletService.cwt(signal, mother, scales)
        return ClassicalWaveletService.icwt(grid, mother), None, grid

    @staticmethod
    def run_comparison(
        signal_spec,
        methods,
        signal_name="",
        bin_width=None,
        path=ReconstructionPath.COUNT,
        mode=ReconstructionMode.CALIBRATED,
        scale_count=32,
        morlet_sigma=1.0,
        morlet_omega0=5.0,
        eps_trunc=1e-6,
        skip=None,
    ):
        methods = list(methods)
        if not methods:
            raise ValueError("at least one method is required")
        signal = SignalService.generate(signal_spec)
        band = AnalysisService._analysis_band(signal_spec, signal)
        if skip is None:
            skip = AnalysisService.transient_skip(methods)
        options = {
            "bin_width": bin_width if bin_width is not None else 50 * signal.dt,
            "path": path,
            "mode": mode,
            "scale_count": scale_count,
            "morlet_sigma": morlet_sigma,
            "morlet_omega0": morlet_omega0,
            "eps_trunc": eps_trunc,
        }

        rows = []
        for method in methods:
            try:
                reconstruction, weights, cwt = AnalysisService._reconstruct(method, signal, band, options, skip)
                report = AnalysisService.error_report(signal, reconstruction, skip, skip)
            except (ValueError, NumericalError) as exc:
                logger.warning("method %s failed on %s: %s", method.name, signal_name, exc)
                rows.append(ComparisonRow(method.name, method.summary, None, f"failed: {exc}"))
                continue
            status = STATUS_DEGENERATE if report.degenerate else STATUS_OK
            rows.append(ComparisonRow(method.name, method.summary, report, status, reconstruction, weights, cwt))
        return ComparisonTable(signal_name=signal_name, rows=rows)

    @staticmethod
    def ranking_checks(table):
        """Ordering flags on rel_l2; None where a row is missing or failed."""

        def error(name):
            row = table.row(name)
            if row is None or row.report is None or row.report.degenerate:
                return None
            return row.report.rel_l2

        def below(a, b):
            if a is None or b is None:
                return None
            return a < b

        trunc_exp, morlet, k3 = error("trunc-exp"), error("morlet"), error("spiking-k3")
        plateau = None
        wider = [error("spiking-k6"), error("spiking-k12")]
        if k3 is not None and all(e is not None for e in wider):
            plateau = all(abs(e - k3) <= PLATEAU_MARGIN * k3 for e in wider)
        return {
            "trunc_exp_below_morlet": below(trunc_exp, morlet),
            "morlet_below_spiking_k3": below(morlet, k3),
            "spiking_plateau": plateau,
        }
