from spikewave.management.base import SpikewaveCommand, add_signal_arguments, load_signal
from spikewave.models import ReconstructionMode, ReconstructionPath
from spikewave.serializers import ReconstructConfigSerializer
from spikewave.services.analysis_service import AnalysisService
from spikewave.services.export_service import ExportService
from spikewave.services.signal_service import COMPOSITE
from spikewave.services.spiking_wavelet_service import SpikingWaveletService


class Command(SpikewaveCommand):
    help = "Encode a signal, form spike-count wavelet coefficients and reconstruct the signal."

    serializer_class = ReconstructConfigSerializer

    def add_command_arguments(self, parser):
        add_signal_arguments(parser)
        parser.add_argument("--path", dest="path", choices=ReconstructionPath.values, default=None)
        parser.add_argument("--mode", dest="mode", choices=ReconstructionMode.values, default=None)

    def defaults(self, conf):
        values = super().defaults(conf)
        values.update(
            c=conf["C"],
            k=conf["K"],
            tau_max=conf["TAU_MAX"],
            theta=conf["THETA"],
            signal=COMPOSITE,
            duration=conf["COMPOSITE_DURATION"],
            bin_width=conf["BIN_WIDTH_FACTOR"] * conf["DT"],
            path=ReconstructionPath.COUNT,
            mode=ReconstructionMode.CALIBRATED,
        )
        return values

    def run(self, config, out_dir):
        values = config.values
        signal = load_signal(config)
        skip = AnalysisService.schedule_skip(config.params)
        result = SpikingWaveletService.run_pipeline(
            signal,
            config.params,
            values["bin_width"],
            path=values["path"],
            mode=values["mode"],
            calibration=signal,
            eps_trunc=values["eps_trunc"],
            skip_transient=skip,
        )
        reconstruction = result.reconstruction
        errors = AnalysisService.error_report(signal, reconstruction.combined, skip, skip)

        report = {
            "path": values["path"],
            "mode": values["mode"],
            "band_mus": list(reconstruction.scale_mus),
            "weights": list(reconstruction.weights),
            "skip": skip,
            "rmse": errors.rmse,
            "rel_l2": errors.rel_l2,
            "max_abs": errors.max_abs,
            "spike_count": result.encoding.spike_count,
            "spike_count_bound": AnalysisService.spike_count_bound(signal, config.params),
        }
        yield ExportService.write_coefficients(out_dir / "coefficients.csv", result.coefficients)
        yield ExportService.write_signal(out_dir / "reconstruction.csv", reconstruction.combined)
        yield ExportService.write_report(out_dir / "reconstruct_report.txt", report)
