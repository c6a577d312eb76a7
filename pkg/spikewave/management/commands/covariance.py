from spikewave.management.base import SpikewaveCommand, add_signal_arguments, load_signal
from spikewave.serializers import CovarianceConfigSerializer
from spikewave.services.analysis_service import AnalysisService
from spikewave.services.export_service import ExportService
from spikewave.services.signal_service import SINE


class Command(SpikewaveCommand):
    help = "Tabulate how far the LIF, spiking and smoothing paths deviate from exact scale covariance."

    serializer_class = CovarianceConfigSerializer
    unused_flags = ("bin_width",)

    def add_command_arguments(self, parser):
        add_signal_arguments(parser)
        parser.add_argument("--s-values", dest="s_values", default=None, help="comma-separated scale factors")
        parser.add_argument(
            "--halve-dt",
            dest="halve_dt",
            action="store_true",
            default=None,
            help="repeat the sub-threshold comparison at dt/2 and report the convergence ratio",
        )

    def defaults(self, conf):
        values = super().defaults(conf)
        values.update(
            c=conf["C"],
            k=conf["K"],
            tau_max=conf["TAU_MAX"],
            theta=conf["THETA"],
            signal=SINE,
            duration=conf["SINE_DURATION"],
            s_values=conf["S_VALUES"],
            halve_dt=False,
        )
        return values

    def run(self, config, out_dir):
        values = config.values
        source = config.signal if config.signal is not None else load_signal(config)
        rows = AnalysisService.verify_covariance(
            source,
            config.params,
            values["s_values"],
            refine=values["halve_dt"],
            eps_trunc=values["eps_trunc"],
        )
        yield ExportService.write_covariance(out_dir / "covariance.csv", rows)
