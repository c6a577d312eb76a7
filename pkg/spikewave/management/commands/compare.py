import dataclasses

from django.conf import settings
from django.core.management.base import CommandError

from spikewave.exception_handler import EXIT_NUMERICAL
from spikewave.management.base import SpikewaveCommand
from spikewave.models import MethodKind
from spikewave.serializers import CompareConfigSerializer, ComparisonRowSerializer
from spikewave.services.analysis_service import STATUS_DEGENERATE, STATUS_OK, AnalysisService
from spikewave.services.export_service import ExportService
from spikewave.services.signal_service import COMPOSITE, EXPERIMENT_SIGNALS, SINE, SignalService


class Command(SpikewaveCommand):
    help = "Reconstruct the experiment signals with the classical and spiking wavelets and tabulate the errors."

    serializer_class = CompareConfigSerializer
    unused_flags = ("c", "k")

    def add_command_arguments(self, parser):
        parser.add_argument("--methods", dest="methods", default=None, help="comma-separated method names")
        parser.add_argument("--signals", dest="signals", default=None, help="comma-separated: sine,composite")
        parser.add_argument(
            "--with-default-schedule",
            dest="with_default_schedule",
            action="store_true",
            default=None,
            help="add spiking K=6 and K=12 at c = sqrt(2)",
        )
        parser.add_argument(
            "--duration", dest="duration", type=float, default=None, help="override both signal durations"
        )
        parser.add_argument("--scales", dest="scales", type=int, default=None, help="CWT scale count")
        parser.add_argument("--morlet-sigma", dest="morlet_sigma", type=float, default=None)
        parser.add_argument("--morlet-omega0", dest="morlet_omega0", type=float, default=None)
        parser.add_argument("--trunc-exp-order", dest="trunc_exp_order", type=int, default=None)
        parser.add_argument("--eps-trunc", dest="eps_trunc", type=float, default=None)

    def defaults(self, conf):
        values = super().defaults(conf)
        values.update(
            tau_max=conf["TAU_MAX"],
            theta=conf["THETA"],
            signals=list(EXPERIMENT_SIGNALS),
            with_default_schedule=False,
            bin_width=conf["BIN_WIDTH_FACTOR"] * conf["DT"],
            scales=conf["CWT_SCALES"],
            morlet_sigma=conf["MORLET_SIGMA"],
            morlet_omega0=conf["MORLET_OMEGA0"],
            trunc_exp_order=conf["TRUNC_EXP_ORDER"],
        )
        return values

    def merged_values(self, options):
        values = super().merged_values(options)
        if "methods" not in values:
            include = str(values.get("with_default_schedule", "")).lower() in ("true", "1")
            values["methods"] = [m.name for m in AnalysisService.experiment_methods(include)]
        return values

    def method_configs(self, values):
        chosen = []
        for method in AnalysisService.experiment_methods(include_default_schedule=True):
            if method.name not in values["methods"]:
                continue
            if method.kind != MethodKind.MORLET:
                method = dataclasses.replace(method, tau_max=values["tau_max"], theta_thr=values["theta"])
            if method.kind == MethodKind.TRUNC_EXP:
                method = dataclasses.replace(
                    method, k=settings.SPIKEWAVE["TRUNC_EXP_K"], order=values["trunc_exp_order"]
                )
            chosen.append(method)
        return chosen

    def signal_spec(self, name, values):
        durations = {SINE: "SINE_DURATION", COMPOSITE: "COMPOSITE_DURATION"}
        duration = values.get("duration") or settings.SPIKEWAVE[durations[name]]
        return SignalService.experiment_signal(name, duration, values["dt"])

    def run(self, config, out_dir):
        values = config.values
        methods = self.method_configs(values)
        report = {"methods": [m.name for m in methods]}
        succeeded = 0

        for name in values["signals"]:
            table = AnalysisService.run_comparison(
                self.signal_spec(name, values),
                methods,
                signal_name=name,
                bin_width=values["bin_width"],
                scale_count=values["scales"],
                morlet_sigma=values["morlet_sigma"],
                morlet_omega0=values["morlet_omega0"],
                eps_trunc=values["eps_trunc"],
            )
            rows = ComparisonRowSerializer(table.rows, many=True).data
            yield ExportService.write_comparison(out_dir / f"comparison_{name}.csv", rows)
            for row in table.rows:
                if row.reconstruction is not None:
                    path = out_dir / f"reconstruction_{name}_{row.method}.csv"
                    yield ExportService.write_signal(path, row.reconstruction)
                if row.cwt is not None:
                    # Decimated to one shift per spike-count bin.
                    stride = max(1, round(values["bin_width"] / values["dt"]))
                    yield ExportService.write_cwt(out_dir / f"cwt_{name}_{row.method}.csv", row.cwt, stride)
                if row.status in (STATUS_OK, STATUS_DEGENERATE):
                    succeeded += 1
                if row.weights is not None:
                    report[f"{name}_{row.method}_weights"] = list(row.weights)
            for check, passed in AnalysisService.ranking_checks(table).items():
                report[f"{name}_{check}"] = "n/a" if passed is None else passed

        yield ExportService.write_report(out_dir / "compare_report.txt", report)
        if not succeeded:
            raise CommandError("compare: every method failed", returncode=EXIT_NUMERICAL)
