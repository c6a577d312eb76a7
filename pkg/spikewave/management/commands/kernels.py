from spikewave.management.base import SpikewaveCommand
from spikewave.serializers import KernelsConfigSerializer
from spikewave.services.analysis_service import AnalysisService
from spikewave.services.export_service import ExportService
from spikewave.services.scale_space_service import ScaleSpaceService


class Command(SpikewaveCommand):
    help = "Write the composed smoothing kernel, its first two derivatives and their integrals."

    serializer_class = KernelsConfigSerializer
    unused_flags = ("theta", "bin_width")

    def add_command_arguments(self, parser):
        parser.add_argument("--eps-trunc", dest="eps_trunc", type=float, default=None)
        parser.add_argument(
            "--convergence-k-max",
            dest="convergence_k_max",
            type=int,
            default=None,
            help="also tabulate the kernel for K = 1..N",
        )

    def defaults(self, conf):
        values = super().defaults(conf)
        values.update(c=conf["C"], k=conf["KERNELS"]["K"], tau_max=conf["KERNELS"]["TAU_MAX"], theta=conf["THETA"])
        return values

    def run(self, config, out_dir):
        params = config.params
        dt = config.values["dt"]
        eps_trunc = config.values["eps_trunc"]

        schedule = ScaleSpaceService.time_constants(params)
        psi = ScaleSpaceService.compose_cascade(schedule, dt, eps_trunc)
        dpsi = ScaleSpaceService.kernel_derivative(psi, 1)
        ddpsi = ScaleSpaceService.kernel_derivative(psi, 2)
        moments = ScaleSpaceService.kernel_moments(psi)

        report = {
            "mus": list(schedule.mus),
            "sum_mu": schedule.mean,
            "sum_mu_squared": schedule.variance,
            "psi_mass": moments.mass,
            "psi_mean": moments.mean,
            "psi_variance": moments.variance,
            "psi_taps": len(psi),
        }
        for name, kernel in (("dpsi", dpsi), ("ddpsi", ddpsi)):
            check = AnalysisService.verify_admissibility(kernel)
            report[f"{name}_mass"] = float(kernel.mass)
            report[f"{name}_l2"] = check.l2
            report[f"{name}_admissible"] = check.passed

        yield ExportService.write_kernel_table(
            out_dir / "kernels.csv", ScaleSpaceService.kernel_table(params, dt, eps_trunc)
        )
        yield ExportService.write_report(out_dir / "kernels_report.txt", report)

        k_max = config.values.get("convergence_k_max")
        if k_max:
            rows = ScaleSpaceService.convergence_study(params.c, params.tau_max, range(1, k_max + 1), dt, eps_trunc)
            yield ExportService.write_convergence(out_dir / "convergence.csv", rows)
