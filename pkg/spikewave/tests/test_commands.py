import csv
import math
import shutil
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from spikewave.exception_handler import EXIT_IO, EXIT_NUMERICAL, EXIT_VALIDATION
from spikewave.services.export_service import ExportService


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)

    def call(self, name, out="out", **options):
        stdout = StringIO()
        out_dir = self.tmp / out
        call_command(name, out_dir=str(out_dir), stdout=stdout, **options)
        return out_dir, stdout.getvalue()

    def assertFails(self, returncode, name, **options):
        with self.assertRaises(CommandError) as ctx:
            self.call(name, **options)
        self.assertEqual(ctx.exception.returncode, returncode)
        return str(ctx.exception)


class KernelsCommandTests(CommandTestCase):
    def test_kernel_figure_report(self):
        out_dir, stdout = self.call("kernels")
        self.assertIn("wrote", stdout)
        report = ExportService.read_config(out_dir / "kernels_report.txt")
        self.assertEqual(len(report["mus"].split(",")), 7)
        self.assertAlmostEqual(float(report["psi_variance"]), 1.0, delta=0.01)
        self.assertGreaterEqual(float(report["psi_mass"]), 0.99985)
        self.assertEqual(report["dpsi_admissible"], "true")
        self.assertEqual(report["ddpsi_admissible"], "true")
        self.assertEqual(_rows(out_dir / "kernels.csv")[0], ["t", "psi", "dpsi", "ddpsi"])
        self.assertTrue((out_dir / "config.txt").exists())
        self.assertTrue((out_dir / "metadata.txt").exists())

    def test_single_level(self):
        out_dir, _ = self.call("kernels", c=2.0, k=1, tau_max=0.25, convergence_k_max=3)
        report = ExportService.read_config(out_dir / "kernels_report.txt")
        self.assertAlmostEqual(float(report["psi_variance"]), 0.25, delta=1e-3)
        self.assertEqual(len(_rows(out_dir / "convergence.csv")), 4)

    def test_signal_flags_are_accepted(self):
        with self.assertLogs("spikewave", level="INFO") as logs:
            out_dir, _ = self.call("kernels", c=2.0, k=1, tau_max=0.25, theta=0.2, bin_width=0.05)
        self.assertIn("kernels ignores --bin-width", "\n".join(logs.output))
        report = ExportService.read_config(out_dir / "kernels_report.txt")
        self.assertAlmostEqual(float(report["psi_variance"]), 0.25, delta=1e-3)

    def test_rejects_c_of_one_before_writing(self):
        message = self.assertFails(EXIT_VALIDATION, "kernels", c=1.0)
        self.assertIn("c must exceed 1", message)
        self.assertFalse((self.tmp / "out").exists())

    def test_under_resolved_kernel(self):
        message = self.assertFails(EXIT_NUMERICAL, "kernels", c=2.0, k=3, tau_max=1e-4, dt=0.01)
        self.assertIn("numerical error", message)

    def test_flags_override_config_file(self):
        config = self.tmp / "run.conf"
        config.write_text("# kernel run\nk = 2\nc = 2.0\ntau-max = 0.5\n", encoding="utf-8")
        out_dir, _ = self.call("kernels", config=str(config), k=3)
        report = ExportService.read_config(out_dir / "kernels_report.txt")
        self.assertEqual(len(report["mus"].split(",")), 3)
        self.assertAlmostEqual(float(report["sum_mu_squared"]), 0.5, places=12)
        self.assertEqual(ExportService.read_config(out_dir / "config.txt")["k"], "3")


class EncodeCommandTests(CommandTestCase):
    def test_demo_fires_on_every_channel(self):
        out_dir, _ = self.call("encode", traces=True)
        report = ExportService.read_config(out_dir / "encode_report.txt")
        for key in ("k1_pos_spikes", "k1_neg_spikes", "k2_pos_spikes", "k2_neg_spikes"):
            self.assertGreater(int(report[key]), 0)
        self.assertLessEqual(int(report["spike_count"]), float(report["spike_count_bound"]))
        self.assertEqual(_rows(out_dir / "membrane.csv")[0], ["t", "k1_pos", "k1_neg", "k2_pos", "k2_neg"])

    def test_zero_signal_has_no_spikes(self):
        source = self.tmp / "zero.csv"
        source.write_text("t,value\n" + "".join(f"{i * 0.001!r},0.0\n" for i in range(2000)), encoding="utf-8")
        out_dir, _ = self.call("encode", signal_csv=str(source))
        self.assertEqual(_rows(out_dir / "spikes.csv"), [["time", "scale_index", "polarity"]])

    def test_negation_flips_polarity(self):
        plain, _ = self.call("encode", out="plain")
        negated, _ = self.call("encode", out="negated", negate=True)
        rows = _rows(plain / "spikes.csv")[1:]
        flipped = _rows(negated / "spikes.csv")[1:]
        self.assertGreater(len(rows), 0)
        self.assertEqual([r[:2] for r in rows], [r[:2] for r in flipped])
        self.assertEqual([int(r[2]) for r in rows], [-int(r[2]) for r in flipped])

    def test_missing_signal_file(self):
        message = self.assertFails(EXIT_IO, "encode", signal_csv=str(self.tmp / "missing.csv"))
        self.assertIn("missing.csv", message)

    def test_out_dir_is_a_file(self):
        (self.tmp / "out").write_text("", encoding="utf-8")
        self.assertFails(EXIT_IO, "encode")


class ReconstructCommandTests(CommandTestCase):
    def test_every_path_and_mode(self):
        for path in ("count", "band"):
            for mode in ("calibrated", "band-sum"):
                out_dir, _ = self.call("reconstruct", out=f"{path}-{mode}", duration=10.0, path=path, mode=mode)
                report = ExportService.read_config(out_dir / "reconstruct_report.txt")
                self.assertEqual(report["path"], path)
                self.assertTrue(math.isfinite(float(report["rmse"])))
                self.assertEqual(len(_rows(out_dir / "reconstruction.csv")), 10001)
                self.assertEqual(_rows(out_dir / "coefficients.csv")[0], ["t_bin", "k", "mu", "w"])
                if mode == "calibrated":
                    self.assertLess(float(report["rel_l2"]), 1.0)

    def test_bin_width_below_dt(self):
        message = self.assertFails(EXIT_VALIDATION, "reconstruct", bin_width=0.0001)
        self.assertIn("bin_width", message)

    def test_duration_inside_the_transient_window(self):
        message = self.assertFails(EXIT_VALIDATION, "reconstruct", duration=5.0)
        self.assertIn("duration must exceed", message)
        self.assertFalse((self.tmp / "out").exists())


class CompareCommandTests(CommandTestCase):
    def test_single_method(self):
        out_dir, _ = self.call("compare", methods="morlet", signals="sine", duration=10.0)
        rows = _rows(out_dir / "comparison_sine.csv")
        self.assertEqual(rows[0], ["method", "params", "rmse", "rel_l2", "max_abs", "status"])
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[1][0], "morlet")
        self.assertEqual(rows[1][-1], "ok")
        self.assertTrue((out_dir / "reconstruction_sine_morlet.csv").exists())
        self.assertEqual(_rows(out_dir / "cwt_sine_morlet.csv")[0], ["a", "b", "re", "im"])
        report = ExportService.read_config(out_dir / "compare_report.txt")
        self.assertEqual(report["sine_morlet_below_spiking_k3"], "n/a")

    def test_output_is_reproducible(self):
        first, _ = self.call("compare", out="first", methods="morlet,spiking-k3", signals="composite", duration=10.0)
        second, _ = self.call("compare", out="second", methods="morlet,spiking-k3", signals="composite", duration=10.0)
        for name in ("comparison_composite.csv", "reconstruction_composite_spiking-k3.csv"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_default_run_covers_every_method_and_signal(self):
        out_dir, _ = self.call("compare", dt=0.002)
        names = ["morlet", "trunc-exp", "spiking-k3", "spiking-k6", "spiking-k12"]
        report = ExportService.read_config(out_dir / "compare_report.txt")
        self.assertEqual(report["methods"].split(","), names)
        for signal in ("sine", "composite"):
            rows = _rows(out_dir / f"comparison_{signal}.csv")
            self.assertEqual([row[0] for row in rows[1:]], names)
            for method in ("morlet", "trunc-exp"):
                self.assertEqual(_rows(out_dir / f"cwt_{signal}_{method}.csv")[0], ["a", "b", "re", "im"])
            self.assertIn(f"{signal}_spiking_plateau", report)

    def test_scale_flags_are_accepted(self):
        with self.assertLogs("spikewave", level="INFO") as logs:
            out_dir, _ = self.call("compare", methods="morlet", signals="sine", duration=10.0, c=2.0, k=4)
        self.assertIn("compare ignores --c", "\n".join(logs.output))
        self.assertEqual(_rows(out_dir / "comparison_sine.csv")[1][-1], "ok")
        self.assertNotIn("c", ExportService.read_config(out_dir / "config.txt"))

    def test_unknown_method(self):
        message = self.assertFails(EXIT_VALIDATION, "compare", methods="haar")
        self.assertIn("unknown method", message)


class CovarianceCommandTests(CommandTestCase):
    def test_identity_row_and_ratios(self):
        out_dir, _ = self.call("covariance", dt=0.01, duration=4 * math.pi, s_values="1,2", halve_dt=True)
        header, identity, stretched = _rows(out_dir / "covariance.csv")
        self.assertEqual(header[0], "s")
        self.assertEqual([float(v) for v in identity[1:4]], [0.0, 0.0, 0.0])
        self.assertEqual(identity[-1], "")
        self.assertEqual(stretched[2], "0")
        self.assertGreaterEqual(float(stretched[-1]), 1.6)

    def test_halving_needs_a_generated_signal(self):
        source = self.tmp / "sine.csv"
        source.write_text("t,value\n" + "".join(f"{i * 0.01!r},{math.sin(i * 0.01)!r}\n" for i in range(1000)))
        self.assertFails(EXIT_VALIDATION, "covariance", signal_csv=str(source), halve_dt=True)
