import logging
import os
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from spikewave.exception_handler import custom_exception_handler
from spikewave.services.export_service import ExportService
from spikewave.services.signal_service import EXPERIMENT_SIGNALS, SignalService

logger = logging.getLogger(__name__)

SHARED_FLAGS = {
    "c": (float, "ratio between neighbouring scale levels (> 1)"),
    "k": (int, "number of scale levels"),
    "tau_max": (float, "largest temporal variance"),
    "theta": (float, "firing threshold"),
    "dt": (float, "sampling step in seconds"),
    "bin_width": (float, "spike-count bin width in seconds"),
    "out_dir": (str, "output directory"),
}


def add_signal_arguments(parser):
    parser.add_argument("--signal", dest="signal", choices=EXPERIMENT_SIGNALS, default=None)
    parser.add_argument("--signal-csv", dest="signal_csv", default=None, help="read the input from a t,value CSV")
    parser.add_argument("--duration", dest="duration", type=float, default=None, help="signal duration in seconds")
    parser.add_argument("--eps-trunc", dest="eps_trunc", type=float, default=None)


def load_signal(config):
    if config.values.get("signal_csv"):
        return ExportService.read_signal(config.values["signal_csv"])
    return SignalService.generate(config.signal)


class SpikewaveCommand(BaseCommand):
    """Base for the experiment commands.

    Configuration precedence is settings < --config file < flags. The merged
    values are validated by `serializer_class` before any file is written.
    """

    serializer_class = None
    # Shared flags this command accepts but has no use for.
    unused_flags = ()

    def add_arguments(self, parser):
        for name, (kind, help_text) in SHARED_FLAGS.items():
            if name in self.unused_flags:
                help_text = f"{help_text} (ignored by {self.command_name})"
            parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, default=None, help=help_text)
        parser.add_argument("--config", dest="config", default=None, help="key = value configuration file")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def defaults(self, conf):
        return {"dt": conf["DT"], "eps_trunc": conf["EPS_TRUNC"], "out_dir": conf["OUT_DIR"]}

    def run(self, config, out_dir):
        """Compute and write outputs; returns the written paths."""
        raise NotImplementedError

    def merged_values(self, options):
        values = self.defaults(settings.SPIKEWAVE)
        if options.get("config"):
            values.update(ExportService.read_config(options["config"]))
        for name in self.unused_flags:
            if options.get(name) is not None:
                logger.info("%s ignores --%s", self.command_name, name.replace("_", "-"))
        known = self.serializer_class().fields
        values.update({key: value for key, value in options.items() if key in known and value is not None})
        return values

    def load_config(self, options):
        serializer = self.serializer_class(data=self.merged_values(options), context={"command": self.command_name})
        serializer.is_valid(raise_exception=True)
        return serializer.save()

    @property
    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def prepare_out_dir(self, out_dir):
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        if not os.access(path, os.W_OK):
            raise PermissionError(13, "output directory is not writable", str(path))
        return path

    def handle(self, *args, **options):
        try:
            config = self.load_config(options)
            out_dir = self.prepare_out_dir(config.values["out_dir"])
            written = list(self.run(config, out_dir))
            written.append(ExportService.write_config(out_dir / "config.txt", config.values))
            written.append(ExportService.write_metadata(out_dir / "metadata.txt", self.command_name, config.values))
        except Exception as exc:
            error = custom_exception_handler(exc, {"command": self.command_name, "path": options.get("out_dir")})
            if error is None:
                raise
            logger.debug("%s failed", self.command_name, exc_info=True)
            raise error from exc

        for path in written:
            self.stdout.write(self.style.SUCCESS(f"wrote {path}"))
