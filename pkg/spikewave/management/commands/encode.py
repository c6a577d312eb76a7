from spikewave.management.base import SpikewaveCommand, add_signal_arguments, load_signal
from spikewave.serializers import EncodeConfigSerializer
from spikewave.services.analysis_service import AnalysisService
from spikewave.services.export_service import ExportService
from spikewave.services.neuron_service import NeuronService
from spikewave.services.signal_service import SINE


class Command(SpikewaveCommand):
    help = "Encode a signal with the two-channel spiking scale-space network."

    serializer_class = EncodeConfigSerializer
    unused_flags = ("bin_width",)

    def add_command_arguments(self, parser):
        add_signal_arguments(parser)
        parser.add_argument("--negate", dest="negate", action="store_true", default=None, help="encode -f")
        parser.add_argument("--traces", dest="traces", action="store_true", default=None, help="write membrane traces")

    def defaults(self, conf):
        values = super().defaults(conf)
        demo = conf["ENCODE"]
        values.update(
            c=conf["C"],
            k=demo["K"],
            tau_max=demo["TAU_MAX"],
            theta=demo["THETA"],
            signal=SINE,
            duration=demo["DURATION"],
            negate=False,
            traces=False,
        )
        return values

    def run(self, config, out_dir):
        signal = load_signal(config)
        if config.values["negate"]:
            signal = -signal
        encoding = NeuronService.two_channel_encode(signal, config.params, record_traces=config.values["traces"])

        report = {
            "spike_count": encoding.spike_count,
            "spike_count_bound": AnalysisService.spike_count_bound(signal, config.params),
            "mus": list(encoding.schedule.mus),
        }
        for train in encoding.trains:
            report[f"k{train.scale_index}_{train.polarity.label}_spikes"] = len(train)

        yield ExportService.write_signal(out_dir / "signal.csv", signal)
        yield ExportService.write_spike_events(out_dir / "spikes.csv", encoding)
        if config.values["traces"]:
            yield ExportService.write_membrane(out_dir / "membrane.csv", encoding)
        yield ExportService.write_report(out_dir / "encode_report.txt", report)
