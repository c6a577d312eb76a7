import csv
import logging
from pathlib import Path

import numpy as np
from django.utils import timezone

from spikewave.models import Polarity, SampledSignal
from spikewave.services.neuron_service import NeuronService

logger = logging.getLogger(__name__)

UNIFORM_RTOL = 1e-6


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_rows(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
            count += 1
    logger.debug("wrote %d rows to %s", count, path)
    return path


def _write_pairs(path, pairs):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {_fmt(value)}\n")
    return path


class ExportService:

    @staticmethod
    def write_signal(path, signal):
        return _write_rows(path, ["t", "value"], zip(signal.times, signal.samples))

    @staticmethod
    def read_signal(path):
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["t", "value"]:
                raise ValueError(f"{path}: expected header t,value")
            try:
                rows = [(float(t), float(v)) for t, v in reader]
            except ValueError as exc:
                raise ValueError(f"{path}: malformed row ({exc})") from exc
        if len(rows) < 2:
            raise ValueError(f"{path}: a signal needs at least two samples")
        t, values = np.array(rows).T
        steps = np.diff(t)
        dt = float(steps.mean())
        if not dt > 0 or np.max(np.abs(steps - dt)) > UNIFORM_RTOL * dt:
            raise ValueError(f"{path}: samples must be uniformly spaced in t")
        return SampledSignal(dt=dt, samples=values, t0=float(t[0]))

    @staticmethod
    def write_kernel_table(path, table):
        return _write_rows(path, ["t", "psi", "dpsi", "ddpsi"], table)

    @staticmethod
    def write_convergence(path, rows):
        return _write_rows(path, ["k", "mass", "mean", "variance", "change"], rows)

    @staticmethod
    def write_spike_events(path, encoding):
        return _write_rows(path, ["time", "scale_index", "polarity"], NeuronService.spike_events(encoding))

    @staticmethod
    def write_membrane(path, encoding):
        if encoding.traces is None:
            raise ValueError("encoding was run without membrane traces")
        header = ["t"]
        columns = []
        for k in range(1, encoding.schedule.k + 1):
            for polarity in (Polarity.POSITIVE, Polarity.NEGATIVE):
                header.append(f"k{k}_{polarity.label}")
                columns.append(encoding.trace(k, polarity).u)
        return _write_rows(path, header, zip(encoding.grid.times, *columns))

    @staticmethod
    def write_coefficients(path, coefficients):
        centers = coefficients.bin_centers

        def rows():
            for b, t_bin in enumerate(centers):
                for k, mu in enumerate(coefficients.scale_mus, start=1):
                    yield t_bin, k, mu, coefficients.values[b, k - 1]

        return _write_rows(path, ["t_bin", "k", "mu", "w"], rows())

    @staticmethod
    def write_cwt(path, grid, stride=1):
        """One row per (scale, shift); every stride-th shift only."""
        shifts = grid.shifts[::stride]

        def rows():
            for a, row in zip(grid.scales, grid.coefficients):
                for b, value in zip(shifts, row[::stride]):
                    yield a, b, float(np.real(value)), float(np.imag(value))

        return _write_rows(path, ["a", "b", "re", "im"], rows())

    @staticmethod
    def write_comparison(path, rows):
        """rows are ComparisonRowSerializer dicts."""
        header = ["method", "params", "rmse", "rel_l2", "max_abs", "status"]
        return _write_rows(path, header, ([row[key] for key in header] for row in rows))

    @staticmethod
    def write_covariance(path, rows):
        header = [
            "s",
            "subthreshold_deviation",
            "spike_count_delta",
            "smoothing_deviation",
            "subthreshold_deviation_half_dt",
            "convergence_ratio",
        ]
        return _write_rows(
            path,
            header,
            (
                (
                    r.s,
                    r.subthreshold_deviation,
                    r.spike_count_delta,
                    r.smoothing_deviation,
                    r.subthreshold_deviation_half_dt,
                    r.convergence_ratio,
                )
                for r in rows
            ),
        )

    @staticmethod
    def write_report(path, values):
        return _write_pairs(path, values.items())

    @staticmethod
    def write_config(path, values):
        return _write_pairs(path, sorted((k, v) for k, v in values.items() if v is not None))

    @staticmethod
    def read_config(path):
        """key = value lines; blank lines and # comments are ignored."""
        path = Path(path)
        values = {}
        with path.open(encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                key = key.strip().replace("-", "_")
                if not sep or not key:
                    raise ValueError(f"{path}:{number}: expected 'key = value'")
                values[key] = value.strip()
        return values

    @staticmethod
    def write_metadata(path, command, values):
        pairs = [("timestamp", timezone.now().isoformat()), ("command", command)]
        pairs += sorted(values.items())
        return _write_pairs(path, pairs)
