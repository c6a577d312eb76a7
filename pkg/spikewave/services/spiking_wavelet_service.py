import dataclasses
import logging
import math

import numpy as np
from scipy import ndimage

from spikewave.exceptions import DegenerateKernelError, GridMismatchError, UnderResolvedError
from spikewave.models import (
    CoefficientGrid,
    DifferenceKernel,
    DiscreteKernel,
    PipelineResult,
    Polarity,
    ReconstructionMode,
    ReconstructionPath,
    SampledSignal,
    ScaleBandReconstruction,
)
from spikewave.services.neuron_service import NeuronService

logger = logging.getLogger(__name__)

# Default Gaussian readout width, in bins.
READOUT_BINS = 10


def _bin_index(times, t0, bin_width, n_bins):
    # Bin b covers (b*w, (b+1)*w]: the nearest center, ties to the earlier bin.
    index = np.ceil((np.asarray(times) - t0) / bin_width - 1.0)
    return np.clip(index, 0, n_bins - 1).astype(int)


def _bin_means(signal, bin_width, n_bins):
    index = _bin_index(signal.times, signal.t0, bin_width, n_bins)
    totals = np.bincount(index, weights=signal.samples, minlength=n_bins)
    counts = np.bincount(index, minlength=n_bins)
    return totals / np.maximum(counts, 1)


def _readout(bin_values, grid, bin_width, readout_width):
    """Bin-rate values to samples: Gaussian smoothing over bins, then linear interpolation."""
    n_bins = bin_values.size
    if readout_width <= 0:
        return bin_values[_bin_index(grid.times, grid.t0, bin_width, n_bins)]
    smoothed = ndimage.gaussian_filter1d(bin_values, sigma=readout_width / bin_width, mode="nearest")
    centers = grid.t0 + (np.arange(n_bins) + 0.5) * bin_width
    return np.interp(grid.times, centers, smoothed)


class SpikingWaveletService:

    @staticmethod
    def difference_kernel(mu_k, mu_k1, dt, eps_trunc=1e-6):
        if not (mu_k > 0 and mu_k1 > 0 and dt > 0):
            raise ValueError("time constants and dt must be positive")
        if math.isclose(mu_k, mu_k1, rel_tol=1e-12):
            raise DegenerateKernelError(
                f"degenerate difference kernel: mu_k = mu_k1 = {mu_k:g} gives C_kappa = 0"
            )
        if mu_k > mu_k1:
            raise ValueError("mu_k must be below mu_k1")
        if dt >= mu_k:
            raise UnderResolvedError(f"under-resolved kernel: dt={dt:g} is not below mu={mu_k:g}")

        normalizer = (mu_k1 - mu_k) / (mu_k * mu_k1)
        # Both exponentials share the slow horizon; the tail bound is scaled by
        # C_kappa so the normalized mass stays within eps_trunc.
        tail = eps_trunc * min(1.0, normalizer)
        n_taps = math.ceil(-mu_k1 * math.log(tail) / dt)
        i = np.arange(n_taps)
        slow = -math.expm1(-dt / mu_k1) / dt * np.exp(-i * (dt / mu_k1))
        fast = -math.expm1(-dt / mu_k) / dt * np.exp(-i * (dt / mu_k))
        kernel = DiscreteKernel(dt=dt, taps=(slow - fast) / normalizer)
        return DifferenceKernel(mu_fast=mu_k, mu_slow=mu_k1, normalizer=normalizer, kernel=kernel)

    @staticmethod
    def reconstruct_channel(train, kernel, grid):
        """Stamp one kernel copy per spike (Dirac convolution, no dt weight)."""
        taps = kernel.kernel.taps if isinstance(kernel, DifferenceKernel) else kernel.taps
        n = grid.n_samples
        out = np.zeros(n)
        index = np.rint((train.times - grid.t0) / grid.dt).astype(int)
        if index.size and (index[0] < 0 or index[-1] >= n):
            raise ValueError("spike times must lie within the grid window")
        for j in index:
            m = min(taps.size, n - j)
            out[j:j + m] += taps[:m]
        return SampledSignal(dt=grid.dt, samples=out, t0=grid.t0)

    @staticmethod
    def polarity_combine(pos, neg):
        if not pos.same_grid(neg):
            raise GridMismatchError("positive and negative channels must share a grid")
        return pos.with_samples(pos.samples - neg.samples)

    @staticmethod
    def spike_count_coefficients(encoding, bin_width):
        grid = encoding.grid
        if not bin_width > 0:
            raise ValueError("bin_width must be positive")
        if bin_width < grid.dt * (1 - 1e-9):
            raise ValueError("bin_width must not be below the signal dt")
        n_bins = max(1, math.ceil(grid.duration / bin_width - 1e-9))
        mus = encoding.schedule.mus
        values = np.zeros((n_bins, len(mus)))
        for k, mu in enumerate(mus, start=1):
            counts = np.zeros(n_bins)
            np.add.at(counts, _bin_index(encoding.train(k, Polarity.POSITIVE).times, grid.t0, bin_width, n_bins), 1.0)
            np.add.at(counts, _bin_index(encoding.train(k, Polarity.NEGATIVE).times, grid.t0, bin_width, n_bins), -1.0)
            values[:, k - 1] = counts / math.sqrt(mu)
        return CoefficientGrid(
            bin_width=bin_width,
            scale_mus=mus,
            values=values,
            grid=grid,
            theta_thr=encoding.params.theta_thr,
        )

    @staticmethod
    def coefficient_bands(coefficients, readout_width=None):
        """Rate-decode each channel and read it out on the sample grid.

        theta*mu_k*(n_pos - n_neg)/bin_width estimates f over the bin, and
        W = (n_pos - n_neg)/sqrt(mu_k), hence the mu_k**1.5 factor. Each band
        carries 1/K of the estimate so that the band sum estimates f.

        A single count in a bin is worth theta*mu_k/bin_width, far coarser than
        the signal for slow channels, so the bin rates pass through a Gaussian
        of ``readout_width`` seconds (READOUT_BINS bins by default) before
        being interpolated to samples. ``readout_width=0`` holds each bin's
        rate over its samples instead.
        """
        if not math.isfinite(coefficients.theta_thr):
            raise ValueError("theta_thr must be finite to decode spike counts")
        bin_width = coefficients.bin_width
        if readout_width is None:
            readout_width = READOUT_BINS * bin_width
        if readout_width < 0:
            raise ValueError("readout_width must not be negative")
        grid = coefficients.grid
        k_total = len(coefficients.scale_mus)
        bands = []
        for k, mu in enumerate(coefficients.scale_mus):
            gain = coefficients.theta_thr * mu ** 1.5 / bin_width / k_total
            rate = coefficients.values[:, k] * gain
            samples = _readout(rate, grid, bin_width, readout_width)
            bands.append(SampledSignal(dt=grid.dt, samples=samples, t0=grid.t0))
        return ScaleBandReconstruction(
            per_scale=bands,
            scale_mus=coefficients.scale_mus,
            grid=grid,
            bin_width=bin_width,
            readout_width=readout_width,
        )

    @staticmethod
    def scale_bands(encoding, eps_trunc=1e-6):
        """Difference-kernel reconstruction M(t; mu_k) for every adjacent scale pair."""
        grid = encoding.grid
        mus = encoding.schedule.mus
        bands = []
        band_mus = []
        for k in range(1, len(mus)):
            fast, slow = sorted((mus[k - 1], mus[k]))
            try:
                kernel = SpikingWaveletService.difference_kernel(fast, slow, grid.dt, eps_trunc)
            except DegenerateKernelError:
                logger.warning("skipping scale pair %d: mu_%d equals mu_%d", k, k, k + 1)
                continue
            pos = SpikingWaveletService.reconstruct_channel(encoding.train(k, Polarity.POSITIVE), kernel, grid)
            neg = SpikingWaveletService.reconstruct_channel(encoding.train(k, Polarity.NEGATIVE), kernel, grid)
            bands.append(SpikingWaveletService.polarity_combine(pos, neg))
            band_mus.append(mus[k - 1])
        return ScaleBandReconstruction(per_scale=bands, scale_mus=band_mus, grid=grid)

    @staticmethod
    def reconstruct_signal(source, mode=ReconstructionMode.BAND_SUM, calibration=None, skip_transient=0.0):
        if isinstance(source, CoefficientGrid):
            source = SpikingWaveletService.coefficient_bands(source)
        mode = ReconstructionMode(mode)
        grid = source.grid
        n_bands = len(source.per_scale)
        matrix = np.zeros((grid.n_samples, n_bands))
        for i, band in enumerate(source.per_scale):
            matrix[:, i] = band.samples

        if mode == ReconstructionMode.BAND_SUM:
            weights = np.ones(n_bands)
            combined = matrix.sum(axis=1)
        else:
            if calibration is None:
                raise ValueError("calibrated mode requires a calibration signal")
            if not calibration.grid.matches(grid):
                raise GridMismatchError("calibration signal must share the band grid")
            weights = np.zeros(n_bands)
            target = calibration.samples
            if source.bin_width is not None:
                # Fit against the calibration signal seen through the same readout.
                n_bins = max(1, math.ceil(grid.duration / source.bin_width - 1e-9))
                means = _bin_means(calibration, source.bin_width, n_bins)
                target = _readout(means, grid, source.bin_width, source.readout_width)
            if n_bands:
                rows = grid.times >= grid.t0 + skip_transient
                design = matrix[rows]
                target = target[rows]
                # Normal equations keep f -> -f bit-exact: the Gram matrix and
                # right-hand side are unchanged when both inputs flip sign.
                gram = design.T @ design
                rhs = design.T @ target
                weights = np.linalg.lstsq(gram, rhs, rcond=None)[0]
            combined = matrix @ weights
            logger.debug("calibrated weights %s", np.array2string(weights, precision=6))

        return dataclasses.replace(
            source,
            combined=SampledSignal(dt=grid.dt, samples=combined, t0=grid.t0),
            weights=tuple(float(w) for w in weights),
        )

    @staticmethod
    def run_pipeline(
        signal,
        params,
        bin_width,
        path=ReconstructionPath.COUNT,
        mode=ReconstructionMode.CALIBRATED,
        calibration=None,
        eps_trunc=1e-6,
        skip_transient=0.0,
        readout_width=None,
    ):
        encoding = NeuronService.two_channel_encode(signal, params)
        coefficients = SpikingWaveletService.spike_count_coefficients(encoding, bin_width)
        if ReconstructionPath(path) == ReconstructionPath.COUNT:
            bands = SpikingWaveletService.coefficient_bands(coefficients, readout_width)
        else:
            bands = SpikingWaveletService.scale_bands(encoding, eps_trunc)
        if ReconstructionMode(mode) == ReconstructionMode.CALIBRATED and calibration is None:
            calibration = signal
        reconstruction = SpikingWaveletService.reconstruct_signal(bands, mode, calibration, skip_transient)
        return PipelineResult(encoding, coefficients, reconstruction)
