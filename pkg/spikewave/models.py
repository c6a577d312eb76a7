import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from django.db import models

GRID_RTOL = 1e-12


def _frozen_array(values, dtype=None):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _close(a, b, scale):
    return math.isclose(a, b, rel_tol=GRID_RTOL, abs_tol=GRID_RTOL * scale)


# ---------------------------------------------------------------------------
# Choices
# ---------------------------------------------------------------------------
class SignalKind(models.TextChoices):
    SINE = "sine", "Sine"
    COMPOSITE_SINE = "composite-sine", "Composite sine"
    CUSTOM_SUM = "custom-sum", "Custom sum"


class Polarity(models.IntegerChoices):
    POSITIVE = 1, "pos"
    NEGATIVE = -1, "neg"


class WaveletKind(models.TextChoices):
    MORLET = "morlet", "Morlet"
    LIMIT_KERNEL_DERIVATIVE = "limit-kernel-derivative", "Limit kernel derivative"


class ReconstructionMode(models.TextChoices):
    BAND_SUM = "band-sum", "Band sum"
    CALIBRATED = "calibrated", "Calibrated"


class ReconstructionPath(models.TextChoices):
    COUNT = "count", "Spike counts"
    BAND = "band", "Difference-kernel bands"


class MethodKind(models.TextChoices):
    MORLET = "morlet", "Morlet"
    TRUNC_EXP = "trunc-exp", "Truncated exponential"
    SPIKING = "spiking", "Spiking"


# ---------------------------------------------------------------------------
# Signals
# ---------------------------------------------------------------------------
class SignalGrid(NamedTuple):
    dt: float
    t0: float
    n_samples: int

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def duration(self):
        return self.dt * self.n_samples

    def matches(self, other):
        return (
            self.n_samples == other.n_samples
            and _close(self.dt, other.dt, self.dt)
            and _close(self.t0, other.t0, self.dt)
        )


@dataclass(frozen=True, eq=False)
class SampledSignal:
    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if not math.isfinite(self.t0):
            raise ValueError("t0 must be finite")
        samples = _frozen_array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, SampledSignal):
            return NotImplemented
        return self.same_grid(other) and np.array_equal(self.samples, other.samples)

    __hash__ = None

    def __neg__(self):
        return self.with_samples(-self.samples)

    @property
    def duration(self):
        return self.dt * len(self)

    @property
    def times(self):
        return self.grid.times

    @property
    def grid(self):
        return SignalGrid(self.dt, self.t0, len(self))

    def same_grid(self, other):
        return self.grid.matches(other.grid)

    def with_samples(self, samples):
        return SampledSignal(dt=self.dt, samples=samples, t0=self.t0)

    @classmethod
    def zeros(cls, grid):
        return cls(dt=grid.dt, samples=np.zeros(grid.n_samples), t0=grid.t0)


class SignalComponent(NamedTuple):
    amplitude: float
    frequency: float
    phase: float = 0.0


@dataclass(frozen=True)
class SignalSpec:
    kind: str
    components: tuple
    duration: float
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if self.kind not in SignalKind.values:
            raise ValueError(f"kind must be one of {', '.join(SignalKind.values)}")
        components = tuple(SignalComponent(*c) for c in self.components)
        object.__setattr__(self, "components", components)
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.kind == SignalKind.SINE and len(components) != 1:
            raise ValueError("components: a sine signal has exactly one component")
        for c in components:
            if not all(math.isfinite(v) for v in c):
                raise ValueError("components must be finite")
            if not c.frequency > 0:
                raise ValueError("components: frequency must be positive")
        if components:
            shortest_period = 1.0 / max(c.frequency for c in components)
            if not self.dt < shortest_period / 8:
                raise ValueError("dt must be below 1/8 of the shortest component period")

    @property
    def n_samples(self):
        return max(1, int(round(self.duration / self.dt)))


# ---------------------------------------------------------------------------
# Scale space
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ScaleParams:
    c: float
    k: int
    tau_max: float
    theta_thr: float = 0.1

    def __post_init__(self):
        if not self.c > 1:
            raise ValueError("c must exceed 1")
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be an integer of at least 1")
        if not (self.tau_max > 0 and math.isfinite(self.tau_max)):
            raise ValueError("tau_max must be positive")
        if not self.theta_thr > 0:
            raise ValueError("theta_thr must be positive")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class TimeConstantSchedule:
    mus: tuple

    def __post_init__(self):
        mus = tuple(float(m) for m in self.mus)
        if not mus:
            raise ValueError("mus must not be empty")
        if not all(m > 0 and math.isfinite(m) for m in mus):
            raise ValueError("mus must be positive")
        object.__setattr__(self, "mus", mus)

    def __len__(self):
        return len(self.mus)

    @property
    def k(self):
        return len(self.mus)

    @property
    def mean(self):
        return math.fsum(self.mus)

    @property
    def variance(self):
        return math.fsum(m * m for m in self.mus)


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    dt: float
    taps: np.ndarray
    causal: bool = True
    origin: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        taps = _frozen_array(self.taps)
        if taps.dtype.kind not in "fc":
            taps = _frozen_array(taps, dtype=float)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("taps must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps must be finite")
        if not 0 <= self.origin < taps.size:
            raise ValueError("origin must index a tap")
        if self.causal and self.origin != 0:
            raise ValueError("a causal kernel starts at t = 0")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.taps.size

    @property
    def times(self):
        return (np.arange(self.taps.size) - self.origin) * self.dt

    @property
    def mass(self):
        return self.taps.sum() * self.dt

    @property
    def l2(self):
        return float(np.sqrt(np.sum(np.abs(self.taps) ** 2) * self.dt))

    @property
    def support(self):
        return -self.origin * self.dt, (self.taps.size - 1 - self.origin) * self.dt


class KernelMoments(NamedTuple):
    mass: float
    mean: float
    variance: float


# ---------------------------------------------------------------------------
# Neurons
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class NeuronConfig:
    mu: float
    theta_thr: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError("mu must be positive")
        if not self.theta_thr > 0:
            raise ValueError("theta_thr must be positive")


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    times: np.ndarray
    scale_index: int
    polarity: int

    def __post_init__(self):
        times = _frozen_array(self.times, dtype=float).reshape(-1)
        if not np.all(np.isfinite(times)):
            raise ValueError("spike times must be finite")
        if np.any(np.diff(times) <= 0):
            raise ValueError("spike times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "polarity", Polarity(self.polarity))

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return (
            self.scale_index == other.scale_index
            and self.polarity == other.polarity
            and np.array_equal(self.times, other.times)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MembraneTrace:
    dt: float
    u: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        u = _frozen_array(self.u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise ValueError("membrane values must be finite")
        object.__setattr__(self, "u", u)

    def __len__(self):
        return self.u.size

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.u.size)


@dataclass(frozen=True, eq=False)
class TwoChannelEncoding:
    params: ScaleParams
    schedule: TimeConstantSchedule
    trains: tuple
    grid: SignalGrid
    traces: Optional[tuple] = None

    def __post_init__(self):
        trains = tuple(self.trains)
        keys = {(t.scale_index, int(t.polarity)) for t in trains}
        expected = {(k, int(p)) for k in range(1, self.schedule.k + 1) for p in Polarity}
        if len(trains) != 2 * self.schedule.k or keys != expected:
            raise ValueError("trains must hold exactly one train per (scale, polarity)")
        object.__setattr__(self, "trains", trains)
        if self.traces is not None:
            object.__setattr__(self, "traces", tuple(self.traces))

    def _index(self, k, polarity):
        return 2 * (k - 1) + (0 if Polarity(polarity) == Polarity.POSITIVE else 1)

    def train(self, k, polarity):
        return self.trains[self._index(k, polarity)]

    def trace(self, k, polarity):
        if self.traces is None:
            return None
        return self.traces[self._index(k, polarity)]

    @property
    def spike_count(self):
        return sum(len(t) for t in self.trains)


# ---------------------------------------------------------------------------
# Spiking wavelets
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DifferenceKernel:
    mu_fast: float
    mu_slow: float
    normalizer: float
    kernel: DiscreteKernel

    def __post_init__(self):
        if not 0 < self.mu_fast < self.mu_slow:
            raise ValueError("mu_fast must be positive and below mu_slow")

    def evaluate(self, t):
        """Analytic kappa at times t (zero for t < 0)."""
        t = np.asarray(t, dtype=float)
        slow = np.exp(-t / self.mu_slow) / self.mu_slow
        fast = np.exp(-t / self.mu_fast) / self.mu_fast
        return np.where(t >= 0, (slow - fast) / self.normalizer, 0.0)


@dataclass(frozen=True, eq=False)
class CoefficientGrid:
    bin_width: float
    scale_mus: tuple
    values: np.ndarray
    grid: SignalGrid
    theta_thr: float

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        values = _frozen_array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.scale_mus):
            raise ValueError("values must be a time-bin x scale matrix")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "scale_mus", tuple(self.scale_mus))

    @property
    def n_bins(self):
        return self.values.shape[0]

    @property
    def bin_centers(self):
        return self.grid.t0 + (np.arange(self.n_bins) + 0.5) * self.bin_width


@dataclass(frozen=True, eq=False)
class ScaleBandReconstruction:
    per_scale: tuple
    scale_mus: tuple
    grid: SignalGrid
    combined: Optional[SampledSignal] = None
    weights: Optional[tuple] = None
    # Set for count-decoded bands: the bin width and the Gaussian readout width.
    bin_width: Optional[float] = None
    readout_width: float = 0.0

    def __post_init__(self):
        per_scale = tuple(self.per_scale)
        if len(per_scale) != len(self.scale_mus):
            raise ValueError("one band per scale is required")
        for band in per_scale:
            if not band.grid.matches(self.grid):
                raise ValueError("all bands must share dt and length")
        object.__setattr__(self, "per_scale", per_scale)
        object.__setattr__(self, "scale_mus", tuple(self.scale_mus))


# ---------------------------------------------------------------------------
# Classical wavelets
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class MotherWavelet:
    kind: str
    params: dict
    kernel: DiscreteKernel

    def __post_init__(self):
        if self.kind not in WaveletKind.values:
            raise ValueError(f"kind must be one of {', '.join(WaveletKind.values)}")

    @property
    def is_complex(self):
        return np.iscomplexobj(self.kernel.taps)


@dataclass(frozen=True, eq=False)
class CwtGrid:
    scales: np.ndarray
    grid: SignalGrid
    coefficients: np.ndarray
    admissibility: Optional[float] = None

    def __post_init__(self):
        scales = _frozen_array(self.scales, dtype=float)
        if scales.ndim != 1 or scales.size == 0 or np.any(scales <= 0):
            raise ValueError("scales must be strictly positive")
        coefficients = _frozen_array(self.coefficients)
        if coefficients.shape != (scales.size, self.grid.n_samples):
            raise ValueError("coefficients must be a scale x shift matrix")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def shifts(self):
        return self.grid.times


class AdmissibilityReport(NamedTuple):
    mass: float
    l2: float
    passed: bool


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ErrorReport:
    rmse: float
    rel_l2: float
    max_abs: float
    degenerate: bool = False


@dataclass(frozen=True)
class MethodConfig:
    name: str
    kind: str
    k: int = 3
    c: float = math.sqrt(2.0)
    tau_max: float = 3.4
    theta_thr: float = 0.1
    order: int = 1

    def __post_init__(self):
        if self.kind not in MethodKind.values:
            raise ValueError(f"kind must be one of {', '.join(MethodKind.values)}")

    @property
    def scale_params(self):
        return ScaleParams(c=self.c, k=self.k, tau_max=self.tau_max, theta_thr=self.theta_thr)

    @property
    def summary(self):
        if self.kind == MethodKind.MORLET:
            return ""
        summary = f"K={self.k} c={self.c:.6g} tau_max={self.tau_max:.6g}"
        if self.kind == MethodKind.SPIKING:
            return f"{summary} theta={self.theta_thr:.6g}"
        return f"{summary} n={self.order}"


@dataclass(frozen=True, eq=False)
class ComparisonRow:
    method: str
    params: str
    report: Optional[ErrorReport]
    status: str
    reconstruction: Optional[SampledSignal] = None
    weights: Optional[tuple] = None
    cwt: Optional[CwtGrid] = None


@dataclass(frozen=True, eq=False)
class ComparisonTable:
    signal_name: str
    rows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        rows = tuple(self.rows)
        names = [r.method for r in rows]
        if len(names) != len(set(names)):
            raise ValueError("methods must be unique per table")
        object.__setattr__(self, "rows", rows)

    def row(self, method):
        for r in self.rows:
            if r.method == method:
                return r
        return None


class CovarianceRun(NamedTuple):
    trace: MembraneTrace
    transformed_trace: MembraneTrace
    train: SpikeTrain
    transformed_train: SpikeTrain


@dataclass(frozen=True)
class CovarianceRow:
    s: float
    subthreshold_deviation: float
    spike_count_delta: int
    smoothing_deviation: float
    subthreshold_deviation_half_dt: Optional[float] = None

    @property
    def convergence_ratio(self):
        if self.subthreshold_deviation_half_dt is None:
            return None
        if self.subthreshold_deviation_half_dt == 0:
            return math.inf if self.subthreshold_deviation > 0 else None
        return self.subthreshold_deviation / self.subthreshold_deviation_half_dt


class PipelineResult(NamedTuple):
    encoding: TwoChannelEncoding
    coefficients: CoefficientGrid
    reconstruction: ScaleBandReconstruction


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated command configuration: plain values plus the domain objects built from them."""

    command: str
    values: dict
    params: Optional[ScaleParams] = None
    signal: Optional[SignalSpec] = None
