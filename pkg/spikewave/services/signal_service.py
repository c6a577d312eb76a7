import logging
import math

import numpy as np
from scipy import fft

from spikewave.models import SampledSignal, SignalComponent, SignalKind, SignalSpec

logger = logging.getLogger(__name__)

SINE = "sine"
COMPOSITE = "composite"
EXPERIMENT_SIGNALS = (SINE, COMPOSITE)


class SignalService:

    @staticmethod
    def generate(spec):
        if not isinstance(spec, SignalSpec):
            raise ValueError("spec must be a SignalSpec")
        t = spec.t0 + spec.dt * np.arange(spec.n_samples)
        samples = np.zeros(t.size)
        for amplitude, frequency, phase in spec.components:
            samples += amplitude * np.sin(2 * np.pi * frequency * t + phase)
        return SampledSignal(dt=spec.dt, samples=samples, t0=spec.t0)

    @staticmethod
    def rescale_time(signal, s):
        if not s > 0:
            raise ValueError("s must be positive")
        if s == 1:
            return signal
        return SampledSignal(dt=signal.dt * s, samples=signal.samples, t0=signal.t0 * s)

    @staticmethod
    def rescale_spec(spec, s):
        """The same signal on a time axis stretched by s: f'(s*t) = f(t)."""
        if not s > 0:
            raise ValueError("s must be positive")
        components = tuple(
            SignalComponent(c.amplitude, c.frequency / s, c.phase) for c in spec.components
        )
        return SignalSpec(
            kind=spec.kind,
            components=components,
            duration=spec.duration * s,
            dt=spec.dt,
            t0=spec.t0 * s,
        )

    @staticmethod
    def experiment_signal(name, duration, dt):
        if name == SINE:
            return SignalSpec(
                kind=SignalKind.SINE,
                components=(SignalComponent(1.0, 1.0 / (2 * math.pi), 0.0),),
                duration=duration,
                dt=dt,
            )
        if name == COMPOSITE:
            return SignalSpec(
                kind=SignalKind.COMPOSITE_SINE,
                components=(
                    SignalComponent(1.0, 0.5, 0.0),
                    SignalComponent(0.5, 2.0, 0.0),
                    SignalComponent(0.3, 8.0, 0.0),
                ),
                duration=duration,
                dt=dt,
            )
        raise ValueError(f"signal must be one of {', '.join(EXPERIMENT_SIGNALS)}")

    @staticmethod
    def spec_band(spec):
        """Angular-frequency band (lo, hi) of a spec's components."""
        omegas = [2 * math.pi * c.frequency for c in spec.components if c.amplitude != 0]
        if not omegas:
            return None
        return min(omegas), max(omegas)

    @staticmethod
    def signal_band(signal, floor=1e-3):
        """Angular-frequency band holding spectral power above floor x peak."""
        centered = signal.samples - signal.samples.mean()
        power = np.abs(fft.rfft(centered)) ** 2
        if power.size < 2 or not np.any(power[1:] > 0):
            return None
        omegas = 2 * np.pi * fft.rfftfreq(len(signal), signal.dt)
        strong = np.flatnonzero(power[1:] >= floor * power[1:].max()) + 1
        band = float(omegas[strong[0]]), float(omegas[strong[-1]])
        logger.debug("signal band %.4g..%.4g rad/s", *band)
        return band
