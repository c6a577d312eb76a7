import logging

import numpy as np

from spikewave.exceptions import UnderResolvedError
from spikewave.models import (
    MembraneTrace,
    NeuronConfig,
    Polarity,
    CovarianceRun,
    SpikeTrain,
    TwoChannelEncoding,
)
from spikewave.services.scale_space_service import ScaleSpaceService
from spikewave.services.signal_service import SignalService

logger = logging.getLogger(__name__)


class NeuronService:

    @staticmethod
    def _integrate(drives, mus, theta_thr, dt):
        """Exponential-integrator LIF for a bank of independent neurons.

        drives is (channels, samples). Each step applies
        u <- u*exp(-dt/mu) + (1 - exp(-dt/mu))*f, then subtracts theta_thr
        from every neuron at or above threshold (one spike per step at most).
        """
        mus = np.asarray(mus, dtype=float)
        if np.any(dt >= mus):
            raise UnderResolvedError(
                f"under-resolved membrane: dt={dt:g} is not below mu={mus.min():g}"
            )
        decay = np.exp(-dt / mus)
        gain = -np.expm1(-dt / mus)
        steps = np.ascontiguousarray(drives.T)
        fired = np.zeros(steps.shape, dtype=bool)
        trace = np.empty(steps.shape)
        u = np.zeros(mus.size)
        saturated = False
        for j, drive in enumerate(steps):
            u = decay * u + gain * drive
            above = u >= theta_thr
            if above.any():
                u[above] -= theta_thr
                fired[j] = above
                saturated = saturated or bool(np.any(u[above] >= theta_thr))
            trace[j] = u
        if saturated:
            logger.warning("membrane exceeded twice the threshold; surplus carried to later steps")
        return fired.T, trace.T

    @staticmethod
    def _train(fired_row, t0, dt, scale_index, polarity):
        times = t0 + dt * np.flatnonzero(fired_row)
        return SpikeTrain(times=times, scale_index=scale_index, polarity=polarity)

    @staticmethod
    def simulate_lif(signal, config, scale_index=1, polarity=Polarity.POSITIVE):
        fired, trace = NeuronService._integrate(
            signal.samples[np.newaxis, :], [config.mu], config.theta_thr, signal.dt
        )
        train = NeuronService._train(fired[0], signal.t0, signal.dt, scale_index, polarity)
        return train, MembraneTrace(dt=signal.dt, u=trace[0], t0=signal.t0)

    @staticmethod
    def two_channel_encode(signal, params, record_traces=False, schedule=None):
        if schedule is None:
            schedule = ScaleSpaceService.time_constants(params)
        drives = []
        mus = []
        keys = []
        for k, mu in enumerate(schedule.mus, start=1):
            for polarity in (Polarity.POSITIVE, Polarity.NEGATIVE):
                drives.append(signal.samples if polarity == Polarity.POSITIVE else -signal.samples)
                mus.append(mu)
                keys.append((k, polarity))
        fired, trace = NeuronService._integrate(np.array(drives), mus, params.theta_thr, signal.dt)

        trains = tuple(
            NeuronService._train(fired[i], signal.t0, signal.dt, k, polarity)
            for i, (k, polarity) in enumerate(keys)
        )
        traces = None
        if record_traces:
            traces = tuple(MembraneTrace(dt=signal.dt, u=row, t0=signal.t0) for row in trace)
        logger.debug("encoded %d channels, %d spikes", len(trains), sum(len(t) for t in trains))
        return TwoChannelEncoding(
            params=params, schedule=schedule, trains=trains, grid=signal.grid, traces=traces
        )

    @staticmethod
    def covariance_probe(signal, config, s, transformed=None):
        """Run (f, mu) and (f', s*mu) where f'(s*t) = f(t).

        Without an explicit transformed signal, f' is rescale_time(f, s), whose
        grid is stretched by s as well.
        """
        if not s > 0:
            raise ValueError("s must be positive")
        if transformed is None:
            transformed = SignalService.rescale_time(signal, s)
        scaled = NeuronConfig(mu=config.mu * s, theta_thr=config.theta_thr)
        train, trace = NeuronService.simulate_lif(signal, config)
        transformed_train, transformed_trace = NeuronService.simulate_lif(transformed, scaled)
        return CovarianceRun(trace, transformed_trace, train, transformed_train)

    @staticmethod
    def trace_deviation(run, s):
        trace, transformed = run.trace, run.transformed_trace
        if (
            s == 1
            and trace.u.size == transformed.u.size
            and trace.dt == transformed.dt
            and trace.t0 == transformed.t0
        ):
            return float(np.max(np.abs(transformed.u - trace.u)))
        resampled = np.interp(s * trace.times, transformed.times, transformed.u)
        return float(np.max(np.abs(resampled - trace.u)))

    @staticmethod
    def spike_events(encoding):
        """(time, scale_index, polarity) rows ordered by time, then scale."""
        events = [
            (float(t), train.scale_index, int(train.polarity))
            for train in encoding.trains
            for t in train.times
        ]
        events.sort(key=lambda e: (e[0], e[1]))
        return events
