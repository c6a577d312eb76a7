import logging
import math

import numpy as np
from scipy import signal as sps

from spikewave.exceptions import GridMismatchError, NumericalError, UnderResolvedError
from spikewave.models import (
    DiscreteKernel,
    KernelMoments,
    ScaleParams,
    TimeConstantSchedule,
)

logger = logging.getLogger(__name__)

SUPPORTED_DERIVATIVES = (1, 2)


class ScaleSpaceService:

    @staticmethod
    def tau_levels(params):
        k = np.arange(1, params.k + 1)
        return params.c ** (2.0 * (k - params.k)) * params.tau_max

    @staticmethod
    def time_constants(params):
        root_tau = math.sqrt(params.tau_max)
        mus = [params.c ** (1 - params.k) * root_tau]
        spread = math.sqrt(params.c ** 2 - 1) * root_tau
        for k in range(2, params.k + 1):
            mus.append(params.c ** (k - params.k - 1) * spread)
        return TimeConstantSchedule(mus=tuple(mus))

    @staticmethod
    def truncated_exponential(mu, dt, eps_trunc=1e-6):
        """Causal first-order smoothing kernel, bin-integrated on the dt grid.

        The horizon is the shortest N*dt whose analytic tail exp(-N*dt/mu)
        is within eps_trunc, so the mass lies in [1 - eps_trunc, 1].
        """
        if not (mu > 0 and dt > 0):
            raise ValueError("mu and dt must be positive")
        if not 0 < eps_trunc < 1:
            raise ValueError("eps_trunc must lie in (0, 1)")
        if dt >= mu:
            raise UnderResolvedError(
                f"under-resolved kernel: dt={dt:g} is not below mu={mu:g}"
            )
        n_taps = max(1, math.ceil(-mu * math.log(eps_trunc) / dt))
        decay = np.exp(-np.arange(n_taps) * (dt / mu))
        taps = -math.expm1(-dt / mu) / dt * decay
        return DiscreteKernel(dt=dt, taps=taps)

    @staticmethod
    def compose_cascade(schedule, dt, eps_trunc=1e-6):
        kernel = None
        for mu in schedule.mus:
            stage = ScaleSpaceService.truncated_exponential(mu, dt, eps_trunc)
            if kernel is None:
                kernel = stage
                continue
            taps = sps.fftconvolve(kernel.taps, stage.taps) * dt
            kernel = DiscreteKernel(dt=dt, taps=taps)
        logger.debug("cascade of %d exponentials: %d taps", schedule.k, len(kernel))
        return kernel

    @staticmethod
    def smoothing_kernel(params, dt, eps_trunc=1e-6):
        schedule = ScaleSpaceService.time_constants(params)
        return ScaleSpaceService.compose_cascade(schedule, dt, eps_trunc)

    @staticmethod
    def kernel_moments(kernel):
        taps = np.real(kernel.taps)
        mass = float(taps.sum() * kernel.dt)
        if mass == 0 or not math.isfinite(mass):
            raise NumericalError("kernel has zero mass")
        t = kernel.times
        mean = float(np.sum(t * taps) * kernel.dt / mass)
        variance = float(np.sum((t - mean) ** 2 * taps) * kernel.dt / mass)
        return KernelMoments(mass=mass, mean=mean, variance=variance)

    @staticmethod
    def kernel_derivative(kernel, n):
        """n-th derivative, normalized to unit L2 norm.

        The kernel is zero-padded on both sides so the jumps at its ends are
        differenced too; the derivative mass then telescopes to zero.
        """
        if n not in SUPPORTED_DERIVATIVES:
            raise ValueError(f"n must be one of {SUPPORTED_DERIVATIVES}")
        if len(kernel) < n + 2:
            raise ValueError(f"kernel needs at least {n + 2} taps for derivative {n}")
        pad = n + 1
        taps = np.pad(np.real(kernel.taps), pad)
        for _ in range(n):
            taps = np.gradient(taps, kernel.dt)
        norm = math.sqrt(float(np.sum(taps ** 2)) * kernel.dt)
        if norm == 0:
            raise NumericalError("derivative of a constant kernel has zero norm")
        return DiscreteKernel(
            dt=kernel.dt, taps=taps / norm, causal=False, origin=kernel.origin + pad
        )

    @staticmethod
    def scale_space_transform(signal, kernel):
        if not math.isclose(signal.dt, kernel.dt, rel_tol=1e-9):
            raise GridMismatchError(
                f"kernel dt={kernel.dt:g} does not match signal dt={signal.dt:g}"
            )
        n = len(signal)
        full = sps.fftconvolve(signal.samples, np.real(kernel.taps))
        smoothed = full[kernel.origin:kernel.origin + n]
        if smoothed.size < n:
            smoothed = np.pad(smoothed, (0, n - smoothed.size))
        return signal.with_samples(smoothed * kernel.dt)

    @staticmethod
    def kernel_table(params, dt, eps_trunc=1e-6):
        """Rows (t, psi, dpsi, ddpsi) on the time axis of the second derivative."""
        psi = ScaleSpaceService.smoothing_kernel(params, dt, eps_trunc)
        dpsi = ScaleSpaceService.kernel_derivative(psi, 1)
        ddpsi = ScaleSpaceService.kernel_derivative(psi, 2)
        origin = ddpsi.origin
        size = len(ddpsi)

        def aligned(kernel):
            start = origin - kernel.origin
            column = np.zeros(size)
            column[start:start + len(kernel)] = kernel.taps
            return column

        t = (np.arange(size) - origin) * dt
        return np.column_stack([t, aligned(psi), aligned(dpsi), aligned(ddpsi)])

    @staticmethod
    def convergence_study(c, tau_max, k_values, dt, eps_trunc=1e-6):
        """Moments of the finite-K cascade and its change from the previous K."""
        rows = []
        previous = None
        for k in sorted(set(k_values)):
            kernel = ScaleSpaceService.smoothing_kernel(ScaleParams(c=c, k=k, tau_max=tau_max), dt, eps_trunc)
            moments = ScaleSpaceService.kernel_moments(kernel)
            change = math.nan
            if previous is not None:
                size = max(len(kernel), len(previous))
                change = float(np.max(np.abs(
                    np.pad(kernel.taps, (0, size - len(kernel)))
                    - np.pad(previous.taps, (0, size - len(previous)))
                )))
            rows.append((k, moments.mass, moments.mean, moments.variance, change))
            previous = kernel
        return rows
