import logging
import math

import numpy as np
from scipy import fft
from scipy import signal as sps

from spikewave.exceptions import AdmissibilityError, UnderResolvedError
from spikewave.models import CwtGrid, DiscreteKernel, MotherWavelet, SampledSignal, WaveletKind
from spikewave.services.scale_space_service import ScaleSpaceService

logger = logging.getLogger(__name__)

MORLET_HALF_WIDTH = 6.0
MIN_WAVELET_TAPS = 8
PASSBAND_FLOOR = 1e-5
ALIAS_FLOOR = 1e-3
ZERO_MEAN_TOLERANCE = 1e-4


def _gaussian(t, sigma):
    return np.exp(-(t ** 2) / (2 * sigma ** 2)) / math.sqrt(math.pi * sigma ** 2)


class ClassicalWaveletService:

    @staticmethod
    def morlet_function(t, sigma=1.0, omega0=5.0):
        t = np.asarray(t, dtype=float)
        return _gaussian(t, sigma) * np.exp(1j * omega0 * t)

    @staticmethod
    def morlet(sigma=1.0, omega0=5.0, dt=0.001):
        """Complex Morlet on +-6 sigma, mean-corrected and L2-normalized.

        The correction subtracts kappa times the Gaussian envelope so the
        sampled mean vanishes; kappa and the normalizer are kept in params so
        the same wavelet can be evaluated at any time.
        """
        if not (sigma > 0 and omega0 > 0 and dt > 0):
            raise ValueError("sigma, omega0 and dt must be positive")
        half = math.ceil(MORLET_HALF_WIDTH * sigma / dt)
        if 2 * half + 1 < MIN_WAVELET_TAPS:
            raise UnderResolvedError(f"under-resolved wavelet: dt={dt:g} for sigma={sigma:g}")
        t = (np.arange(2 * half + 1) - half) * dt
        raw = ClassicalWaveletService.morlet_function(t, sigma, omega0)
        envelope = _gaussian(t, sigma)
        kappa = raw.sum() / envelope.sum()
        corrected = raw - kappa * envelope
        norm = math.sqrt(float(np.sum(np.abs(corrected) ** 2)) * dt)
        kernel = DiscreteKernel(dt=dt, taps=corrected / norm, causal=False, origin=half)
        params = {
            "sigma": float(sigma),
            "omega0": float(omega0),
            "kappa": complex(kappa),
            "norm": norm,
        }
        return MotherWavelet(kind=WaveletKind.MORLET, params=params, kernel=kernel)

    @staticmethod
    def limit_kernel_wavelet(params, n, dt, eps_trunc=1e-6):
        smoothing = ScaleSpaceService.smoothing_kernel(params, dt, eps_trunc)
        kernel = ScaleSpaceService.kernel_derivative(smoothing, n)
        return MotherWavelet(
            kind=WaveletKind.LIMIT_KERNEL_DERIVATIVE,
            params={"scale_params": params, "n": n},
            kernel=kernel,
        )

    @staticmethod
    def evaluate(mother, t):
        t = np.asarray(t, dtype=float)
        lo, hi = mother.kernel.support
        inside = (t >= lo) & (t <= hi)
        if mother.kind == WaveletKind.MORLET:
            p = mother.params
            raw = ClassicalWaveletService.morlet_function(t, p["sigma"], p["omega0"])
            values = (raw - p["kappa"] * _gaussian(t, p["sigma"])) / p["norm"]
            return np.where(inside, values, 0.0)
        return np.interp(t, mother.kernel.times, np.real(mother.kernel.taps), left=0.0, right=0.0)

    @staticmethod
    def _spectrum(mother):
        """Angular frequencies and |Psi(xi)|^2 from the zero-padded kernel."""
        kernel = mother.kernel
        size = fft.next_fast_len(max(16 * len(kernel), 1 << 14))
        psi_hat = fft.fft(kernel.taps, size) * kernel.dt
        xi = 2 * np.pi * fft.fftfreq(size, kernel.dt)
        return xi, np.abs(psi_hat) ** 2

    @staticmethod
    def admissibility_constant(mother):
        """C_psi = 1/2 * integral of |Psi(xi)|^2 / |xi| over all nonzero xi."""
        mass = abs(mother.kernel.mass) / max(mother.kernel.l2, np.finfo(float).tiny)
        if mass > ZERO_MEAN_TOLERANCE:
            raise AdmissibilityError(f"mother wavelet has non-zero mean ({mass:.3g})")
        xi, power = ClassicalWaveletService._spectrum(mother)
        nonzero = xi != 0
        d_xi = 2 * np.pi / (xi.size * mother.kernel.dt)
        constant = 0.5 * float(np.sum(power[nonzero] / np.abs(xi[nonzero]))) * d_xi
        if not (math.isfinite(constant) and constant > 0):
            raise AdmissibilityError(f"admissibility constant is not finite and positive ({constant!r})")
        return constant

    @staticmethod
    def passband(mother, floor=PASSBAND_FLOOR):
        xi, power = ClassicalWaveletService._spectrum(mother)
        positive = xi > 0
        xi, power = xi[positive], power[positive]
        strong = xi[power >= floor * power.max()]
        return float(strong.min()), float(strong.max())

    @staticmethod
    def scale_grid(mother, band, count=32, dt=None):
        """Log-spaced scales that move every frequency of band through the passband.

        A scale a maps signal frequency omega to a*omega in the mother's
        passband, so [xi_lo/omega_hi, xi_hi/omega_lo] covers the band. The lower
        end is floored where the compressed spectrum, down to ALIAS_FLOOR of
        its peak, still lies below the sampling frequency 2*pi/dt; smaller
        scales fold their image back onto the band.
        """
        if count < 2:
            raise ValueError("count must be at least 2")
        omega_lo, omega_hi = band
        if not 0 < omega_lo <= omega_hi:
            raise ValueError("band must be a positive (low, high) pair")
        dt = mother.kernel.dt if dt is None else dt
        xi_lo, xi_hi = ClassicalWaveletService.passband(mother)
        xi_alias = ClassicalWaveletService.passband(mother, ALIAS_FLOOR)[1]
        lo = max(xi_lo / omega_hi, xi_alias * dt / (2 * math.pi))
        hi = xi_hi / omega_lo
        if not hi > lo:
            raise UnderResolvedError(
                f"under-resolved wavelet: dt={dt:g} cannot resolve the band up to {omega_hi:g} rad/s"
            )
        return np.geomspace(lo, hi, count)

    @staticmethod
    def _daughter(mother, scale, dt):
        """Taps a^-1/2 psi(j*dt/a) and the index range [m_lo, m_hi] of j."""
        lo, hi = mother.kernel.support
        m_lo = min(math.ceil(lo * scale / dt), 0)
        m_hi = max(math.floor(hi * scale / dt), 0)
        if m_hi - m_lo + 1 < MIN_WAVELET_TAPS:
            raise UnderResolvedError(
                f"under-resolved wavelet: scale {scale:g} has fewer than {MIN_WAVELET_TAPS} taps at dt={dt:g}"
            )
        j = np.arange(m_lo, m_hi + 1)
        taps = ClassicalWaveletService.evaluate(mother, j * dt / scale) / math.sqrt(scale)
        return taps, m_lo, m_hi

    @staticmethod
    def cwt(signal, mother, scales):
        scales = np.asarray(scales, dtype=float)
        if scales.ndim != 1 or scales.size == 0 or np.any(scales <= 0):
            raise ValueError("scales must be strictly positive")
        n = len(signal)
        dtype = complex if mother.is_complex else float
        coefficients = np.zeros((scales.size, n), dtype=dtype)
        for row, scale in enumerate(scales):
            taps, _, m_hi = ClassicalWaveletService._daughter(mother, scale, signal.dt)
            # Correlation with the daughter is convolution with its reversed conjugate.
            full = sps.fftconvolve(signal.samples, np.conj(taps[::-1]))
            coefficients[row] = full[m_hi:m_hi + n] * signal.dt
        logger.debug("cwt: %d scales x %d shifts", scales.size, n)
        return CwtGrid(
            scales=scales,
            grid=signal.grid,
            coefficients=coefficients,
            admissibility=ClassicalWaveletService.admissibility_constant(mother),
        )

    @staticmethod
    def icwt(grid, mother):
        if grid.scales.size < 2:
            raise ValueError("inversion needs at least two scales")
        constant = grid.admissibility
        if constant is None:
            constant = ClassicalWaveletService.admissibility_constant(mother)
        if not (math.isfinite(constant) and constant > 0):
            raise AdmissibilityError(f"admissibility constant is not finite and positive ({constant!r})")
        dt = grid.grid.dt
        n = grid.grid.n_samples
        d_scale = grid.scales * np.gradient(np.log(grid.scales))
        out = np.zeros(n)
        for row, scale in enumerate(grid.scales):
            taps, m_lo, _ = ClassicalWaveletService._daughter(mother, scale, dt)
            full = sps.fftconvolve(grid.coefficients[row], taps)
            band = np.real(full[-m_lo:-m_lo + n]) * dt
            out += band * d_scale[row] / scale ** 2
        return SampledSignal(dt=dt, samples=out / constant, t0=grid.grid.t0)
