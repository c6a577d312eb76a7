import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from spikewave.exceptions import AdmissibilityError, UnderResolvedError
from spikewave.models import MotherWavelet, SampledSignal, ScaleParams, SignalSpec, WaveletKind
from spikewave.services.classical_wavelet_service import ClassicalWaveletService
from spikewave.services.scale_space_service import ScaleSpaceService
from spikewave.services.signal_service import COMPOSITE, SignalService


def _tone(frequency, duration, dt):
    spec = SignalSpec(kind="sine", components=((1.0, frequency),), duration=duration, dt=dt)
    return spec, SignalService.generate(spec)


def _rel_l2(reference, candidate, window):
    error = candidate.samples[window] - reference.samples[window]
    return float(np.linalg.norm(error) / np.linalg.norm(reference.samples[window]))


class MorletTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mother = ClassicalWaveletService.morlet(1.0, 5.0, 0.001)

    def test_raw_function_at_origin(self):
        unit = ClassicalWaveletService.morlet_function(0.0)
        self.assertAlmostEqual(complex(unit), 1 / math.sqrt(math.pi), places=15)
        wide = ClassicalWaveletService.morlet_function(0.0, sigma=2.0)
        self.assertAlmostEqual(complex(wide), 1 / math.sqrt(4 * math.pi), places=15)

    def test_centre_value_matches_evaluation(self):
        taps = self.mother.kernel.taps
        value = ClassicalWaveletService.evaluate(self.mother, 0.0)
        self.assertAlmostEqual(complex(value), complex(taps[self.mother.kernel.origin]), delta=1e-12)

    def test_modulus_is_symmetric(self):
        taps = self.mother.kernel.taps
        assert_allclose(np.abs(taps), np.abs(taps[::-1]), atol=1e-12)

    def test_zero_mean_and_unit_norm(self):
        self.assertLessEqual(abs(self.mother.kernel.mass), 1e-12)
        self.assertAlmostEqual(self.mother.kernel.l2, 1.0, delta=1e-9)
        self.assertTrue(self.mother.is_complex)

    def test_zero_outside_support(self):
        assert_array_equal(ClassicalWaveletService.evaluate(self.mother, [-7.0, 6.5, 10.0]), 0.0)

    def test_passband_holds_centre_frequency(self):
        lo, hi = ClassicalWaveletService.passband(self.mother)
        self.assertLess(lo, 5.0)
        self.assertGreater(hi, 5.0)

    def test_admissibility_constant(self):
        constant = ClassicalWaveletService.admissibility_constant(self.mother)
        self.assertAlmostEqual(constant, math.pi / 5, delta=0.05)

    def test_under_resolved(self):
        with self.assertRaisesMessage(UnderResolvedError, "under-resolved wavelet"):
            ClassicalWaveletService.morlet(sigma=0.001, dt=0.01)


class LimitKernelWaveletTests(SimpleTestCase):
    def test_derivative_wavelet_is_admissible(self):
        params = ScaleParams(c=math.sqrt(2.0), k=5, tau_max=1.0)
        mother = ClassicalWaveletService.limit_kernel_wavelet(params, 1, 0.001)
        self.assertEqual(mother.kind, WaveletKind.LIMIT_KERNEL_DERIVATIVE)
        self.assertLessEqual(abs(mother.kernel.mass), 1e-4)
        self.assertAlmostEqual(mother.kernel.l2, 1.0, delta=1e-9)
        self.assertGreater(ClassicalWaveletService.admissibility_constant(mother), 0)

    def test_smoothing_kernel_is_not_a_wavelet(self):
        smoothing = ScaleSpaceService.smoothing_kernel(ScaleParams(c=2.0, k=3, tau_max=1.0), 0.001)
        mother = MotherWavelet(kind=WaveletKind.LIMIT_KERNEL_DERIVATIVE, params={}, kernel=smoothing)
        with self.assertRaisesMessage(AdmissibilityError, "non-zero mean"):
            ClassicalWaveletService.admissibility_constant(mother)


class CwtTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mother = ClassicalWaveletService.morlet(1.0, 5.0, 0.01)
        cls.spec, cls.tone = _tone(2.0, 20.0, 0.01)

    def test_zero_signal(self):
        zero = SampledSignal(dt=0.01, samples=np.zeros(500))
        grid = ClassicalWaveletService.cwt(zero, self.mother, [0.2, 0.5])
        assert_array_equal(grid.coefficients, 0)
        self.assertEqual(grid.coefficients.shape, (2, 500))

    def test_linearity(self):
        other = SignalService.generate(SignalService.experiment_signal(COMPOSITE, 20.0, 0.01))
        scales = [0.1, 0.3, 0.9]
        combined = self.tone.with_samples(2.0 * self.tone.samples - 0.5 * other.samples)
        lhs = ClassicalWaveletService.cwt(combined, self.mother, scales).coefficients
        rhs = (
            2.0 * ClassicalWaveletService.cwt(self.tone, self.mother, scales).coefficients
            - 0.5 * ClassicalWaveletService.cwt(other, self.mother, scales).coefficients
        )
        assert_allclose(lhs, rhs, atol=1e-10)

    def test_peak_scale_of_a_tone(self):
        scales = np.linspace(0.30, 0.50, 21)
        grid = ClassicalWaveletService.cwt(self.tone, self.mother, scales)
        middle = len(self.tone) // 2
        peak = scales[np.argmax(np.abs(grid.coefficients[:, middle]))]
        self.assertAlmostEqual(peak, 5.0 / (4 * math.pi), delta=0.02)

    def test_dilation_covariance(self):
        stretched = SignalService.rescale_time(self.tone, 2)
        scales = np.array([0.2, 0.4])
        original = ClassicalWaveletService.cwt(self.tone, self.mother, scales).coefficients
        dilated = ClassicalWaveletService.cwt(stretched, self.mother, 2 * scales).coefficients
        assert_allclose(dilated, math.sqrt(2.0) * original, rtol=1e-12, atol=1e-12)

    def test_too_small_scale(self):
        with self.assertRaisesMessage(UnderResolvedError, "fewer than 8 taps"):
            ClassicalWaveletService.cwt(self.tone, self.mother, [0.001])

    def test_non_positive_scale(self):
        with self.assertRaises(ValueError):
            ClassicalWaveletService.cwt(self.tone, self.mother, [0.5, 0.0])


class InverseTests(SimpleTestCase):
    def test_tone_round_trip(self):
        mother = ClassicalWaveletService.morlet(1.0, 5.0, 0.01)
        spec, tone = _tone(2.0, 20.0, 0.01)
        scales = ClassicalWaveletService.scale_grid(mother, SignalService.spec_band(spec), 32)
        restored = ClassicalWaveletService.icwt(ClassicalWaveletService.cwt(tone, mother, scales), mother)
        window = (tone.times >= 5.0) & (tone.times <= 15.0)
        self.assertLessEqual(_rel_l2(tone, restored, window), 0.05)

    def test_error_falls_with_scale_count(self):
        mother = ClassicalWaveletService.morlet(1.0, 5.0, 0.004)
        spec = SignalService.experiment_signal(COMPOSITE, 40.0, 0.004)
        signal = SignalService.generate(spec)
        window = (signal.times >= 10.0) & (signal.times <= 30.0)
        errors = []
        for count in (8, 16, 32):
            scales = ClassicalWaveletService.scale_grid(mother, SignalService.spec_band(spec), count)
            restored = ClassicalWaveletService.icwt(ClassicalWaveletService.cwt(signal, mother, scales), mother)
            errors.append(_rel_l2(signal, restored, window))
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])

    def test_needs_two_scales(self):
        mother = ClassicalWaveletService.morlet(1.0, 5.0, 0.01)
        _, tone = _tone(2.0, 20.0, 0.01)
        with self.assertRaises(ValueError):
            ClassicalWaveletService.icwt(ClassicalWaveletService.cwt(tone, mother, [0.4]), mother)

    def test_small_scales_stay_below_the_sampling_frequency(self):
        params = ScaleParams(c=math.sqrt(2.0), k=5, tau_max=3.4)
        mother = ClassicalWaveletService.limit_kernel_wavelet(params, 1, 0.001)
        spec = SignalService.experiment_signal(COMPOSITE, 40.0, 0.001)
        scales = ClassicalWaveletService.scale_grid(mother, SignalService.spec_band(spec), 32)
        xi_alias = ClassicalWaveletService.passband(mother, 1e-3)[1]
        self.assertLessEqual(xi_alias / scales[0], 2 * math.pi / 0.001 * (1 + 1e-9))
        # Far below the old half-Nyquist floor, which cut into the band.
        self.assertLess(scales[0], 2 * ClassicalWaveletService.passband(mother)[1] * 0.001 / math.pi)

    def test_unresolvable_band(self):
        mother = ClassicalWaveletService.morlet(1.0, 5.0, 0.01)
        with self.assertRaises(UnderResolvedError):
            ClassicalWaveletService.scale_grid(mother, (1000.0, 1000.0))
        with self.assertRaises(ValueError):
            ClassicalWaveletService.scale_grid(mother, (2.0, 1.0))
