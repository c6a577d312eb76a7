import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from spikewave.models import SampledSignal, SignalComponent, SignalGrid, SignalKind, SignalSpec
from spikewave.services.signal_service import COMPOSITE, SINE, SignalService


class SignalGenerationTests(SimpleTestCase):
    def test_unit_angular_frequency_sine(self):
        spec = SignalSpec(
            kind=SignalKind.SINE,
            components=(SignalComponent(1.0, 1 / (2 * math.pi)),),
            duration=2.0,
            dt=0.01,
        )
        signal = SignalService.generate(spec)
        self.assertEqual(len(signal), 200)
        assert_allclose(signal.samples, np.sin(0.01 * np.arange(200)), atol=1e-12)

    def test_empty_custom_sum_is_zero(self):
        spec = SignalSpec(kind=SignalKind.CUSTOM_SUM, components=(), duration=1.0, dt=0.01)
        assert_array_equal(SignalService.generate(spec).samples, np.zeros(100))

    def test_composite_starts_at_zero(self):
        signal = SignalService.generate(SignalService.experiment_signal(COMPOSITE, 4.0, 0.001))
        self.assertEqual(signal.samples[0], 0.0)
        self.assertEqual(len(signal), 4000)

    def test_invalid_specs_name_the_field(self):
        with self.assertRaisesMessage(ValueError, "dt"):
            SignalService.experiment_signal(COMPOSITE, 1.0, 0.05)
        with self.assertRaisesMessage(ValueError, "components"):
            SignalSpec(kind=SignalKind.SINE, components=((1, 1), (1, 2)), duration=1.0, dt=0.001)
        with self.assertRaisesMessage(ValueError, "duration"):
            SignalSpec(kind=SignalKind.SINE, components=((1, 1),), duration=0.0, dt=0.001)
        with self.assertRaises(ValueError):
            SignalService.experiment_signal("square", 1.0, 0.001)

    def test_sampled_signal_validation(self):
        with self.assertRaises(ValueError):
            SampledSignal(dt=0.01, samples=[])
        with self.assertRaises(ValueError):
            SampledSignal(dt=0.0, samples=[1.0])
        with self.assertRaises(ValueError):
            SampledSignal(dt=0.01, samples=[1.0, math.nan])

    def test_samples_are_read_only(self):
        signal = SampledSignal(dt=0.1, samples=[1.0, 2.0])
        with self.assertRaises(ValueError):
            signal.samples[0] = 3.0

    def test_negation_and_duration(self):
        signal = SampledSignal(dt=0.25, samples=[1.0, -2.0, 3.0, 0.5], t0=1.0)
        self.assertEqual(signal.duration, 1.0)
        assert_array_equal((-signal).samples, [-1.0, 2.0, -3.0, -0.5])
        self.assertEqual((-signal).t0, 1.0)


class RescaleTests(SimpleTestCase):
    def setUp(self):
        self.signal = SignalService.generate(SignalService.experiment_signal(SINE, 2 * math.pi, 0.01))

    def test_identity(self):
        self.assertIs(SignalService.rescale_time(self.signal, 1), self.signal)

    def test_stretch_keeps_samples(self):
        stretched = SignalService.rescale_time(self.signal, 2)
        self.assertEqual(stretched.dt, 0.02)
        assert_array_equal(stretched.samples, self.signal.samples)

    def test_round_trip(self):
        for s in (2.0, 3.0, 0.7):
            back = SignalService.rescale_time(SignalService.rescale_time(self.signal, s), 1 / s)
            self.assertEqual(back, self.signal)

    def test_non_positive_factor(self):
        with self.assertRaises(ValueError):
            SignalService.rescale_time(self.signal, 0)
        with self.assertRaises(ValueError):
            SignalService.rescale_spec(SignalService.experiment_signal(SINE, 1.0, 0.01), -1)

    def test_fixed_rate_rescale(self):
        spec = SignalService.experiment_signal(COMPOSITE, 2.0, 0.001)
        original = SignalService.generate(spec)
        stretched = SignalService.generate(SignalService.rescale_spec(spec, 2))
        self.assertEqual(stretched.dt, original.dt)
        self.assertEqual(len(stretched), 2 * len(original))
        assert_allclose(stretched.samples[::2], original.samples, atol=1e-9)


class GridTests(SimpleTestCase):
    def test_matching_tolerates_rounding(self):
        grid = SignalGrid(0.001, 0.0, 10)
        self.assertTrue(grid.matches(SignalGrid(0.001 * (1 + 1e-14), 0.0, 10)))
        self.assertFalse(grid.matches(SignalGrid(0.001, 0.0, 11)))
        self.assertFalse(grid.matches(SignalGrid(0.0011, 0.0, 10)))

    def test_equality_needs_identical_samples(self):
        a = SampledSignal(dt=0.1, samples=[1.0, 2.0])
        self.assertEqual(a, SampledSignal(dt=0.1, samples=[1.0, 2.0]))
        self.assertNotEqual(a, SampledSignal(dt=0.1, samples=[1.0, 2.0 + 1e-15]))


class BandTests(SimpleTestCase):
    def test_spec_band(self):
        lo, hi = SignalService.spec_band(SignalService.experiment_signal(COMPOSITE, 1.0, 0.001))
        self.assertAlmostEqual(lo, math.pi)
        self.assertAlmostEqual(hi, 16 * math.pi)

    def test_signal_band_of_composite(self):
        signal = SignalService.generate(SignalService.experiment_signal(COMPOSITE, 40.0, 0.001))
        lo, hi = SignalService.signal_band(signal)
        self.assertAlmostEqual(lo, math.pi, delta=0.2)
        self.assertAlmostEqual(hi, 16 * math.pi, delta=0.2)

    def test_signal_band_of_constant_is_none(self):
        self.assertIsNone(SignalService.signal_band(SampledSignal(dt=0.1, samples=np.ones(50))))
