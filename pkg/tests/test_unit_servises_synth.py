import math
import unittest
from collections import Counter

import numpy as np
from pydantic import ValidationError
from scipy.integrate import trapezoid

from src.schemas.sensor import AnnotationSource
from src.schemas.synth import CohortSpec, SessionSpec
from src.servises.synth import (
    MIN_TURN_DURATION_S,
    _day_effects,
    cohort_sessions,
    generate_cohort,
    generate_session,
    pelvis_oscillation,
    turn_pulse,
    yaw_profile,
)


class TestTurnPulse(unittest.TestCase):

    def test_area_is_pi(self):
        t = np.linspace(0.0, 5.0, 50_001)
        for duration in (0.8, 2.0, 3.7):
            self.assertAlmostEqual(trapezoid(turn_pulse(t, 1.0, duration), t), math.pi, places=6)

    def test_support_and_sign(self):
        t = np.array([0.5, 1.0, 2.0, 3.0, 3.5])
        omega = turn_pulse(t, 1.0, 2.0, sign=-1)
        self.assertEqual(omega[0], 0.0)
        self.assertEqual(omega[-1], 0.0)
        self.assertAlmostEqual(omega[2], -math.pi)


class TestPelvisOscillation(unittest.TestCase):

    def test_bounded_and_tapered(self):
        t = np.linspace(0.0, 10.0, 5001)
        omega = pelvis_oscillation(t, 2.0, 8.0, 0.26, 1.0)
        self.assertLessEqual(np.max(np.abs(omega)), 0.26 + 1e-12)
        self.assertTrue(np.all(omega[(t < 2.0) | (t > 8.0)] == 0.0))
        self.assertLess(abs(omega[np.searchsorted(t, 2.05)]), 0.01)


class TestGenerateSession(unittest.TestCase):

    def test_truth_layout(self):
        spec = SessionSpec(n_turns=3, turn_duration=[1.5, 2.0, 2.5], walk_bout=3.0)
        stream, truth = generate_session(spec)
        self.assertEqual([(a.start_s, a.end_s) for a in truth], [(3.0, 4.5), (7.5, 9.5), (12.5, 15.0)])
        self.assertTrue(all(a.source is AnnotationSource.synthetic_truth for a in truth))
        self.assertAlmostEqual(stream.t[-1], 18.0)
        self.assertEqual(stream.nominal_rate, 50.0)

    def test_bitwise_reproducible(self):
        spec = SessionSpec(n_turns=4, gyro_noise_sd=0.05, accel_noise_sd=0.1, tilt_deg=15.0, seed=7)
        first, _ = generate_session(spec)
        second, _ = generate_session(spec)
        np.testing.assert_array_equal(first.gyro, second.gyro)
        np.testing.assert_array_equal(first.accel, second.accel)

    def test_tilted_phone_sees_vertical_rate(self):
        spec = SessionSpec(n_turns=2, tilt_deg=30.0)
        stream, _ = generate_session(spec)
        _, omega, _ = yaw_profile(spec)
        vertical = np.array([0.0, math.sin(math.radians(30.0)), math.cos(math.radians(30.0))])
        np.testing.assert_allclose(stream.gyro @ vertical, omega, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(stream.accel, axis=1), 9.81, atol=1e-12)

    def test_alternating_directions(self):
        t, omega, truth = yaw_profile(SessionSpec(n_turns=2, pelvis_osc_amp=0.0, first_sign=-1))
        mid = [int(np.searchsorted(t, 0.5 * (a.start_s + a.end_s))) for a in truth]
        self.assertLess(omega[mid[0]], 0.0)
        self.assertGreater(omega[mid[1]], 0.0)

    def test_invalid_specs(self):
        with self.assertRaises(ValidationError):
            SessionSpec(n_turns=3, turn_duration=[1.0, 2.0])
        with self.assertRaises(ValidationError):
            SessionSpec(first_sign=0)
        with self.assertRaises(ValidationError):
            SessionSpec(turn_duration=0.05)


class TestGenerateCohort(unittest.TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.bundle = generate_cohort(CohortSpec(seed=3))

    def test_level_allocation(self):
        self.assertEqual(Counter(p.level for p in self.bundle.participants), {"mild": 23, "moderate": 30, "severe": 38})

    def test_largest_remainder(self):
        bundle = generate_cohort(CohortSpec(n_participants=10))
        self.assertEqual(Counter(p.level for p in bundle.participants), {"mild": 3, "moderate": 3, "severe": 4})

    def test_sessions(self):
        for p in self.bundle.participants:
            self.assertTrue(1 <= len(p.days) <= 14)
            self.assertEqual(p.days, sorted(set(p.days)))
            self.assertTrue(all(1 <= d <= 14 for d in p.days))
            self.assertEqual([s.session_id for s in p.sessions], [f"{p.participant_id}_d{d:02d}" for d in p.days])
            for session in p.sessions:
                self.assertEqual(session.n_turns, 10)
                self.assertGreaterEqual(min(session.durations()), MIN_TURN_DURATION_S)
        self.assertEqual(len(list(cohort_sessions(self.bundle))), sum(self.bundle.test_counts()))

    def test_covariates_within_level_ranges(self):
        levels = {level.name: level for level in self.bundle.spec.levels}
        for p in self.bundle.participants:
            low, high = levels[p.level].edss_range
            self.assertTrue(low <= p.edss_proxy <= high)
            self.assertEqual(p.edss_proxy * 2, round(p.edss_proxy * 2))
            a_low, a_high = levels[p.level].ambulation_range
            self.assertTrue(a_low <= p.ambulation <= a_high)

    def test_slower_levels_turn_slower(self):
        means = {
            name: np.mean([p.base_duration for p in self.bundle.participants if p.level == name])
            for name in ("mild", "moderate", "severe")
        }
        self.assertLess(means["mild"], means["moderate"])
        self.assertLess(means["moderate"], means["severe"])

    def test_reproducible(self):
        self.assertEqual(generate_cohort(CohortSpec(seed=3)), self.bundle)
        self.assertNotEqual(generate_cohort(CohortSpec(seed=4)), self.bundle)

    def test_unbalanced_cohort(self):
        bundle = generate_cohort(CohortSpec(n_participants=20, balanced=False, seed=1))
        self.assertEqual(len(bundle.participants), 20)
        self.assertTrue(all(len(p.days) >= 1 for p in bundle.participants))

    def test_balanced_day_effects(self):
        rng = np.random.default_rng(0)
        for n in (2, 5, 14):
            effects = _day_effects(n, 0.2, True, rng)
            self.assertAlmostEqual(float(effects.std()), 0.2)
            self.assertAlmostEqual(float(effects.mean()), 0.0)
            np.testing.assert_allclose(np.sort(effects), -np.sort(effects)[::-1], atol=1e-12)
        np.testing.assert_array_equal(_day_effects(1, 0.2, True, rng), [0.0])
        self.assertEqual(_day_effects(6, 0.2, False, rng).shape, (6,))

    def test_covariate_rows(self):
        row = self.bundle.covariate_rows()[0]
        self.assertEqual(
            set(row), {"participant_id", "edss_proxy", "fall", "aid", "level", "ambulation", "t25fw_s"}
        )


if __name__ == "__main__":
    unittest.main()
