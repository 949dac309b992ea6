import math
import unittest

import numpy as np

from src.schemas.sensor import SensorStream, WearLocation, WearRole
from src.schemas.synth import SessionSpec
from src.schemas.turn import DetectorConfig, YawRateSeries
from src.servises.detect import (
    TurnSegmenter,
    detect_turns,
    estimate_vertical_rate,
    lowpass,
    segment_turns,
)
from src.servises.errors import StreamQualityError
from src.servises.ingest import shift_stream
from src.servises.synth import generate_session, turn_pulse

RATE = 50.0


def constant_stream(accel, gyro, seconds: float = 10.0) -> SensorStream:
    n = int(seconds * RATE)
    t = np.arange(n) / RATE
    return SensorStream(t=t, accel=np.tile(accel, (n, 1)), gyro=np.tile(gyro, (n, 1)), nominal_rate=RATE)


def pulse_series(duration: float, scale: float = 1.0, start: float = 2.0, total: float = 8.0) -> YawRateSeries:
    t = np.arange(int(total * RATE) + 1) / RATE
    return YawRateSeries(t=t, omega_v=scale * turn_pulse(t, start, duration))


class TestEstimateVerticalRate(unittest.TestCase):

    def test_phone_flat(self):
        yaw = estimate_vertical_rate(constant_stream([0.0, 0.0, 9.81], [0.0, 0.0, 0.5]))
        np.testing.assert_allclose(yaw.omega_v, 0.5, atol=1e-6)

    def test_phone_on_its_side(self):
        yaw = estimate_vertical_rate(constant_stream([0.0, 9.81, 0.0], [0.0, 0.7, 0.0]))
        np.testing.assert_allclose(yaw.omega_v, 0.7, atol=1e-6)

    def test_tilted_phone(self):
        tilt = math.radians(30.0)
        vertical = np.array([0.0, math.sin(tilt), math.cos(tilt)])
        yaw = estimate_vertical_rate(constant_stream(9.81 * vertical, 1.0 * vertical, seconds=20.0))
        settled = yaw.omega_v[int(5 * RATE) : int(15 * RATE)]
        self.assertLess(np.max(np.abs(settled - 1.0)), 1e-3)

    def test_free_fall(self):
        with self.assertRaises(StreamQualityError):
            estimate_vertical_rate(constant_stream([0.0, 0.0, 0.2], [0.0, 0.0, 0.1]))

    def test_not_uniform(self):
        stream = constant_stream([0.0, 0.0, 9.81], [0.0, 0.0, 0.1])
        keep = np.ones(len(stream), dtype=bool)
        keep[::7] = False
        uneven = stream.replace(t=stream.t[keep], accel=stream.accel[keep], gyro=stream.gyro[keep])
        with self.assertRaises(StreamQualityError):
            estimate_vertical_rate(uneven)

    def test_cutoff_above_nyquist(self):
        with self.assertRaises(ValueError):
            lowpass(np.zeros(100), 30.0, RATE)


class TestSegmentTurns(unittest.TestCase):

    def test_below_min_angle(self):
        self.assertEqual(segment_turns(pulse_series(2.0, scale=85.0 / 180.0)), [])

    def test_above_min_angle(self):
        turns = segment_turns(pulse_series(2.0, scale=95.0 / 180.0))
        self.assertEqual(len(turns), 1)
        self.assertGreaterEqual(abs(turns[0].angle), math.pi / 2)

    def test_short_spin_rejected(self):
        yaw = pulse_series(0.4)
        self.assertEqual(segment_turns(yaw), [])
        relaxed = DetectorConfig(min_duration=0.3)
        turns = segment_turns(yaw, relaxed)
        self.assertEqual(len(turns), 1)
        self.assertLess(turns[0].duration, 0.5)

    def test_long_turn_rejected(self):
        self.assertEqual(segment_turns(pulse_series(16.0, total=20.0)), [])

    def test_merges_same_direction_fragments(self):
        t = np.arange(int(10 * RATE) + 1) / RATE
        omega = turn_pulse(t, 2.0, 1.0) + turn_pulse(t, 3.1, 1.0)
        yaw = YawRateSeries(t=t, omega_v=omega)
        # thresholded runs are about 0.18 s apart
        self.assertEqual(len(segment_turns(yaw, DetectorConfig(merge_gap=0.5))), 1)
        self.assertEqual(len(segment_turns(yaw, DetectorConfig(merge_gap=0.0))), 2)

    def test_opposite_directions_never_merge(self):
        t = np.arange(int(10 * RATE) + 1) / RATE
        omega = turn_pulse(t, 2.0, 1.0) + turn_pulse(t, 3.1, 1.0, sign=-1)
        turns = segment_turns(YawRateSeries(t=t, omega_v=omega), DetectorConfig(merge_gap=0.5))
        self.assertEqual([turn.direction.value for turn in turns], ["left", "right"])


class TestTurnSegmenter(unittest.TestCase):

    def test_matches_batch_segmentation(self):
        spec = SessionSpec(n_turns=8, turn_duration=[1.2, 2.0, 3.5, 0.8, 2.2, 1.6, 2.8, 1.1], gyro_noise_sd=0.05, seed=5)
        stream, _ = generate_session(spec)
        yaw = estimate_vertical_rate(stream)
        for config in (DetectorConfig(), DetectorConfig(min_angle=0.1, min_duration=0.1, merge_gap=0.4)):
            batch = segment_turns(yaw, config)
            segmenter = TurnSegmenter(config)
            streamed = []
            for t, omega in zip(yaw.t, yaw.omega_v):
                streamed += segmenter.push(float(t), float(omega))
            streamed += segmenter.flush()
            self.assertEqual([(x.start_s, x.end_s) for x in streamed], [(x.start_s, x.end_s) for x in batch])
            for a, b in zip(streamed, batch):
                self.assertAlmostEqual(a.angle, b.angle, places=12)


class TestDetectTurns(unittest.TestCase):

    def test_single_turn(self):
        stream, truth = generate_session(SessionSpec(n_turns=1, walk_bout=5.0, pelvis_osc_amp=0.0))
        turns = detect_turns(stream)
        self.assertEqual(len(turns), 1)
        self.assertLess(abs(turns[0].angle - math.pi), 0.05)
        self.assertLess(abs(turns[0].start_s - truth[0].start_s), 0.2)
        self.assertLess(abs(turns[0].end_s - truth[0].end_s), 0.2)

    def test_walking_only(self):
        stream, _ = generate_session(SessionSpec(n_turns=0, walk_bout=30.0))
        self.assertEqual(detect_turns(stream), [])

    def test_pelvis_rotation_needs_raised_trigger(self):
        stream, _ = generate_session(SessionSpec(n_turns=0, walk_bout=30.0))
        low = DetectorConfig(
            rate_threshold=math.radians(5.0), end_threshold=math.radians(5.0), min_angle=0.035, min_duration=0.1
        )
        high = low.model_copy(update={"rate_threshold": math.radians(20.0)})
        self.assertGreater(len(detect_turns(stream, low)), 0)
        self.assertEqual(len(detect_turns(stream, high)), 0)

    def test_invariants(self):
        config = DetectorConfig()
        stream, truth = generate_session(SessionSpec(n_turns=10, gyro_noise_sd=0.05, tilt_deg=20.0, seed=9))
        turns = detect_turns(stream, config)
        self.assertEqual(len(turns), len(truth))
        for previous, turn in zip(turns, turns[1:]):
            self.assertLess(previous.end_s, turn.start_s)
        for turn in turns:
            self.assertGreaterEqual(abs(turn.angle), config.min_angle)
            self.assertTrue(config.min_duration <= turn.duration <= config.max_duration)
            self.assertGreaterEqual(turn.peak_rate, config.rate_threshold)

    def test_raising_trigger_never_adds_turns(self):
        stream, _ = generate_session(SessionSpec(n_turns=6, gyro_noise_sd=0.1, seed=3))
        counts = [
            len(detect_turns(stream, DetectorConfig(rate_threshold=math.radians(dps))))
            for dps in (5.0, 10.0, 20.0, 40.0, 120.0, 400.0)
        ]
        self.assertEqual(counts, sorted(counts, reverse=True))

    def test_mirror_antisymmetry(self):
        stream, _ = generate_session(SessionSpec(n_turns=4, gyro_noise_sd=0.02, seed=2))
        turns = detect_turns(stream)
        mirrored = detect_turns(stream.replace(gyro=-stream.gyro))
        self.assertEqual([(t.start_s, t.end_s) for t in turns], [(t.start_s, t.end_s) for t in mirrored])
        for a, b in zip(turns, mirrored):
            self.assertAlmostEqual(a.angle, -b.angle, places=12)
            self.assertNotEqual(a.direction, b.direction)

    def test_time_shift_equivariance(self):
        stream, _ = generate_session(SessionSpec(n_turns=4, seed=4))
        turns = detect_turns(stream)
        shifted = detect_turns(shift_stream(stream, 1.0))
        self.assertEqual(len(turns), len(shifted))
        for a, b in zip(turns, shifted):
            self.assertAlmostEqual(a.start_s + 1.0, b.start_s, places=9)
            self.assertAlmostEqual(a.end_s + 1.0, b.end_s, places=9)
            self.assertAlmostEqual(a.angle, b.angle, places=6)

    def test_resamples_uneven_stream(self):
        stream, truth = generate_session(SessionSpec(n_turns=4, seed=6))
        keep = np.ones(len(stream), dtype=bool)
        keep[3::7] = False
        uneven = stream.replace(t=stream.t[keep], accel=stream.accel[keep], gyro=stream.gyro[keep])
        self.assertEqual(len(detect_turns(uneven)), len(truth))

    def test_stream_too_short(self):
        stream = constant_stream([0.0, 0.0, 9.81], [0.0, 0.0, 0.0], seconds=0.2)
        with self.assertRaises(StreamQualityError):
            detect_turns(stream)

    def test_wear_roles(self):
        spec = SessionSpec(n_turns=2, wear_location=WearLocation.pocket_front_right, first_sign=1)
        stream, _ = generate_session(spec)
        turns = detect_turns(stream)
        self.assertEqual([t.wear_role for t in turns], [WearRole.pocket_front_outer, WearRole.pocket_front_inner])


if __name__ == "__main__":
    unittest.main()
