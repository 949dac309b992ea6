import hashlib
import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.repository.results import (
    file_digest,
    per_participant_values,
    read_json_report,
    read_outcomes,
    read_test_results,
    read_turns,
    turns_from_annotations,
    write_json_report,
    write_manifest,
    write_outcomes,
    write_participants,
    write_test_results,
    write_turns,
)
from src.repository.sessions import read_annotations
from src.schemas.manifest import RunManifest
from src.schemas.measures import ParticipantAggregate
from src.schemas.sensor import TurnAnnotation
from src.schemas.stats import Estimate
from src.schemas.turn import Turn
from src.servises.match import classify_turns
from src.servises.measures import summarize_test


def turns(*durations: float) -> list[Turn]:
    return [Turn(start_s=10.0 * i, end_s=10.0 * i + d, angle=math.pi, peak_rate=2.0) for i, d in enumerate(durations)]


class TestTestResults(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_round_trip(self):
        results = [
            summarize_test(turns(2.0, 2.4), session_id="P001_d02", participant_id="P001"),
            summarize_test([], session_id="P001_d01", participant_id="P001"),
            summarize_test(turns(3.0), session_id="P002_d01", participant_id="P002"),
        ]
        path = write_test_results(results, self.out / "results.csv")
        frame = read_test_results(path)
        self.assertEqual(list(frame["session_id"]), ["P001_d02", "P001_d01", "P002_d01"])
        self.assertEqual(list(frame["n_turns"]), [2, 0, 1])
        self.assertAlmostEqual(frame["turn_speed_median"][0], results[0].turn_speed_median, places=15)
        self.assertTrue(np.isnan(frame["turn_speed_median"][1]))
        values = per_participant_values(frame)
        self.assertEqual(list(values), ["P001", "P002"])
        self.assertEqual(len(values["P001"]), 1)

    def test_participant_derived_from_session(self):
        path = self.out / "hand.csv"
        path.write_text("session_id,turn_speed_median\nP003_d01,1.2\nP003_d02,1.4\nP004_d01,\n")
        frame = read_test_results(path)
        self.assertEqual(list(frame["participant_id"]), ["P003", "P003", "P004"])
        self.assertEqual(per_participant_values(frame), {"P003": [1.2, 1.4], "P004": []})

    def test_missing_column(self):
        path = self.out / "bad.csv"
        path.write_text("session_id,speed\nP001_d01,1.0\n")
        with self.assertRaises(ValueError):
            read_test_results(path)

    def test_turn_files(self):
        result = summarize_test(turns(2.0, 2.5), session_id="P001_d03", participant_id="P001")
        csv_path, json_path = write_turns(result, self.out / "turns")
        self.assertEqual(csv_path.name, "P001_d03.turns.csv")
        self.assertEqual(read_turns(json_path), result)
        self.assertEqual([(a.start_s, a.end_s) for a in read_annotations(csv_path)], [(0.0, 2.0), (10.0, 12.5)])

    def test_participants(self):
        path = write_participants(
            [ParticipantAggregate(participant_id="P001", values=[1.2, 1.4], aggregate=1.3)], self.out / "p.csv"
        )
        self.assertEqual(path.read_text().splitlines(), ["participant_id,n_tests,aggregate", "P001,2,1.3"])


class TestOutcomes(unittest.TestCase):

    def test_round_trip(self):
        detected = [TurnAnnotation(start_s=10.3, end_s=12.4), TurnAnnotation(start_s=30.0, end_s=31.0)]
        reference = [TurnAnnotation(start_s=10.0, end_s=12.6), TurnAnnotation(start_s=20.0, end_s=22.0)]
        outcomes = classify_turns(detected, reference)
        with tempfile.TemporaryDirectory() as tmp:
            again = read_outcomes(write_outcomes(outcomes, Path(tmp) / "outcomes.csv"))
        self.assertEqual([o.kind for o in again], [o.kind for o in outcomes])
        self.assertAlmostEqual(again[0].onset_error_s, outcomes[0].onset_error_s, places=12)
        self.assertIsNone(again[1].detected)
        self.assertIsNone(again[2].reference)


class TestReports(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_json_report(self):
        report = {"icc": Estimate(value=0.87, ci_lower=0.8, ci_upper=0.92), "n": np.int64(20), "rows": (np.float64(1.5),)}
        path = write_json_report(report, self.out / "nested" / "report.json")
        self.assertEqual(
            read_json_report(path), {"icc": {"value": 0.87, "ci_lower": 0.8, "ci_upper": 0.92}, "n": 20, "rows": [1.5]}
        )

    def test_manifest_name(self):
        manifest = RunManifest(command="detect", tool_version="0.1.0", config={"out": "x"})
        path = write_manifest(manifest, self.out)
        self.assertEqual(path.name, "detect.manifest.json")
        self.assertEqual(json.loads(path.read_text())["config"], {"out": "x"})

    def test_file_digest(self):
        path = self.out / "data.bin"
        path.write_bytes(b"turns" * 100_000)
        self.assertEqual(file_digest(path), hashlib.sha256(b"turns" * 100_000).hexdigest())


class TestTurnsFromAnnotations(unittest.TestCase):

    def test_reference_turns_are_half_circles(self):
        result = turns_from_annotations([TurnAnnotation(start_s=1.0, end_s=3.0)])
        self.assertEqual(result[0].angle, math.pi)
        self.assertEqual(result[0].duration, 2.0)


if __name__ == "__main__":
    unittest.main()
